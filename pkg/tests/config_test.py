import pytest

from unsupervised_gap import ConfigError
from unsupervised_gap import LossConfig
from unsupervised_gap import NetworkConfig
from unsupervised_gap import Scenario
from unsupervised_gap import TrainConfig


def test_train_config_defaults():
    config = TrainConfig.default
    assert config.lambda_ == 6.0
    assert config.learning_rate == 1e-4
    assert config.epochs == 50
    assert config.batch_size == 128
    assert config.layer_dims == [16, 64, 128, 256, 512, 1024, 2048, 16]
    assert config.penalty_sign == LossConfig.CORRECTED


def test_train_config_for_scenario():
    config = TrainConfig.default
    large = config.for_scenario(16, 4)
    assert large is not config
    assert large.epochs == 100
    assert large.lambda_ == 10.0
    assert large.layer_dims == [
        64, 128, 256, 512, 1024, 2048, 2048, 4096, 4096, 64
    ]
    # The receiver is not modified.
    assert config.epochs == 50

    other = config.for_scenario(3, 2)
    assert other.layer_dims == [6, 64, 128, 256, 512, 1024, 2048, 6]
    assert other.epochs == 50


def test_train_config_with_values():
    config = TrainConfig.default.with_values(lambda_=2.0, seed=3)
    assert config.lambda_ == 2.0 and config.seed == 3
    assert TrainConfig.default.lambda_ == 6.0
    loss_config = config.loss_config()
    assert loss_config.lambda1 == loss_config.lambda2 == 2.0
    assert config.to_dict()['lambda'] == 2.0
    with pytest.raises(ConfigError):
        TrainConfig.default.with_values(momentum=0.9)


@pytest.mark.parametrize("values", [
    {'epochs': 0},
    {'batch_size': 0},
    {'learning_rate': -1.0},
    {'layer_dims': [16]},
    {'lambda_': -1.0},
    {'penalty_sign': 'unknown'},
])
def test_train_config_validate(values):
    with pytest.raises(ConfigError):
        TrainConfig.default.with_values(**values).validate()


def test_scenarios():
    small = Scenario.get('4x4')
    assert small.n_train == 10000 and small.n_test == 1000
    assert small.network_config().n_bs == 4
    assert small.train_config().layer_dims[0] == 16
    large = Scenario.get('16x4')
    assert large.n_train == 16000
    assert large.network_config().quota == 8
    assert large.train_config().epochs == 100
    with pytest.raises(ConfigError):
        Scenario.get('8x8')


def test_config_errors_are_value_errors():
    config = NetworkConfig.default.clone()
    config.radius = 0.5
    with pytest.raises(ValueError):
        config.validate()
