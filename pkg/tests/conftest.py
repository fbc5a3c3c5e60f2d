import pathlib
import sys

import pytest

_test_dir = pathlib.Path(__file__).resolve().parent
_root_dir = _test_dir.parent
sys.path.append(str(_root_dir))

from unsupervised_gap import DatasetGenerator
from unsupervised_gap import NetworkConfig
from unsupervised_gap import TrainConfig


@pytest.fixture(scope="session")
def network_config():
    return NetworkConfig.default.clone()


@pytest.fixture(scope="session")
def train_dataset(network_config):
    return DatasetGenerator(network_config).generate(256, seed=0)


@pytest.fixture(scope="session")
def test_dataset(network_config):
    return DatasetGenerator(network_config).generate(64, seed=1)


@pytest.fixture(scope="session")
def small_train_config():
    return TrainConfig.default.with_values(layer_dims=[16, 32, 32, 16],
                                           epochs=8,
                                           batch_size=32,
                                           learning_rate=1e-3)
