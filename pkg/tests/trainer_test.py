import argparse
import json

import numpy as np
import pytest

from unsupervised_gap import Dataset
from unsupervised_gap import DimensionError
from unsupervised_gap import DivergenceError
from unsupervised_gap import Evaluator
from unsupervised_gap import LossConfig
from unsupervised_gap import MlpModel
from unsupervised_gap import Trainer
from unsupervised_gap import TrainConfig
from unsupervised_gap import evaluate
from unsupervised_gap import greedy_baseline
from unsupervised_gap import train


def test_train_reduces_loss(train_dataset, small_train_config):
    model, loss_history = train(train_dataset, small_train_config)
    assert len(loss_history) == small_train_config.epochs
    assert all(np.isfinite(loss_history))
    assert loss_history[-1] < loss_history[0]
    assert model.layer_dims == small_train_config.layer_dims
    assert model.split == (4, 4)
    assert model.feature_norm is not None


def test_zero_learning_rate_keeps_init(train_dataset, small_train_config):
    config = small_train_config.with_values(learning_rate=0.0, epochs=3)
    model, loss_history = Trainer(config).train(train_dataset)
    init = MlpModel.init(config.layer_dims, (4, 4), config.seed)
    assert all(
        np.array_equal(a, b)
        for a, b in zip(model.parameters, init.parameters))
    # Every epoch sees the same examples in another order.
    assert loss_history == pytest.approx([loss_history[0]] * 3, rel=1e-12)


def test_training_is_reproducible(train_dataset, small_train_config,
                                  tmp_path):
    config = small_train_config.with_values(epochs=3)
    runs = []
    for name in ('a', 'b'):
        model, loss_history = Trainer(config).train(train_dataset)
        runs.append((model.save(tmp_path / f'{name}.json').read_bytes(),
                     json.dumps(loss_history)))
    assert runs[0] == runs[1]

    other = config.with_values(seed=1)
    model, loss_history = Trainer(other).train(train_dataset)
    assert json.dumps(loss_history) != runs[0][1]


def test_train_checks_dims(train_dataset):
    config = TrainConfig.default.with_values(layer_dims=[9, 8, 9], epochs=1)
    with pytest.raises(DimensionError):
        Trainer(config).train(train_dataset)


def test_divergence(train_dataset, small_train_config):
    features = train_dataset.features.copy()
    features[5] = np.nan
    dataset = Dataset.from_arrays(train_dataset.profits,
                                  train_dataset.weights,
                                  train_dataset.capacities,
                                  features=features)
    config = small_train_config.with_values(normalize_features=False,
                                            batch_size=len(dataset))
    with pytest.raises(DivergenceError) as e:
        Trainer(config).train(dataset)
    assert e.value.epoch == 0
    assert e.value.batch == 0


def test_evaluate(train_dataset, test_dataset, small_train_config):
    model, loss_history = train(train_dataset,
                                small_train_config.with_values(epochs=2))
    evaluator = Evaluator(test_dataset)
    metrics = evaluator.evaluate(model, loss_history)
    assert metrics.n_examples == len(test_dataset)
    assert metrics.pct_of_optimal > 0
    assert len(metrics.violation_per_knapsack) == 4
    assert 0 <= metrics.avg_violation_prob <= 1
    assert metrics.mean_inference_time > 0
    assert metrics.mean_oracle_time > 0
    assert metrics.hardened_sum_rate is not None
    assert metrics.loss_history == loss_history
    # Oracle solutions are solved once.
    assert evaluator.oracle_solutions is evaluator.oracle_solutions

    same = evaluate(model, test_dataset)
    assert same.mean_sum_rate == metrics.mean_sum_rate


def test_evaluate_oracle_assignments(test_dataset):
    evaluator = Evaluator(test_dataset)
    u = np.stack([s.assignment.u for s in evaluator.oracle_solutions])
    metrics = evaluator.evaluate_assignments(u)
    assert metrics.pct_of_optimal == pytest.approx(100.0)
    assert metrics.avg_violation_prob == 0.0
    assert metrics.hardened_pct_of_optimal == pytest.approx(100.0)
    assert metrics.hardened_violation_prob == 0.0


def test_evaluate_greedy_assignments(test_dataset):
    evaluator = Evaluator(test_dataset)
    u = np.stack([greedy_baseline(inst).assignment.u
                  for inst in test_dataset.instances])
    metrics = evaluator.evaluate_assignments(u)
    assert metrics.pct_of_optimal <= 100.0 + 1e-9
    assert metrics.avg_violation_prob == 0.0


def test_evaluate_violations(test_dataset):
    u = np.zeros(test_dataset.profits.shape)
    # Every user on BS 0 overloads it in every example.
    u[:, :, 0] = 1
    metrics = Evaluator(test_dataset).evaluate_assignments(u)
    assert metrics.violation_per_knapsack == [1.0, 0.0, 0.0, 0.0]
    assert metrics.avg_violation_prob == 0.25
    with pytest.raises(DimensionError):
        Evaluator(test_dataset).evaluate_assignments(u[:, :3])


def test_evaluate_checks_model(test_dataset):
    model = MlpModel.init([6, 8, 6], (3, 2), 0)
    with pytest.raises(DimensionError):
        evaluate(model, test_dataset)


def test_metrics_save(test_dataset, tmp_path):
    evaluator = Evaluator(test_dataset)
    u = np.stack([s.assignment.u for s in evaluator.oracle_solutions])
    path = evaluator.evaluate_assignments(u, loss_history=[1.0, 0.5]).save(
        tmp_path / 'metrics.json')
    value = json.loads(path.read_text())
    assert value['pct_of_optimal'] == pytest.approx(100.0)
    assert value['loss_history'] == [1.0, 0.5]
    assert value['n_examples'] == len(test_dataset)


def _train_args(**kwargs):
    values = {
        'scenario': None,
        'lambda_': None,
        'lr': None,
        'epochs': None,
        'batch': None,
        'dims': None,
        'seed': None,
        'penalty_sign': None,
        'no_normalize': False,
    }
    values.update(kwargs)
    return argparse.Namespace(**values)


def test_config_from_args(train_dataset):
    config = Trainer.config_from_args(_train_args())
    assert config.lambda_ == TrainConfig.default.lambda_
    assert config is not TrainConfig.default

    config = Trainer.config_from_args(
        _train_args(scenario='16x4', lambda_=3.0, penalty_sign='printed',
                    no_normalize=True))
    assert config.epochs == 100
    assert config.lambda_ == 3.0
    assert config.penalty_sign == LossConfig.AS_PRINTED
    assert not config.normalize_features

    config = Trainer.config_from_args(_train_args(dims=[16, 8, 16]),
                                      train_dataset)
    assert config.layer_dims == [16, 8, 16]
