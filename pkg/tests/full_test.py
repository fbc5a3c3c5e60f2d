import logging
import os

import pytest

from unsupervised_gap import DatasetGenerator
from unsupervised_gap import Evaluator
from unsupervised_gap import Scenario
from unsupervised_gap import Sweep
from unsupervised_gap import Trainer

logger = logging.getLogger(__name__)

pytestmark = pytest.mark.skipif(
    not os.environ.get('UNSUPERVISED_GAP_FULL_TEST'),
    reason='set UNSUPERVISED_GAP_FULL_TEST to run the full scenarios')

_JOBS = int(os.environ.get('UNSUPERVISED_GAP_JOBS', '4'))


async def _datasets(scenario):
    generator = DatasetGenerator(scenario.network_config())
    train = await generator.generate_async(scenario.n_train, 0, jobs=_JOBS)
    test = await generator.generate_async(scenario.n_test, 1, jobs=_JOBS)
    return train, test


async def _train_and_evaluate(name):
    """Trains with the reference settings of the scenario, the way
    `scripts/reproduce.sh` does, and returns the test metrics."""
    scenario = Scenario.get(name)
    train, test = await _datasets(scenario)
    model, loss_history = Trainer(scenario.train_config()).train(train)
    metrics = Evaluator(test).evaluate(model, loss_history)
    logger.info('%s: %s', name, metrics)
    return metrics


@pytest.mark.asyncio
async def test_4x4():
    metrics = await _train_and_evaluate('4x4')
    assert metrics.pct_of_optimal >= 95.0
    assert metrics.avg_violation_prob <= 0.15


@pytest.mark.asyncio
async def test_16x4():
    metrics = await _train_and_evaluate('16x4')
    assert metrics.pct_of_optimal >= 95.0
    assert metrics.avg_violation_prob <= 0.15
    ratio = metrics.mean_oracle_time / metrics.mean_inference_time
    logger.info('16x4: the oracle takes %.1fx the DNN time per example', ratio)
    assert metrics.mean_inference_time < metrics.mean_oracle_time


@pytest.mark.asyncio
async def test_lambda_trend():
    scenario = Scenario.get('4x4')
    train, test = await _datasets(scenario)
    sweep = Sweep(train, test, scenario.train_config())
    rows = await sweep.run(Sweep.grid([1.0, 6.0, 10.0], [1e-4], [50]),
                           jobs=_JOBS)
    for row in rows:
        logger.info('%s', row)
    # Both decrease with lambda, up to 10% relative noise.
    for smaller, larger in zip(rows, rows[1:]):
        assert larger['avg_violation_prob'] <= \
            smaller['avg_violation_prob'] * 1.1 + 1e-9
        assert larger['mean_sum_rate'] <= smaller['mean_sum_rate'] * 1.1
