import csv

import pytest

from unsupervised_gap import Benchmark
from unsupervised_gap import DimensionError
from unsupervised_gap import Sweep
from unsupervised_gap import SweepError
from unsupervised_gap import write_csv

_TIMING_COLUMNS = ('dnn_time_ms', 'oracle_time_ms')


@pytest.fixture(scope="module")
def sweep(train_dataset, test_dataset, small_train_config):
    return Sweep(train_dataset, test_dataset,
                 small_train_config.with_values(epochs=1))


def _without_timing(rows):
    return [{key: value
             for key, value in row.items() if key not in _TIMING_COLUMNS}
            for row in rows]


def test_grid():
    grid = Sweep.grid([1.0, 6.0], [1e-4, 1e-3], [10], repeats=2)
    assert len(grid) == 8
    assert [(p.lambda_, p.learning_rate, p.repeat) for p in grid[:4]] == [
        (1.0, 1e-4, 0), (1.0, 1e-4, 1), (1.0, 1e-3, 0), (1.0, 1e-3, 1)
    ]


def test_grid_point_config(small_train_config):
    point = Sweep.grid([2.0], [0.5], [3], repeats=3)[2]
    config = point.config_for(small_train_config.with_values(seed=10))
    assert config.lambda_ == 2.0
    assert config.learning_rate == 0.5
    assert config.epochs == 3
    assert config.seed == 12


@pytest.mark.asyncio
async def test_sweep(sweep):
    grid = Sweep.grid([1.0, 6.0], [1e-3], [1], repeats=2)
    rows = await sweep.run(grid)
    assert len(rows) == 4
    assert [tuple(row) for row in rows] == [Sweep.columns] * 4
    assert [(row['lambda'], row['repeat']) for row in rows] == [
        (1.0, 0), (1.0, 1), (6.0, 0), (6.0, 1)
    ]
    for row in rows:
        assert row['mean_sum_rate'] > 0
        assert 0 <= row['avg_violation_prob'] <= 1
        assert row['oracle_time_ms'] > 0
    # Repeats differ in their seeds only.
    assert rows[0]['mean_sum_rate'] != rows[1]['mean_sum_rate']


@pytest.mark.asyncio
async def test_sweep_parallel_equals_serial(sweep):
    grid = Sweep.grid([1.0, 6.0], [1e-3], [1])
    serial = await sweep.run(grid)
    parallel = await sweep.run(grid, jobs=2)
    assert _without_timing(parallel) == _without_timing(serial)


@pytest.mark.asyncio
async def test_sweep_errors(sweep):
    with pytest.raises(ValueError):
        await sweep.run([])
    bad = Sweep(sweep.train_dataset, sweep.test_dataset,
                sweep.base_config.with_values(layer_dims=[9, 4, 9]))
    with pytest.raises(SweepError) as e:
        await bad.run(Sweep.grid([1.0], [1e-3], [1]))
    assert isinstance(e.value.__cause__, DimensionError)
    assert 'lambda=1.0' in str(e.value)


def test_write_csv(tmp_path):
    rows = [{'a': 1, 'b': 2.5}, {'a': 3, 'b': 4.0}]
    path = write_csv(rows, ('a', 'b'), tmp_path / 'rows.csv')
    with path.open() as in_file:
        assert list(csv.DictReader(in_file)) == [{
            'a': '1',
            'b': '2.5'
        }, {
            'a': '3',
            'b': '4.0'
        }]


def test_benchmark(test_dataset):
    rows = Benchmark(test_dataset).run()
    assert len(rows) == len(test_dataset)
    assert [row['index'] for row in rows] == list(range(len(test_dataset)))
    for row in rows:
        assert tuple(row) == Benchmark.columns
        assert row['greedy_objective'] <= row['exact_objective'] + 1e-12
        assert row['greedy_pct_of_optimal'] <= 100.0 + 1e-9
        assert row['exact_time_ms'] > 0
