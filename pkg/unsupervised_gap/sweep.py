#!/usr/bin/env python3
import argparse
import asyncio
import concurrent.futures
import csv
import itertools
import logging
import pathlib
import time

import numpy as np

from unsupervised_gap.config import TrainConfig
from unsupervised_gap.dataset import Dataset
from unsupervised_gap.gap import GapError
from unsupervised_gap.log_utils import init_logging
from unsupervised_gap.oracle import greedy_baseline
from unsupervised_gap.oracle import solve_unit_weight_exact
from unsupervised_gap.trainer import Evaluator
from unsupervised_gap.trainer import Trainer

logger = logging.getLogger('sweep')


class SweepError(GapError):
    pass


def write_csv(rows, columns, path):
    if isinstance(path, str):
        path = pathlib.Path(path)
    logger.info('Saving %d rows to "%s"', len(rows), path)
    with path.open('w', newline='') as out_file:
        writer = csv.DictWriter(out_file, fieldnames=columns)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    return path


class GridPoint(object):
    def __init__(self, lambda_, learning_rate, epochs, repeat):
        self.lambda_ = lambda_
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.repeat = repeat

    def config_for(self, base):
        """A copy of `base` for this point. Repeat `k` uses seed
        `base.seed + k`, so every point of a repeat shares the same
        initialization."""
        return base.with_values(lambda_=self.lambda_,
                                learning_rate=self.learning_rate,
                                epochs=self.epochs,
                                seed=base.seed + self.repeat)

    def __str__(self):
        return (f'lambda={self.lambda_} lr={self.learning_rate} '
                f'epochs={self.epochs} repeat={self.repeat}')


def _train_and_evaluate(point, config, train_dataset, evaluator):
    try:
        model, loss_history = Trainer(config).train(train_dataset)
        metrics = evaluator.evaluate(model, loss_history)
    except GapError as e:
        raise SweepError(f'Grid point {point} failed: {e}') from e
    return {
        'lambda': point.lambda_,
        'lr': point.learning_rate,
        'epochs': point.epochs,
        'repeat': point.repeat,
        'mean_sum_rate': metrics.mean_sum_rate,
        'pct_of_optimal': metrics.pct_of_optimal,
        'avg_violation_prob': metrics.avg_violation_prob,
        'dnn_time_ms': metrics.mean_inference_time * 1000,
        'oracle_time_ms': metrics.mean_oracle_time * 1000,
    }


class Sweep(object):
    """Trains and evaluates one model per point of a hyperparameter grid."""

    columns = ('lambda', 'lr', 'epochs', 'repeat', 'mean_sum_rate',
               'pct_of_optimal', 'avg_violation_prob', 'dnn_time_ms',
               'oracle_time_ms')

    def __init__(self,
                 train_dataset,
                 test_dataset,
                 base_config=TrainConfig.default):
        self.train_dataset = train_dataset
        self.test_dataset = test_dataset
        self.base_config = base_config
        self.evaluator = Evaluator(test_dataset)

    @staticmethod
    def grid(lambdas, learning_rates, epochs, repeats=1):
        return [
            GridPoint(*values)
            for values in itertools.product(lambdas, learning_rates, epochs,
                                            range(repeats))
        ]

    async def run(self, grid, jobs=1):
        """Returns one row per grid point, in grid order."""
        if not grid:
            raise ValueError('The grid is empty')
        logger.info('Sweeping %d grid points', len(grid))
        if jobs <= 1:
            return [self.run_point(point) for point in grid]
        # Solve the oracle once, before the evaluator is copied to workers.
        self.evaluator.oracle_solutions
        loop = asyncio.get_running_loop()
        with concurrent.futures.ProcessPoolExecutor(jobs) as executor:
            coros = (loop.run_in_executor(executor, _train_and_evaluate, point,
                                          point.config_for(self.base_config),
                                          self.train_dataset, self.evaluator)
                     for point in grid)
            return await Sweep.run_coros(coros)

    def run_point(self, point):
        logger.info('Grid point %s', point)
        return _train_and_evaluate(point, point.config_for(self.base_config),
                                   self.train_dataset, self.evaluator)

    @staticmethod
    async def run_coros(coros, parallel=True):
        if parallel:
            return await asyncio.gather(*coros)
        results = []
        for coro in coros:
            results.append(await coro)
        return results

    @staticmethod
    async def main():
        parser = argparse.ArgumentParser(prog='unsupervised-gap sweep')
        parser.add_argument("--data",
                            type=pathlib.Path,
                            required=True,
                            help="training dataset.")
        parser.add_argument("--test",
                            type=pathlib.Path,
                            required=True,
                            help="test dataset.")
        Trainer.add_train_arguments(parser, grid=True)
        parser.add_argument("--repeats",
                            type=int,
                            default=1,
                            help="number of seeds per grid point.")
        parser.add_argument("-j",
                            "--jobs",
                            type=int,
                            default=1,
                            help="number of processes.")
        parser.add_argument("-o",
                            "--out",
                            type=pathlib.Path,
                            required=True,
                            help="output CSV.")
        parser.add_argument("-v",
                            "--verbose",
                            help="increase output verbosity.",
                            action="count",
                            default=0)
        args = parser.parse_args()
        init_logging(args.verbose, main=logger)
        train_dataset = Dataset.load(args.data)
        test_dataset = Dataset.load(args.test)
        lambdas, learning_rates, epochs = args.lambda_, args.lr, args.epochs
        args.lambda_ = args.lr = args.epochs = None
        base = Trainer.config_from_args(args, train_dataset)
        grid = Sweep.grid(lambdas or [base.lambda_],
                          learning_rates or [base.learning_rate],
                          epochs or [base.epochs], args.repeats)
        sweep = Sweep(train_dataset, test_dataset, base)
        rows = await sweep.run(grid, jobs=args.jobs)
        write_csv(rows, Sweep.columns, args.out)


class Benchmark(object):
    """Compares the exact oracle with the greedy baseline, example by
    example."""

    columns = ('index', 'exact_objective', 'exact_time_ms',
               'greedy_objective', 'greedy_time_ms', 'greedy_pct_of_optimal')

    def __init__(self, dataset):
        self.dataset = dataset

    def run(self):
        rows = []
        for index, inst in enumerate(self.dataset.instances):
            exact = solve_unit_weight_exact(inst)
            greedy = greedy_baseline(inst)
            rows.append({
                'index': index,
                'exact_objective': exact.objective,
                'exact_time_ms': exact.solve_time * 1000,
                'greedy_objective': greedy.objective,
                'greedy_time_ms': greedy.solve_time * 1000,
                'greedy_pct_of_optimal':
                100.0 * greedy.objective / exact.objective
                if exact.objective else 100.0,
            })
        logger.info(
            'Exact: mean Z=%.4f %.4fms, greedy: mean Z=%.4f %.4fms',
            np.mean([row['exact_objective'] for row in rows]),
            np.mean([row['exact_time_ms'] for row in rows]),
            np.mean([row['greedy_objective'] for row in rows]),
            np.mean([row['greedy_time_ms'] for row in rows]))
        return rows

    @staticmethod
    async def main():
        parser = argparse.ArgumentParser(prog='unsupervised-gap benchmark')
        parser.add_argument("--data",
                            type=pathlib.Path,
                            required=True,
                            help="dataset.")
        parser.add_argument("-o",
                            "--out",
                            type=pathlib.Path,
                            required=True,
                            help="output CSV.")
        parser.add_argument("-v",
                            "--verbose",
                            help="increase output verbosity.",
                            action="count",
                            default=0)
        args = parser.parse_args()
        init_logging(args.verbose, main=logger)
        rows = Benchmark(Dataset.load(args.data)).run()
        write_csv(rows, Benchmark.columns, args.out)


if __name__ == '__main__':
    start_time = time.time()
    asyncio.run(Sweep.main())
    elapsed = time.time() - start_time
    logger.info(f'Elapsed {elapsed:.2f}s')
