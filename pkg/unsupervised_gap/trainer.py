#!/usr/bin/env python3
import argparse
import asyncio
import json
import logging
import math
import pathlib
import time

import numpy as np

from unsupervised_gap.config import LossConfig
from unsupervised_gap.config import Scenario
from unsupervised_gap.config import TrainConfig
from unsupervised_gap.dataset import Dataset
from unsupervised_gap.dataset import make_batches
from unsupervised_gap.gap import DEFAULT_EPS
from unsupervised_gap.gap import DimensionError
from unsupervised_gap.gap import batch_loads
from unsupervised_gap.gap import batch_objectives
from unsupervised_gap.gap import harden_batch
from unsupervised_gap.gap import violation_probabilities
from unsupervised_gap.log_utils import init_logging
from unsupervised_gap.log_utils import log_batch_losses
from unsupervised_gap.loss import LossBatch
from unsupervised_gap.loss import loss_grad_wrt_u
from unsupervised_gap.loss import loss_simplified
from unsupervised_gap.network import AdamState
from unsupervised_gap.network import DivergenceError
from unsupervised_gap.network import FeatureNorm
from unsupervised_gap.network import MlpModel
from unsupervised_gap.network import adam_step
from unsupervised_gap.oracle import solve_unit_weight_exact

logger = logging.getLogger('train')

# Tolerance of the item rows of a split-Softmax output.
ROW_SUM_TOLERANCE = 1e-6


class Metrics(object):
    """Test-set quality and latency of a solver, compared with the exact
    oracle."""

    def __init__(self,
                 n_examples,
                 mean_sum_rate,
                 mean_oracle_sum_rate,
                 violation_per_knapsack,
                 mean_inference_time,
                 mean_oracle_time,
                 hardened_sum_rate=None,
                 hardened_violation_prob=None,
                 loss_history=()):
        self.n_examples = n_examples
        self.mean_sum_rate = mean_sum_rate
        self.mean_oracle_sum_rate = mean_oracle_sum_rate
        self.violation_per_knapsack = list(violation_per_knapsack)
        self.mean_inference_time = mean_inference_time
        self.mean_oracle_time = mean_oracle_time
        self.hardened_sum_rate = hardened_sum_rate
        self.hardened_violation_prob = hardened_violation_prob
        self.loss_history = list(loss_history)

    @property
    def pct_of_optimal(self):
        return 100.0 * self.mean_sum_rate / self.mean_oracle_sum_rate

    @property
    def hardened_pct_of_optimal(self):
        if self.hardened_sum_rate is None:
            return None
        return 100.0 * self.hardened_sum_rate / self.mean_oracle_sum_rate

    @property
    def avg_violation_prob(self):
        return float(np.mean(self.violation_per_knapsack))

    def to_dict(self):
        return {
            'n_examples': self.n_examples,
            'mean_sum_rate': self.mean_sum_rate,
            'mean_oracle_sum_rate': self.mean_oracle_sum_rate,
            'pct_of_optimal': self.pct_of_optimal,
            'avg_violation_prob': self.avg_violation_prob,
            'violation_per_knapsack': self.violation_per_knapsack,
            'mean_inference_time': self.mean_inference_time,
            'mean_oracle_time': self.mean_oracle_time,
            'hardened_sum_rate': self.hardened_sum_rate,
            'hardened_pct_of_optimal': self.hardened_pct_of_optimal,
            'hardened_violation_prob': self.hardened_violation_prob,
            'loss_history': self.loss_history,
        }

    def save(self, path):
        if isinstance(path, str):
            path = pathlib.Path(path)
        logger.info('Saving metrics to "%s"', path)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))
        return path

    def __str__(self):
        return (f'sum rate {self.mean_sum_rate:.4f} '
                f'({self.pct_of_optimal:.2f}% of '
                f'{self.mean_oracle_sum_rate:.4f}), '
                f'violation {self.avg_violation_prob:.4f}, '
                f'DNN {self.mean_inference_time * 1000:.4f}ms, '
                f'oracle {self.mean_oracle_time * 1000:.4f}ms')


def _check_model_matches(model, dataset):
    size = dataset.n_items * dataset.n_knapsacks
    if (model.layer_dims[0] != size
            or model.split != (dataset.n_items, dataset.n_knapsacks)):
        raise DimensionError(
            f'Model dims {model.layer_dims} split {model.split} do not match '
            f'the dataset of {dataset.n_items}x{dataset.n_knapsacks}')


class Trainer(object):
    """Trains the split-Softmax network on the simplified penalty loss with
    mini-batch Adam. Every random choice derives from `config.seed`."""

    def __init__(self, config=TrainConfig.default):
        self.config = config.clone().validate()

    def epoch_seed(self, epoch):
        return [self.config.seed, epoch]

    def train(self, dataset):
        """Returns `(model, loss_history)`, the mean training loss of each
        epoch."""
        config = self.config
        split = (dataset.n_items, dataset.n_knapsacks)
        size = split[0] * split[1]
        if config.layer_dims[0] != size or config.layer_dims[-1] != size:
            raise DimensionError(
                f'layer_dims {config.layer_dims} must start and end with '
                f'{size} for {split[0]}x{split[1]} instances')
        loss_config = config.loss_config()
        model = MlpModel.init(config.layer_dims, split, config.seed)
        if config.normalize_features:
            model.feature_norm = FeatureNorm.fit(dataset.features)
        state = AdamState.for_model(model,
                                    beta1=config.beta1,
                                    beta2=config.beta2,
                                    eps_adam=config.eps_adam)
        logger.info('Training %s on %s: %s', model, dataset, config)
        loss_history = []
        for epoch in range(config.epochs):
            batches = make_batches(dataset, config.batch_size,
                                   self.epoch_seed(epoch))
            total = 0.0
            for index, batch in enumerate(batches):
                loss = self.step(model, state, batch, loss_config, epoch,
                                 index)
                total += loss * len(batch)
            loss_history.append(total / len(dataset))
            logger.info('Epoch %d/%d loss=%.6f', epoch + 1, config.epochs,
                        loss_history[-1])
        return model, loss_history

    def step(self, model, state, batch, loss_config, epoch=None, index=None):
        """Runs forward, loss, backward and Adam on one batch, and returns
        the batch loss before the update."""
        u, cache = model.forward(batch.features)
        loss_batch = LossBatch(batch.profits, batch.weights, batch.capacities,
                               u)
        loss = loss_simplified(loss_batch, loss_config)
        if not math.isfinite(loss):
            raise DivergenceError(f'Non-finite loss {loss}', epoch, index)
        grads = model.backward(cache, loss_grad_wrt_u(loss_batch,
                                                      loss_config))
        try:
            adam_step(model, grads, state, self.config.learning_rate)
        except DivergenceError as e:
            raise DivergenceError(str(e), epoch, index) from e
        if log_batch_losses():
            logger.debug('Epoch %s batch %s loss=%.6f', epoch, index, loss)
        return loss

    @staticmethod
    def config_from_args(args, dataset=None):
        if args.scenario:
            config = Scenario.get(args.scenario).train_config()
        elif dataset is not None:
            # The reference settings for the size of the dataset.
            config = TrainConfig.default.for_scenario(dataset.n_items,
                                                      dataset.n_knapsacks)
        else:
            config = TrainConfig.default.clone()
        overrides = {
            'lambda_': args.lambda_,
            'learning_rate': args.lr,
            'epochs': args.epochs,
            'batch_size': args.batch,
            'layer_dims': args.dims,
            'seed': args.seed,
        }
        for key, value in overrides.items():
            if value is not None:
                setattr(config, key, value)
        if args.penalty_sign:
            config.penalty_sign = LossConfig.parse_penalty_sign(
                args.penalty_sign)
        if args.no_normalize:
            config.normalize_features = False
        return config.validate()

    @staticmethod
    def add_train_arguments(parser, grid=False):
        """Adds the hyperparameter options. With `grid`, `--lambda`, `--lr`
        and `--epochs` take comma separated lists."""
        parser.add_argument("--scenario",
                            choices=sorted(Scenario.all),
                            help="start from the settings of a scenario.")
        parser.add_argument("--lambda",
                            dest="lambda_",
                            type=parse_float_list if grid else float,
                            help="penalty parameter.")
        parser.add_argument("--lr",
                            type=parse_float_list if grid else float,
                            help="learning rate.")
        parser.add_argument("--epochs",
                            type=parse_int_list if grid else int)
        parser.add_argument("--batch", type=int, help="mini-batch size.")
        parser.add_argument("--dims",
                            type=parse_int_list,
                            help="comma separated layer widths,"
                            " input and output included.")
        parser.add_argument("--seed", type=int)
        parser.add_argument("--penalty-sign",
                            choices=["printed", "corrected"],
                            help="sign of the capacity penalty.")
        parser.add_argument("--no-normalize",
                            action="store_true",
                            help="do not standardize the features.")

    @staticmethod
    async def main():
        parser = argparse.ArgumentParser(prog='unsupervised-gap train')
        parser.add_argument("--data",
                            type=pathlib.Path,
                            required=True,
                            help="training dataset.")
        Trainer.add_train_arguments(parser)
        parser.add_argument("-o",
                            "--out",
                            type=pathlib.Path,
                            required=True,
                            help="output checkpoint.")
        parser.add_argument("--history",
                            type=pathlib.Path,
                            help="output the loss history as JSON.")
        parser.add_argument("-v",
                            "--verbose",
                            help="increase output verbosity.",
                            action="count",
                            default=0)
        args = parser.parse_args()
        init_logging(args.verbose, main=logger)
        dataset = Dataset.load(args.data)
        config = Trainer.config_from_args(args, dataset)
        model, loss_history = Trainer(config).train(dataset)
        model.save(args.out)
        if args.history:
            args.history.write_text(json.dumps(loss_history))


def parse_int_list(value):
    return [int(item) for item in value.split(',') if item]


def parse_float_list(value):
    return [float(item) for item in value.split(',') if item]


class Evaluator(object):
    """Computes `Metrics` of a model, or of any assignments, on a test set.
    Oracle solutions are cached so they are solved once per dataset."""

    def __init__(self,
                 dataset,
                 eps=DEFAULT_EPS,
                 oracle=solve_unit_weight_exact):
        self.dataset = dataset
        self.eps = eps
        self.oracle = oracle
        self._oracle_solutions = None

    @property
    def oracle_solutions(self):
        if self._oracle_solutions is None:
            solutions = [self.oracle(inst) for inst in self.dataset.instances]
            logger.info(
                'Oracle: mean Z=%.4f, %.4fms per example',
                np.mean([s.objective for s in solutions]),
                np.mean([s.solve_time for s in solutions]) * 1000)
            self._oracle_solutions = solutions
        return self._oracle_solutions

    def evaluate(self, model, loss_history=()):
        dataset = self.dataset
        _check_model_matches(model, dataset)
        inference = model.for_inference()
        start = time.perf_counter()
        u = inference.predict(dataset.features)
        inference_time = (time.perf_counter() - start) / len(dataset)
        row_sums = u.sum(axis=-1)
        bad_rows = np.abs(row_sums - 1) > ROW_SUM_TOLERANCE
        if np.any(bad_rows):
            examples = sorted(set(np.nonzero(bad_rows)[0].tolist()))
            raise AssertionError(
                f'{len(examples)}/{len(dataset)} outputs violate the '
                f'assignment equality: examples {examples[:10]}')
        return self.evaluate_assignments(u, inference_time, loss_history)

    def evaluate_assignments(self, u, inference_time=0.0, loss_history=()):
        """Metrics of stacked (n, I, J) assignments of the dataset."""
        dataset = self.dataset
        u = np.asarray(u, dtype=np.float64)
        if u.shape != dataset.profits.shape:
            raise DimensionError(f'Assignments of shape {u.shape} do not '
                                 f'match the dataset {dataset.profits.shape}')
        solutions = self.oracle_solutions
        sum_rates = batch_objectives(dataset.profits, u)
        violations = violation_probabilities(
            batch_loads(dataset.weights, u), dataset.capacities, self.eps)
        hard = harden_batch(u)
        hard_violations = violation_probabilities(
            batch_loads(dataset.weights, hard), dataset.capacities, self.eps)
        metrics = Metrics(
            n_examples=len(dataset),
            mean_sum_rate=float(np.mean(sum_rates)),
            mean_oracle_sum_rate=float(
                np.mean([s.objective for s in solutions])),
            violation_per_knapsack=violations.tolist(),
            mean_inference_time=inference_time,
            mean_oracle_time=float(np.mean([s.solve_time
                                            for s in solutions])),
            hardened_sum_rate=float(
                np.mean(batch_objectives(dataset.profits, hard))),
            hardened_violation_prob=float(np.mean(hard_violations)),
            loss_history=loss_history)
        logger.info('Metrics: %s', metrics)
        return metrics

    @staticmethod
    async def main():
        parser = argparse.ArgumentParser(prog='unsupervised-gap eval')
        parser.add_argument("--model",
                            type=pathlib.Path,
                            required=True,
                            help="checkpoint.")
        parser.add_argument("--data",
                            type=pathlib.Path,
                            required=True,
                            help="test dataset.")
        parser.add_argument("-o",
                            "--out",
                            type=pathlib.Path,
                            help="output metrics JSON.")
        parser.add_argument("--eps",
                            type=float,
                            default=DEFAULT_EPS,
                            help="capacity slack of the violation metric.")
        parser.add_argument("-v",
                            "--verbose",
                            help="increase output verbosity.",
                            action="count",
                            default=0)
        args = parser.parse_args()
        init_logging(args.verbose, main=logger)
        model = MlpModel.load(args.model)
        dataset = Dataset.load(args.data)
        metrics = Evaluator(dataset, eps=args.eps).evaluate(model)
        if args.out:
            metrics.save(args.out)
        print(metrics)


def train(dataset, config=TrainConfig.default):
    return Trainer(config).train(dataset)


def evaluate(model, test_dataset, eps=DEFAULT_EPS):
    return Evaluator(test_dataset, eps=eps).evaluate(model)


if __name__ == '__main__':
    start_time = time.time()
    asyncio.run(Trainer.main())
    elapsed = time.time() - start_time
    logger.info(f'Elapsed {elapsed:.2f}s')
