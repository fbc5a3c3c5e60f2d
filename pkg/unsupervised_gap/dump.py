#!/usr/bin/env python3
import argparse
import asyncio
import json
import logging
import pathlib
import sys
import time

import numpy as np

from unsupervised_gap.dataset import Dataset
from unsupervised_gap.gap import GapError
from unsupervised_gap.log_utils import init_logging
from unsupervised_gap.network import MlpModel
from unsupervised_gap.oracle import greedy_baseline
from unsupervised_gap.oracle import solve_unit_weight_exact

logger = logging.getLogger('dump')


class Dump(object):
    DATASET = 'dataset'
    CHECKPOINT = 'checkpoint'

    @staticmethod
    def detect(path):
        """Returns `DATASET` or `CHECKPOINT` from the first line of `path`."""
        with path.open() as in_file:
            first_line = in_file.readline()
        try:
            value = json.loads(first_line)
        except json.JSONDecodeError:
            # A checkpoint spanning several lines, or not JSON at all.
            value = json.loads(path.read_text())
        if 'layer_dims' in value:
            return Dump.CHECKPOINT
        if 'n' in value:
            return Dump.DATASET
        raise GapError(f'"{path}" is neither a dataset nor a checkpoint')

    @staticmethod
    def dump_array_stats(name, array, out_file=sys.stdout):
        array = np.asarray(array)
        print(f'{name}: shape={array.shape} min={array.min():.6g} '
              f'mean={array.mean():.6g} max={array.max():.6g}',
              file=out_file)

    @staticmethod
    def dump_dataset(dataset,
                     examples=0,
                     oracle=False,
                     out_file=sys.stdout):
        print(dataset, file=out_file)
        config = dataset.config
        if config:
            for key in sorted(config):
                print(f'  {key}: {config[key]}', file=out_file)
        Dump.dump_array_stats('Features', dataset.features, out_file)
        Dump.dump_array_stats('Profits', dataset.profits, out_file)
        Dump.dump_array_stats('Weights', dataset.weights, out_file)
        Dump.dump_array_stats('Capacities', dataset.capacities, out_file)
        for index in range(min(examples, len(dataset))):
            inst = dataset.instance(index)
            print(f'Example {index}: capacities={inst.capacities.tolist()}',
                  file=out_file)
            for i, row in enumerate(inst.profits):
                print(f'  {i:3d} ' + ' '.join(f'{p:10.4f}' for p in row),
                      file=out_file)
        if oracle:
            exact = [
                solve_unit_weight_exact(inst) for inst in dataset.instances
            ]
            greedy = [greedy_baseline(inst) for inst in dataset.instances]
            exact_mean = np.mean([s.objective for s in exact])
            greedy_mean = np.mean([s.objective for s in greedy])
            print(
                f'Oracle: mean Z={exact_mean:.6g} '
                f'{np.mean([s.solve_time for s in exact]) * 1000:.3f}ms',
                file=out_file)
            print(
                f'Greedy: mean Z={greedy_mean:.6g} '
                f'({100 * greedy_mean / exact_mean:.2f}% of the oracle) '
                f'{np.mean([s.solve_time for s in greedy]) * 1000:.3f}ms',
                file=out_file)

    @staticmethod
    def dump_model(model, out_file=sys.stdout):
        print(model, file=out_file)
        for index, (w, b) in enumerate(zip(model.weights, model.biases)):
            print(f'Layer {index + 1}: {w.shape[1]} -> {w.shape[0]} '
                  f'|W|={np.linalg.norm(w):.6g} |b|={np.linalg.norm(b):.6g}',
                  file=out_file)
        if model.feature_norm is None:
            print('Features: not normalized', file=out_file)
        else:
            Dump.dump_array_stats('Feature mean', model.feature_norm.mean,
                                  out_file)
            Dump.dump_array_stats('Feature std', model.feature_norm.std,
                                  out_file)

    @staticmethod
    def dump_path(path, out_file=sys.stdout, **kwargs):
        if isinstance(path, str):
            path = pathlib.Path(path)
        print(f'File: {path}', file=out_file)
        kind = Dump.detect(path)
        if kind == Dump.CHECKPOINT:
            Dump.dump_model(MlpModel.load(path), out_file=out_file)
            return kind
        Dump.dump_dataset(Dataset.load(path), out_file=out_file, **kwargs)
        return kind

    @staticmethod
    async def main():
        parser = argparse.ArgumentParser(prog='unsupervised-gap dump')
        parser.add_argument("path",
                            nargs="+",
                            type=pathlib.Path,
                            help="datasets or checkpoints.")
        parser.add_argument("-e",
                            "--examples",
                            type=int,
                            default=0,
                            help="print the profits of the first examples.")
        parser.add_argument("--oracle",
                            action="store_true",
                            help="solve the datasets with the oracle and "
                            "the greedy baseline.")
        parser.add_argument("-o",
                            "--output",
                            type=pathlib.Path,
                            help="output file.")
        parser.add_argument("-v",
                            "--verbose",
                            help="increase output verbosity.",
                            action="count",
                            default=0)
        args = parser.parse_args()
        init_logging(args.verbose, main=logger)
        out_file = args.output.open('w') if args.output else sys.stdout
        try:
            for path in args.path:
                Dump.dump_path(path,
                               out_file=out_file,
                               examples=args.examples,
                               oracle=args.oracle)
        finally:
            if args.output:
                out_file.close()


if __name__ == '__main__':
    start_time = time.time()
    asyncio.run(Dump.main())
    elapsed = time.time() - start_time
    logger.info(f'Elapsed {elapsed:.2f}s')
