import json
import logging
import pathlib

import numpy as np

from unsupervised_gap.gap import DimensionError
from unsupervised_gap.gap import GapError
from unsupervised_gap.gap import GapInstance

logger = logging.getLogger('dataset')

DATASET_VERSION = 1


class Batch(object):
    """A mini-batch: the dataset indices and the rows they select."""

    def __init__(self, dataset, indices):
        self.indices = indices
        self.features = dataset.features[indices]
        self.profits = dataset.profits[indices]
        self.weights = dataset.weights[indices]
        self.capacities = dataset.capacities[indices]

    def __len__(self):
        return len(self.indices)


class Dataset(object):
    """Feature vectors and the GAP instances they describe, stored as stacked
    arrays: `features` (n, I*J), `profits` and `weights` (n, I, J) and
    `capacities` (n, J)."""

    def __init__(self, header, features, profits, weights, capacities):
        self.header = header
        self.features = np.asarray(features, dtype=np.float64)
        self.profits = np.asarray(profits, dtype=np.float64)
        self.weights = np.asarray(weights, dtype=np.float64)
        self.capacities = np.asarray(capacities, dtype=np.float64)
        n = self.profits.shape[0]
        if self.profits.ndim != 3:
            raise DimensionError(
                f'profits must be (n, I, J), got {self.profits.shape}')
        if (self.weights.shape != self.profits.shape
                or self.capacities.shape != (n, self.n_knapsacks)
                or self.features.shape[0] != n):
            raise DimensionError('Dataset arrays have inconsistent shapes')
        if header.get('n', n) != n:
            raise DimensionError(
                f'Header says n={header["n"]} but there are {n} examples')

    @staticmethod
    def from_arrays(profits, weights, capacities, features=None, config=None,
                    seed=None):
        profits = np.asarray(profits, dtype=np.float64)
        if features is None:
            features = profits.reshape(profits.shape[0], -1)
        header = {
            'version': DATASET_VERSION,
            'config': config,
            'seed': seed,
            'n': profits.shape[0],
        }
        return Dataset(header, features, profits, weights, capacities)

    @staticmethod
    def from_instances(instances, features=None, config=None, seed=None):
        instances = tuple(instances)
        if not instances:
            raise ValueError('A dataset needs at least one example')
        if len(set(inst.shape for inst in instances)) != 1:
            raise DimensionError('All instances must share (I, J)')
        return Dataset.from_arrays(
            np.stack([inst.profits for inst in instances]),
            np.stack([inst.weights for inst in instances]),
            np.stack([inst.capacities for inst in instances]),
            features=features,
            config=config,
            seed=seed)

    def __len__(self):
        return self.profits.shape[0]

    @property
    def n_items(self):
        return self.profits.shape[1]

    @property
    def n_knapsacks(self):
        return self.profits.shape[2]

    @property
    def shape(self):
        return self.profits.shape[1:]

    @property
    def seed(self):
        return self.header.get('seed')

    @property
    def config(self):
        return self.header.get('config')

    def instance(self, index):
        return GapInstance(self.profits[index], self.weights[index],
                           self.capacities[index])

    @property
    def instances(self):
        return (self.instance(index) for index in range(len(self)))

    @property
    def examples(self):
        """Yields `(feature vector, GapInstance)`."""
        for index in range(len(self)):
            yield self.features[index], self.instance(index)

    def save(self, path):
        if isinstance(path, str):
            path = pathlib.Path(path)
        logger.info('Saving %d examples to "%s"', len(self), path)
        with path.open('w') as out_file:
            self.write(out_file)
        return path

    def write(self, out_file):
        out_file.write(json.dumps(self.header, sort_keys=True))
        out_file.write('\n')
        for features, instance in self.examples:
            line = {
                'features': features.tolist(),
                'instance': instance.to_json()
            }
            out_file.write(json.dumps(line, sort_keys=True))
            out_file.write('\n')

    @staticmethod
    def load(path):
        if isinstance(path, str):
            path = pathlib.Path(path)
        logger.info('Reading dataset: "%s"', path)
        with path.open() as in_file:
            return Dataset.read(in_file)

    @staticmethod
    def read(in_file):
        lines = (line for line in in_file if line.strip())
        try:
            header = json.loads(next(lines))
        except StopIteration:
            raise GapError('Empty dataset file')
        if header.get('version') != DATASET_VERSION:
            raise GapError(
                f'Unsupported dataset version {header.get("version")}')
        features = []
        instances = []
        for line in lines:
            example = json.loads(line)
            features.append(example['features'])
            instances.append(GapInstance.from_json(example['instance']))
        if not instances:
            raise GapError('The dataset has no examples')
        dataset = Dataset.from_instances(instances,
                                         features=np.array(features),
                                         config=header.get('config'),
                                         seed=header.get('seed'))
        if header.get('n') != len(dataset):
            raise DimensionError(f'Header says n={header.get("n")} but '
                                 f'there are {len(dataset)} examples')
        dataset.header = header
        return dataset

    def __str__(self):
        return (f'Dataset(n={len(self)}, I={self.n_items}, '
                f'J={self.n_knapsacks}, seed={self.seed})')


def make_batches(dataset, batch_size, epoch_seed):
    """Shuffles the dataset with `epoch_seed` and splits it into batches of
    `batch_size`; the last batch may be smaller."""
    n = len(dataset)
    if n == 0:
        raise ValueError('Cannot make batches of an empty dataset')
    if batch_size < 1:
        raise ValueError(f'batch_size must be >= 1: {batch_size}')
    order = np.random.default_rng(epoch_seed).permutation(n)
    return [
        Batch(dataset, order[start:start + batch_size])
        for start in range(0, n, batch_size)
    ]
