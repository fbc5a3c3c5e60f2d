import numpy as np

from unsupervised_gap.config import LossConfig
from unsupervised_gap.gap import DimensionError
from unsupervised_gap.gap import batch_loads
from unsupervised_gap.gap import batch_objectives


class LossBatch(object):
    """Stacked (batch, I, J) arrays of instances and their assignments."""

    def __init__(self, profits, weights, capacities, u):
        self.profits = np.asarray(profits, dtype=np.float64)
        self.weights = np.asarray(weights, dtype=np.float64)
        self.capacities = np.asarray(capacities, dtype=np.float64)
        self.u = np.asarray(u, dtype=np.float64)
        if self.profits.ndim != 3 or self.profits.shape[0] == 0:
            raise ValueError('A loss needs a non-empty batch of instances')
        if (self.weights.shape != self.profits.shape
                or self.u.shape != self.profits.shape
                or self.capacities.shape != (self.profits.shape[0],
                                             self.profits.shape[2])):
            raise DimensionError(
                f'Inconsistent batch shapes: profits {self.profits.shape}, '
                f'weights {self.weights.shape}, capacities '
                f'{self.capacities.shape}, u {self.u.shape}')

    @staticmethod
    def from_pairs(batch):
        """Creates from a sequence of `(GapInstance, Assignment)`."""
        batch = tuple(batch)
        if not batch:
            raise ValueError('A loss needs a non-empty batch of instances')
        shapes = set(inst.shape for inst, a in batch)
        shapes.update(a.shape for inst, a in batch)
        if len(shapes) != 1:
            raise DimensionError(f'Inconsistent shapes in batch: {shapes}')
        return LossBatch(np.stack([inst.profits for inst, a in batch]),
                         np.stack([inst.weights for inst, a in batch]),
                         np.stack([inst.capacities for inst, a in batch]),
                         np.stack([a.u for inst, a in batch]))

    @property
    def size(self):
        return self.profits.shape[0]

    @property
    def loads(self):
        return batch_loads(self.weights, self.u)

    @property
    def objectives(self):
        return batch_objectives(self.profits, self.u)


def _capacity_excess(batch, cfg):
    """The argument of the capacity ReLU for each (example, knapsack)."""
    if cfg.penalty_sign == LossConfig.CORRECTED:
        return batch.loads - batch.capacities
    # The sign as displayed, which penalizes under-loaded knapsacks.
    return batch.capacities - batch.loads


def capacity_penalties(batch, cfg):
    """Sum over knapsacks of the capacity penalty, for each example."""
    return np.sum(np.maximum(_capacity_excess(batch, cfg), 0.0), axis=1)


def equality_penalties(batch):
    """Sum over items of ReLU(1 - row sum), for each example."""
    return np.sum(np.maximum(1.0 - batch.u.sum(axis=2), 0.0), axis=1)


def _as_batch(batch):
    if isinstance(batch, LossBatch):
        return batch
    return LossBatch.from_pairs(batch)


def loss_full(batch, cfg):
    """The loss with both the equality and the capacity penalty terms,
    averaged over the batch."""
    batch = _as_batch(batch)
    per_example = (-batch.objectives +
                   cfg.lambda1 * equality_penalties(batch) +
                   cfg.lambda2 * capacity_penalties(batch, cfg))
    return float(np.mean(per_example))


def loss_simplified(batch, cfg):
    """The loss for row-stochastic assignments, where the equality term
    vanishes."""
    batch = _as_batch(batch)
    per_example = (-batch.objectives +
                   cfg.lambda_ * capacity_penalties(batch, cfg))
    return float(np.mean(per_example))


def loss_grad_wrt_u(batch, cfg):
    """Gradient of `loss_simplified` w.r.t. `u`, as a (batch, I, J) array.
    The penalty subgradient is 0 where a load equals its capacity."""
    batch = _as_batch(batch)
    active = (_capacity_excess(batch, cfg) > 0).astype(np.float64)
    if cfg.penalty_sign == LossConfig.CORRECTED:
        penalty = batch.weights * active[:, None, :]
    else:
        penalty = -batch.weights * active[:, None, :]
    return (-batch.profits + cfg.lambda_ * penalty) / batch.size
