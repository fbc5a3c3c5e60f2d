import numpy as np

# Default slack for feasibility checks on continuous Softmax outputs.
DEFAULT_EPS = 1e-6


class GapError(Exception):
    """The root of errors raised by this package."""
    pass


class DimensionError(GapError, ValueError):
    pass


def _readonly(array):
    array.flags.writeable = False
    return array


class GapInstance(object):
    """One generalized assignment problem: assign `n_items` items to
    `n_knapsacks` knapsacks, maximizing the total profit, so that each item
    goes to exactly one knapsack and no knapsack exceeds its capacity."""

    def __init__(self, profits, weights, capacities):
        profits = np.array(profits, dtype=np.float64)
        weights = np.array(weights, dtype=np.float64)
        capacities = np.array(capacities, dtype=np.float64)
        if profits.ndim != 2:
            raise DimensionError(
                f'profits must be a matrix, got shape {profits.shape}')
        if weights.shape != profits.shape:
            raise DimensionError(f'weights shape {weights.shape} != '
                                 f'profits shape {profits.shape}')
        if capacities.shape != (profits.shape[1], ):
            raise DimensionError(f'capacities shape {capacities.shape} != '
                                 f'({profits.shape[1]},)')
        if profits.size == 0:
            raise DimensionError('An instance needs at least one item '
                                 'and one knapsack')
        if not np.all(np.isfinite(profits)):
            raise ValueError('profits must be finite')
        if not np.all(np.isfinite(weights)) or np.any(weights < 0):
            raise ValueError('weights must be finite and non-negative')
        if not np.all(np.isfinite(capacities)) or np.any(capacities <= 0):
            raise ValueError('capacities must be finite and positive')
        self.profits = _readonly(profits)
        self.weights = _readonly(weights)
        self.capacities = _readonly(capacities)

    @staticmethod
    def unit_weight(profits, quota):
        """Creates an instance where every weight is 1 and every knapsack
        holds `quota` items."""
        profits = np.asarray(profits, dtype=np.float64)
        return GapInstance(profits, np.ones_like(profits),
                           np.full(profits.shape[1], float(quota)))

    @property
    def n_items(self):
        return self.profits.shape[0]

    @property
    def n_knapsacks(self):
        return self.profits.shape[1]

    @property
    def shape(self):
        return self.profits.shape

    @property
    def is_unit_weight(self):
        return bool(np.all(self.weights == 1))

    def to_json(self):
        return {
            'I': self.n_items,
            'J': self.n_knapsacks,
            'profits': self.profits.ravel().tolist(),
            'weights': self.weights.ravel().tolist(),
            'capacities': self.capacities.tolist(),
        }

    @staticmethod
    def from_json(value):
        shape = (value['I'], value['J'])
        try:
            profits = np.reshape(value['profits'], shape)
            weights = np.reshape(value['weights'], shape)
        except ValueError as e:
            raise DimensionError(f'Instance arrays do not match I×J={shape}: '
                                 f'{e}') from e
        return GapInstance(profits, weights, value['capacities'])

    def __eq__(self, other):
        return (isinstance(other, GapInstance)
                and np.array_equal(self.profits, other.profits)
                and np.array_equal(self.weights, other.weights)
                and np.array_equal(self.capacities, other.capacities))

    def __str__(self):
        return f'GapInstance(I={self.n_items}, J={self.n_knapsacks})'


class Assignment(object):
    """An I×J association matrix `u`.

    A soft assignment is a row-stochastic relaxation, such as the output of
    the split-Softmax network. A hard assignment is binary with exactly one 1
    per row. Soft matrices are only checked to lie in [0, 1] unless `strict`,
    so that penalty terms can be evaluated on rows that do not sum to 1."""

    SOFT = 'soft'
    HARD = 'hard'

    def __init__(self, u, mode=SOFT, strict=False, tolerance=DEFAULT_EPS):
        u = np.array(u, dtype=np.float64)
        if u.ndim != 2:
            raise DimensionError(f'u must be a matrix, got shape {u.shape}')
        if mode not in (Assignment.SOFT, Assignment.HARD):
            raise ValueError(f'Unknown assignment mode "{mode}"')
        if not np.all(np.isfinite(u)) or np.any(u < 0) or np.any(u > 1):
            raise ValueError('Every entry of u must be in [0, 1]')
        if mode == Assignment.HARD:
            if not np.all((u == 0) | (u == 1)):
                raise ValueError('A hard assignment must be binary')
            if not np.all(u.sum(axis=1) == 1):
                raise ValueError('Each row of a hard assignment must have '
                                 'exactly one 1')
        elif strict:
            row_sums = u.sum(axis=1)
            if np.any(np.abs(row_sums - 1) > tolerance):
                raise ValueError(f'Rows of a soft assignment must sum to 1, '
                                 f'got {row_sums}')
        self.u = _readonly(u)
        self.mode = mode

    @staticmethod
    def from_choices(choices, n_knapsacks):
        """Creates a hard assignment where item `i` goes to `choices[i]`."""
        choices = np.asarray(choices, dtype=np.intp)
        u = np.zeros((len(choices), n_knapsacks))
        u[np.arange(len(choices)), choices] = 1
        return Assignment(u, mode=Assignment.HARD)

    @property
    def is_hard(self):
        return self.mode == Assignment.HARD

    @property
    def shape(self):
        return self.u.shape

    @property
    def choices(self):
        return np.argmax(self.u, axis=1)

    def __str__(self):
        return f'Assignment({self.mode}, {self.u.tolist()})'


class FeasibilityReport(object):
    def __init__(self, c1_ok, c2_ok_per_knapsack, c3_ok, loads):
        self.c1_ok = c1_ok
        self.c2_ok_per_knapsack = tuple(c2_ok_per_knapsack)
        self.c3_ok = c3_ok
        self.loads = loads

    @property
    def c2_ok(self):
        return all(self.c2_ok_per_knapsack)

    @property
    def is_feasible(self):
        return self.c1_ok and self.c2_ok and self.c3_ok

    def __str__(self):
        return (f'C1={self.c1_ok} C2={list(self.c2_ok_per_knapsack)} '
                f'C3={self.c3_ok}')


def _check_dimensions(inst, a):
    if inst.shape != a.shape:
        raise DimensionError(f'Assignment shape {a.shape} does not match '
                             f'instance shape {inst.shape}')


def objective(inst, a):
    """Returns the total profit Z = sum(u * p)."""
    _check_dimensions(inst, a)
    return float(np.sum(a.u * inst.profits))


def knapsack_loads(inst, a):
    """Returns the weighted load of each knapsack."""
    _check_dimensions(inst, a)
    return np.sum(inst.weights * a.u, axis=0)


def check_feasibility(inst, a, eps=DEFAULT_EPS):
    """Checks the assignment equality (C1), capacity (C2) and binary (C3)
    constraints, each with the slack `eps`."""
    if eps < 0:
        raise ValueError(f'eps must be non-negative, got {eps}')
    loads = knapsack_loads(inst, a)
    u = a.u
    c1_ok = bool(np.all(np.abs(u.sum(axis=1) - 1) <= eps))
    c2_ok = loads <= inst.capacities + eps
    c3_ok = bool(np.all(np.minimum(np.abs(u), np.abs(u - 1)) <= eps))
    return FeasibilityReport(c1_ok, (bool(ok) for ok in c2_ok), c3_ok, loads)


def harden(a):
    """Rounds each row to its largest entry. `np.argmax` returns the first
    maximum, so ties go to the lowest knapsack index."""
    return Assignment.from_choices(np.argmax(a.u, axis=1), a.shape[1])


def harden_batch(u):
    """`harden` on a stacked (batch, I, J) array."""
    u = np.asarray(u)
    choices = np.argmax(u, axis=-1)
    return (np.arange(u.shape[-1]) == choices[..., None]).astype(np.float64)


def batch_objectives(profits, u):
    """Z for each example of stacked (batch, I, J) arrays."""
    return np.einsum('bij,bij->b', profits, u)


def batch_loads(weights, u):
    """Knapsack loads for each example of stacked (batch, I, J) arrays."""
    return np.einsum('bij,bij->bj', weights, u)


def violation_probabilities(loads, capacities, eps=DEFAULT_EPS):
    """Per-knapsack fraction of examples whose load exceeds the capacity.
    `loads` and `capacities` are (batch, J) arrays."""
    loads = np.asarray(loads)
    if loads.shape[0] == 0:
        raise ValueError('At least one example is required')
    return np.mean(loads > np.asarray(capacities) + eps, axis=0)


def avg_constraint_violation_probability(instances,
                                         assignments,
                                         eps=DEFAULT_EPS):
    """Computes, for each knapsack, the fraction of examples whose capacity is
    exceeded, and returns the mean over knapsacks."""
    instances = tuple(instances)
    assignments = tuple(assignments)
    if not instances:
        raise ValueError('At least one example is required')
    if len(instances) != len(assignments):
        raise DimensionError(f'{len(instances)} instances but '
                             f'{len(assignments)} assignments')
    n_knapsacks = instances[0].n_knapsacks
    if any(inst.n_knapsacks != n_knapsacks for inst in instances):
        raise DimensionError('All instances must have the same number '
                             'of knapsacks')
    loads = np.stack(
        [knapsack_loads(inst, a) for inst, a in zip(instances, assignments)])
    capacities = np.stack([inst.capacities for inst in instances])
    return float(np.mean(violation_probabilities(loads, capacities, eps)))
