import logging
import math
import time

import numpy as np

from unsupervised_gap.gap import Assignment
from unsupervised_gap.gap import GapError
from unsupervised_gap.gap import objective

logger = logging.getLogger('oracle')

# Slack for comparing accumulated weights against capacities.
_CAPACITY_SLACK = 1e-9


class InfeasibleError(GapError):
    pass


class InstanceTooLargeError(GapError):
    pass


class OracleSolution(object):
    HUNGARIAN_EXPANSION = 'hungarian_expansion'
    BRUTE_FORCE = 'brute_force'
    GREEDY = 'greedy'

    def __init__(self, assignment, objective, solve_time, method):
        self.assignment = assignment
        self.objective = objective
        self.solve_time = solve_time
        self.method = method

    @staticmethod
    def from_choices(inst, choices, solve_time, method):
        assignment = Assignment.from_choices(choices, inst.n_knapsacks)
        solution = OracleSolution(assignment, objective(inst, assignment),
                                  solve_time, method)
        logger.debug('%s: %s', inst, solution)
        return solution

    def __str__(self):
        return (f'{self.method}: Z={self.objective:.6g} '
                f'in {self.solve_time * 1000:.3f}ms')


def hungarian(cost):
    """Solves the linear sum assignment problem for an n×m cost matrix with
    n <= m in O(n^2 m), using row and column potentials and shortest
    augmenting paths. Returns `(columns, total_cost)` where row `i` is
    matched to `columns[i]`."""
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2:
        raise ValueError(f'cost must be a matrix, got shape {cost.shape}')
    if not np.all(np.isfinite(cost)):
        raise ValueError('cost must be finite')
    n, m = cost.shape
    if n > m:
        raise ValueError(f'More rows than columns: {cost.shape}')
    if n == 0:
        return np.zeros(0, dtype=np.intp), 0.0

    # Column `m` is a virtual start column; `row_of[m]` is the row being added.
    row_potential = np.zeros(n)
    col_potential = np.zeros(m + 1)
    row_of = np.full(m + 1, -1, dtype=np.intp)
    for row in range(n):
        col = m
        row_of[col] = row
        min_to = np.full(m, np.inf)
        prev_col = np.full(m, -1, dtype=np.intp)
        in_tree = np.zeros(m + 1, dtype=bool)
        while row_of[col] != -1:
            in_tree[col] = True
            i = row_of[col]
            free = ~in_tree[:m]
            reduced = cost[i] - row_potential[i] - col_potential[:m]
            better = free & (reduced < min_to)
            min_to[better] = reduced[better]
            prev_col[better] = col
            candidates = np.where(free, min_to, np.inf)
            next_col = int(np.argmin(candidates))
            delta = candidates[next_col]
            tree_cols = np.flatnonzero(in_tree)
            row_potential[row_of[tree_cols]] += delta
            col_potential[tree_cols] -= delta
            min_to[free] -= delta
            col = next_col
        # Flip the augmenting path back to the virtual column.
        while col != m:
            prev = prev_col[col]
            row_of[col] = row_of[prev]
            col = prev
    columns = np.full(n, -1, dtype=np.intp)
    for col in range(m):
        if row_of[col] >= 0:
            columns[row_of[col]] = col
    assert np.all(columns >= 0)
    return columns, float(cost[np.arange(n), columns].sum())


def _require_unit_weight(inst):
    if not inst.is_unit_weight:
        raise GapError('This solver requires all weights to be 1')
    capacities = inst.capacities
    if not np.all(capacities == np.round(capacities)):
        raise GapError(f'Capacities must be integers: {capacities}')
    if capacities.sum() < inst.n_items:
        raise InfeasibleError(
            f'Total capacity {capacities.sum():g} < {inst.n_items} items')


def solve_unit_weight_exact(inst):
    """Solves a unit-weight instance exactly by replicating knapsack `j` into
    `c_j` slots and solving the resulting assignment problem on the negated
    profits. Slots beyond `I` per knapsack can never be used and are
    omitted."""
    start = time.perf_counter()
    _require_unit_weight(inst)
    n_items = inst.n_items
    slots = np.repeat(np.arange(inst.n_knapsacks),
                      np.minimum(inst.capacities.astype(np.intp), n_items))
    n_slots = len(slots)
    # Dummy items have zero profit so unused slots are free.
    profits = np.zeros((n_slots, n_slots))
    profits[:n_items] = inst.profits[:, slots]
    columns, _ = hungarian(-profits)
    choices = slots[columns[:n_items]]
    elapsed = time.perf_counter() - start
    return OracleSolution.from_choices(inst, choices, elapsed,
                                       OracleSolution.HUNGARIAN_EXPANSION)


def solve_brute_force(inst, limit=10**10):
    """Enumerates the assignments depth-first, pruning branches that exceed a
    capacity or cannot beat the best found so far."""
    start = time.perf_counter()
    n_items, n_knapsacks = inst.shape
    if n_items * math.log(n_knapsacks) > math.log(limit):
        raise InstanceTooLargeError(
            f'{n_knapsacks}^{n_items} assignments exceed the limit {limit}')
    profits = inst.profits.tolist()
    weights = inst.weights.tolist()
    residual = (inst.capacities + _CAPACITY_SLACK).tolist()
    # Best profit obtainable from items i.. ignoring capacities.
    bound = np.concatenate(
        [np.cumsum(inst.profits.max(axis=1)[::-1])[::-1], [0.0]]).tolist()
    # Each item tries its most profitable knapsacks first.
    orders = np.argsort(-inst.profits, axis=1, kind='stable').tolist()
    choices = [0] * n_items
    best = [-math.inf, None]

    def search(i, total):
        if i == n_items:
            if total > best[0]:
                best[0] = total
                best[1] = list(choices)
            return
        if total + bound[i] <= best[0]:
            return
        for j in orders[i]:
            w = weights[i][j]
            if w > residual[j]:
                continue
            residual[j] -= w
            choices[i] = j
            search(i + 1, total + profits[i][j])
            residual[j] += w

    search(0, 0.0)
    if best[1] is None:
        raise InfeasibleError(f'No feasible assignment for {inst}')
    elapsed = time.perf_counter() - start
    return OracleSolution.from_choices(inst, best[1], elapsed,
                                       OracleSolution.BRUTE_FORCE)


def greedy_baseline(inst):
    """Assigns items in descending order of regret, the gap between their
    best and second-best profit, each to its most profitable knapsack with
    room left. Ties go to the lower item, then the lower knapsack index."""
    start = time.perf_counter()
    n_items, n_knapsacks = inst.shape
    profits = inst.profits
    if n_knapsacks > 1:
        top_two = -np.sort(-profits, axis=1)[:, :2]
        regret = top_two[:, 0] - top_two[:, 1]
    else:
        regret = profits[:, 0]
    order = sorted(range(n_items), key=lambda i: -regret[i])
    residual = inst.capacities + _CAPACITY_SLACK
    choices = np.zeros(n_items, dtype=np.intp)
    for i in order:
        fits = inst.weights[i] <= residual
        if not np.any(fits):
            raise InfeasibleError(f'Item {i} does not fit in any knapsack')
        j = int(np.argmax(np.where(fits, profits[i], -np.inf)))
        choices[i] = j
        residual[j] -= inst.weights[i, j]
    elapsed = time.perf_counter() - start
    return OracleSolution.from_choices(inst, choices, elapsed,
                                       OracleSolution.GREEDY)
