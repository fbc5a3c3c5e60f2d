import numpy as np
import pytest

from unsupervised_gap import Assignment
from unsupervised_gap import DimensionError
from unsupervised_gap import GapInstance
from unsupervised_gap import avg_constraint_violation_probability
from unsupervised_gap import check_feasibility
from unsupervised_gap import harden
from unsupervised_gap import harden_batch
from unsupervised_gap import knapsack_loads
from unsupervised_gap import objective


def _instance():
    return GapInstance([[1.0, 2.0], [3.0, 1.0], [2.0, 2.0]],
                       [[1.0, 1.0], [2.0, 1.0], [1.0, 3.0]], [3.0, 2.0])


def test_instance_validation():
    with pytest.raises(DimensionError):
        GapInstance([1.0, 2.0], [1.0, 2.0], [1.0])
    with pytest.raises(DimensionError):
        GapInstance([[1.0, 2.0]], [[1.0]], [1.0, 1.0])
    with pytest.raises(DimensionError):
        GapInstance([[1.0, 2.0]], [[1.0, 1.0]], [1.0])
    with pytest.raises(ValueError):
        GapInstance([[1.0, 2.0]], [[1.0, -1.0]], [1.0, 1.0])
    with pytest.raises(ValueError):
        GapInstance([[1.0, 2.0]], [[1.0, 1.0]], [1.0, 0.0])
    with pytest.raises(ValueError):
        GapInstance([[np.nan, 2.0]], [[1.0, 1.0]], [1.0, 1.0])


def test_instance_is_readonly():
    inst = _instance()
    with pytest.raises(ValueError):
        inst.profits[0, 0] = 5.0
    # The instance owns a copy of its inputs.
    profits = np.ones((2, 2))
    inst = GapInstance.unit_weight(profits, 1)
    profits[0, 0] = 5.0
    assert inst.profits[0, 0] == 1.0


def test_unit_weight():
    inst = GapInstance.unit_weight(np.ones((5, 2)), 3)
    assert inst.is_unit_weight
    assert inst.capacities.tolist() == [3.0, 3.0]
    assert not _instance().is_unit_weight


def test_instance_json():
    inst = _instance()
    value = inst.to_json()
    assert value['I'] == 3 and value['J'] == 2
    assert GapInstance.from_json(value) == inst
    value['profits'] = value['profits'][:-1]
    with pytest.raises(DimensionError):
        GapInstance.from_json(value)


def test_assignment_modes():
    Assignment([[0.5, 0.5], [0.2, 0.3]])
    with pytest.raises(ValueError):
        Assignment([[0.5, 0.5], [0.2, 0.3]], strict=True)
    with pytest.raises(ValueError):
        Assignment([[1.5, -0.5]])
    with pytest.raises(ValueError):
        Assignment([[0.5, 0.5]], mode=Assignment.HARD)
    with pytest.raises(ValueError):
        Assignment([[1.0, 1.0]], mode=Assignment.HARD)
    hard = Assignment.from_choices([1, 0, 1], 2)
    assert hard.is_hard
    assert hard.u.tolist() == [[0, 1], [1, 0], [0, 1]]
    assert hard.choices.tolist() == [1, 0, 1]


def test_objective_and_loads():
    inst = _instance()
    a = Assignment.from_choices([1, 0, 0], 2)
    assert objective(inst, a) == 2.0 + 3.0 + 2.0
    assert knapsack_loads(inst, a).tolist() == [3.0, 1.0]
    with pytest.raises(DimensionError):
        objective(inst, Assignment.from_choices([0, 1], 2))


def test_check_feasibility():
    inst = _instance()
    report = check_feasibility(inst, Assignment.from_choices([1, 0, 0], 2))
    assert report.is_feasible
    assert report.loads.tolist() == [3.0, 1.0]

    report = check_feasibility(inst, Assignment.from_choices([0, 0, 0], 2))
    assert report.c1_ok and report.c3_ok
    assert report.c2_ok_per_knapsack == (False, True)
    assert not report.is_feasible

    soft = Assignment([[0.5, 0.5], [1.0, 0.0], [0.0, 0.5]])
    report = check_feasibility(inst, soft)
    assert not report.c1_ok
    assert not report.c3_ok

    # Within eps of the capacity is feasible.
    loaded = GapInstance.unit_weight([[1.0], [1.0]], 2.0 - 1e-7)
    assert check_feasibility(loaded, Assignment([[1.0], [1.0]])).c2_ok
    assert not check_feasibility(loaded, Assignment([[1.0], [1.0]]),
                                 eps=0).c2_ok
    with pytest.raises(ValueError):
        check_feasibility(loaded, Assignment([[1.0], [1.0]]), eps=-1)


def test_harden_ties_go_to_lowest_index():
    a = Assignment([[0.4, 0.4, 0.2], [0.1, 0.2, 0.7], [0.5, 0.5, 0.0]])
    assert harden(a).choices.tolist() == [0, 2, 0]
    batch = np.stack([a.u, a.u[::-1]])
    hard = harden_batch(batch)
    assert hard.shape == batch.shape
    assert np.all(hard.sum(axis=-1) == 1)
    assert hard[0].tolist() == harden(a).u.tolist()


def test_avg_constraint_violation_probability():
    instances = [GapInstance.unit_weight(np.ones((2, 2)), 1)] * 4
    assignments = [
        Assignment.from_choices([0, 1], 2),
        Assignment.from_choices([0, 0], 2),
        Assignment.from_choices([1, 1], 2),
        Assignment.from_choices([0, 0], 2),
    ]
    # Knapsack 0 is over capacity in 2/4 examples, knapsack 1 in 1/4.
    assert avg_constraint_violation_probability(
        instances, assignments) == pytest.approx(0.375)
    with pytest.raises(ValueError):
        avg_constraint_violation_probability([], [])
    with pytest.raises(DimensionError):
        avg_constraint_violation_probability(instances, assignments[:2])


def test_objective_is_linear():
    rng = np.random.default_rng(0)
    inst = GapInstance.unit_weight(rng.random((5, 3)), 2)
    for _ in range(100):
        a = rng.random((5, 3))
        b = rng.random((5, 3))
        alpha, beta = rng.random(2) / 2
        combined = objective(inst, Assignment(alpha * a + beta * b))
        assert combined == pytest.approx(
            alpha * objective(inst, Assignment(a)) +
            beta * objective(inst, Assignment(b)),
            rel=1e-12)


def test_violation_probability_ignores_order():
    rng = np.random.default_rng(1)
    instances = [
        GapInstance.unit_weight(rng.random((4, 3)), 2) for _ in range(50)
    ]
    assignments = [Assignment(rng.random((4, 3))) for _ in instances]
    expected = avg_constraint_violation_probability(instances, assignments)
    assert 0 < expected < 1
    for _ in range(5):
        order = rng.permutation(len(instances))
        assert avg_constraint_violation_probability(
            [instances[i] for i in order],
            [assignments[i] for i in order]) == expected
