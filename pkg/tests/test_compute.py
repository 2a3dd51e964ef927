import csv
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import minimize

from coopsense.compute import (ComputeAllocation, compute_demand, compute_objective,
                               computation_times, even_compute_allocation,
                               optimal_compute_allocation, time_factors, write_allocation_csv)
from coopsense.exceptions import ConfigurationError, InfeasibleError
from coopsense.oracles import simplex_minimize
from coopsense.placement import PlacementDecision
from coopsense.scenario import RoIMatrix


def one_node(loads, node=1):
    demands = {(k, node): c for k, c in enumerate(loads)}
    return demands, {key: 1 for key in demands}


def scipy_simplex(loads):
    """Second numerical oracle: SLSQP over the simplex on normalized loads."""
    w = np.asarray(loads, float) / max(loads)
    n = len(w)
    res = minimize(lambda v: np.sum(w / v), np.full(n, 1.0 / n), method="SLSQP",
                   bounds=[(1e-9, 1.0)] * n,
                   constraints=[{"type": "eq", "fun": lambda v: v.sum() - 1.0}],
                   options={"ftol": 1e-15, "maxiter": 500})
    return res.x


def test_compute_demand_examples():
    assert compute_demand(350, 50_000) == 17_500_000
    assert compute_demand(np.zeros((0, 3)), 50_000) == 0
    assert compute_demand(np.zeros((1, 3)), 50_000) == 50_000
    with pytest.raises(ConfigurationError):
        compute_demand(3, 0)


def test_time_factor_examples():
    roi = RoIMatrix(np.array([[1, 1], [0, 1], [1, 0]]))  # CAVs 1..3, objects 0..1
    p = PlacementDecision.from_mapping(roi, {(0, 1): 1, (0, 3): 1, (1, 1): 0, (1, 2): 1})
    eta = time_factors(roi, p)
    assert eta[(0, 0)] == 2
    assert eta[(1, 1)] == 1
    assert eta[(1, 0)] == 1
    assert eta[(0, 1)] == 0
    assert eta.get((0, 2), 0) == 0  # u = 0


def test_single_task_takes_the_node():
    demands, factors = one_node([7e6])
    assert optimal_compute_allocation(demands, factors).v == {(0, 1): 1.0}


def test_closed_form_hand_example():
    demands, factors = one_node([1, 4, 4])
    v = optimal_compute_allocation(demands, factors)
    assert [v[(k, 1)] for k in range(3)] == pytest.approx([0.2, 0.4, 0.4], abs=1e-15)
    assert scipy_simplex([1, 4, 4]) == pytest.approx([0.2, 0.4, 0.4], abs=1e-5)
    assert simplex_minimize([1, 4, 4]) == pytest.approx([0.2, 0.4, 0.4], abs=1e-9)


def test_equal_loads_split_evenly():
    demands, factors = one_node([3e6, 3e6])
    v = optimal_compute_allocation(demands, factors)
    assert v[(0, 1)] == v[(1, 1)] == 0.5


def test_zero_load_pairs_are_excluded():
    demands = {(0, 1): 4e6, (1, 1): 0, (2, 2): 5e6}
    factors = {(0, 1): 1, (1, 1): 1, (2, 2): 0}
    v = optimal_compute_allocation(demands, factors)
    assert v.v == {(0, 1): 1.0}
    assert v.nodes() == [1]


def test_computation_time_examples():
    p = PlacementDecision(((0, 1), (1, 1), (2, 1), (2, 2)), (0, 0, 1, 1))
    demands = {(0, 1): 17_500_000, (1, 1): 17_500_000, (2, 0): 20_000_000}
    v = ComputeAllocation({(0, 1): 0.5, (1, 1): 0.5, (2, 0): 1.0})
    t = computation_times(demands, v, {0: 200e9, 1: 10e9, 2: 10e9}, p)
    assert t[(0, 1)] == pytest.approx(3.5e-3)
    assert t[(2, 1)] == t[(2, 2)] == pytest.approx(1e-4)


def test_missing_share_with_work_is_infeasible():
    p = PlacementDecision(((0, 1),), (0,))
    with pytest.raises(InfeasibleError):
        computation_times({(0, 1): 10}, ComputeAllocation({}), {1: 1e9}, p)


def test_even_split_is_worse_than_closed_form():
    demands, factors = one_node([1.0, 4.0])
    f = {1: 1.0}
    even = compute_objective(demands, factors, even_compute_allocation(demands, factors), f)
    best = compute_objective(demands, factors, optimal_compute_allocation(demands, factors), f)
    assert even == pytest.approx(10.0)
    assert best == pytest.approx(9.0)  # (sqrt 1 + sqrt 4)^2


def test_compute_csv(tmp_path):
    demands, factors = one_node([1e6, 4e6])
    v = optimal_compute_allocation(demands, factors)
    write_allocation_csv(tmp_path / "v.csv", demands, factors, v, {1: 1e9})
    rows = list(csv.DictReader(open(tmp_path / "v.csv")))
    assert [r["k"] for r in rows] == ["0", "1"]
    assert float(rows[1]["v"]) == pytest.approx(2 / 3)


loads = st.lists(st.floats(1e3, 1e9), min_size=1, max_size=10)


@given(loads)
def test_closed_form_matches_numerical_oracle(ls):
    demands, factors = one_node(ls)
    v = optimal_compute_allocation(demands, factors)
    got = np.array([v[(k, 1)] for k in range(len(ls))])
    ref = simplex_minimize(ls)
    assert np.abs(got - ref).max() <= 1e-6
    w = np.asarray(ls) / 1e9
    assert np.sum(w / got) == pytest.approx(np.sum(w / ref), rel=1e-6)


@given(loads)
def test_normalization(ls):
    demands, factors = one_node(ls)
    v = optimal_compute_allocation(demands, factors)
    assert abs(v.node_total(1) - 1.0) <= 1e-12
    assert all(0 < x <= 1 for x in v.v.values())


@given(loads, st.floats(1e-3, 1e3))
def test_scale_invariance(ls, c):
    a = optimal_compute_allocation(*one_node(ls))
    b = optimal_compute_allocation(*one_node([x * c for x in ls]))
    for key in a.v:
        assert a[key] == pytest.approx(b[key], rel=1e-12)


@given(st.lists(st.tuples(st.booleans(), st.integers(1, 3000)), min_size=1, max_size=6),
       st.integers(0, 3000))
def test_objective_identity(tasks, rsu_points):
    # one CAV per object-node pair; compare sum of per-task times with sum eta*C/(v f)
    n = len(tasks)
    task_list = [(0, m) for m in range(1, n + 1)]
    roi = RoIMatrix(np.ones((n, 1), dtype=int))
    p = PlacementDecision(tuple(task_list), tuple(int(e) for e, _ in tasks))
    omega = 50_000
    demands = {}
    off = p.offloaders(0)
    for (k, m), (e, pts) in zip(task_list, tasks):
        if not e:
            demands[(k, m)] = omega * (pts + rsu_points)
    if off:
        demands[(0, 0)] = omega * (rsu_points + sum(tasks[m - 1][1] for m in off))
    f = {0: 200e9, **{m: 10e9 for m in range(1, n + 1)}}
    eta = time_factors(roi, p)
    v = optimal_compute_allocation(demands, eta, f)
    lhs = math.fsum(computation_times(demands, v, f, p).values())
    assert lhs == pytest.approx(compute_objective(demands, eta, v, f), rel=1e-12)
