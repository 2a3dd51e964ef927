"""Independent reference solvers used to check the fast algorithms.

Each oracle takes the slow road on purpose: exhaustive enumeration or a plain
Newton iteration, sharing no code with the algorithm it checks beyond
the objective definitions.
"""
import itertools
import math

import numpy as np

from .exceptions import InfeasibleError
from .placement import PlacementDecision


def enumerate_subcarriers(flows, rates, n_subcarriers):
    """Minimize the P2 objective over every integer allocation with each flow >= 1.

    ``flows`` maps (k, m) -> bits and ``rates`` maps (k, m) -> bits/s per subcarrier.
    Returns ``(best_objective, best_allocation)``.
    """
    keys = sorted(flows)
    if not keys:
        return 0.0, {}
    if len(keys) > n_subcarriers:
        raise InfeasibleError("more flows than subcarriers")
    best, best_b = math.inf, None
    for cuts in itertools.combinations(range(1, n_subcarriers), len(keys) - 1):
        edges = (0,) + cuts + (n_subcarriers,)
        b = {key: edges[i + 1] - edges[i] for i, key in enumerate(keys)}
        omega = barrier_objective(flows, rates, b)
        if omega < best:
            best, best_b = omega, b
    return best, best_b


def barrier_objective(flows, rates, b):
    per_object = {}
    for (k, m), size in flows.items():
        t = 0.0 if size == 0 else size / (b[(k, m)] * rates[(k, m)])
        n, worst = per_object.get(k, (0, 0.0))
        per_object[k] = (n + 1, max(worst, t))
    return sum(n * worst for n, worst in per_object.values())


def simplex_minimize(loads, f=1.0, iters=200, tol=1e-14):
    """Minimize ``sum(loads / (v * f))`` over the probability simplex numerically.

    Damped Newton on the first n-1 coordinates (the last one is ``1 - sum``), with
    backtracking that keeps the iterate strictly inside the simplex.
    """
    w = np.asarray(loads, dtype=float) / float(f)
    w = w / w.max()
    n = len(w)
    if n == 1:
        return np.ones(1)
    v = np.full(n, 1.0 / n)

    def obj(x):
        return float(np.sum(w / x))

    cur = obj(v)
    for _ in range(iters):
        g_full = -w / v ** 2
        h_full = 2.0 * w / v ** 3
        grad = g_full[:-1] - g_full[-1]
        hess = np.diag(h_full[:-1]) + h_full[-1]
        step = np.linalg.solve(hess, -grad)
        full_step = np.append(step, -step.sum())
        t = 1.0
        while True:
            cand = v + t * full_step
            if (cand > 0).all() and obj(cand) <= cur:
                break
            t *= 0.5
            if t < 1e-20:
                return v
        val = obj(cand)
        v = cand
        if cur - val <= tol * cur and np.abs(t * full_step).max() < 1e-13:
            break
        cur = val
    return v


def brute_force_placement(problem, allocator="optimal"):
    """Exhaustively evaluate every feasible placement; returns ``(best_delta, best_placement, n_feasible)``."""
    n = len(problem.tasks)
    best, best_p, n_feasible = math.inf, None, 0
    for idx in range(2 ** n):
        p = PlacementDecision.from_index(problem.roi, idx)
        if not problem.is_feasible(p):
            continue
        n_feasible += 1
        d = problem.evaluate(p, allocator).delta
        if d < best:
            best, best_p = d, p
    if best_p is None:
        raise InfeasibleError("no feasible placement")
    return best, best_p, n_feasible
