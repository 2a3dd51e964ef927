"""Quick oracle checks run by ``coopsense selftest``."""
import numpy as np

from .audit import audit_result
from .comm import LinkParams, greedy_subcarrier_allocation, transmission_objective
from .compute import optimal_compute_allocation
from .config import ExperimentConfig
from .oracles import brute_force_placement, enumerate_subcarriers, simplex_minimize
from .planner import gibbs_solve
from .scenario import ScenarioConfig


def check_closed_form(n_instances=50, seed=0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_instances):
        n = int(rng.integers(2, 11))
        loads = 10.0 ** rng.uniform(3, 9, size=n)
        demands = {(k, 1): float(c) for k, c in enumerate(loads)}
        v = optimal_compute_allocation(demands, {key: 1 for key in demands})
        closed = np.array([v[(k, 1)] for k in range(n)])
        worst = max(worst, float(np.abs(closed - simplex_minimize(loads)).max()))
    return "closed-form CPU split vs Newton oracle", worst <= 1e-6, f"max |dv| = {worst:.2e}"


def check_greedy(n_instances=200, seed=0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_instances):
        n_sub = int(rng.integers(1, 9))
        n_flows = int(rng.integers(1, min(4, n_sub) + 1))
        ms = list(range(1, n_flows + 1))
        link = LinkParams(powers={m: 0.2 for m in ms},
                          gains={m: float(10 ** rng.uniform(-14, -12)) for m in ms},
                          bandwidth=n_sub * 1e6, subcarrier_bandwidth=1e6)
        flows = {(k, k + 1): float(rng.uniform(1e5, 1e6)) for k in range(n_flows)}
        greedy = transmission_objective(flows, greedy_subcarrier_allocation(flows, link), link)
        rates = {key: link.subcarrier_rate(key[1]) for key in flows}
        best, _ = enumerate_subcarriers(flows, rates, n_sub)
        worst = max(worst, greedy / best - 1.0)
    return "greedy subcarriers vs enumeration (separable)", worst <= 1e-12, f"max gap = {worst:.2e}"


def check_gibbs(n_instances=5):
    cfg = ExperimentConfig(scenario=ScenarioConfig(n_cavs=2, n_objects=3))
    worst = 0.0
    for seed in range(1, n_instances + 1):
        problem = cfg.build_problem(seed)
        best, _, _ = brute_force_placement(problem)
        result = gibbs_solve(problem, cfg.gibbs_config(seed))
        if result.delta < best * (1 - 1e-12):
            return "gibbs vs brute force", False, f"seed {seed}: below the optimum"
        worst = max(worst, result.delta / best - 1.0)
    return "gibbs vs brute force (K=3, M=2)", worst <= 0.02, f"max gap = {worst:.2%}"


def check_feasibility(n_runs=5):
    cfg = ExperimentConfig()
    bad = []
    for seed in range(1, n_runs + 1):
        problem = cfg.build_problem(seed)
        bad += audit_result(problem, gibbs_solve(problem, cfg.gibbs_config(seed)))
    return "solution audit (default scenario)", not bad, f"{len(bad)} violations"


CHECKS = (check_closed_form, check_greedy, check_gibbs, check_feasibility)


def run_selftest(printer=print):
    ok = True
    for check in CHECKS:
        name, passed, detail = check()
        ok &= bool(passed)
        printer(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
    return ok


__all__ = ["run_selftest", "CHECKS"]
