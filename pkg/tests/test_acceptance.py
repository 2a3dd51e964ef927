"""Acceptance suite: one test per criterion, each at its stated tolerance and time budget.

Every test records a PASS/FAIL line that is repeated in the terminal summary.
"""
import filecmp
import itertools
import math
import os
import time

import numpy as np
import pytest

from conftest import record
from coopsense.audit import audit_result
from coopsense.comm import LinkParams, greedy_subcarrier_allocation, transmission_objective
from coopsense.compute import optimal_compute_allocation
from coopsense.config import ExperimentConfig
from coopsense.harness import (run_accuracy_comparison, run_compute_sweep, run_convergence,
                               write_solve_outputs)
from coopsense.oracles import brute_force_placement, enumerate_subcarriers, simplex_minimize
from coopsense.placement import PlacementDecision
from coopsense.planner import (GibbsConfig, baseline_standalone, gibbs_solve, greedy_descent)
from coopsense.scenario import ScenarioConfig

DEFAULT = ExperimentConfig()


def test_criterion_1_closed_form_cpu_split():
    rng = np.random.default_rng(2024)
    worst_v = worst_obj = worst_sum = 0.0
    start = time.perf_counter()
    for _ in range(100):
        n = int(rng.integers(2, 11))
        loads = 10.0 ** rng.uniform(3, 9, size=n)
        demands = {(k, 1): float(c) for k, c in enumerate(loads)}
        v = optimal_compute_allocation(demands, {key: 1 for key in demands})
        got = np.array([v[(k, 1)] for k in range(n)])
        ref = simplex_minimize(loads)
        w = loads / loads.max()
        worst_v = max(worst_v, float(np.abs(got - ref).max()))
        worst_obj = max(worst_obj, abs(np.sum(w / got) - np.sum(w / ref)) / np.sum(w / ref))
        worst_sum = max(worst_sum, abs(math.fsum(got) - 1.0))
    elapsed = time.perf_counter() - start
    ok = worst_v <= 1e-6 and worst_obj <= 1e-6 and worst_sum <= 1e-12 and elapsed < 5
    assert record(1, "closed-form CPU split vs numerical oracle", ok,
                  f"max|dv|={worst_v:.1e}, max rel gap={worst_obj:.1e}, "
                  f"max|sum-1|={worst_sum:.1e}, {elapsed:.2f}s")


def _flow_grid():
    """Every object pattern of 1-4 flows for B/B_s = 1..8, with seeded sizes and rates."""
    rng = np.random.default_rng(7)
    for n_sub in range(1, 9):
        for n_flows in range(1, min(4, n_sub) + 1):
            for objects in itertools.product(range(n_flows), repeat=n_flows):
                if objects[0] != 0:
                    continue
                for trial in range(10):
                    ms = list(range(1, n_flows + 1))
                    link = LinkParams(
                        powers={m: 0.2 for m in ms},
                        gains={m: float(10 ** rng.uniform(-14, -12)) for m in ms},
                        bandwidth=n_sub * 1e6, subcarrier_bandwidth=1e6)
                    if trial % 2:
                        sizes = rng.choice([0.0, 1e5, 3e5, 1e6], size=n_flows)
                    else:
                        sizes = rng.uniform(1e4, 1e6, size=n_flows)
                    flows = {(objects[i], ms[i]): float(sizes[i]) for i in range(n_flows)}
                    yield flows, link, len(set(objects)) == n_flows


def test_criterion_2_greedy_vs_enumeration():
    start = time.perf_counter()
    n_sep = n_cpl = 0
    worst_sep = worst_cpl = 0.0
    budget_ok = True
    for flows, link, separable in _flow_grid():
        alloc = greedy_subcarrier_allocation(flows, link)
        budget_ok &= sum(alloc.b.values()) == link.n_subcarriers
        got = transmission_objective(flows, alloc, link)
        rates = {key: link.subcarrier_rate(key[1]) for key in flows}
        best, _ = enumerate_subcarriers(flows, rates, link.n_subcarriers)
        ratio = 1.0 if best == got else got / best
        if separable:
            n_sep += 1
            worst_sep = max(worst_sep, abs(ratio - 1.0))
        else:
            n_cpl += 1
            worst_cpl = max(worst_cpl, ratio)
    elapsed = time.perf_counter() - start
    # "exactly" is read as equal up to floating-point summation order (1e-12 relative)
    ok = worst_sep <= 1e-12 and worst_cpl <= 1.05 and budget_ok and elapsed < 10
    assert record(2, "greedy subcarriers vs exhaustive enumeration", ok,
                  f"{n_sep} separable max rel dev={worst_sep:.1e}; {n_cpl} coupled "
                  f"max ratio={worst_cpl:.6f}; budget exact={budget_ok}; {elapsed:.2f}s")


def test_criterion_3_gibbs_vs_brute_force():
    cfg = ExperimentConfig(scenario=ScenarioConfig(n_cavs=2, n_objects=3))
    start = time.perf_counter()
    equal, worst, below = 0, 0.0, 0
    for seed in range(1, 21):
        problem = cfg.build_problem(seed)
        best, _, _ = brute_force_placement(problem)
        got = gibbs_solve(problem, cfg.gibbs_config(seed)).delta
        below += got < best * (1 - 1e-12)
        equal += math.isclose(got, best, rel_tol=1e-12)
        worst = max(worst, got / best - 1.0)
    elapsed = time.perf_counter() - start
    ok = equal >= 18 and worst <= 0.02 and below == 0 and elapsed < 30
    assert record(3, "Gibbs vs brute force, K=3 M=2", ok,
                  f"{equal}/20 optimal, max gap={worst:.2%}, below optimum={below}, "
                  f"{elapsed:.2f}s")


def test_criterion_4_feasibility_audit():
    violations, infeasible = [], 0
    for seed in range(1, 101):
        problem = DEFAULT.build_problem(seed)
        result = gibbs_solve(problem, DEFAULT.gibbs_config(seed))
        infeasible += not result.feasible
        violations += [f"seed {seed}: {v}" for v in audit_result(problem, result)]
    ok = not violations and infeasible == 0
    assert record(4, "independent constraint audit over 100 runs", ok,
                  f"{len(violations)} violations, {infeasible} infeasible results"
                  + (f"; first: {violations[0]}" if violations else ""))


def test_criterion_5_accuracy_shape():
    bad = []
    for seed in range(1, 21):
        problem = DEFAULT.build_problem(seed)
        alone = baseline_standalone(problem).cav_means
        coop = gibbs_solve(problem, DEFAULT.gibbs_config(seed)).cav_means
        for m, a in coop.items():
            if a is None:
                continue
            if not (a >= alone[m] and a >= 0.85):
                bad.append((seed, m, alone[m], a))
    assert record(5, "cooperative >= standalone and >= 0.85 per CAV", not bad,
                  f"20 seeds, {len(bad)} failing (seed, cav) pairs")


def test_criterion_6_compute_sweep_shape(tmp_path):
    seeds = (1, 2, 3, 4, 5)
    bundle = run_compute_sweep(DEFAULT, str(tmp_path), seeds=seeds)
    assert not bundle.skipped
    cells = {}
    import csv
    with open(tmp_path / "sweep.csv") as fh:
        for r in csv.DictReader(fh):
            cells[(float(r["f_cav"]), int(r["seed"]), r["scheme"])] = float(r["delta"])
    dominated = all(cells[(f, s, "proposed")] <= cells[(f, s, other)]
                    for f, s, _ in cells for other in ("no-placement", "no-allocation"))
    freqs = sorted({f for f, _, _ in cells})
    monotone = all(cells[(b, s, "proposed")] <= cells[(a, s, "proposed")]
                   for s in seeds for a, b in zip(freqs, freqs[1:]))
    assert record(6, "proposed dominates baselines and falls with CAV compute",
                  dominated and monotone,
                  f"{len(freqs)} f values x {len(seeds)} seeds, dominance={dominated}, "
                  f"monotone={monotone}")


def test_criterion_7_convergence_shape(tmp_path):
    bundle = run_convergence(DEFAULT, str(tmp_path), seed=1)
    finals = bundle.summary["final_best_delta"]
    monotone = True
    import csv
    for path in tmp_path.glob("convergence_tau_*.csv"):
        with open(path) as fh:
            best = [float(r["best_delta"]) for r in csv.DictReader(fh)]
        monotone &= all(b <= a for a, b in zip(best, best[1:]))
    spread = (max(finals.values()) - min(finals.values())) / min(finals.values())
    problem = DEFAULT.build_problem(1)
    scale = problem.evaluate(PlacementDecision.all_local(problem.roi)).delta
    cold = GibbsConfig(tau=1e-12 * scale, seed=1)
    a, b = gibbs_solve(problem, cold), greedy_descent(problem, cold)
    matches = a.delta == b.delta and a.placement == b.placement
    ok = len(finals) == 4 and monotone and spread <= 0.03 and matches
    assert record(7, "temperature sweep traces and zero-temperature limit", ok,
                  f"spread={spread:.2%}, monotone={monotone}, cold chain == greedy descent: "
                  f"{matches}")


def test_criterion_8_determinism_and_speed(tmp_path):
    dirs = [tmp_path / "a", tmp_path / "b"]
    for d in dirs:
        problem = DEFAULT.build_problem(1)
        result = gibbs_solve(problem, DEFAULT.gibbs_config(1))
        write_solve_outputs(problem, result, str(d), DEFAULT, 1)
        run_accuracy_comparison(DEFAULT, str(d / "acc"), 1)
        run_compute_sweep(DEFAULT, str(d / "sweep"), seeds=(1,), sweep_ghz=(2.5, 10.0))
        run_convergence(DEFAULT, str(d / "conv"), seed=1, tau_list=(1e-3, 1e-6))
    files = sorted(os.path.relpath(os.path.join(r, f), dirs[0])
                   for r, _, fs in os.walk(dirs[0]) for f in fs)
    same = all(filecmp.cmp(dirs[0] / f, dirs[1] / f, shallow=False) for f in files)
    start = time.perf_counter()
    problem = DEFAULT.build_problem(1)
    gibbs_solve(problem, GibbsConfig(max_iter=2000, stall_window=2000, seed=1))
    elapsed = time.perf_counter() - start
    ok = same and elapsed < 10
    assert record(8, "byte-identical outputs and default solve time", ok,
                  f"{len(files)} files identical={same}, full 2000-iteration solve {elapsed:.2f}s")
