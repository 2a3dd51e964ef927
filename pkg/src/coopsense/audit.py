"""Independent constraint checker for solutions.

Recomputes every constraint and the objective from the raw placement, subcarrier
counts and CPU shares, using only the per-(object, node) quality grids, without
going through the allocation or timing code of the solver.
"""
import math
import numbers

import numpy as np

from .accuracy import make_features


def _fused_grid(grids, k, m, placement_map, offloaders):
    if placement_map[(k, m)]:
        g = grids[k, 0].copy()
        for mm in offloaders:
            g += grids[k, mm]
        return g
    return grids[k, m] + grids[k, 0]


def audit_solution(problem, placement, subcarriers, cpu_share, delta=None, rel_tol=1e-9):
    """Return a list of human-readable violations (empty when the solution is valid)."""
    issues = []
    roi_u = problem.scenario.roi.u
    grids = problem.observation.grids
    E = dict(placement.items())
    B = dict(subcarriers.b) if hasattr(subcarriers, "b") else dict(subcarriers)
    V = dict(cpu_share.v) if hasattr(cpu_share, "v") else dict(cpu_share)
    n_sub = int(round(problem.link.bandwidth / problem.link.subcarrier_bandwidth))

    tasks = {(k, m + 1) for m, k in zip(*np.nonzero(roi_u))}
    if set(E) != tasks:
        issues.append("placement: placement is not defined exactly on the task set")
    for key, e in E.items():
        if e not in (0, 1):
            issues.append(f"placement: e{key} = {e} is not binary")

    offloaders = {}
    for (k, m), e in sorted(E.items()):
        if e:
            offloaders.setdefault(k, []).append(m)
    flows = {(k, m) for k, ms in offloaders.items() for m in ms}

    if set(B) != flows:
        issues.append("subcarriers: subcarrier allocation does not cover exactly the offloaded flows")
    for key, b in B.items():
        if not isinstance(b, numbers.Integral):
            issues.append(f"integrality: b{key} = {b!r} is not an integer")
        if not 0 <= b <= n_sub:
            issues.append(f"subcarriers: b{key} = {b} outside [0, {n_sub}]")
    if flows and sum(B.values()) != n_sub:
        issues.append(f"subcarrier budget: {sum(B.values())} subcarriers used, {n_sub} available")

    for key, v in V.items():
        if not 0.0 <= v <= 1.0:
            issues.append(f"cpu share: v{key} = {v} outside [0, 1]")
    per_node = {}
    for (k, node), v in V.items():
        per_node[node] = per_node.get(node, 0.0) + v
    for node, total in per_node.items():
        if total > 1.0 + 1e-12:
            issues.append(f"cpu budget: node {node} CPU shares sum to {total}")

    # computation work per task, from point counts
    omega = problem.omega
    counts = grids.sum(axis=2)
    f = {n.id: n.compute_capacity for n in problem.scenario.nodes}
    xi = problem.xi
    rate = {m: problem.link.subcarrier_bandwidth * math.log2(
        1.0 + problem.link.powers[m] * problem.link.gains[m]
        / (problem.link.noise_psd * problem.link.subcarrier_bandwidth)) for m in problem.link.powers}

    barrier = {}
    for k, ms in offloaders.items():
        worst = 0.0
        for m in ms:
            bits = xi * int(counts[k, m])
            if bits:
                b = B.get((k, m), 0)
                if b <= 0:
                    issues.append(f"flow {(k, m)} has data but no subcarrier")
                    worst = math.inf
                else:
                    worst = max(worst, bits / (b * rate[m]))
        barrier[k] = worst

    total = 0.0
    for (k, m), e in sorted(E.items()):
        if e:
            cycles = omega * int(counts[k, 0] + sum(counts[k, mm] for mm in offloaders[k]))
            node = 0
        else:
            cycles = omega * int(counts[k, m] + counts[k, 0])
            node = m
        if cycles:
            v = V.get((k, node), 0.0)
            if v <= 0:
                issues.append(f"task {(k, m)} has work but node {node} gives it no CPU")
                t_comp = math.inf
            else:
                t_comp = cycles / (v * f[node])
        else:
            t_comp = 0.0
        total += problem.t_broad + (barrier[k] if e else 0.0) + t_comp

    if delta is not None and not math.isclose(total, delta, rel_tol=rel_tol):
        issues.append(f"objective mismatch: reported {delta}, recomputed {total}")

    rows, dims, keys = [], [], []
    for (k, m) in sorted(E):
        rows.append(_fused_grid(grids, k, m, E, offloaders.get(k, [])))
        dims.append(problem.scenario.objects[k].dims)
        keys.append((k, m))
    acc = dict(zip(keys, problem.model.predict(make_features(np.asarray(rows), np.asarray(dims))))) if keys else {}
    for m in range(1, roi_u.shape[0] + 1):
        ks = [k for k in range(roi_u.shape[1]) if roi_u[m - 1, k]]
        if not ks:
            continue
        mean = sum(acc[(k, m)] for k in ks) / len(ks)
        if mean < problem.threshold:
            issues.append(f"accuracy: CAV {m} mean accuracy {mean:.4f} below {problem.threshold}")
    return issues


def audit_result(problem, result):
    return audit_solution(problem, result.placement, result.subcarriers, result.compute, result.delta)
