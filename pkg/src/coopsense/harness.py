"""Experiment runners that write the plot data behind the convergence, accuracy and
compute-sweep comparisons, plus result emission for single solves."""
import csv
import json
import logging
import os
from dataclasses import dataclass, field

from . import __version__
from .audit import audit_result
from .exceptions import InfeasibleError
from .planner import (baseline_even_allocation, baseline_random_placement, baseline_standalone,
                      gibbs_solve)

log = logging.getLogger(__name__)

SCHEMES = ("proposed", "no-placement", "no-allocation")


@dataclass
class ResultBundle:
    out_dir: str
    files: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)
    skipped: list = field(default_factory=list)

    def write_summary(self, name="summary.json"):
        path = os.path.join(self.out_dir, name)
        doc = {"summary": self.summary, "provenance": self.provenance, "skipped": self.skipped,
               "files": [os.path.basename(f) for f in self.files]}
        _write_json(path, doc)
        return path


def _write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, float) else x for x in row])
    return path


def _bundle(config, out_dir, seeds):
    os.makedirs(out_dir, exist_ok=True)
    return ResultBundle(out_dir=out_dir, provenance={
        "config_hash": config.config_hash(), "seeds": list(seeds), "version": __version__})


def run_convergence(config, out_dir, seed=None, tau_list=None):
    """One Gibbs trace per temperature; rows ``tau, iteration, best_delta``."""
    seed = config.experiment.seeds[0] if seed is None else seed
    tau_list = tuple(config.experiment.tau_list if tau_list is None else tau_list)
    bundle = _bundle(config, out_dir, [seed])
    try:
        problem = config.build_problem(seed)
        finals = {}
        for tau in tau_list:
            result = gibbs_solve(problem, config.gibbs_config(seed, tau=tau))
            path = os.path.join(out_dir, f"convergence_tau_{tau:g}.csv")
            _write_csv(path, ["tau", "iteration", "best_delta"],
                       [(float(tau), it, best) for it, _, best in result.trace])
            bundle.files.append(path)
            finals[f"{tau:g}"] = result.delta
    except InfeasibleError as exc:
        log.warning("seed %s skipped: %s", seed, exc)
        bundle.skipped.append({"seed": seed, "reason": str(exc)})
        finals = {}
    bundle.summary = {"final_best_delta": finals}
    if finals:
        lo, hi = min(finals.values()), max(finals.values())
        bundle.summary["relative_spread"] = (hi - lo) / lo
    bundle.files.append(bundle.write_summary("convergence_summary.json"))
    return bundle


def run_accuracy_comparison(config, out_dir, seed=None):
    """Per-CAV mean accuracy, standalone vs. the proposed cooperative solution."""
    seed = config.experiment.seeds[0] if seed is None else seed
    bundle = _bundle(config, out_dir, [seed])
    problem = config.build_problem(seed)
    standalone = baseline_standalone(problem)
    try:
        coop = gibbs_solve(problem, config.gibbs_config(seed)).cav_means
    except InfeasibleError as exc:
        bundle.skipped.append({"seed": seed, "reason": str(exc)})
        coop = {m: None for m in standalone.cav_means}
    rows = [(m, standalone.cav_means[m], coop[m], problem.threshold)
            for m in sorted(standalone.cav_means)]
    path = _write_csv(os.path.join(out_dir, "accuracy.csv"),
                      ["cav", "standalone", "cooperative", "threshold"],
                      [tuple("" if x is None else x for x in r) for r in rows])
    bundle.files.append(path)
    bundle.summary = {"rows": [dict(zip(("cav", "standalone", "cooperative", "threshold"), r))
                               for r in rows]}
    bundle.files.append(bundle.write_summary("accuracy_summary.json"))
    return bundle


def sweep_cell(problem, seed, gibbs_config, schemes=SCHEMES, pool=(), proposed=None):
    """Total completion time of each scheme for one (f_cav, seed) cell.

    ``pool`` holds placements found elsewhere on the same seed. Feasibility does not depend
    on CAV compute, so the proposed scheme keeps whichever of them scores best here.
    """
    out = {}
    proposed = proposed or gibbs_solve(problem, gibbs_config)
    best = proposed.placement, proposed.delta
    for cand in pool:
        delta = problem.evaluate(cand).delta
        if delta < best[1]:
            best = cand, delta
    if "proposed" in schemes:
        out["proposed"] = best[1]
    if "no-placement" in schemes:
        out["no-placement"] = baseline_random_placement(problem, gibbs_config).delta
    if "no-allocation" in schemes:
        out["no-allocation"] = baseline_even_allocation(problem, best[0])
    return out


def run_compute_sweep(config, out_dir, seeds=None, sweep_ghz=None, schemes=SCHEMES):
    """Completion time per scheme over the CAV compute sweep; rows ``f_cav, scheme, delta, seed``."""
    seeds = tuple(config.experiment.seeds if seeds is None else seeds)
    sweep_ghz = tuple(config.experiment.cav_compute_sweep if sweep_ghz is None else sweep_ghz)
    bundle = _bundle(config, out_dir, seeds)
    rows = []
    for seed in seeds:
        try:
            base = config.build_problem(seed)
            problems = [base.with_cav_compute(f_ghz * 1e9) for f_ghz in sweep_ghz]
            # first pass collects each chain's best placement, second pass shares them
            solved = [gibbs_solve(p, config.gibbs_config(seed)) for p in problems]
            pool = list(dict.fromkeys(r.placement for r in solved))
            for f_ghz, problem, result in zip(sweep_ghz, problems, solved):
                cell = sweep_cell(problem, seed, config.gibbs_config(seed), schemes, pool, result)
                rows.extend((float(f_ghz), s, cell[s], seed) for s in schemes)
        except InfeasibleError as exc:
            log.warning("seed %s skipped: %s", seed, exc)
            bundle.skipped.append({"seed": seed, "reason": str(exc)})
    path = _write_csv(os.path.join(out_dir, "sweep.csv"), ["f_cav", "scheme", "delta", "seed"], rows)
    bundle.files.append(path)
    means = {}
    for f_ghz, scheme, delta, _ in rows:
        means.setdefault(f"{f_ghz:g}", {}).setdefault(scheme, []).append(delta)
    bundle.summary = {"mean_delta": {f: {s: sum(v) / len(v) for s, v in d.items()}
                                     for f, d in means.items()}}
    bundle.files.append(bundle.write_summary("sweep_summary.json"))
    return bundle


def write_solve_outputs(problem, result, out_dir, config=None, seed=None, prefix="solve"):
    """Trace CSV, allocation CSVs and a JSON summary for one solve."""
    from .comm import write_allocation_csv as write_b
    from .compute import time_factors, write_allocation_csv as write_v

    os.makedirs(out_dir, exist_ok=True)
    files = []
    files.append(_write_csv(os.path.join(out_dir, f"{prefix}_trace.csv"),
                            ["iteration", "accepted_delta", "best_delta"], result.trace))
    path = os.path.join(out_dir, f"{prefix}_subcarriers.csv")
    write_b(path, result.subcarriers, problem.sizes(result.placement), problem.link)
    files.append(path)
    path = os.path.join(out_dir, f"{prefix}_compute.csv")
    write_v(path, problem.demands(result.placement), time_factors(problem.roi, result.placement),
            result.compute, problem.f)
    files.append(path)
    doc = result.summary()
    doc["violations"] = audit_result(problem, result)
    if config is not None:
        doc["provenance"] = {"config_hash": config.config_hash(), "seed": seed,
                             "version": __version__}
    path = os.path.join(out_dir, f"{prefix}_summary.json")
    _write_json(path, doc)
    files.append(path)
    return files
