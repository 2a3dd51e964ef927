"""Command-line entry point.

Exit codes: 0 success, 1 selftest failure, 2 usage or configuration error,
3 infeasible instance.
"""
import argparse
import logging
import os
import sys

from .config import load_config
from .exceptions import ConfigurationError, InfeasibleError
from .harness import (SCHEMES, run_accuracy_comparison, run_compute_sweep, run_convergence,
                      write_solve_outputs)
from .planner import baseline_even_allocation, baseline_random_placement, gibbs_solve
from .sensing import dump_point_cloud, synthesize_point_cloud

EXIT_OK = 0
EXIT_SELFTEST_FAILED = 1
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3

OUT_ENV = "COOPSENSE_OUT"


def _float_list(text):
    try:
        return tuple(float(x) for x in text.replace(",", " ").split())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}")


def build_parser():
    parser = argparse.ArgumentParser(prog="coopsense", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default="default", help="config file, or 'default'")
    common.add_argument("--seed", type=int, default=None, help="scenario and chain seed")
    common.add_argument("--out", default=None,
                        help=f"output directory (default: ${OUT_ENV} or the config's output_dir)")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common], help="write a scenario file")
    p.add_argument("--dump-clouds", action="store_true", help="also write per-node point clouds")

    p = sub.add_parser("solve", parents=[common], help="solve one instance")
    p.add_argument("--scheme", choices=SCHEMES, default="proposed")

    p = sub.add_parser("convergence", parents=[common], help="Gibbs traces over temperatures")
    p.add_argument("--tau-list", type=_float_list, default=None)

    sub.add_parser("accuracy", parents=[common], help="standalone vs cooperative accuracy")

    p = sub.add_parser("sweep", parents=[common], help="completion time over CAV compute")
    p.add_argument("--sweep", type=_float_list, default=None, help="CAV compute values in GHz")
    p.add_argument("--scheme", choices=SCHEMES, action="append", default=None)

    sub.add_parser("selftest", parents=[common], help="run the oracle checks")
    return parser


def _out_dir(args, config, name):
    root = args.out or os.environ.get(OUT_ENV) or config.experiment.output_dir
    return root if args.out else os.path.join(root, name)


def _print_table(rows):
    widths = [max(len(str(r[i])) for r in rows) for i in range(len(rows[0]))]
    for r in rows:
        print("  ".join(str(c).ljust(w) for c, w in zip(r, widths)))


def _cmd_generate(args, config):
    seed = config.experiment.seeds[0] if args.seed is None else args.seed
    scenario = config.scenario_for(seed)
    out = _out_dir(args, config, "generate")
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, f"scenario_seed{seed}.json")
    scenario.save(path)
    if args.dump_clouds:
        for node in scenario.nodes:
            cloud = synthesize_point_cloud(node, scenario, scenario.seed, config.sensing)
            dump_point_cloud(cloud, os.path.join(out, f"cloud_seed{seed}_node{node.id}.xyz"))
    print(f"scenario: {scenario.n_cavs} CAVs, {scenario.n_objects} objects, "
          f"{int(scenario.roi.u.sum())} tasks -> {path}")
    return EXIT_OK


def _cmd_solve(args, config):
    seed = config.experiment.seeds[0] if args.seed is None else args.seed
    problem = config.build_problem(seed)
    gibbs = config.gibbs_config(seed)
    result = gibbs_solve(problem, gibbs)
    if args.scheme == "no-placement":
        result = baseline_random_placement(problem, gibbs)
    elif args.scheme == "no-allocation":
        from .planner import EVEN
        ev = problem.evaluate(result.placement, EVEN)
        result.subcarriers, result.compute = ev.subcarriers, ev.compute
        result.t_com, result.t_comp = ev.t_com, ev.t_comp
        result.delta = baseline_even_allocation(problem, result.placement)
    out = _out_dir(args, config, "solve")
    write_solve_outputs(problem, result, out, config, seed)
    print(f"scheme: {args.scheme}   seed: {seed}   tasks: {len(problem.tasks)}")
    print(f"total completion time: {result.delta:.6f} s   feasible: {str(result.feasible).lower()}")
    print(f"placement E: {result.placement}   (1 = RSU)")
    rows = [("cav", "mean accuracy", "threshold")]
    for m, a in sorted(result.cav_means.items()):
        rows.append((m, "n/a" if a is None else f"{a:.4f}", problem.threshold))
    _print_table(rows)
    print(f"outputs: {out}")
    return EXIT_OK


def _cmd_convergence(args, config):
    bundle = run_convergence(config, _out_dir(args, config, "convergence"), args.seed, args.tau_list)
    rows = [("tau", "final best delta")]
    rows += [(t, f"{d:.6f}") for t, d in bundle.summary["final_best_delta"].items()]
    _print_table(rows)
    return EXIT_INFEASIBLE if bundle.skipped else EXIT_OK


def _cmd_accuracy(args, config):
    bundle = run_accuracy_comparison(config, _out_dir(args, config, "accuracy"), args.seed)
    rows = [("cav", "standalone", "cooperative", "threshold")]
    for r in bundle.summary["rows"]:
        rows.append(tuple("n/a" if v is None else (f"{v:.4f}" if isinstance(v, float) else v)
                          for v in r.values()))
    _print_table(rows)
    return EXIT_INFEASIBLE if bundle.skipped else EXIT_OK


def _cmd_sweep(args, config):
    seeds = None if args.seed is None else (args.seed,)
    schemes = tuple(args.scheme) if args.scheme else SCHEMES
    bundle = run_compute_sweep(config, _out_dir(args, config, "sweep"), seeds, args.sweep, schemes)
    rows = [("f_cav (GHz)",) + schemes]
    for f, d in bundle.summary["mean_delta"].items():
        rows.append((f,) + tuple(f"{d[s]:.6f}" for s in schemes))
    if len(rows) > 1:
        _print_table(rows)
    return EXIT_INFEASIBLE if bundle.skipped else EXIT_OK


def _cmd_selftest(args, config):
    from .selftest import run_selftest
    return EXIT_OK if run_selftest() else EXIT_SELFTEST_FAILED


COMMANDS = {
    "generate": _cmd_generate, "solve": _cmd_solve, "convergence": _cmd_convergence,
    "accuracy": _cmd_accuracy, "sweep": _cmd_sweep, "selftest": _cmd_selftest,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args.config)
        return COMMANDS[args.command](args, config)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
