"""Two-layer planner: Gibbs sampling over task placement on top of the greedy
subcarrier allocator and the square-root CPU split, plus the comparison baselines."""
import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from .accuracy import (AccuracyReport, SurrogateAccuracyModel, check_feasible,
                       standalone_accuracies, task_accuracies)
from .comm import (LinkParams, comm_times, data_size, even_subcarrier_allocation,
                   greedy_subcarrier_allocation)
from .compute import (computation_times, even_compute_allocation, optimal_compute_allocation,
                      time_factors)
from .exceptions import ConfigurationError, InfeasibleError, UsageError
from .placement import PlacementDecision
from .sensing import SynthesisParams, observe_scenario

OPTIMAL = "optimal"
EVEN = "even"

EXPONENT_CLAMP = 36.0


@dataclass(frozen=True)
class GibbsConfig:
    tau: float = 0.01
    max_iter: int = 2000
    stall_window: int = 300
    repair_cap: int = 50
    max_initial_draws: int = 1000
    seed: int = 0

    def __post_init__(self):
        if not self.tau > 0:
            raise ConfigurationError(f"tau must be > 0, got {self.tau}")
        if self.max_iter < 1:
            raise ConfigurationError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.stall_window < 1:
            raise ConfigurationError(f"stall_window must be >= 1, got {self.stall_window}")


@dataclass(frozen=True)
class Evaluation:
    placement: PlacementDecision
    delta: float
    subcarriers: object
    compute: object
    t_com: dict
    t_comp: dict

    @property
    def t_task(self):
        return {task: self.t_com[task] + self.t_comp[task] for task in self.t_com}


@dataclass
class SolveResult:
    placement: PlacementDecision
    subcarriers: object
    compute: object
    delta: float
    t_com: dict
    t_comp: dict
    accuracies: dict
    cav_means: dict
    trace: list = field(default_factory=list)  # (iteration, accepted delta, best delta)
    initial_placement: PlacementDecision = None
    initial_delta: float = None
    iterations: int = 0
    feasible: bool = True

    @property
    def t_task(self):
        return {task: self.t_com[task] + self.t_comp[task] for task in self.t_com}

    def summary(self):
        tasks = sorted(self.t_com)
        return {
            "delta": self.delta,
            "feasible": self.feasible,
            "iterations": self.iterations,
            "placement": {f"{k},{m}": e for (k, m), e in self.placement.items()},
            "subcarriers": {f"{k},{m}": b for (k, m), b in sorted(self.subcarriers.b.items())},
            "cpu_share": {f"{k},{n}": v for (k, n), v in sorted(self.compute.v.items())},
            "tasks": [{"k": k, "m": m, "e": self.placement[(k, m)],
                       "t_com": self.t_com[(k, m)], "t_comp": self.t_comp[(k, m)],
                       "t": self.t_com[(k, m)] + self.t_comp[(k, m)],
                       "accuracy": self.accuracies[(k, m)]} for k, m in tasks],
            "cav_mean_accuracy": {str(m): a for m, a in sorted(self.cav_means.items())},
        }


class CooperativeSensingProblem:
    """Everything the optimizer needs about one scenario, with evaluation caches.

    Parameters
    ----------
    scenario : Scenario
    accuracy_model : regressor with ``predict``; defaults to the surrogate.
    threshold : float
        Minimum per-CAV mean accuracy A.
    omega : int
        CPU cycles per point.
    xi : int
        Bits per point on the uplink.
    t_broad : float
        RSU broadcast time in seconds, paid by every task.
    """

    def __init__(self, scenario, accuracy_model=None, threshold=0.85, omega=50_000, xi=96,
                 t_broad=0.005, J=3, link=None, synthesis=None, observation=None):
        self.scenario = scenario
        self.model = accuracy_model if accuracy_model is not None else SurrogateAccuracyModel().fit()
        self.threshold = float(threshold)
        self.omega = omega
        self.xi = xi
        self.t_broad = float(t_broad)
        self.link = link if link is not None else LinkParams.from_scenario(scenario)
        self.observation = observation if observation is not None else observe_scenario(
            scenario, J=J, params=synthesis or SynthesisParams())
        self.counts = self.observation.counts
        self.f = {n.id: n.compute_capacity for n in scenario.nodes}
        self.tasks = tuple(scenario.roi.tasks())
        self._feasible = {}
        self._evals = {}
        self._accuracy = {}

    @property
    def roi(self):
        return self.scenario.roi

    def with_cav_compute(self, f_cav):
        """Same observation and models on a scenario with every CAV at ``f_cav`` cycles/s."""
        return CooperativeSensingProblem(
            self.scenario.with_cav_compute(f_cav), self.model, self.threshold, self.omega,
            self.xi, self.t_broad, link=self.link, observation=self.observation)

    def sizes(self, placement):
        return {(k, m): data_size(int(self.counts[k, m]), self.xi) for k, m in placement.offloaded()}

    def demands(self, placement):
        """C for every (object, node) pair that has data to process under ``placement``."""
        out = {}
        for (k, m), e in placement.items():
            if not e:
                out[(k, m)] = self.omega * int(self.counts[k, m] + self.counts[k, 0])
        for k in range(self.scenario.n_objects):
            offl = placement.offloaders(k)
            if offl:
                out[(k, 0)] = self.omega * int(self.counts[k, 0] + sum(self.counts[k, m] for m in offl))
        return out

    def accuracies(self, placement):
        key = placement.bits
        if key not in self._accuracy:
            self._accuracy[key] = task_accuracies(self.observation, placement, self.model)
        return self._accuracy[key]

    def report(self, placement):
        return AccuracyReport(self.accuracies(placement), self.roi, self.threshold)

    def is_feasible(self, placement):
        """Accuracy constraint holds and every offloading flow can get a subcarrier."""
        key = placement.bits
        if key not in self._feasible:
            ok = len(placement.offloaded()) <= self.link.n_subcarriers
            self._feasible[key] = ok and self.report(placement).feasible
        return self._feasible[key]

    def evaluate(self, placement, allocator=OPTIMAL):
        key = (placement.bits, allocator)
        if key not in self._evals:
            self._evals[key] = evaluate_objective(self, placement, allocator)
        return self._evals[key]


def evaluate_objective(problem, placement, allocator=OPTIMAL):
    """Total completion time of ``placement`` under optimal (or even) resource allocation."""
    flows = problem.sizes(placement)
    demands = problem.demands(placement)
    factors = time_factors(problem.roi, placement)
    if allocator == OPTIMAL:
        b = greedy_subcarrier_allocation(flows, problem.link)
        v = optimal_compute_allocation(demands, factors, problem.f)
    elif allocator == EVEN:
        b = even_subcarrier_allocation(flows, problem.link)
        v = even_compute_allocation(demands, factors, problem.f)
    else:
        raise UsageError(f"unknown allocator {allocator!r}")
    com = comm_times(placement, b, flows, problem.link, problem.t_broad).total
    comp = computation_times(demands, v, problem.f, placement)
    delta = math.fsum(com[t] + comp[t] for t in placement.tasks)
    return Evaluation(placement, delta, b, v, com, comp)


def acceptance_probability(delta_new, delta, tau):
    """Logistic acceptance 1 / (1 + exp((delta_new - delta) / tau)), clamped to stay in (0, 1)."""
    if not tau > 0:
        raise ValueError("tau must be > 0")
    x = (delta_new - delta) / tau
    if math.isnan(x):
        x = 0.0
    x = min(max(x, -EXPONENT_CLAMP), EXPONENT_CLAMP)
    return 1.0 / (1.0 + math.exp(x))


def initial_feasible_placement(problem, rng, max_draws=1000):
    """Rejection-sample a feasible placement, falling back to all-offload."""
    n = len(problem.tasks)
    for _ in range(max_draws):
        cand = PlacementDecision(problem.tasks, tuple(int(b) for b in rng.integers(0, 2, size=n)))
        if problem.is_feasible(cand):
            return cand
    fallback = PlacementDecision.all_offload(problem.roi)
    if not problem.is_feasible(fallback):
        means = problem.report(fallback).cav_means
        raise InfeasibleError(
            "instance infeasible: even offloading every task misses the accuracy threshold "
            f"{problem.threshold} or the subcarrier budget (per-CAV means {means})")
    return fallback


def neighbor(placement, rng, problem=None, repair_cap=50):
    """Flip one uniformly chosen decision, then keep flipping random ones until feasible."""
    n = len(placement)
    if n == 0:
        raise UsageError("no tasks to re-place")
    cand = placement.flip(int(rng.integers(n)))
    if problem is None:
        return cand
    flips = 0
    while not problem.is_feasible(cand):
        if flips >= repair_cap:
            base = PlacementDecision.all_offload(problem.roi)
            cand = base.flip(int(rng.integers(n)))
            return cand if problem.is_feasible(cand) else base
        cand = cand.flip(int(rng.integers(n)))
        flips += 1
    return cand


def _run_chain(problem, config, accept):
    rng = np.random.default_rng(config.seed)
    state = initial_feasible_placement(problem, rng, config.max_initial_draws)
    current = problem.evaluate(state)
    initial = current
    best = current
    trace = [(0, current.delta, best.delta)]
    last_improvement = 0
    it = 0
    if problem.tasks:
        for it in range(1, config.max_iter + 1):
            cand = neighbor(current.placement, rng, problem, config.repair_cap)
            ev = problem.evaluate(cand)
            u = rng.random()
            if accept(ev.delta, current.delta, u):
                current = ev
            if ev.delta < best.delta:
                best = ev
                last_improvement = it
            trace.append((it, current.delta, best.delta))
            if it - last_improvement >= config.stall_window:
                break
    report = problem.report(best.placement)
    return SolveResult(
        placement=best.placement, subcarriers=best.subcarriers, compute=best.compute,
        delta=best.delta, t_com=best.t_com, t_comp=best.t_comp,
        accuracies=report.accuracies, cav_means=report.cav_means, trace=trace,
        initial_placement=initial.placement, initial_delta=initial.delta, iterations=it,
        feasible=problem.is_feasible(best.placement))


def gibbs_solve(problem, config=None):
    """Gibbs-sampling placement search; returns the best feasible placement visited."""
    config = config or GibbsConfig()

    def accept(new, old, u):
        return u < acceptance_probability(new, old, config.tau)

    return _run_chain(problem, config, accept)


def greedy_descent(problem, config=None):
    """Same proposal stream as :func:`gibbs_solve` but only strict improvements are taken."""
    config = config or GibbsConfig()
    return _run_chain(problem, config, lambda new, old, u: new < old)


@dataclass
class StandaloneResult:
    delta: float
    accuracies: dict
    cav_means: dict
    feasible: bool
    t_comp: dict


def baseline_standalone(problem):
    """Every CAV classifies its RoI objects from its own data only; no uplink, no broadcast.

    The accuracy constraint is reported in ``feasible`` but not enforced.
    """
    roi = problem.roi
    tasks = roi.tasks()
    demands = {(k, m): problem.omega * int(problem.counts[k, m]) for k, m in tasks}
    factors = {t: 1 for t in tasks}
    v = optimal_compute_allocation(demands, factors, problem.f)
    local = PlacementDecision(tuple(tasks), (0,) * len(tasks))
    t_comp = computation_times(demands, v, problem.f, local)
    report = AccuracyReport(standalone_accuracies(problem.observation, roi, problem.model), roi,
                            problem.threshold)
    return StandaloneResult(delta=math.fsum(t_comp.values()), accuracies=report.accuracies,
                            cav_means=report.cav_means, feasible=report.feasible, t_comp=t_comp)


def baseline_random_placement(problem, config=None):
    """The chain's random initial placement with optimal resource allocation."""
    config = config or GibbsConfig()
    rng = np.random.default_rng(config.seed)
    placement = initial_feasible_placement(problem, rng, config.max_initial_draws)
    ev = problem.evaluate(placement)
    report = problem.report(placement)
    return SolveResult(
        placement=placement, subcarriers=ev.subcarriers, compute=ev.compute, delta=ev.delta,
        t_com=ev.t_com, t_comp=ev.t_comp, accuracies=report.accuracies,
        cav_means=report.cav_means, trace=[(0, ev.delta, ev.delta)], initial_placement=placement,
        initial_delta=ev.delta, iterations=0, feasible=report.feasible)


def baseline_even_allocation(problem, placement):
    """Completion time of ``placement`` with subcarriers and CPU split evenly."""
    return problem.evaluate(placement, EVEN).delta


class TwoLayerPlanner(BaseEstimator):
    """Joint task placement and resource allocation as a scikit-learn style estimator.

    ``fit(scenario)`` runs the Gibbs chain and stores the best solution in
    ``result_``; ``placement_``, ``subcarriers_``, ``cpu_share_`` and
    ``objective_`` are shortcuts into it.
    """

    def __init__(self, tau=0.01, max_iter=2000, stall_window=300, repair_cap=50,
                 accuracy_threshold=0.85, omega=50_000, xi=96, J=3, t_broad=0.005,
                 bandwidth=20e6, subcarrier_bandwidth=1e6, noise_psd=None,
                 accuracy_model=None, synthesis=None, random_state=0):
        self.tau = tau
        self.max_iter = max_iter
        self.stall_window = stall_window
        self.repair_cap = repair_cap
        self.accuracy_threshold = accuracy_threshold
        self.omega = omega
        self.xi = xi
        self.J = J
        self.t_broad = t_broad
        self.bandwidth = bandwidth
        self.subcarrier_bandwidth = subcarrier_bandwidth
        self.noise_psd = noise_psd
        self.accuracy_model = accuracy_model
        self.synthesis = synthesis
        self.random_state = random_state

    def make_problem(self, scenario):
        link_kwargs = {"bandwidth": self.bandwidth, "subcarrier_bandwidth": self.subcarrier_bandwidth}
        if self.noise_psd is not None:
            link_kwargs["noise_psd"] = self.noise_psd
        return CooperativeSensingProblem(
            scenario, accuracy_model=self.accuracy_model, threshold=self.accuracy_threshold,
            omega=self.omega, xi=self.xi, t_broad=self.t_broad, J=self.J,
            link=LinkParams.from_scenario(scenario, **link_kwargs), synthesis=self.synthesis)

    def gibbs_config(self):
        return GibbsConfig(tau=self.tau, max_iter=self.max_iter, stall_window=self.stall_window,
                           repair_cap=self.repair_cap, seed=self.random_state)

    def fit(self, scenario, y=None):
        self.problem_ = self.make_problem(scenario)
        self.result_ = gibbs_solve(self.problem_, self.gibbs_config())
        self.placement_ = self.result_.placement
        self.subcarriers_ = self.result_.subcarriers
        self.cpu_share_ = self.result_.compute
        self.objective_ = self.result_.delta
        return self

    def score(self, scenario=None, y=None):
        """Negative total completion time of the fitted solution (higher is better)."""
        if not hasattr(self, "result_"):
            raise UsageError("planner is not fitted")
        return -self.objective_


__all__ = [
    "CooperativeSensingProblem", "Evaluation", "GibbsConfig", "SolveResult", "StandaloneResult",
    "TwoLayerPlanner", "acceptance_probability", "baseline_even_allocation",
    "baseline_random_placement", "baseline_standalone", "check_feasible", "evaluate_objective",
    "gibbs_solve", "greedy_descent", "initial_feasible_placement", "neighbor",
]
