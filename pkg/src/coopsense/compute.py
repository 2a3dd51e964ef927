"""Processing demands, time factors, the square-root CPU split and computation times."""
import csv
import math
from dataclasses import dataclass, field

from ._validation import check_positive
from .exceptions import InfeasibleError


@dataclass(frozen=True)
class ComputeAllocation:
    """CPU fractions ``v[(k, node)]`` for every loaded (object, node) pair."""

    v: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.v[key]

    def __contains__(self, key):
        return key in self.v

    def __len__(self):
        return len(self.v)

    def node_total(self, node):
        return sum(v for (_, n), v in self.v.items() if n == node)

    def nodes(self):
        return sorted({n for _, n in self.v})


def compute_demand(fused, omega):
    """CPU cycles to process ``fused``: ``omega`` cycles per point."""
    check_positive(omega, "omega")
    n = fused if isinstance(fused, int) else len(fused)
    return omega * n


def time_factors(roi, placement):
    """How many task completion times each (object, node) processing time counts towards.

    A local task counts once at its CAV; at the RSU an object counts once per
    offloading CAV.
    """
    eta = {}
    for (k, m), e in placement.items():
        eta[(k, m)] = roi[(k, m)] * (1 - e)
    for k in range(roi.n_objects):
        eta[(k, 0)] = len(placement.offloaders(k))
    return eta


def _loaded(demands, factors):
    """Weighted loads eta*C grouped by node, dropping pairs with no load."""
    per_node = {}
    for key, c in demands.items():
        w = factors.get(key, 0) * c
        if w > 0:
            per_node.setdefault(key[1], []).append((key, w))
    return per_node


def optimal_compute_allocation(demands, factors, f=None):
    """Closed-form minimizer of sum eta*C / (v * f) per node: v proportional to sqrt(eta*C).

    ``f`` is accepted for symmetry with the time functions; it cancels out of the
    split. Nodes without load get no entries.
    """
    v = {}
    for node, items in _loaded(demands, factors).items():
        roots = [math.sqrt(w) for _, w in items]
        total = math.fsum(roots)
        for (key, _), r in zip(items, roots):
            v[key] = r / total
    return ComputeAllocation(v)


def even_compute_allocation(demands, factors, f=None):
    """Equal CPU share for every loaded pair on a node."""
    v = {}
    for node, items in _loaded(demands, factors).items():
        for key, _ in items:
            v[key] = 1.0 / len(items)
    return ComputeAllocation(v)


def compute_objective(demands, factors, allocation, f):
    """sum over loaded pairs of eta*C / (v * f_node)."""
    total = 0.0
    for node, items in _loaded(demands, factors).items():
        for key, w in items:
            total += w / (allocation[key] * f[node])
    return total


def _time(c, key, allocation, f_node):
    if c == 0:
        return 0.0
    v = allocation.v.get(key, 0.0)
    if v <= 0:
        raise InfeasibleError(f"pair {key} has {c} cycles of work but no CPU share")
    return c / (v * f_node)


def computation_times(demands, allocation, f, placement):
    """t^comp per task; tasks offloading the same object share the RSU's time."""
    out = {}
    for (k, m), e in placement.items():
        node = 0 if e else m
        key = (k, node)
        out[(k, m)] = _time(demands.get(key, 0), key, allocation, f[node])
    return out


def write_allocation_csv(path, demands, factors, allocation, f):
    """Dump ``node, k, etaC, v, t_comp`` rows for every loaded pair."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node", "k", "etaC", "v", "t_comp"])
        for node, items in sorted(_loaded(demands, factors).items()):
            for (k, _), load in sorted(items):
                c = demands[(k, node)]
                w.writerow([node, k, load, repr(float(allocation[(k, node)])),
                            repr(float(_time(c, (k, node), allocation, f[node])))])
