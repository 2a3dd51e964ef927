"""Uplink model: data sizes, Shannon-rate subcarriers, barrier transmission times,
and the greedy subcarrier allocator."""
import csv
import math
from dataclasses import dataclass, field

from ._validation import check_positive
from .exceptions import ConfigurationError, InfeasibleError

NOISE_PSD_DBM_HZ = -174.0


def dbm_to_watt(dbm):
    return 10.0 ** (dbm / 10.0) / 1000.0


@dataclass(frozen=True)
class LinkParams:
    """Uplink parameters. ``powers`` and ``gains`` map CAV id -> transmit power (W) / channel gain."""

    powers: dict
    gains: dict
    noise_psd: float = dbm_to_watt(NOISE_PSD_DBM_HZ)
    bandwidth: float = 20e6
    subcarrier_bandwidth: float = 1e6

    def __post_init__(self):
        check_positive(self.noise_psd, "noise_psd")
        check_positive(self.bandwidth, "bandwidth")
        check_positive(self.subcarrier_bandwidth, "subcarrier_bandwidth")
        ratio = self.bandwidth / self.subcarrier_bandwidth
        if abs(ratio - round(ratio)) > 1e-9 * ratio or round(ratio) < 1:
            raise ConfigurationError(
                f"bandwidth {self.bandwidth} Hz is not an integer multiple of {self.subcarrier_bandwidth} Hz")
        if set(self.powers) != set(self.gains):
            raise ConfigurationError("powers and gains must cover the same CAVs")
        for m in self.powers:
            check_positive(self.powers[m], f"transmit power of CAV {m}")
            check_positive(self.gains[m], f"channel gain of CAV {m}")

    @classmethod
    def from_scenario(cls, scenario, **kwargs):
        return cls(powers={n.id: n.transmit_power for n in scenario.cavs},
                   gains={n.id: n.channel_gain for n in scenario.cavs}, **kwargs)

    @property
    def n_subcarriers(self):
        return int(round(self.bandwidth / self.subcarrier_bandwidth))

    def snr(self, m):
        return self.powers[m] * self.gains[m] / (self.noise_psd * self.subcarrier_bandwidth)

    def subcarrier_rate(self, m):
        """Bits/s of a single subcarrier for CAV m."""
        return self.subcarrier_bandwidth * math.log2(1.0 + self.snr(m))

    def rate(self, b, m):
        return b * self.subcarrier_rate(m)


@dataclass(frozen=True)
class SubcarrierAllocation:
    """Subcarrier counts ``b[(k, m)]`` for every offloaded flow."""

    b: dict = field(default_factory=dict)

    def __getitem__(self, km):
        return self.b[km]

    def __len__(self):
        return len(self.b)

    def __iter__(self):
        return iter(sorted(self.b))

    @property
    def total(self):
        return sum(self.b.values())


@dataclass(frozen=True)
class CommTimes:
    flow: dict       # t_{km,R} per offloaded flow
    trans: dict      # barrier transmission time per task (0 for local tasks)
    broadcast: float
    total: dict      # t^com per task


def data_size(objdata, xi):
    """Uplink payload of an object's data in bits: ``xi`` bits per point."""
    check_positive(xi, "xi")
    n = objdata if isinstance(objdata, int) else len(objdata)
    return xi * n


def link_rate(b, link, m):
    """Shannon rate of ``b`` subcarriers at CAV m's constant per-subcarrier SNR."""
    if b < 0:
        raise ValueError("subcarrier count must be >= 0")
    return link.rate(b, m)


def _by_object(flows):
    groups = {}
    for k, m in sorted(flows):
        groups.setdefault(k, []).append(m)
    return groups


def transmission_objective(flows, allocation, link):
    """Sum over offloaded tasks of their object's barrier time (the P2 objective)."""
    total = 0.0
    for k, ms in _by_object(flows).items():
        barrier = max(_flow_time(flows[(k, m)], allocation[(k, m)], link, m) for m in ms)
        total += len(ms) * barrier
    return total


def _flow_time(size, b, link, m):
    if size == 0:
        return 0.0
    if b <= 0:
        return math.inf
    return size / link.rate(b, m)


def _times(flows, link):
    """Per-flow upload time as a function of b, with the subcarrier rate looked up once."""
    rates = {key: link.subcarrier_rate(key[1]) for key in flows}

    def t(key, b):
        size = flows[key]
        if size == 0:
            return 0.0
        if b <= 0:
            return math.inf
        return size / (b * rates[key])
    return t


def greedy_subcarrier_allocation(flows, link, refine=True):
    """Give each flow one subcarrier, then hand out the rest one at a time.

    Each extra subcarrier goes to the flow whose increment lowers the P2 objective
    the most, ties going to the smallest ``(k, m)``. Only the incremented flow's
    object changes its barrier, so the objective reduction is evaluated per object.

    When several CAVs offload the same object, a single increment below the
    barrier gains nothing and the one-step rule can stall. With ``refine`` the
    greedy result is replaced by the exact object-level allocation
    (:func:`object_level_allocation`) whenever that is strictly better; on
    instances with one offloader per object the greedy result is already optimal
    and is kept as is.
    """
    n_sub = link.n_subcarriers
    keys = sorted(flows)
    if len(keys) > n_sub:
        raise InfeasibleError(f"{len(keys)} offloading flows but only {n_sub} subcarriers")
    if not keys:
        return SubcarrierAllocation({})
    t = _times(flows, link)
    b = {key: 1 for key in keys}
    groups = _by_object(flows)
    times = {key: t(key, 1) for key in keys}
    for _ in range(n_sub - len(keys)):
        best, best_gain = None, -math.inf
        for key in keys:
            k, m = key
            ms = groups[k]
            old = max(times[(k, mm)] for mm in ms)
            new = max([t(key, b[key] + 1)] + [times[(k, mm)] for mm in ms if mm != m])
            gain = len(ms) * (old - new)
            if gain > best_gain:
                best, best_gain = key, gain
        b[best] += 1
        times[best] = t(best, b[best])
    if refine and any(len(ms) > 1 for ms in groups.values()):
        exact = object_level_allocation(flows, link)
        if transmission_objective(flows, exact, link) < \
                transmission_objective(flows, b, link) * (1 - 1e-12):
            return exact
    return SubcarrierAllocation(b)


def _object_ladder(k, ms, t, n_max):
    """Best barrier of object ``k`` for every subcarrier count from len(ms) to n_max.

    Raising the current bottleneck flow is optimal for a min-max of decreasing
    times, so the ladder is built one subcarrier at a time. Returns the barriers
    and the flow raised at each rung.
    """
    b = {m: 1 for m in ms}
    cur = {m: t((k, m), 1) for m in ms}
    barriers, raised = [max(cur.values())], []
    for _ in range(n_max - len(ms)):
        m = max(ms, key=lambda x: (cur[x], -x))
        b[m] += 1
        cur[m] = t((k, m), b[m])
        barriers.append(max(cur.values()))
        raised.append(m)
    return barriers, raised


def object_level_allocation(flows, link):
    """Exact minimizer of the P2 objective.

    Per object, the cheapest barrier for n subcarriers comes from
    :func:`_object_ladder`; a knapsack-style DP then splits the subcarriers
    between objects. Cost is O(K * N^2) for K objects and N subcarriers.
    """
    n_sub = link.n_subcarriers
    groups = _by_object(flows)
    if sum(len(ms) for ms in groups.values()) > n_sub:
        raise InfeasibleError(f"{len(flows)} offloading flows but only {n_sub} subcarriers")
    if not groups:
        return SubcarrierAllocation({})
    t = _times(flows, link)
    cost = {0: 0.0}  # subcarriers used so far -> best objective of the objects seen
    choice = []
    for k in sorted(groups):
        ms = groups[k]
        barriers, raised = _object_ladder(k, ms, t, n_sub)
        cur, pick = {}, {}
        for used, c in cost.items():
            for i, barrier in enumerate(barriers):
                n = used + len(ms) + i
                if n > n_sub:
                    break
                total = c + len(ms) * barrier
                if n not in cur or total < cur[n]:
                    cur[n], pick[n] = total, (used, i)
        cost = cur
        choice.append((k, ms, raised, pick))
    b, n = {}, n_sub
    for k, ms, raised, pick in reversed(choice):
        used, i = pick[n]
        alloc = {m: 1 for m in ms}
        for m in raised[:i]:
            alloc[m] += 1
        b.update({(k, m): v for m, v in alloc.items()})
        n = used
    return SubcarrierAllocation(b)


def even_subcarrier_allocation(flows, link):
    """Split the subcarriers evenly; the remainder goes to the smallest ``(k, m)`` first."""
    n_sub = link.n_subcarriers
    keys = sorted(flows)
    if len(keys) > n_sub:
        raise InfeasibleError(f"{len(keys)} offloading flows but only {n_sub} subcarriers")
    if not keys:
        return SubcarrierAllocation({})
    share, extra = divmod(n_sub, len(keys))
    return SubcarrierAllocation({key: share + (i < extra) for i, key in enumerate(keys)})


def comm_times(placement, allocation, sizes, link, t_broad):
    """Per-task communication times.

    Every task pays the broadcast ``t_broad``; offloaded tasks add their object's
    barrier, the slowest upload among the CAVs offloading that object.
    """
    offloaded = placement.offloaded()
    if set(offloaded) != set(allocation.b):
        raise ValueError("allocation must cover exactly the offloaded flows")
    flow = {}
    for k, m in offloaded:
        t = _flow_time(sizes[(k, m)], allocation[(k, m)], link, m)
        if math.isinf(t):
            raise InfeasibleError(f"flow {(k, m)} has data but no subcarrier")
        flow[(k, m)] = t
    barrier = {}
    for k, m in offloaded:
        barrier[k] = max(barrier.get(k, 0.0), flow[(k, m)])
    trans = {(k, m): barrier[k] if e else 0.0 for (k, m), e in placement.items()}
    total = {task: t_broad + t for task, t in trans.items()}
    return CommTimes(flow=flow, trans=trans, broadcast=t_broad, total=total)


def write_allocation_csv(path, allocation, sizes, link):
    """Dump ``k, m, b, rate, t_trans`` rows, with the per-object barrier as t_trans."""
    flows = {key: sizes[key] for key in allocation.b}
    barrier = {}
    for k, m in flows:
        t = _flow_time(flows[(k, m)], allocation[(k, m)], link, m)
        barrier[k] = max(barrier.get(k, 0.0), t)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "m", "b", "rate", "t_trans"])
        for k, m in sorted(flows):
            w.writerow([k, m, allocation[(k, m)], repr(float(link.rate(allocation[(k, m)], m))),
                        repr(float(barrier[k]))])
