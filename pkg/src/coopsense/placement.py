"""Binary task placement decisions E over the task set {(k, m) : u_km = 1}."""
from dataclasses import dataclass

import numpy as np

from .exceptions import UsageError

LOCAL = 0
OFFLOAD = 1


@dataclass(frozen=True)
class PlacementDecision:
    """``bits[i]`` is e for ``tasks[i]``: 0 keeps the task on the CAV, 1 sends it to the RSU."""

    tasks: tuple
    bits: tuple

    def __post_init__(self):
        tasks = tuple((int(k), int(m)) for k, m in self.tasks)
        bits = tuple(int(b) for b in self.bits)
        if len(tasks) != len(bits):
            raise UsageError("placement needs one bit per task")
        if any(b not in (0, 1) for b in bits):
            raise UsageError("placement decisions must be binary")
        object.__setattr__(self, "tasks", tasks)
        object.__setattr__(self, "bits", bits)
        object.__setattr__(self, "_index", {t: i for i, t in enumerate(tasks)})

    @classmethod
    def constant(cls, roi, value):
        tasks = roi.tasks()
        return cls(tuple(tasks), (value,) * len(tasks))

    @classmethod
    def all_offload(cls, roi):
        return cls.constant(roi, OFFLOAD)

    @classmethod
    def all_local(cls, roi):
        return cls.constant(roi, LOCAL)

    @classmethod
    def from_mapping(cls, roi, mapping):
        tasks = roi.tasks()
        missing = [t for t in tasks if t not in mapping]
        if missing:
            raise UsageError(f"placement undefined for tasks {missing}")
        return cls(tuple(tasks), tuple(mapping[t] for t in tasks))

    @classmethod
    def from_index(cls, roi, index):
        """The placement whose bits spell ``index`` in binary (first task = most significant)."""
        tasks = roi.tasks()
        n = len(tasks)
        return cls(tuple(tasks), tuple((index >> (n - 1 - i)) & 1 for i in range(n)))

    def __len__(self):
        return len(self.tasks)

    def __getitem__(self, km):
        return self.bits[self._index[tuple(km)]]

    def items(self):
        return zip(self.tasks, self.bits)

    def as_dict(self):
        return dict(self.items())

    def as_array(self):
        return np.asarray(self.bits, dtype=np.int8)

    def flip(self, i):
        bits = list(self.bits)
        bits[i] ^= 1
        return PlacementDecision(self.tasks, tuple(bits))

    def offloaders(self, k):
        """M^k_RSU: CAVs that send object k to the RSU, ascending."""
        return [m for (kk, m), b in self.items() if kk == k and b]

    def offloaded(self):
        return [t for t, b in self.items() if b]

    def local(self):
        return [t for t, b in self.items() if not b]

    def hamming(self, other):
        if self.tasks != other.tasks:
            raise UsageError("placements are over different task sets")
        return sum(a != b for a, b in zip(self.bits, other.bits))

    def __str__(self):
        return "".join(map(str, self.bits))
