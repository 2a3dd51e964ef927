"""Static world generation: road, RSU and CAV nodes, objects and RoI membership."""
import json
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np

from ._validation import check_non_negative, check_positive
from .exceptions import ConfigurationError, UsageError

RSU = "RSU"
CAV = "CAV"

SCENARIO_FORMAT = "coopsense-scenario"
SCENARIO_VERSION = 1

# (length x, width y, height z) in meters
OBJECT_CLASSES = {
    "car": (4.5, 1.8, 1.5),
    "pedestrian": (0.6, 0.6, 1.75),
    "cyclist": (1.8, 0.6, 1.7),
}
CLASS_WEIGHTS = {"car": 0.6, "pedestrian": 0.2, "cyclist": 0.2}
CAV_DIMENSIONS = OBJECT_CLASSES["car"]


@dataclass(frozen=True)
class RoadSegment:
    length: float
    width: float
    lane_count: int

    def __post_init__(self):
        check_positive(self.length, "road length")
        check_positive(self.width, "road width")
        check_positive(self.lane_count, "lane_count", integer=True)

    @property
    def lane_width(self):
        return self.width / self.lane_count

    def lane_center(self, lane):
        return (lane + 0.5) * self.lane_width

    def lane_heading(self, lane):
        """+1 for lanes travelling towards +x, -1 for the opposite carriageway."""
        return 1 if lane < (self.lane_count + 1) // 2 else -1


@dataclass(frozen=True)
class NodeSpec:
    id: int
    kind: str
    position: tuple
    compute_capacity: float
    transmit_power: Optional[float] = None
    channel_gain: Optional[float] = None
    heading: int = 1
    lane: Optional[int] = None

    def __post_init__(self):
        if self.kind not in (RSU, CAV):
            raise ConfigurationError(f"unknown node kind {self.kind!r}")
        if (self.kind == RSU) != (self.id == 0):
            raise ConfigurationError("node 0 must be the RSU and the RSU must be node 0")
        check_positive(self.compute_capacity, f"compute capacity of node {self.id}")
        if self.kind == CAV:
            check_positive(self.transmit_power, f"transmit power of CAV {self.id}")
            check_positive(self.channel_gain, f"channel gain of CAV {self.id}")
            if self.heading not in (1, -1):
                raise ConfigurationError(f"heading must be +1 or -1, got {self.heading}")

    @property
    def is_cav(self):
        return self.kind == CAV


@dataclass(frozen=True)
class BoundingBox:
    center: tuple
    dims: tuple
    label: str = "car"

    def __post_init__(self):
        if len(self.center) != 3 or len(self.dims) != 3:
            raise ValueError("bounding box needs a 3D center and three dimensions")
        if any(d <= 0 for d in self.dims):
            raise ValueError(f"bounding box dimensions must be > 0, got {self.dims}")

    @property
    def lower(self):
        return np.asarray(self.center, dtype=float) - 0.5 * np.asarray(self.dims, dtype=float)

    @property
    def upper(self):
        return np.asarray(self.center, dtype=float) + 0.5 * np.asarray(self.dims, dtype=float)

    @property
    def surface_area(self):
        lx, ly, lz = self.dims
        return 2.0 * (lx * ly + lx * lz + ly * lz)

    def as_tuple(self):
        """The 6-tuple (x, y, z, lx, ly, lz)."""
        return tuple(self.center) + tuple(self.dims)


@dataclass(frozen=True)
class RoIRect:
    owner: int
    x_range: tuple
    y_range: tuple

    def contains(self, x, y):
        return (self.x_range[0] <= x <= self.x_range[1]
                and self.y_range[0] <= y <= self.y_range[1])


@dataclass(frozen=True)
class RoIMatrix:
    """Binary membership, stored CAV-major: ``u[m - 1, k]`` for CAV m and object k.

    Objects are indexed from 0; CAV ids start at 1 because node 0 is the RSU.
    """

    u: np.ndarray

    def __post_init__(self):
        u = np.array(self.u, dtype=np.int8)
        if u.ndim != 2:
            raise ValueError("RoI matrix must be two-dimensional (M x K)")
        if not np.isin(u, (0, 1)).all():
            raise ValueError("RoI matrix must be binary")
        u.setflags(write=False)
        object.__setattr__(self, "u", u)

    @property
    def n_cavs(self):
        return self.u.shape[0]

    @property
    def n_objects(self):
        return self.u.shape[1]

    def __getitem__(self, km):
        k, m = km
        return int(self.u[m - 1, k])

    def object_cavs(self, k):
        return object_cavs(self, k)

    def cav_objects(self, m):
        return [int(k) for k in np.flatnonzero(self.u[m - 1])]

    def tasks(self):
        """All (k, m) pairs with u = 1, sorted lexicographically."""
        return [(k, m) for k in range(self.n_objects) for m in range(1, self.n_cavs + 1)
                if self.u[m - 1, k]]

    def __eq__(self, other):
        return isinstance(other, RoIMatrix) and np.array_equal(self.u, other.u)

    def __hash__(self):
        return hash(self.u.tobytes())


@dataclass(frozen=True)
class ScenarioConfig:
    n_cavs: int = 3
    n_objects: int = 7
    road_length: float = 50.0
    road_width: float = 14.0
    lane_count: int = 4
    roi_behind: float = 20.0
    roi_ahead: float = 20.0
    cav_compute: float = 10.0e9
    rsu_compute: float = 200.0e9
    transmit_power: float = 0.2
    channel_gain: float = 2.0e-13
    rsu_offset: float = 2.0
    rsu_height: float = 6.0
    cav_sensor_height: float = 1.8
    max_placement_retries: int = 1000

    def __post_init__(self):
        check_positive(self.n_cavs, "n_cavs", integer=True)
        check_non_negative(self.n_objects, "n_objects", integer=True)
        check_positive(self.road_length, "road_length")
        check_positive(self.road_width, "road_width")
        check_positive(self.lane_count, "lane_count", integer=True)
        check_non_negative(self.roi_behind, "roi_behind")
        check_non_negative(self.roi_ahead, "roi_ahead")
        check_positive(self.cav_compute, "cav_compute")
        check_positive(self.rsu_compute, "rsu_compute")
        check_positive(self.transmit_power, "transmit_power")
        check_positive(self.channel_gain, "channel_gain")
        check_non_negative(self.rsu_offset, "rsu_offset")
        check_positive(self.rsu_height, "rsu_height")
        check_positive(self.cav_sensor_height, "cav_sensor_height")
        check_positive(self.max_placement_retries, "max_placement_retries", integer=True)


@dataclass(frozen=True)
class Scenario:
    road: RoadSegment
    nodes: tuple
    objects: tuple
    roi: RoIMatrix
    seed: int
    roi_behind: float = 20.0
    roi_ahead: float = 20.0
    version: int = field(default=SCENARIO_VERSION)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "objects", tuple(self.objects))
        if sum(not n.is_cav for n in self.nodes) != 1:
            raise ConfigurationError("a scenario needs exactly one RSU")
        if [n.id for n in self.nodes] != list(range(len(self.nodes))):
            raise ConfigurationError("node ids must be 0..M in order")

    @property
    def rsu(self):
        return self.nodes[0]

    @property
    def cavs(self):
        return self.nodes[1:]

    @property
    def n_cavs(self):
        return len(self.nodes) - 1

    @property
    def n_objects(self):
        return len(self.objects)

    def roi_rect(self, m):
        return compute_roi(self.nodes[m], self.road, self.roi_behind, self.roi_ahead)

    def with_cav_compute(self, f_cav):
        """Copy of the scenario with every CAV's compute capacity set to ``f_cav``."""
        nodes = [self.rsu] + [replace(n, compute_capacity=float(f_cav)) for n in self.cavs]
        return replace(self, nodes=tuple(nodes))

    def to_dict(self):
        return {
            "format": SCENARIO_FORMAT,
            "version": self.version,
            "seed": int(self.seed),
            "roi_behind": self.roi_behind,
            "roi_ahead": self.roi_ahead,
            "road": asdict(self.road),
            "nodes": [asdict(n) for n in self.nodes],
            "objects": [asdict(o) for o in self.objects],
            "roi": self.roi.u.tolist(),
        }

    @classmethod
    def from_dict(cls, data):
        if data.get("format") != SCENARIO_FORMAT:
            raise ConfigurationError(f"not a scenario document (format={data.get('format')!r})")
        if data.get("version") != SCENARIO_VERSION:
            raise ConfigurationError(f"unsupported scenario version {data.get('version')!r}")
        nodes = tuple(NodeSpec(**{**n, "position": tuple(n["position"])}) for n in data["nodes"])
        objects = tuple(BoundingBox(center=tuple(o["center"]), dims=tuple(o["dims"]),
                                    label=o["label"]) for o in data["objects"])
        u = np.asarray(data["roi"], dtype=np.int8).reshape(len(nodes) - 1, len(objects))
        return cls(road=RoadSegment(**data["road"]), nodes=nodes, objects=objects,
                   roi=RoIMatrix(u), seed=data["seed"], roi_behind=data["roi_behind"],
                   roi_ahead=data["roi_ahead"])

    def dumps(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def loads(cls, text):
        return cls.from_dict(json.loads(text))

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.dumps())

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.loads(fh.read())


def compute_roi(cav, road, roi_behind, roi_ahead):
    """RoI rectangle of a CAV: ``roi_behind`` m behind, ``roi_ahead`` m ahead, full road width."""
    if not cav.is_cav:
        raise UsageError("the RSU has no region of interest")
    check_non_negative(roi_behind, "R_1")
    check_non_negative(roi_ahead, "R_2")
    x = float(cav.position[0])
    if cav.heading > 0:
        x_range = (x - roi_behind, x + roi_ahead)
    else:
        x_range = (x - roi_ahead, x + roi_behind)
    return RoIRect(owner=cav.id, x_range=x_range, y_range=(0.0, float(road.width)))


def compute_membership(scenario):
    """RoI matrix from bounding-box centers; an object counts when its center is in the rectangle."""
    u = np.zeros((scenario.n_cavs, scenario.n_objects), dtype=np.int8)
    for cav in scenario.cavs:
        rect = scenario.roi_rect(cav.id)
        for k, box in enumerate(scenario.objects):
            u[cav.id - 1, k] = rect.contains(box.center[0], box.center[1])
    return RoIMatrix(u)


def object_cavs(roi, k):
    """The set of CAVs whose RoI contains object k."""
    if not 0 <= k < roi.n_objects:
        raise IndexError(f"object index {k} out of range [0, {roi.n_objects})")
    return {int(m) + 1 for m in np.flatnonzero(roi.u[:, k])}


def generate_scenario(config, seed):
    """Sample a static scenario; identical ``(config, seed)`` give identical scenarios.

    CAVs and objects share the lane slots, so no two boxes overlap: in the same lane,
    centers are at least ``max object length + 1 m`` apart.
    """
    rng = np.random.default_rng(seed)
    road = RoadSegment(config.road_length, config.road_width, config.lane_count)
    gap = max(d[0] for d in OBJECT_CLASSES.values()) + 1.0
    lo, hi = gap / 2.0, road.length - gap / 2.0
    if hi < lo:
        raise ConfigurationError(f"road of length {road.length} m is shorter than one slot ({gap} m)")

    occupied = []  # (lane, x)

    def place(what):
        for _ in range(config.max_placement_retries):
            lane = int(rng.integers(road.lane_count))
            x = float(rng.uniform(lo, hi))
            if all(l != lane or abs(x - x0) >= gap for l, x0 in occupied):
                occupied.append((lane, x))
                return lane, x
        raise ConfigurationError(
            f"could not place {what} after {config.max_placement_retries} attempts; "
            f"road too small for {config.n_cavs} CAVs and {config.n_objects} objects")

    rsu = NodeSpec(id=0, kind=RSU,
                   position=(road.length / 2.0, road.width + config.rsu_offset, config.rsu_height),
                   compute_capacity=float(config.rsu_compute))
    nodes = [rsu]
    for m in range(1, config.n_cavs + 1):
        lane, x = place(f"CAV {m}")
        nodes.append(NodeSpec(
            id=m, kind=CAV,
            position=(x, road.lane_center(lane), config.cav_sensor_height),
            compute_capacity=float(config.cav_compute),
            transmit_power=float(config.transmit_power),
            channel_gain=float(config.channel_gain),
            heading=road.lane_heading(lane), lane=lane))

    labels = list(CLASS_WEIGHTS)
    weights = np.array([CLASS_WEIGHTS[c] for c in labels])
    objects = []
    for k in range(config.n_objects):
        label = labels[int(rng.choice(len(labels), p=weights / weights.sum()))]
        lane, x = place(f"object {k}")
        dims = OBJECT_CLASSES[label]
        objects.append(BoundingBox(center=(x, road.lane_center(lane), dims[2] / 2.0),
                                   dims=dims, label=label))

    draft = Scenario(road=road, nodes=tuple(nodes), objects=tuple(objects),
                     roi=RoIMatrix(np.zeros((config.n_cavs, config.n_objects))),
                     seed=int(seed), roi_behind=float(config.roi_behind),
                     roi_ahead=float(config.roi_ahead))
    return replace(draft, roi=compute_membership(draft))
