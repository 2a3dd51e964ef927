"""Synthetic LiDAR clouds, per-object extraction, J^3 quality grids and data fusion."""
from dataclasses import dataclass

import numpy as np

from ._validation import check_non_negative, check_points, check_positive, check_probability
from .exceptions import ConfigurationError, UsageError


@dataclass(frozen=True)
class SynthesisParams:
    """Knobs of the cloud synthesizer.

    ``density`` is the number of points per m^2 of projected visible area for a
    sensor ``reference_distance`` meters away; counts fall off as 1/d^2.
    """

    density: float = 2000.0
    reference_distance: float = 10.0
    max_points: int = 4096
    occlusion_factor: float = 0.1

    def __post_init__(self):
        check_positive(self.density, "density")
        check_positive(self.reference_distance, "reference_distance")
        check_non_negative(self.max_points, "max_points", integer=True)
        check_probability(self.occlusion_factor, "occlusion_factor")


@dataclass(frozen=True)
class PointCloud:
    owner: int
    points: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "points", check_points(self.points))

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class ObjectData:
    k: int
    m: int
    points: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "points", check_points(self.points))

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class QualityGrid:
    counts: np.ndarray
    J: int

    def __post_init__(self):
        counts = np.array(self.counts, dtype=np.int64).ravel()
        if counts.shape != (self.J ** 3,):
            raise ValueError(f"quality grid needs {self.J ** 3} entries, got {counts.size}")
        if (counts < 0).any():
            raise ValueError("quality grid counts must be non-negative")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def total(self):
        return int(self.counts.sum())

    def __add__(self, other):
        if self.J != other.J:
            raise UsageError(f"cannot add grids with J={self.J} and J={other.J}")
        return QualityGrid(self.counts + other.counts, self.J)

    @classmethod
    def zeros(cls, J):
        return cls(np.zeros(J ** 3, dtype=np.int64), J)


@dataclass(frozen=True)
class FusedData:
    k: int
    node: int
    points: np.ndarray
    grid: QualityGrid = None

    def __post_init__(self):
        object.__setattr__(self, "points", check_points(self.points))

    def __len__(self):
        return len(self.points)


def _faces(box):
    """Yield (axis, sign, face_center, area) for the six faces of ``box``."""
    lower, upper = box.lower, box.upper
    center = np.asarray(box.center, dtype=float)
    dims = np.asarray(box.dims, dtype=float)
    for axis in range(3):
        other = [a for a in range(3) if a != axis]
        area = dims[other[0]] * dims[other[1]]
        for sign in (-1, 1):
            fc = center.copy()
            fc[axis] = lower[axis] if sign < 0 else upper[axis]
            yield axis, sign, fc, area


def visible_faces(sensor, box):
    """Faces whose outward normal points towards the sensor, with projected areas."""
    sensor = np.asarray(sensor, dtype=float)
    out = []
    for axis, sign, fc, area in _faces(box):
        to_sensor = sensor - fc
        facing = sign * to_sensor[axis]
        if facing > 0:
            out.append((axis, sign, area * facing / np.linalg.norm(to_sensor)))
    return out


def segment_hits_box(p0, p1, box):
    """Slab test: does the closed segment p0 -> p1 touch the axis-aligned ``box``?"""
    p0 = np.asarray(p0, dtype=float)
    d = np.asarray(p1, dtype=float) - p0
    t0, t1 = 0.0, 1.0
    lower, upper = box.lower, box.upper
    for a in range(3):
        if abs(d[a]) < 1e-15:
            if p0[a] < lower[a] or p0[a] > upper[a]:
                return False
            continue
        ta = (lower[a] - p0[a]) / d[a]
        tb = (upper[a] - p0[a]) / d[a]
        if ta > tb:
            ta, tb = tb, ta
        t0, t1 = max(t0, ta), min(t1, tb)
        if t0 > t1:
            return False
    return True


def is_occluded(sensor, k, objects):
    """True when the line of sight to object k's center crosses another object's box."""
    target = objects[k].center
    return any(segment_hits_box(sensor, target, box) for j, box in enumerate(objects) if j != k)


def expected_point_count(visible_area, distance, params, occluded=False):
    """Mean number of returns from one object, before sampling."""
    if distance <= 0:
        raise ValueError("sensor-object distance must be positive")
    lam = params.density * visible_area * (params.reference_distance / distance) ** 2
    lam = float(np.clip(round(lam), 0, params.max_points))
    if occluded:
        lam *= params.occlusion_factor
    return lam


def sensor_position(node):
    return np.asarray(node.position, dtype=float)


def synthesize_point_cloud(node, scenario, seed, params=None):
    """Sample the returns seen by ``node``'s LiDAR, in the global frame.

    Points lie on the object faces turned towards the sensor. Counts are Poisson with
    the mean from :func:`expected_point_count`, capped at ``params.max_points``.
    """
    params = params or SynthesisParams()
    rng = np.random.default_rng([int(seed), int(node.id)])
    sensor = sensor_position(node)
    chunks = []
    for k, box in enumerate(scenario.objects):
        faces = visible_faces(sensor, box)
        if not faces:
            continue
        proj = np.array([f[2] for f in faces])
        dist = float(np.linalg.norm(sensor - np.asarray(box.center, dtype=float)))
        lam = expected_point_count(proj.sum(), dist, params,
                                   occluded=is_occluded(sensor, k, scenario.objects))
        n = min(int(rng.poisson(lam)), params.max_points)
        if n == 0:
            continue
        per_face = rng.multinomial(n, proj / proj.sum())
        lower, upper = box.lower, box.upper
        for (axis, sign, _), count in zip(faces, per_face):
            if count == 0:
                continue
            pts = rng.uniform(lower, upper, size=(count, 3))
            pts[:, axis] = lower[axis] if sign < 0 else upper[axis]
            chunks.append(pts)
    points = np.concatenate(chunks) if chunks else np.zeros((0, 3))
    return PointCloud(owner=node.id, points=points)


def extract_object_data(cloud, bbox, k=-1):
    """Points of ``cloud`` inside the closed box ``bbox``."""
    pts = cloud.points
    if len(pts):
        inside = np.all((pts >= bbox.lower) & (pts <= bbox.upper), axis=1)
        pts = pts[inside]
    return ObjectData(k=k, m=cloud.owner, points=pts)


def quality_grid(objdata, bbox, J):
    """Count points in each of the J^3 equal sub-boxes of ``bbox``.

    Bins are half-open except that points on an upper face go to the last bin.
    Flattened index is ``(ix * J + iy) * J + iz``.
    """
    if not isinstance(J, (int, np.integer)) or J <= 0:
        raise ConfigurationError(f"J must be a positive integer, got {J!r}")
    pts = objdata.points if hasattr(objdata, "points") else check_points(objdata)
    if len(pts) == 0:
        return QualityGrid.zeros(J)
    lower = bbox.lower
    dims = np.asarray(bbox.dims, dtype=float)
    idx = np.floor((pts - lower) / dims * J).astype(np.int64)
    idx = np.clip(idx, 0, J - 1)
    flat = (idx[:, 0] * J + idx[:, 1]) * J + idx[:, 2]
    return QualityGrid(np.bincount(flat, minlength=J ** 3), J)


def _with_grid(fused, bbox, J):
    if bbox is None or J is None:
        return fused
    return FusedData(fused.k, fused.node, fused.points, quality_grid(fused, bbox, J))


def fuse_local(n_km, n_k0, e_km, u_km, bbox=None, J=None):
    """Data processed at CAV m for object k: ``u * ((1 - e) * N_km  U  N_k0)`` as a multiset."""
    if n_km.k != n_k0.k:
        raise UsageError(f"cannot fuse data of object {n_km.k} with object {n_k0.k}")
    if not u_km:
        pts = np.zeros((0, 3))
    elif e_km:
        pts = n_k0.points
    else:
        pts = np.concatenate([n_km.points, n_k0.points])
    return _with_grid(FusedData(n_km.k, n_km.m, pts), bbox, J)


def fuse_rsu(contributions, n_k0, bbox=None, J=None):
    """Data processed at the RSU for object k: offloading CAVs' data plus the RSU's own."""
    contributions = list(contributions)
    for c in contributions:
        if c.k != n_k0.k:
            raise UsageError(f"cannot fuse data of object {c.k} with object {n_k0.k}")
    pts = np.concatenate([c.points for c in contributions] + [n_k0.points])
    return _with_grid(FusedData(n_k0.k, 0, pts), bbox, J)


def dump_point_cloud(cloud, path):
    """Write one ``x y z`` triple per line."""
    np.savetxt(path, cloud.points, fmt="%.6f")


def load_point_cloud(path, owner=-1):
    pts = np.loadtxt(path, ndmin=2)
    return PointCloud(owner=owner, points=pts.reshape(-1, 3))


@dataclass(frozen=True)
class Observation:
    """Per-(object, node) grids of a scenario, the only sensing input the optimizer needs.

    ``grids[k, m]`` is the quality grid of N_{k,m} for node m (0 = RSU). Point counts
    are the grid totals, and fusion is exact grid addition.
    """

    grids: np.ndarray
    J: int
    dims: np.ndarray

    @property
    def counts(self):
        return self.grids.sum(axis=2)

    def grid(self, k, m):
        return QualityGrid(self.grids[k, m], self.J)

    def local_grid(self, k, m):
        return QualityGrid(self.grids[k, m] + self.grids[k, 0], self.J)

    def rsu_grid(self, k, offloaders):
        g = self.grids[k, 0].copy()
        for m in offloaders:
            g = g + self.grids[k, m]
        return QualityGrid(g, self.J)


def observe_scenario(scenario, J=3, params=None, clouds=None):
    """Synthesize every node's cloud and reduce it to per-object quality grids."""
    if clouds is None:
        clouds = [synthesize_point_cloud(n, scenario, scenario.seed, params) for n in scenario.nodes]
    grids = np.zeros((scenario.n_objects, len(scenario.nodes), J ** 3), dtype=np.int64)
    for k, box in enumerate(scenario.objects):
        for cloud in clouds:
            grids[k, cloud.owner] = quality_grid(extract_object_data(cloud, box, k), box, J).counts
    dims = np.array([b.dims for b in scenario.objects], dtype=float).reshape(-1, 3)
    grids.setflags(write=False)
    return Observation(grids=grids, J=J, dims=dims)
