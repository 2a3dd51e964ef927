"""Accuracy models mapping fused data quality to classification accuracy, and the
per-CAV accuracy constraint.

Both models follow the scikit-learn regressor protocol. A feature row is the J^3
quality grid followed by the three bounding-box dimensions.
"""
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import check_positive, check_probability
from .exceptions import ConfigurationError, ModelError
from .placement import PlacementDecision

TABLE_HEADER = "# coopsense accuracy table v1"


def make_features(grids, dims):
    """Stack grids (n, J^3) and box dimensions (n, 3) into model input rows."""
    grids = np.atleast_2d(np.asarray(grids, dtype=float))
    dims = np.atleast_2d(np.asarray(dims, dtype=float))
    return np.hstack([grids, dims])


def _grid_size(n_features):
    J = round((n_features - 3) ** (1.0 / 3.0))
    if J < 1 or J ** 3 != n_features - 3:
        raise ConfigurationError(
            f"feature rows need J^3 grid entries plus 3 dims, got {n_features} columns")
    return J


class SurrogateAccuracyModel(RegressorMixin, BaseEstimator):
    """Monotone stand-in for a learned accuracy estimator.

    ``a = a_floor + (a_ceil - a_floor) * (w_cov * coverage + w_den * density)`` with
    coverage the share of occupied sub-boxes and density the point count relative to
    ``rho_sat`` points per m^2 of box surface, capped at 1.

    Parameters
    ----------
    a_floor, a_ceil : float
        Accuracy with no data and with saturated data.
    w_cov : float
        Weight of the coverage term; the density term gets ``1 - w_cov``.
    rho_sat : float
        Surface density (points/m^2) at which the density term saturates.
    """

    def __init__(self, a_floor=0.3, a_ceil=0.99, w_cov=0.6, rho_sat=8.0):
        self.a_floor = a_floor
        self.a_ceil = a_ceil
        self.w_cov = w_cov
        self.rho_sat = rho_sat

    @property
    def w_den(self):
        return 1.0 - self.w_cov

    def _check_params(self):
        check_probability(self.a_floor, "a_floor")
        check_probability(self.a_ceil, "a_ceil")
        if not self.a_floor < self.a_ceil:
            raise ConfigurationError("a_floor must be below a_ceil")
        check_probability(self.w_cov, "w_cov")
        check_positive(self.rho_sat, "rho_sat")

    def fit(self, X=None, y=None):
        """Validate parameters; the surrogate has nothing to learn."""
        self._check_params()
        if X is not None:
            X = check_array(X)
            self.n_features_in_ = X.shape[1]
            self.J_ = _grid_size(self.n_features_in_)
        self.fitted_ = True
        return self

    def predict(self, X):
        if not hasattr(self, "fitted_"):
            self.fit()
        X = check_array(X)
        J = _grid_size(X.shape[1])
        grid, dims = X[:, :-3], X[:, -3:]
        if (grid < 0).any() or (dims <= 0).any():
            raise ValueError("grid counts must be >= 0 and box dimensions > 0")
        coverage = np.count_nonzero(grid, axis=1) / J ** 3
        lx, ly, lz = dims.T
        area = 2.0 * (lx * ly + lx * lz + ly * lz)
        density = np.minimum(1.0, grid.sum(axis=1) / (self.rho_sat * area))
        score = self.w_cov * coverage + self.w_den * density
        return self.a_floor + (self.a_ceil - self.a_floor) * score


class TableAccuracyModel(RegressorMixin, BaseEstimator):
    """Nearest-neighbour lookup over measured (grid, dims) -> accuracy records.

    An exact feature match wins; otherwise the Euclidean-nearest record is used,
    with ties going to the record listed first.
    """

    def fit(self, X, y):
        X = np.asarray(X, dtype=float).reshape(len(y), -1) if len(y) else np.zeros((0, 0))
        y = np.asarray(y, dtype=float)
        if len(y) and ((y < 0) | (y > 1)).any():
            raise ModelError("table accuracies must lie in [0, 1]")
        self.table_X_ = X
        self.table_y_ = y
        return self

    def predict(self, X):
        check_is_fitted(self, "table_y_")
        if len(self.table_y_) == 0:
            raise ModelError("accuracy table is empty")
        X = check_array(X)
        if X.shape[1] != self.table_X_.shape[1]:
            raise ModelError(
                f"table rows have {self.table_X_.shape[1]} features, query has {X.shape[1]}")
        out = np.empty(len(X))
        for i, row in enumerate(X):
            exact = np.flatnonzero(np.all(self.table_X_ == row, axis=1))
            if exact.size:
                out[i] = self.table_y_[exact[0]]
            else:
                d = np.sum((self.table_X_ - row) ** 2, axis=1)
                out[i] = self.table_y_[int(np.argmin(d))]
        return out

    @classmethod
    def load(cls, path):
        """Read a table file: ``#`` comment lines, then ``J^3 counts, lx ly lz, accuracy`` per line."""
        rows = []
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                try:
                    values = [float(v) for v in line.replace(",", " ").split()]
                except ValueError as exc:
                    raise ConfigurationError(f"{path}: {exc}", line=lineno) from None
                if rows and len(values) != len(rows[0]):
                    raise ConfigurationError(
                        f"{path}: expected {len(rows[0])} values, got {len(values)}", line=lineno)
                _grid_size(len(values) - 1)
                rows.append(values)
        data = np.asarray(rows, dtype=float)
        if not rows:
            return cls().fit(np.zeros((0, 0)), np.zeros(0))
        return cls().fit(data[:, :-1], data[:, -1])

    def save(self, path):
        check_is_fitted(self, "table_y_")
        J = _grid_size(self.table_X_.shape[1]) if self.table_X_.size else 0
        with open(path, "w") as fh:
            fh.write(f"{TABLE_HEADER}\n# J={J}; columns: {J ** 3} grid counts, lx ly lz, accuracy\n")
            for row, a in zip(self.table_X_, self.table_y_):
                grid = " ".join(str(int(v)) for v in row[:-3])
                dims = " ".join(repr(float(v)) for v in row[-3:])
                fh.write(f"{grid} {dims} {float(a)!r}\n")


def estimate_accuracy(model, grid, dims):
    """Accuracy of one task from its fused quality grid and box dimensions."""
    counts = grid.counts if hasattr(grid, "counts") else np.asarray(grid)
    return float(model.predict(make_features(counts, dims))[0])


@dataclass
class AccuracyReport:
    accuracies: dict
    roi: object
    threshold: float
    cav_means: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.cav_means:
            self.cav_means = {m: cav_mean_accuracy(self, m) for m in range(1, self.roi.n_cavs + 1)}

    @property
    def feasible(self):
        return all(v is None or v >= self.threshold for v in self.cav_means.values())


def cav_mean_accuracy(report, m):
    """Mean accuracy over the objects in CAV m's RoI, or ``None`` when the RoI is empty."""
    ks = report.roi.cav_objects(m)
    if not ks:
        return None
    return float(sum(report.accuracies[(k, m)] for k in ks) / len(ks))


def task_accuracies(observation, placement, model):
    """a_{k,m} for every task: local tasks use N_km + N_k0, offloaded ones the RSU fusion."""
    if not len(placement):
        return {}
    rows = []
    rsu_cache = {}
    for (k, m), e in placement.items():
        if e:
            if k not in rsu_cache:
                rsu_cache[k] = observation.rsu_grid(k, placement.offloaders(k)).counts
            rows.append(rsu_cache[k])
        else:
            rows.append(observation.local_grid(k, m).counts)
    dims = observation.dims[[k for k, _ in placement.tasks]]
    acc = model.predict(make_features(np.asarray(rows), dims))
    return dict(zip(placement.tasks, (float(a) for a in acc)))


def standalone_accuracies(observation, roi, model):
    """a_{k,m} when every CAV only uses its own N_km."""
    tasks = roi.tasks()
    if not tasks:
        return {}
    rows = np.asarray([observation.grids[k, m] for k, m in tasks])
    acc = model.predict(make_features(rows, observation.dims[[k for k, _ in tasks]]))
    return dict(zip(tasks, (float(a) for a in acc)))


def check_feasible(scenario, placement, model, threshold, observation=None):
    """Check the per-CAV mean-accuracy constraint; returns ``(feasible, report)``.

    CAVs with an empty RoI are vacuously feasible and report a mean of ``None``.
    """
    if observation is None:
        from .sensing import observe_scenario
        observation = observe_scenario(scenario)
    if not isinstance(placement, PlacementDecision):
        placement = PlacementDecision.from_mapping(scenario.roi, placement)
    report = AccuracyReport(task_accuracies(observation, placement, model), scenario.roi,
                            float(threshold))
    return report.feasible, report
