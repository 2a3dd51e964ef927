import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays
from sklearn.base import clone

from coopsense.accuracy import (AccuracyReport, SurrogateAccuracyModel, TableAccuracyModel,
                                cav_mean_accuracy, check_feasible, estimate_accuracy, make_features,
                                standalone_accuracies, task_accuracies)
from coopsense.exceptions import ConfigurationError, ModelError
from coopsense.placement import PlacementDecision
from coopsense.planner import CooperativeSensingProblem, initial_feasible_placement
from coopsense.scenario import RoIMatrix, ScenarioConfig, generate_scenario
from coopsense.sensing import observe_scenario
from coopsense.exceptions import InfeasibleError

UNIT_DIMS = (1.0, 1.0, 1.0)  # surface area 6 m^2
MODEL = SurrogateAccuracyModel().fit()


class ConstantModel:
    def __init__(self, value):
        self.value = value

    def predict(self, X):
        return np.full(len(np.atleast_2d(X)), self.value)


def test_empty_grid_gives_floor():
    assert estimate_accuracy(MODEL, np.zeros(27), UNIT_DIMS) == pytest.approx(0.3)


def test_saturated_grid_gives_ceiling():
    grid = np.full(27, 10)  # 270 points >= 8 * 6
    assert estimate_accuracy(MODEL, grid, UNIT_DIMS) == pytest.approx(0.99)


def test_partial_grid_hand_value():
    # 9 of 27 bins occupied, 24 points against a saturation of 48 -> density 0.5
    grid = np.zeros(27)
    grid[:9] = [3, 3, 3, 3, 3, 3, 2, 2, 2]
    assert estimate_accuracy(MODEL, grid, UNIT_DIMS) == pytest.approx(0.576, abs=1e-12)


def test_surrogate_weights():
    m = SurrogateAccuracyModel(w_cov=0.7)
    assert m.w_den == pytest.approx(0.3)


@pytest.mark.parametrize("kwargs", [dict(a_floor=0.9, a_ceil=0.5), dict(w_cov=1.5),
                                    dict(rho_sat=0.0), dict(a_ceil=1.2)])
def test_surrogate_rejects_bad_params(kwargs):
    with pytest.raises(ConfigurationError):
        SurrogateAccuracyModel(**kwargs).fit()


def test_surrogate_rejects_wrong_feature_width():
    with pytest.raises(ConfigurationError):
        MODEL.predict(np.zeros((1, 10)))


def test_surrogate_follows_estimator_protocol():
    m = SurrogateAccuracyModel(a_floor=0.2, rho_sat=4.0)
    assert m.get_params()["rho_sat"] == 4.0
    c = clone(m)
    assert c.get_params() == m.get_params() and c is not m
    m.set_params(w_cov=0.5)
    assert m.w_den == 0.5


grids = arrays(np.int64, 27, elements=st.integers(0, 60))
dims = st.tuples(*[st.floats(0.3, 6.0)] * 3)


@given(grids, grids, dims)
def test_surrogate_is_monotone(a, extra, d):
    lo = estimate_accuracy(MODEL, a, d)
    hi = estimate_accuracy(MODEL, a + extra, d)
    assert hi >= lo


@given(grids, dims)
def test_surrogate_range(a, d):
    acc = estimate_accuracy(MODEL, a, d)
    assert 0.3 - 1e-12 <= acc <= 0.99 + 1e-12


# --- table model --------------------------------------------------------------

def table():
    X = make_features(np.array([np.zeros(8), np.ones(8), np.full(8, 5.0)]),
                      np.array([UNIT_DIMS] * 3))
    return TableAccuracyModel().fit(X, np.array([0.4, 0.7, 0.95]))


def test_table_exact_match_then_nearest():
    t = table()
    assert estimate_accuracy(t, np.ones(8), UNIT_DIMS) == 0.7
    assert estimate_accuracy(t, np.full(8, 4.0), UNIT_DIMS) == 0.95
    assert estimate_accuracy(t, np.full(8, 0.2), UNIT_DIMS) == 0.4


def test_table_ties_go_to_first_record():
    X = make_features(np.array([np.zeros(8), np.full(8, 2.0)]), np.array([UNIT_DIMS] * 2))
    t = TableAccuracyModel().fit(X, np.array([0.5, 0.6]))
    assert estimate_accuracy(t, np.ones(8), UNIT_DIMS) == 0.5


def test_empty_table_is_model_error(tmp_path):
    path = tmp_path / "t.txt"
    path.write_text("# only a header\n")
    t = TableAccuracyModel.load(path)
    with pytest.raises(ModelError):
        estimate_accuracy(t, np.zeros(8), UNIT_DIMS)


def test_table_file_round_trip(tmp_path):
    t = table()
    t.save(tmp_path / "t.txt")
    back = TableAccuracyModel.load(tmp_path / "t.txt")
    assert np.array_equal(back.table_X_, t.table_X_)
    assert np.array_equal(back.table_y_, t.table_y_)


def test_table_file_errors_carry_line_numbers(tmp_path):
    path = tmp_path / "t.txt"
    path.write_text("# header\n" + " ".join(["0"] * 11) + " 0.5\n" + "1 2 oops\n")
    with pytest.raises(ConfigurationError, match="line 3"):
        TableAccuracyModel.load(path)


def test_table_rejects_out_of_range_accuracy():
    with pytest.raises(ModelError):
        TableAccuracyModel().fit(np.zeros((1, 11)), np.array([1.5]))


# --- constraint -----------------------------------------------------------------

def one_object_each(n_cavs):
    return RoIMatrix(np.eye(n_cavs, dtype=int))


def test_cav_mean_examples():
    roi = RoIMatrix(np.array([[1, 1, 1], [1, 0, 0], [0, 0, 0]]))
    acc = {(0, 1): 0.9, (1, 1): 0.8, (2, 1): 0.9, (0, 2): 0.85}
    rep = AccuracyReport(acc, roi, 0.85)
    assert cav_mean_accuracy(rep, 1) == pytest.approx(2.6 / 3)
    assert cav_mean_accuracy(rep, 2) == pytest.approx(0.85)
    assert cav_mean_accuracy(rep, 3) is None
    assert rep.feasible


def test_feasibility_threshold_examples():
    roi = one_object_each(3)
    ok = AccuracyReport({(0, 1): 0.87, (1, 2): 0.90, (2, 3): 0.86}, roi, 0.85)
    assert ok.feasible
    edge = AccuracyReport({(0, 1): 0.85, (1, 2): 0.90, (2, 3): 0.86}, roi, 0.85)
    assert edge.feasible
    bad = AccuracyReport({(0, 1): 0.84, (1, 2): 0.90, (2, 3): 0.86}, roi, 0.85)
    assert not bad.feasible


@pytest.fixture(scope="module")
def scenario():
    return generate_scenario(ScenarioConfig(), seed=1)


@pytest.fixture(scope="module")
def observation(scenario):
    return observe_scenario(scenario)


def test_check_feasible_boundary_with_constant_model(scenario, observation):
    p = PlacementDecision.all_local(scenario.roi)
    ok, report = check_feasible(scenario, p, ConstantModel(0.85), 0.85, observation)
    assert ok
    ok, _ = check_feasible(scenario, p, ConstantModel(0.8499), 0.85, observation)
    assert not ok


def test_all_offload_failure_means_no_placement_is_feasible():
    sc = generate_scenario(ScenarioConfig(n_cavs=2, n_objects=3), seed=2)
    problem = CooperativeSensingProblem(sc, threshold=0.99)
    assert not problem.is_feasible(PlacementDecision.all_offload(sc.roi))
    n = len(problem.tasks)
    assert not any(problem.is_feasible(PlacementDecision.from_index(sc.roi, i))
                   for i in range(2 ** n))
    with pytest.raises(InfeasibleError):
        initial_feasible_placement(problem, np.random.default_rng(0))


def test_cooperative_dominates_standalone_per_task(scenario, observation):
    alone = standalone_accuracies(observation, scenario.roi, MODEL)
    for bits in (0, 1):
        p = PlacementDecision.constant(scenario.roi, bits)
        coop = task_accuracies(observation, p, MODEL)
        assert all(coop[t] >= alone[t] for t in alone)


@given(st.integers(0, 2 ** 20))
def test_offloading_never_lowers_own_accuracy(scenario, observation, index):
    # the fixtures are module scoped and read-only, so sharing them across examples is safe
    p = PlacementDecision.from_index(scenario.roi, index % 2 ** len(scenario.roi.tasks()))
    before = task_accuracies(observation, p, MODEL)
    for i, (task, e) in enumerate(p.items()):
        if not e:
            after = task_accuracies(observation, p.flip(i), MODEL)
            assert after[task] >= before[task]


def test_empty_placement_has_no_accuracies(observation):
    assert task_accuracies(observation, PlacementDecision((), ()), MODEL) == {}
