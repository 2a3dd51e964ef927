import numpy as np
import pytest
from hypothesis import settings

from coopsense.comm import LinkParams
from coopsense.config import ExperimentConfig
from coopsense.scenario import (CAV, RSU, BoundingBox, NodeSpec, RoadSegment, RoIMatrix, Scenario,
                                ScenarioConfig, compute_membership)

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def make_scenario(cavs, objects, road=None, rsu=(25.0, 16.0, 6.0), roi=(20.0, 20.0), seed=0,
                  f_cav=10e9, f_rsu=200e9):
    """Hand-placed scenario. ``cavs`` holds (x, y, heading) or (x, y, z, heading); ``objects``
    holds BoundingBox instances or (center, dims) pairs."""
    road = road or RoadSegment(50.0, 14.0, 4)
    nodes = [NodeSpec(0, RSU, tuple(rsu), f_rsu)]
    for m, c in enumerate(cavs, 1):
        if len(c) == 3:
            x, y, heading = c
            z = 1.8
        else:
            x, y, z, heading = c
        nodes.append(NodeSpec(m, CAV, (float(x), float(y), float(z)), f_cav, 0.2, 2e-13, heading))
    boxes = [o if isinstance(o, BoundingBox) else BoundingBox(tuple(o[0]), tuple(o[1]))
             for o in objects]
    draft = Scenario(road=road, nodes=tuple(nodes), objects=tuple(boxes),
                     roi=RoIMatrix(np.zeros((len(cavs), len(boxes)))), seed=seed,
                     roi_behind=roi[0], roi_ahead=roi[1])
    return Scenario(road=road, nodes=draft.nodes, objects=draft.objects,
                    roi=compute_membership(draft), seed=seed, roi_behind=roi[0], roi_ahead=roi[1])


def unit_link(ms, snr=1.0, n_sub=4, bs=1e6):
    """Link where every CAV gets exactly ``bs * log2(1 + snr)`` bit/s per subcarrier."""
    noise = 1e-20
    return LinkParams(powers={m: snr * noise * bs for m in ms}, gains={m: 1.0 for m in ms},
                      noise_psd=noise, bandwidth=n_sub * bs, subcarrier_bandwidth=bs)


@pytest.fixture(scope="session")
def default_config():
    return ExperimentConfig()


@pytest.fixture(scope="session")
def small_config():
    return ExperimentConfig(scenario=ScenarioConfig(n_cavs=2, n_objects=3))


@pytest.fixture(scope="session")
def default_problem(default_config):
    return default_config.build_problem(1)


ACCEPTANCE_LINES = []


def record(criterion, title, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {title} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
