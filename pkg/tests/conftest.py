import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from qgnnsim import graphs, physics

settings.register_profile("repo", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")


def make_sample(positions, velocities=None, radius=0.35, prev_velocities=None, accel=None):
    """Hand-built graph sample from explicit particle state (3 x 2 arrays)."""
    cfg = physics.SimConfig()
    p = np.asarray(positions, dtype=float)
    v = np.zeros_like(p) if velocities is None else np.asarray(velocities, dtype=float)
    v1 = v if prev_velocities is None else np.asarray(prev_velocities, dtype=float)
    b = graphs.wall_distances(p, cfg, radius)
    N = np.vstack([v.T, v1.T, b.T])
    Er, Es, Ea, _ = graphs.build_edges(p, radius)
    a = np.zeros((2, p.shape[0])) if accel is None else np.asarray(accel, dtype=float)
    return graphs.GraphSample(N=N, Er=Er, Es=Es, Ea_raw=Ea, target=a, accel=a, pos=p, vel=v,
                              next_pos=p + v * cfg.dt, dt=cfg.dt)


def random_sample(rng, n_edges=None, radius=0.35):
    """Random three-particle sample with nonzero velocities; optionally forced to ``n_edges``."""
    for _ in range(10000):
        p = rng.uniform(0.1, 0.9, size=(3, 2))
        if n_edges is not None:
            centre = rng.uniform(0.35, 0.65, size=2)
            spread = {3: 0.6, 4: 0.35, 5: 0.25, 6: 0.12}[n_edges]
            p = np.clip(centre + rng.uniform(-spread, spread, size=(3, 2)), 0.06, 0.94)
        s = make_sample(p, rng.uniform(-1, 1, size=(3, 2)), radius, rng.uniform(-1, 1, size=(3, 2)),
                        accel=rng.uniform(-1, 1, size=(2, 3)))
        if n_edges is None or s.n_edges == n_edges:
            return s
    raise RuntimeError("could not draw a sample with the requested edge count")


@pytest.fixture(scope="session")
def trajectory():
    return physics.generate_trajectory(physics.SimConfig(), T=1200, seed=3)


@pytest.fixture(scope="session")
def samples(trajectory):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        out, _ = graphs.make_dataset(trajectory, 0.35, stride=40)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# acceptance bookkeeping: one summary line per criterion, failing if any of its tests fail
_CRITERIA = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.skipped:
        return
    if report.when == "call" or report.failed:
        number, title = marker.args
        entry = _CRITERIA.setdefault(number, [title, True])
        entry[1] = entry[1] and report.passed


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, ok = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}")
