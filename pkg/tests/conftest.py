import numpy as np
import pytest

from vogps.sim import SimConfig, circle_trajectory, frames_from_stream, synth_measurements

ACCEPTANCE_LINES: list[str] = []


def unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def random_unit(rng, n=None):
    shape = (3,) if n is None else (n, 3)
    v = rng.standard_normal(shape)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def circle_stream():
    """Noiseless 1000-step slice of the circular study with its frames."""
    cfg = SimConfig(steps=1000, runs=1)
    traj = circle_trajectory(cfg)
    rels, vels = synth_measurements(traj, cfg)
    return cfg, traj, rels, vels, frames_from_stream(rels, vels)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
