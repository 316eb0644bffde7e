import math

import numpy as np
import pytest

from vogps import analysis, observer
from vogps.sim import (
    SimConfig,
    camera_attitude,
    circle_trajectory,
    frames_for,
    frames_from_stream,
    initial_errors,
    run_monte_carlo,
    synth_measurements,
)
from vogps.so3 import angle_of, is_rotation


def test_config_validation():
    for bad in (dict(radius=0), dict(dt=-1), dict(steps=0), dict(runs=0), dict(scale_d=0),
                dict(init_error_max=4.0), dict(noise_dir=-1)):
        with pytest.raises(ValueError):
            SimConfig(**bad)


def test_circle_examples():
    traj = circle_trajectory(SimConfig(steps=1000))
    np.testing.assert_allclose(traj[0].p, [50, 0, 0])
    np.testing.assert_allclose(traj[0].v, [0, 2 * math.pi, 0])
    assert traj[0].t == 0.0 and traj[-1].t == pytest.approx(100.0)
    for s in traj:
        assert abs(np.linalg.norm(s.p) - 50) < 1e-9
        assert is_rotation(s.r)
        np.testing.assert_allclose(s.r[:, 2], s.v / np.linalg.norm(s.v), atol=1e-15)
        np.testing.assert_allclose(s.r[:, 1], [0, 0, 1])
    # one revolution is 500 samples
    np.testing.assert_allclose(traj[500].p, traj[0].p, atol=1e-9)
    # clockwise seen from above (down axis), i.e. North then East
    assert traj[1].p[1] > 0


def test_camera_attitude_right_handed():
    r = camera_attitude(np.array([1.0, 0, 0]))
    np.testing.assert_allclose(r, [[0, 0, 1], [1, 0, 0], [0, 1, 0]], atol=1e-15)
    assert np.linalg.det(r) == pytest.approx(1.0)


def test_synth_relatives_telescope(circle_stream):
    _, traj, rels, vels, _ = circle_stream
    r = traj[0].r
    for k, rel in enumerate(rels):
        r = r @ rel.rot
        assert np.max(np.abs(r - traj[k + 1].r)) < 1e-9
    assert len(vels) == len(traj)


def test_synth_frames_consistent(circle_stream):
    _, traj, rels, _, frames = circle_stream
    assert all(f.valid for f in frames)
    for k, (rel, f) in enumerate(zip(rels, frames)):
        # translation expressed in frame k: R_k rel.trans points along the chord
        chord = traj[k + 1].p - traj[k].p
        np.testing.assert_allclose(traj[k].r @ rel.trans, chord, atol=1e-12)
        np.testing.assert_allclose(f.dir_cam, traj[k].r.T @ f.dir_ned, atol=1e-12)


def test_scale_d_changes_only_translation_magnitude():
    base = SimConfig(steps=50)
    traj = circle_trajectory(base)
    r1, _ = synth_measurements(traj, base)
    r7, _ = synth_measurements(traj, SimConfig(steps=50, scale_d=7.0))
    for a, b in zip(r1, r7):
        np.testing.assert_array_equal(a.rot, b.rot)
        np.testing.assert_allclose(7 * b.trans, a.trans, rtol=1e-15)


def test_scale_d_observer_trajectories_agree():
    cfg = SimConfig(steps=4000, runs=3)
    a = run_monte_carlo(cfg)
    b = run_monte_carlo(SimConfig(steps=4000, runs=3, scale_d=7.0))
    np.testing.assert_allclose(a.errors, b.errors, atol=1e-12)


def test_noise_is_applied_and_seeded():
    cfg = SimConfig(steps=100, noise_dir=0.01, noise_rot=0.001)
    traj = circle_trajectory(cfg)
    clean, _ = synth_measurements(traj, SimConfig(steps=100))
    n1, _ = synth_measurements(traj, cfg)
    n2, _ = synth_measurements(traj, cfg)
    for a, b, c in zip(clean, n1, n2):
        np.testing.assert_array_equal(b.rot, c.rot)
        assert 0 < angle_of(a.rot.T @ b.rot) < 0.02
        assert np.linalg.norm(a.trans) == pytest.approx(np.linalg.norm(b.trans), rel=1e-12)


def test_frames_from_stream_length_check(circle_stream):
    _, _, rels, vels, _ = circle_stream
    with pytest.raises(ValueError):
        frames_from_stream(rels, vels[: len(rels)])


def test_initial_errors_bounded_and_seeded():
    cfg = SimConfig(runs=50)
    e = initial_errors(cfg)
    ang = angle_of(e)
    assert e.shape == (50, 3, 3)
    assert np.all(ang <= cfg.init_error_max + 1e-12)
    assert ang.max() > math.radians(150)
    np.testing.assert_array_equal(e, initial_errors(cfg))
    assert not np.array_equal(e, initial_errors(SimConfig(runs=50, seed=2)))


def test_zero_initial_error_gives_zero_curves():
    res = run_monte_carlo(SimConfig(steps=500, runs=3, init_error_max=0.0))
    assert res.errors.shape == (3, 501)
    assert np.all(res.errors < 1e-9)
    assert res.steps_to_threshold == [0, 0, 0]


def test_truth_initialized_observer_stays_on_truth():
    res = run_monte_carlo(SimConfig(steps=4000, runs=1, init_error_max=0.0))
    assert res.errors.max() <= 1e-9


def test_monte_carlo_deterministic():
    cfg = SimConfig(steps=300, runs=4)
    a, b = run_monte_carlo(cfg), run_monte_carlo(cfg)
    np.testing.assert_array_equal(a.errors, b.errors)


def test_monte_carlo_matches_single_observer():
    cfg = SimConfig(steps=300, runs=2)
    res = run_monte_carlo(cfg)
    traj, frames = frames_for(cfg)
    est = observer.run(res.init_rotations[1] @ traj[0].r, frames, cfg.gain)
    ang = [angle_of(analysis.error_rotation(r, s.r)) for r, s in zip(est, traj)]
    np.testing.assert_allclose(res.errors[1], ang, atol=1e-15)


def test_steps_to_threshold():
    from vogps.sim import MonteCarloResult

    err = np.array([[1.0, 0.5, 1e-4, 1e-4], [1.0, 1e-4, 1.0, 1e-4], [1.0, 1.0, 1.0, 1.0]])
    res = MonteCarloResult(np.arange(4.0), err, 1e-3, np.zeros((3, 3, 3)))
    assert res.steps_to_threshold == [2, 3, None]


def test_circle_pe_one_revolution(circle_stream):
    _, _, _, _, frames = circle_stream
    dirs = np.array([f.dir_ned for f in frames])
    stats = analysis.pe_stats(dirs, 499)
    assert abs(stats.beta - 0.5) <= 2 / 500


def test_small_gain_converges_within_horizon():
    # same study as the default but with l close to the co-rotating critical value
    res = run_monte_carlo(SimConfig(gain=0.025))
    steps = res.steps_to_threshold
    assert None not in steps
    assert max(steps) < 4000


def test_noisy_run_stays_bounded():
    res = run_monte_carlo(SimConfig(runs=3, gain=0.025, noise_dir=math.radians(0.5), noise_rot=math.radians(0.01)))
    assert np.all(res.errors[:, -500:] < math.radians(10))
