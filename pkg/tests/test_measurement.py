import math

import numpy as np
import pytest

from vogps.measurement import (
    RelativeTransform,
    ScaleModel,
    VelocitySample,
    compose_relatives,
    displacement_from_velocity,
    make_frame,
    normalize_direction,
    synth_relative_translation,
)
from vogps.so3 import exp_so3, random_rotation


def vs(t, v):
    return VelocitySample(t, np.array(v, dtype=float))


def test_displacement_modes():
    np.testing.assert_allclose(
        displacement_from_velocity(vs(0, [1, 0, 0]), vs(0.1, [1, 0, 0]), "constant"), [0.1, 0, 0]
    )
    np.testing.assert_allclose(
        displacement_from_velocity(vs(0, [1, 0, 0]), vs(0.1, [3, 0, 0]), "linear"), [0.2, 0, 0]
    )


@pytest.mark.parametrize("t1", [0.0, -0.1])
def test_displacement_rejects_non_increasing_time(t1):
    with pytest.raises(ValueError):
        displacement_from_velocity(vs(0, [1, 0, 0]), vs(t1, [1, 0, 0]))


@pytest.mark.parametrize("dt", [0.01, 0.1, 0.5])
def test_trapezoid_against_arc_chord(dt):
    # exact chord of a circular arc vs the mean of the end velocities
    radius, speed = 50.0, 2 * math.pi
    w = speed / radius
    th0 = 0.3
    pos = lambda th: radius * np.array([math.cos(th), math.sin(th), 0.0])
    vel = lambda th: speed * np.array([-math.sin(th), math.cos(th), 0.0])
    chord = pos(th0 + w * dt) - pos(th0)
    approx = displacement_from_velocity(vs(0, vel(th0)), vs(dt, vel(th0 + w * dt)), "linear")
    rel_err = np.linalg.norm(approx - chord) / np.linalg.norm(chord)
    x = w * dt / 2
    # |v| dt cos(x) against 2 r sin(x): relative error 1 - x cot(x)
    assert rel_err == pytest.approx(1 - x / math.tan(x), rel=1e-6)
    assert rel_err <= (w * dt) ** 2 / 12 * (1 + (w * dt) ** 2)
    # same direction: the trapezoid chord points along the mid-arc tangent
    np.testing.assert_allclose(approx / np.linalg.norm(approx), chord / np.linalg.norm(chord), atol=1e-14)


def test_normalize_direction():
    np.testing.assert_allclose(normalize_direction([3, 0, 4], 0.01), [0.6, 0, 0.8])
    assert normalize_direction([1e-6, 0, 0], 0.01) is None
    assert normalize_direction([0, 0, 0], 0.0) is None


def test_normalize_scale_invariance(rng):
    for _ in range(100):
        w = rng.standard_normal(3)
        for c in (1e-3, 0.7, 1e3):
            np.testing.assert_allclose(normalize_direction(c * w, 1e-12), normalize_direction(w, 1e-12), atol=1e-15)


def test_make_frame_examples():
    rel = RelativeTransform(np.eye(3), [0, 0, 2])
    f = make_frame(rel, vs(0, [0, 0, 10]), vs(0.1, [0, 0, 10]))
    assert f.valid
    np.testing.assert_allclose(f.dir_cam, [0, 0, 1])
    np.testing.assert_allclose(f.dir_ned, [0, 0, 1])

    tiny = RelativeTransform(exp_so3([0, 0, 0.1]), [0, 0, 1e-6])
    f = make_frame(tiny, vs(0, [0, 0, 10]), vs(0.1, [0, 0, 10]))
    assert not f.valid
    assert f.rel is tiny


def test_make_frame_stationary_and_missing_gps():
    rel = RelativeTransform(np.eye(3), [1, 0, 0])
    assert not make_frame(rel, vs(0, [0, 0, 0]), vs(0.1, [0.1, 0, 0])).valid
    assert not make_frame(rel, None, None).valid


def test_make_frame_heading_east():
    # camera yawed 90 deg about NED down, vehicle moving north
    r = exp_so3([0, 0, math.pi / 2])
    p0, p1 = np.zeros(3), np.array([1.0, 0, 0])
    rel = RelativeTransform(np.eye(3), synth_relative_translation(r, p0, p1, ScaleModel(3.0)))
    f = make_frame(rel, vs(0, [10, 0, 0]), vs(0.1, [10, 0, 0]))
    np.testing.assert_allclose(f.dir_ned, [1, 0, 0])
    np.testing.assert_allclose(f.dir_cam, [0, -1, 0], atol=1e-15)


def test_make_frame_scale_and_time_invariance(rng):
    for _ in range(50):
        rel = RelativeTransform(random_rotation(rng, 1.0), rng.standard_normal(3))
        v0, v1 = rng.standard_normal(3), rng.standard_normal(3)
        base = make_frame(rel, vs(0, v0), vs(0.1, v1), min_norm=1e-9)
        for c in (1e-3, 1e3):
            other = make_frame(rel.scaled(c), vs(5, v0), vs(5 + 0.1 * c, v1), min_norm=1e-12)
            np.testing.assert_allclose(other.dir_cam, base.dir_cam, atol=1e-15)
            np.testing.assert_allclose(other.dir_ned, base.dir_ned, atol=1e-15)


def test_synth_relative_translation():
    np.testing.assert_allclose(synth_relative_translation(np.eye(3), [0, 0, 0], [2, 0, 0], ScaleModel(2)), [1, 0, 0])
    np.testing.assert_array_equal(synth_relative_translation(np.eye(3), [1, 2, 3], [1, 2, 3], ScaleModel(1)), [0, 0, 0])


def test_synth_translation_satisfies_output_model(rng):
    for _ in range(100):
        r = random_rotation(rng, math.pi)
        p0, p1 = rng.standard_normal(3) * 10, rng.standard_normal(3) * 10
        t = synth_relative_translation(r, p0, p1, ScaleModel(rng.uniform(0.1, 10)))
        np.testing.assert_allclose(t / np.linalg.norm(t), r.T @ ((p1 - p0) / np.linalg.norm(p1 - p0)), atol=1e-14)


def test_scale_model_positive():
    with pytest.raises(ValueError):
        ScaleModel(0.0)


def test_relative_transform_validation():
    with pytest.raises(ValueError):
        RelativeTransform(2 * np.eye(3), [0, 0, 0])
    with pytest.raises(ValueError):
        RelativeTransform(np.eye(3), [np.nan, 0, 0])


def test_compose_relatives(rng):
    rots = [random_rotation(rng, 0.3) for _ in range(3)]
    ts = [rng.standard_normal(3) for _ in range(3)]
    # absolute poses of frames 1..3 in frame 0
    r_abs, p_abs = np.eye(3), np.zeros(3)
    for r, t in zip(rots, ts):
        p_abs = p_abs + r_abs @ t
        r_abs = r_abs @ r
    c = compose_relatives([RelativeTransform(r, t) for r, t in zip(rots, ts)])
    np.testing.assert_allclose(c.rot, r_abs, atol=1e-15)
    np.testing.assert_allclose(c.trans, p_abs, atol=1e-15)
