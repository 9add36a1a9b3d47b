import math

import numpy as np
import pytest

from acufusion.attitude import Quaternion
from acufusion.core import GRAVITY, SampledSeries
from acufusion.errors import LengthMismatch
from acufusion.kinematics import (axial_projection, naive_double_integrate,
                                  segmented_integrate)
from acufusion.statefuse import MotionStateTimeline


def _timeline(mask):
    mask = np.asarray(mask, dtype=bool)
    intervals = []
    start = 0
    for i in range(1, len(mask) + 1):
        if i == len(mask) or mask[i] != mask[start]:
            intervals.append(("motion" if mask[start] else "stationary",
                              start, i))
            start = i
    conf = SampledSeries(0.0, 0.01, mask.astype(float))
    return MotionStateTimeline(confidence=conf, intervals=tuple(intervals))


class TestSegmented:
    def test_all_stationary(self):
        rng = np.random.default_rng(0)
        a = SampledSeries(0.0, 0.01, rng.standard_normal(100))
        tl = _timeline(np.zeros(100, dtype=bool))
        est = segmented_integrate(a, tl)
        assert np.all(est.velocity.values == 0.0)
        assert np.all(est.displacement.values == est.displacement.values[0])

    def test_constant_accel_closed_form(self):
        # 1 m/s^2 over a 0.1 s motion interval: v = 0.1 m/s, d = 0.005 m
        a = np.ones(11)
        mask = np.ones(11, dtype=bool)
        est = segmented_integrate(SampledSeries(0.0, 0.01, a),
                                  _timeline(mask),
                                  zero_terminal_velocity=False)
        assert est.velocity.values[-1] == pytest.approx(0.1, abs=1e-6)
        assert est.displacement.values[-1] == pytest.approx(0.005, abs=1e-6)

    def test_velocity_zero_and_displacement_held_when_stationary(self):
        rng = np.random.default_rng(1)
        a = SampledSeries(0.0, 0.01, rng.standard_normal(500))
        mask = rng.uniform(size=500) < 0.5
        tl = _timeline(mask)
        est = segmented_integrate(a, tl, zero_terminal_velocity=False)
        stationary = ~tl.motion_mask()
        assert np.all(est.velocity.values[stationary] == 0.0)
        d = est.displacement.values
        idx = np.where(stationary[1:])[0] + 1
        assert np.all(d[idx] == d[idx - 1])

    def test_matches_naive_during_motion_with_perfect_input(self):
        # noise-free accel, exactly zero while stationary
        t = np.arange(400) / 100.0
        a = np.zeros(400)
        burst = slice(100, 200)
        a[burst] = np.sin(np.linspace(0.0, 2.0 * np.pi, 100))
        mask = np.zeros(400, dtype=bool)
        mask[burst] = True
        ser = SampledSeries(0.0, 0.01, a)
        seg = segmented_integrate(ser, _timeline(mask))
        naive = naive_double_integrate(ser)
        assert np.max(np.abs(seg.velocity.values[burst]
                             - naive.velocity.values[burst])) <= 1e-9

    def test_drift_containment_across_stationary(self):
        rng = np.random.default_rng(2)
        a = rng.standard_normal(300) * 0.01
        mask = np.zeros(300, dtype=bool)
        mask[50:100] = True
        mask[200:250] = True
        est = segmented_integrate(SampledSeries(0.0, 0.01, a),
                                  _timeline(mask))
        d = est.displacement.values
        # displacement constant over each stationary run
        assert np.all(d[100:200] == d[100])
        assert np.all(d[250:] == d[250])

    def test_zero_terminal_velocity_removes_bias(self):
        # constant accel bias through a motion interval followed by rest:
        # the correction cancels all but the half-sample onset residue of
        # the bias-induced displacement (b*T^2/2 without it)
        n = 400
        b = 0.05
        a = np.full(n, b)
        mask = np.zeros(n, dtype=bool)
        mask[100:200] = True
        est = segmented_integrate(SampledSeries(0.0, 0.01, a),
                                  _timeline(mask))
        raw = segmented_integrate(SampledSeries(0.0, 0.01, a),
                                  _timeline(mask),
                                  zero_terminal_velocity=False)
        leak_uncorrected = abs(raw.displacement.values[-1])
        assert leak_uncorrected == pytest.approx(b * 1.0 ** 2 / 2.0, rel=0.02)
        assert abs(est.displacement.values[-1]) <= 0.01 * leak_uncorrected

    def test_length_mismatch(self):
        a = SampledSeries(0.0, 0.01, np.zeros(10))
        with pytest.raises(LengthMismatch):
            segmented_integrate(a, _timeline(np.zeros(12, dtype=bool)))


class TestNaive:
    def test_zero_accel(self):
        est = naive_double_integrate(SampledSeries(0.0, 0.01, np.zeros(50)))
        assert np.all(est.displacement.values == 0.0)

    def test_constant_bias_drift(self):
        b, t_total = 0.02, 4.0
        n = int(t_total * 100) + 1
        est = naive_double_integrate(
            SampledSeries(0.0, 0.01, np.full(n, b)))
        assert est.displacement.values[-1] == pytest.approx(
            b * t_total ** 2 / 2.0, rel=1e-3)


class TestAxialProjection:
    def test_static_gravity_zero(self):
        n = 50
        q = np.tile([1.0, 0.0, 0.0, 0.0], (n, 1))
        accel = SampledSeries(0.0, 0.01,
                              np.tile([0.0, 0.0, GRAVITY], (n, 1)))
        out = axial_projection(accel, q)
        assert np.max(np.abs(out.values)) <= 1e-12

    def test_vertical_needle_unit_accel(self):
        n = 10
        q = np.tile([1.0, 0.0, 0.0, 0.0], (n, 1))
        accel = SampledSeries(0.0, 0.01,
                              np.tile([0.0, 0.0, GRAVITY + 1.0], (n, 1)))
        out = axial_projection(accel, q)
        assert np.allclose(out.values, 1.0, atol=1e-12)
        # insertion-positive convention flips the sign
        down = axial_projection(accel, q, axis=(0.0, 0.0, -1.0))
        assert np.allclose(down.values, -1.0, atol=1e-12)

    def test_tilted_pure_gravity(self):
        tilt = math.radians(30.0)
        q_t = Quaternion.from_axis_angle([0.0, 1.0, 0.0], tilt)
        n = 20
        q = np.tile(q_t.as_array(), (n, 1))
        f_body = q_t.conjugate().rotate([0.0, 0.0, GRAVITY])
        accel = SampledSeries(0.0, 0.01, np.tile(f_body, (n, 1)))
        out = axial_projection(accel, q)
        assert np.max(np.abs(out.values)) <= 1e-6

    def test_alignment_errors(self):
        accel = SampledSeries(0.0, 0.01, np.zeros((10, 3)))
        with pytest.raises(LengthMismatch):
            axial_projection(accel, np.tile([1.0, 0, 0, 0], (12, 1)))
        with pytest.raises(LengthMismatch):
            axial_projection(SampledSeries(0.0, 0.01, np.zeros(10)),
                             np.tile([1.0, 0, 0, 0], (10, 1)))
