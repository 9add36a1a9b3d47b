import numpy as np
import pytest
from hypothesis import given, strategies as st

from acufusion.core import (ForceCalibration, RecordingSession, SampledSeries,
                            resample_cubic_spline, rmse)
from acufusion.errors import (ConfigError, DegenerateInput, LengthMismatch,
                              SpanError)


def test_series_invariants():
    s = SampledSeries(0.0, 0.01, np.arange(5.0), "m")
    assert len(s) == 5
    assert s.width == 1
    assert s.t_end == pytest.approx(0.04)
    assert np.allclose(s.times(), [0.0, 0.01, 0.02, 0.03, 0.04])
    with pytest.raises(ConfigError):
        SampledSeries(0.0, 0.0, np.arange(5.0))
    with pytest.raises(ConfigError):
        SampledSeries(0.0, -0.1, np.arange(5.0))


def test_series_values_frozen():
    s = SampledSeries(0.0, 0.01, np.arange(5.0))
    with pytest.raises(ValueError):
        s.values[0] = 9.0


def test_session_invariants():
    n = 100
    mk = lambda w: SampledSeries(0.0, 0.01, np.zeros((n, w)) if w > 1
                                 else np.zeros(n))
    sess = RecordingSession(force=mk(1), accel=mk(3), gyro=mk(3))
    assert sess.duration == pytest.approx(1.0)
    with pytest.raises(ConfigError):
        RecordingSession(force=mk(1), accel=mk(1), gyro=mk(3))
    bad_clock = SampledSeries(0.5, 0.01, np.zeros((n, 3)))
    with pytest.raises(ConfigError):
        RecordingSession(force=mk(1), accel=bad_clock, gyro=mk(3))


def test_calibration_validation():
    with pytest.raises(ConfigError):
        ForceCalibration(gain=0.0)
    assert ForceCalibration().volts_per_newton == pytest.approx(
        0.0005 * 5.0 * 600.0 / 22.2)


def test_resample_linear_ramp_exact():
    # splines reproduce linear functions
    t = np.arange(61) / 30.0
    src = SampledSeries(0.0, 1 / 30.0, 2.0 * t)
    out = resample_cubic_spline(src, 0.01, (0.0, 2.0))
    assert np.max(np.abs(out.values - 2.0 * out.times())) <= 1e-12


def test_resample_passes_through_knots():
    rng = np.random.default_rng(1)
    src = SampledSeries(0.0, 1 / 30.0, rng.standard_normal(31))
    # target grid hits every 3rd source knot exactly (dt = 0.1 s)
    out = resample_cubic_spline(src, 0.1, (0.0, 1.0))
    assert np.array_equal(out.values, src.values[::3])


def test_resample_sine_accuracy():
    t = np.arange(61) / 30.0
    src = SampledSeries(0.0, 1 / 30.0, np.sin(2 * np.pi * t))
    out = resample_cubic_spline(src, 0.01, (0.0, 2.0))
    exact = np.sin(2 * np.pi * out.times())
    assert np.max(np.abs(out.values - exact)) <= 1e-3


def test_resample_roundtrip_bit_near():
    rng = np.random.default_rng(2)
    src = SampledSeries(0.0, 0.1, rng.standard_normal(21))
    fine = resample_cubic_spline(src, 0.01, (0.0, 2.0))
    back = fine.values[::10]
    assert np.max(np.abs(back - src.values)) <= 1e-12 * max(
        1.0, np.max(np.abs(src.values)))


def test_resample_errors():
    src = SampledSeries(0.0, 0.1, np.arange(10.0))
    with pytest.raises(SpanError):
        resample_cubic_spline(src, 0.01, (0.0, 2.0))
    with pytest.raises(SpanError):
        resample_cubic_spline(src, 0.01, (-0.5, 0.5))
    with pytest.raises(DegenerateInput):
        resample_cubic_spline(SampledSeries(0.0, 0.1, np.arange(3.0)),
                              0.01, (0.0, 0.2))


def test_resample_vector_series():
    t = np.arange(31) / 30.0
    vals = np.stack([t, 2 * t, -t], axis=1)
    out = resample_cubic_spline(SampledSeries(0.0, 1 / 30.0, vals),
                                0.01, (0.0, 1.0))
    assert out.width == 3
    assert np.max(np.abs(out.values[:, 1] - 2 * out.times())) < 1e-12


def test_rmse_examples():
    a = SampledSeries(0.0, 0.01, np.array([0.0, 1.0, 2.0]))
    b = SampledSeries(0.0, 0.01, np.array([1.0, 1.0, 1.0]))
    assert rmse(a, a) == 0.0
    assert rmse(a, b) == pytest.approx(np.sqrt(2.0 / 3.0), abs=1e-15)
    c = SampledSeries(0.0, 0.01, a.values + 3e-3)
    assert rmse(a, c) == pytest.approx(3e-3)


def test_rmse_errors():
    a = SampledSeries(0.0, 0.01, np.zeros(4))
    with pytest.raises(LengthMismatch):
        rmse(a, SampledSeries(0.0, 0.01, np.zeros(5)))
    with pytest.raises(LengthMismatch):
        rmse(a, SampledSeries(0.0, 0.02, np.zeros(4)))


_vals = st.floats(-1e6, 1e6).map(lambda v: 0.0 if abs(v) < 1e-9 else v)


@given(st.lists(_vals, min_size=1, max_size=50),
       st.lists(_vals, min_size=1, max_size=50))
def test_rmse_symmetric_nonnegative(xs, ys):
    n = min(len(xs), len(ys))
    a = SampledSeries(0.0, 0.01, np.array(xs[:n]))
    b = SampledSeries(0.0, 0.01, np.array(ys[:n]))
    assert rmse(a, b) == rmse(b, a) >= 0.0
    if np.array_equal(a.values, b.values):
        assert rmse(a, b) == 0.0
