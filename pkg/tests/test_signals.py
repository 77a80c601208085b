import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from svocsim.signals import (QsgState, SlidingRms, ThreePhase, lowpass_step, qsg_step, sliding_rms,
                             sogi_gain)

W50 = 2 * math.pi * 50
DT = 50e-6


def sogi_response(f, f_n, k=math.sqrt(2)):
    """Continuous SOGI transfer functions evaluated at j*2*pi*f."""
    s = 2j * math.pi * f
    wn = 2 * math.pi * f_n
    den = s * s + k * wn * s + wn * wn
    return k * wn * s / den, k * wn * wn / den


def drive(freq, amp, duration, phase=0.0):
    st_ = QsgState(W50)
    n = int(round(duration / DT))
    out = []
    for k in range(1, n + 1):
        out.append(qsg_step(st_, amp * math.cos(2 * math.pi * freq * k * DT + phase), DT))
    return np.array(out), np.arange(1, n + 1) * DT


def fit_phasor(x, t, freq):
    # least-squares fit of a sinusoid over whole cycles
    m = np.column_stack([np.cos(2 * math.pi * freq * t), -np.sin(2 * math.pi * freq * t)])
    c, *_ = np.linalg.lstsq(m, x, rcond=None)
    return complex(c[0], c[1])


def test_threephase_rejects_nan():
    with pytest.raises(ValueError):
        ThreePhase(1.0, float("nan"), 0.0)
    assert list(ThreePhase(1, 2, 3)) == [1, 2, 3]


def test_qsg_zero_input_stays_zero():
    st_ = QsgState(W50)
    for _ in range(2000):
        d, q = qsg_step(st_, 0.0, DT)
    assert abs(d) < 1e-9 and abs(q) < 1e-9


def test_qsg_rejects_non_finite():
    with pytest.raises(ValueError):
        qsg_step(QsgState(W50), float("inf"), DT)


def test_qsg_unity_magnitude_at_tuned_frequency():
    out, _ = drive(50.0, 70.71, 0.2)
    d, q = out[-1]
    assert d * d + q * q == pytest.approx(70.71**2, rel=0.01)


@pytest.mark.parametrize("freq", [45.0, 49.5, 50.0, 50.5, 55.0])
def test_qsg_matches_transfer_function(freq):
    out, t = drive(freq, 10.0, 0.6, phase=0.3)
    hd, hq = sogi_response(freq, 50.0)
    tail = slice(len(t) - int(round(0.2 / DT)), None)
    x = 10.0 * np.exp(0.3j)
    for col, h in ((0, hd), (1, hq)):
        got = fit_phasor(out[tail, col], t[tail], freq)
        want = x * h
        assert abs(got) == pytest.approx(abs(want), rel=0.01)
        assert abs(math.degrees(np.angle(got / want))) < 1.0


def test_q_output_lags_by_quarter_period():
    out, t = drive(50.0, 1.0, 0.4)
    tail = slice(len(t) - 400, None)
    pd = fit_phasor(out[tail, 0], t[tail], 50.0)
    pq = fit_phasor(out[tail, 1], t[tail], 50.0)
    assert math.degrees(np.angle(pq / pd)) == pytest.approx(-90.0, abs=0.5)


def test_sogi_gain_off_nominal():
    assert sogi_gain(50.0, 50.0) == pytest.approx(1.0)
    g = sogi_gain(49.5, 50.0)
    assert g == pytest.approx(abs(sogi_response(49.5, 50.0)[0]), rel=1e-12)
    assert abs(1 - g) < 0.03


def test_sliding_rms_examples():
    s = SlidingRms(10)
    for _ in range(10):
        r = sliding_rms(s, 1.0)
    assert r == 1.0
    z = SlidingRms(10)
    assert all(sliding_rms(z, 0.0) == 0.0 for _ in range(25))


def test_sliding_rms_of_limit_sinusoid():
    s = SlidingRms.for_period(W50, DT)
    assert s.n == 400
    for k in range(s.n):
        r = sliding_rms(s, 14.142 * math.cos(W50 * k * DT))
    assert r == pytest.approx(10.0, rel=1e-3)


def test_sliding_rms_window_validation():
    with pytest.raises(ValueError):
        SlidingRms(0)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 40), st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=300))
def test_sliding_rms_matches_batch(n, xs):
    s = SlidingRms(n)
    padded = np.concatenate([np.zeros(n), np.array(xs)])
    for k, x in enumerate(xs):
        got = sliding_rms(s, x)
        window = padded[k + 1:k + 1 + n]
        want = math.sqrt(math.fsum(window**2) / n)
        assert got == pytest.approx(want, rel=1e-9, abs=1e-9)


def test_lowpass_step_response():
    fc, dt = 10.0, 1e-4
    y = 0.0
    tau = 1 / (2 * math.pi * fc)
    for _ in range(int(round(tau / dt))):
        y = lowpass_step(y, 1.0, fc, dt)
    assert y == pytest.approx(1 - math.exp(-1), rel=0.02)


def test_lowpass_converges_to_constant():
    y = 0.0
    for _ in range(20000):
        y = lowpass_step(y, -3.5, 10.0, 1e-4)
    assert y == pytest.approx(-3.5, abs=1e-9)


def test_lowpass_attenuates_100hz():
    dt, y, peak = 50e-6, 0.0, 0.0
    for k in range(int(1.0 / dt)):
        y = lowpass_step(y, math.sin(2 * math.pi * 100 * k * dt), 10.0, dt)
        if k * dt > 0.8:
            peak = max(peak, abs(y))
    assert peak <= 0.1
    assert peak == pytest.approx(1 / math.sqrt(1 + 100), rel=0.02)


def test_lowpass_rejects_bad_cutoff():
    with pytest.raises(ValueError):
        lowpass_step(0.0, 1.0, 0.0, 1e-4)
