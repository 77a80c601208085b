import math

import pytest
from hypothesis import given, strategies as st

from svocsim.baseline_dvoc import DvocController, DvocState, clarke, inverse_park, park
from svocsim.controller import ControllerConfig
from svocsim.errors import ConfigError
from svocsim.runner import Scenario, run_scenario
from svocsim.svoc import PowerSetpoints

OFFS = (0.0, 2 * math.pi / 3, -2 * math.pi / 3)
angles = st.floats(-math.pi, math.pi)
vals = st.floats(-100, 100)


@given(angles, st.floats(0.1, 100))
def test_clarke_of_balanced_set_matches_oscillator_orientation(theta, amp):
    a, b = clarke(*(amp * math.cos(theta + o) for o in OFFS))
    assert a == pytest.approx(amp * math.cos(theta), abs=1e-9)
    assert b == pytest.approx(-amp * math.sin(theta), abs=1e-9)


def test_clarke_ignores_common_mode():
    assert clarke(5.0, 5.0, 5.0) == pytest.approx((0.0, 0.0))


@given(angles, vals, vals, vals)
def test_park_round_trip(theta, d, q, z):
    x = inverse_park(theta, d, q, z)
    assert park(theta, x) == pytest.approx((d, q, z), abs=1e-9)


@given(angles, st.floats(0.1, 100), st.floats(-math.pi, math.pi))
def test_park_of_balanced_set(theta, amp, phi):
    x = [amp * math.cos(theta + phi + o) for o in OFFS]
    d, q, z = park(theta, x)
    assert d == pytest.approx(amp * math.cos(phi), abs=1e-9)
    assert q == pytest.approx(amp * math.sin(phi), abs=1e-9)
    assert z == pytest.approx(0.0, abs=1e-9)


@given(angles, st.floats(1, 100))
def test_state_angle_and_amplitude(theta, r):
    s = DvocState((r * math.cos(theta), -r * math.sin(theta)))
    assert s.amplitude == pytest.approx(r)
    assert math.cos(s.theta - theta) == pytest.approx(1.0)


def test_controller_reports_no_faults():
    ctl = DvocController(ControllerConfig(), PowerSetpoints.total(600.0))
    assert ctl.faulty == (False, False, False)
    amp, neg, zero = ctl.amplitudes()
    assert amp == pytest.approx(70.711, abs=1e-3) and neg == zero == 0.0
    with pytest.raises(ValueError):
        DvocController(ControllerConfig(), PowerSetpoints.total(0.0), loops="mixed")
    with pytest.raises(ConfigError):
        Scenario("x", 1.0, baseline_loops="mixed")


@pytest.mark.parametrize("loops", ["per_phase", "shared_dq"])
def test_balanced_tracking(loops):
    r = run_scenario(Scenario("b", 0.4, controller="dvoc_baseline", p_star=(200.0,) * 3, baseline_loops=loops))
    assert r.ok
    for ph in "abc":
        assert r.mean(f"P{ph}", 0.3, 0.4) == pytest.approx(200.0, rel=0.02)
