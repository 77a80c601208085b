"""Single-oscillator grid-forming controller used as the comparison baseline.

One Andronov-Hopf oscillator driven by the Clarke-frame aggregate of the
measured output-current errors supplies a shared phase angle and amplitude
for all three phases. There is no fault detector and no feedback estimator.

Two inner-loop structures are available. ``per_phase`` (default) reuses the
per-phase voltage/current loops of the S-VOC controller, so a faulted phase
saturates on its own while the healthy phases keep interacting with the
oscillator, which then mis-synchronises. ``shared_dq`` runs one dq cascade on
the oscillator angle with a vector clamp that is shrunk while any phase's rms
current exceeds the limit, plus a zero-axis current regulator for the
four-wire neutral path.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .controller import ControllerConfig, SvocController
from .frames import to_sync_frame, unit_direction
from .frames import MIN_REFERENCE
from .errors import DegenerateReference
from .nested_control import PiState, pi_step
from .signals import SlidingRms, sliding_rms
from .svoc import PowerSetpoints, current_references, pos_osc_derivatives, synthesize_references

TWO_PI_3 = 2 * math.pi / 3
OFFSETS = (0.0, TWO_PI_3, -TWO_PI_3)
# integral rate (1/s) of the rms-driven clamp scale and its floor
LIMIT_RATE = 20.0
MIN_LIMIT_SCALE = 0.05


def clarke(xa: float, xb: float, xc: float) -> tuple[float, float]:
    """Amplitude-invariant Clarke pair, oriented like the oscillator state."""
    return (2.0 / 3.0) * (xa - 0.5 * xb - 0.5 * xc), (xb - xc) / math.sqrt(3.0)


def park(theta: float, x) -> tuple[float, float, float]:
    d = q = 0.0
    for xk, o in zip(x, OFFSETS):
        d += xk * math.cos(theta + o)
        q -= xk * math.sin(theta + o)
    return 2.0 * d / 3.0, 2.0 * q / 3.0, (x[0] + x[1] + x[2]) / 3.0


def inverse_park(theta: float, d: float, q: float, zero: float) -> list[float]:
    return [d * math.cos(theta + o) - q * math.sin(theta + o) + zero for o in OFFSETS]


@dataclass
class DvocState:
    osc: tuple[float, float]
    voltage_pi: PiState = field(default_factory=PiState)
    current_pi: PiState = field(default_factory=PiState)
    zero_integrator: float = 0.0
    limit_scale: float = 1.0
    rms: list = field(default_factory=list)

    @property
    def theta(self) -> float:
        # the oscillator turns clockwise in (alpha, beta): alpha = r cos(theta), beta = -r sin(theta)
        return math.atan2(-self.osc[1], self.osc[0])

    @property
    def amplitude(self) -> float:
        return math.hypot(*self.osc)


def _osc_rk4(v, fb, params, dt):
    f = lambda s: pos_osc_derivatives(s, fb, params)
    k1 = f(v)
    k2 = f((v[0] + 0.5 * dt * k1[0], v[1] + 0.5 * dt * k1[1]))
    k3 = f((v[0] + 0.5 * dt * k2[0], v[1] + 0.5 * dt * k2[1]))
    k4 = f((v[0] + dt * k3[0], v[1] + dt * k3[1]))
    return tuple(v[i] + dt / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]) for i in range(2))


def dvoc_step(state: DvocState, i_inv, v_pcc, i_out, setpoints: PowerSetpoints,
              cfg: ControllerConfig, dt: float) -> tuple[DvocState, list[float]]:
    """One tick of the ``shared_dq`` variant.

    ``i_inv`` are the filter inductor currents used by the inner loop and the
    zero axis; ``i_out`` the filter output currents used for the oscillator
    feedback and the voltage-loop feedforward.
    """
    p = cfg.osc
    g = cfg.gains
    if state.amplitude < MIN_REFERENCE:
        raise DegenerateReference("baseline oscillator collapsed")
    refs = synthesize_references(state.osc, (0.0, 0.0), (0.0, 0.0))
    i_star = current_references(refs, setpoints)
    err = [i - r.d for i, r in zip(i_out, i_star)]
    e_a, e_b = clarke(*err)
    s = p.feedback_sign

    theta = state.theta
    vd, vq, _ = park(theta, v_pcc)
    od, oq, _ = park(theta, i_out)
    ld, lq, l0 = park(theta, i_inv)
    v0 = sum(v_pcc) / 3.0

    # a balanced vector clamp does not bound the per-phase rms once the
    # measured set is unbalanced; shrink the clamp while any phase is over
    worst = max(sliding_rms(r, i) for r, i in zip(state.rms, i_out))
    state.limit_scale = min(1.0, max(MIN_LIMIT_SCALE, state.limit_scale
                                     + LIMIT_RATE * dt * (cfg.i_max - worst) / cfg.i_max))
    i_lim = math.sqrt(2.0) * cfg.i_max * state.limit_scale
    i_cmd = pi_step(state.voltage_pi, state.amplitude - vd, -vq, g.kp_v, g.ki_v, dt, od, oq, i_lim)
    v_cmd = pi_step(state.current_pi, i_cmd[0] - ld, i_cmd[1] - lq, g.kp_c, g.ki_c, dt, vd, vq, g.v_ceiling)
    state.zero_integrator -= g.ki_c * l0 * dt
    v_zero = v0 - g.kp_c * l0 + state.zero_integrator
    out = inverse_park(theta, v_cmd[0], v_cmd[1], v_zero)

    state.osc = _osc_rk4(state.osc, (s * e_a, s * e_b), p, dt)
    return state, out


class DvocController(SvocController):
    """Tick-compatible baseline used by the runner in place of the S-VOC controller."""

    name = "dvoc_baseline"
    LOOPS = ("per_phase", "shared_dq")

    def __init__(self, cfg: ControllerConfig, setpoints: PowerSetpoints, angle: float = 0.0,
                 loops: str = "per_phase"):
        if loops not in self.LOOPS:
            raise ValueError(f"loops must be one of {self.LOOPS}, got {loops!r}")
        super().__init__(cfg, setpoints, angle)
        self.loops_kind = loops
        r = cfg.osc.amplitude
        self.dvoc = DvocState((r * math.cos(angle), -r * math.sin(angle)),
                              rms=[SlidingRms.for_period(cfg.osc.omega_n, cfg.t_s) for _ in range(3)])
        self.refs = synthesize_references(self.dvoc.osc, (0.0, 0.0), (0.0, 0.0))

    @property
    def faulty(self):
        return (False, False, False)

    def amplitudes(self) -> tuple[float, float, float]:
        return self.dvoc.amplitude, 0.0, 0.0

    def tick(self, v_meas, i_meas, i_out) -> list[float]:
        cfg = self.cfg
        if self.loops_kind == "shared_dq":
            self.dvoc, out = dvoc_step(self.dvoc, i_meas, v_meas, i_out, self.setpoints, cfg, cfg.t_s)
            return out
        vp, lp, ip = self.measure(v_meas, i_meas, i_out)
        refs = self.refs
        units = [unit_direction(r) for r in refs]
        i_star = current_references(refs, self.setpoints)
        v_sync = [to_sync_frame(u, p) for u, p in zip(units, vp)]
        i_sync = [to_sync_frame(u, p) for u, p in zip(units, ip)]
        l_sync = [to_sync_frame(u, p) for u, p in zip(units, lp)]
        v_out = self.inner_loops(refs, units, v_sync, l_sync, i_sync)
        err = clarke(*(i - r.d for i, r in zip(i_meas, i_star)))
        sgn = cfg.osc.feedback_sign
        self.dvoc.osc = _osc_rk4(self.dvoc.osc, (sgn * err[0], sgn * err[1]), cfg.osc, cfg.t_s)
        self.refs = synthesize_references(self.dvoc.osc, (0.0, 0.0), (0.0, 0.0))
        return v_out
