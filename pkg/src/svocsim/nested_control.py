"""Per-phase outer voltage / inner current PI loops with anti-windup.

Both loops run in the phase's own synchronous frame. Anti-windup is
conditional integration: on a step that starts with the loop saturated, the
integrator is frozen unless its increment points back inside the limit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .frames import SyncFrameSample


@dataclass(frozen=True)
class PiGains:
    """Loop gains.

    Defaults: kp_c is close to the modulus-optimum value L_f / (2 T_d) for the
    2 mH filter inductor and an effective delay T_d of 1.5 ticks, giving a
    crossover near kp_c/L_f = 6000 rad/s. ki_c is large enough that a phase
    driven into its current limit settles back under it within about a
    cycle; much higher values push the start-up transient into saturation.
    The voltage loop crossover kp_v/C_f sits well below the current loop.
    """

    kp_v: float = 0.05
    ki_v: float = 5.0
    kp_c: float = 12.0
    ki_c: float = 2000.0
    v_ceiling: float = 100.0


@dataclass
class PiState:
    integrator: tuple[float, float] = (0.0, 0.0)
    saturated_flag: bool = False
    last: tuple[float, float] = (0.0, 0.0)


@dataclass
class PhaseLoopState:
    i_limit_peak: float
    voltage_pi: PiState = field(default_factory=PiState)
    current_pi: PiState = field(default_factory=PiState)

    @classmethod
    def from_rms_limit(cls, i_max_rms: float) -> "PhaseLoopState":
        return cls(math.sqrt(2.0) * i_max_rms)


def clamp_vector(x: float, y: float, limit: float) -> tuple[float, float, bool]:
    mag = math.hypot(x, y)
    if mag <= limit:
        return x, y, False
    s = limit / mag
    return x * s, y * s, True


def pi_step(pi: PiState, ed: float, eq: float, kp: float, ki: float, dt: float,
             ff_d: float, ff_q: float, limit: float) -> tuple[float, float]:
    """Vector PI with feedforward and a magnitude clamp, updating ``pi`` in place."""
    xd, xq = pi.integrator
    dd, dq = ki * ed * dt, ki * eq * dt
    if not pi.saturated_flag or dd * pi.last[0] + dq * pi.last[1] < 0.0:
        xd += dd
        xq += dq
        pi.integrator = (xd, xq)
    od, oq, sat = clamp_vector(ff_d + kp * ed + xd, ff_q + kp * eq + xq, limit)
    pi.saturated_flag = sat
    pi.last = (od, oq)
    return od, oq


def voltage_loop_step(state: PhaseLoopState, v_ref_d: float, v_meas: SyncFrameSample,
                      i_ff, gains: PiGains, dt: float) -> tuple[float, float]:
    """Current command from the capacitor-voltage error, vector-limited."""
    return pi_step(state.voltage_pi, v_ref_d - v_meas[0], -v_meas[1],
                    gains.kp_v, gains.ki_v, dt, i_ff[0], i_ff[1], state.i_limit_peak)


def current_loop_step(state: PhaseLoopState, i_cmd, i_meas: SyncFrameSample,
                      v_ff: SyncFrameSample, gains: PiGains, dt: float) -> tuple[float, float]:
    """Inverter voltage command from the current error, limited to the dc ceiling."""
    return pi_step(state.current_pi, i_cmd[0] - i_meas[0], i_cmd[1] - i_meas[1],
                    gains.kp_c, gains.ki_c, dt, v_ff[0], v_ff[1], gains.v_ceiling)
