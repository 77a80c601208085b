"""Averaged inverter, per-phase LC filter, grid Thevenin branch and PCC load.

State layout (length 12): inverter-side inductor currents i_Lf[a,b,c],
PCC capacitor voltages v_Cf[a,b,c], grid-side inductor currents i_Lg[a,b,c],
load inductor currents i_Ld[a,b,c].
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numba import njit

from .errors import ConfigError, OverlappingEvents
from .signals import ThreePhase

N_STATE = 12
# phase b leads a: the order produced by the positive-sequence oscillator
PHASE_OFFSETS = (0.0, 2 * math.pi / 3, -2 * math.pi / 3)


@dataclass(frozen=True)
class PlantParams:
    """Circuit values per phase.

    ``four_wire=False`` floats the inverter's neutral, so the inverter-side
    currents carry no zero sequence; the capacitor star point stays tied to
    the grid neutral either way.
    """

    l_f: float = 2e-3
    c_f: float = 20e-6
    l_g: float = 2e-3
    v_ng: float = 50.0
    omega_ng: float = 2 * math.pi * 50
    r_f: float = 0.05
    r_g: float = 0.05
    load_r: float | None = None
    load_l: float | None = None
    c_g: float | None = None
    four_wire: bool = True
    grid_connected: bool = True

    def __post_init__(self):
        for name in ("l_f", "c_f", "l_g", "v_ng", "omega_ng"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.r_f < 0 or self.r_g < 0:
            raise ConfigError("parasitic resistances must be non-negative")
        if self.load_l is not None and self.load_l > 0 and not (self.load_r or 0) >= 0:
            raise ConfigError("load resistance must be non-negative")

    @property
    def c_pcc(self) -> float:
        # the grid emulator's capacitor sits on the same node as C_f
        return self.c_f + (self.c_g or 0.0)

    def as_array(self) -> np.ndarray:
        has_load = self.load_r is not None or self.load_l is not None
        return np.array([
            self.l_f, self.c_pcc, self.l_g, self.r_f, self.r_g,
            self.load_r or 0.0, self.load_l or 0.0, float(has_load),
            float(self.grid_connected), float(self.four_wire),
        ])


@dataclass(frozen=True)
class GridEvent:
    t_start: float
    t_end: float
    multipliers: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.t_end < self.t_start:
            raise ConfigError("grid event ends before it starts")
        for ph, m in self.multipliers.items():
            if ph not in ("a", "b", "c"):
                raise ConfigError(f"unknown phase {ph!r}")
            if not 0.0 <= m <= 1.2:
                raise ConfigError(f"amplitude multiplier {m} outside [0, 1.2]")


def validate_events(events: Sequence[GridEvent]) -> None:
    for ph in "abc":
        spans = sorted((e.t_start, e.t_end) for e in events if ph in e.multipliers)
        for (s0, e0), (s1, _) in zip(spans, spans[1:]):
            if s1 < e0:
                raise OverlappingEvents(f"phase {ph}: events overlap at t={s1}")


def amplitude_multipliers(t: float, events: Sequence[GridEvent]) -> tuple[float, float, float]:
    m = [1.0, 1.0, 1.0]
    for ev in events:
        if ev.t_start <= t < ev.t_end:
            for ph, v in ev.multipliers.items():
                m["abc".index(ph)] = v
    return m[0], m[1], m[2]


def grid_emf(t: float, events: Sequence[GridEvent], params: PlantParams) -> ThreePhase:
    m = amplitude_multipliers(t, events)
    peak = math.sqrt(2.0) * params.v_ng
    wt = params.omega_ng * t
    return ThreePhase(*(mx * peak * math.cos(wt + ph) for mx, ph in zip(m, PHASE_OFFSETS)))


@njit(cache=True)
def _derivs(x, v_inv, e, prm, out):
    l_f, c, l_g, r_f, r_g, load_r, load_l, has_load, grid_on, four_wire = prm
    v_n = 0.0
    if four_wire < 0.5:
        s = 0.0
        for k in range(3):
            s += v_inv[k] - x[3 + k] - r_f * x[k]
        v_n = s / 3.0
    for k in range(3):
        i_f = x[k]
        v_c = x[3 + k]
        i_g = x[6 + k]
        i_load = 0.0
        out[9 + k] = 0.0
        if has_load > 0.5:
            if load_l > 0.0:
                i_load = x[9 + k]
                out[9 + k] = (v_c - load_r * i_load) / load_l
            elif load_r > 0.0:
                i_load = v_c / load_r
        out[k] = (v_inv[k] - v_n - v_c - r_f * i_f) / l_f
        out[3 + k] = (i_f - i_g - i_load) / c
        if grid_on > 0.5:
            out[6 + k] = (v_c - e[k] - r_g * i_g) / l_g
        else:
            out[6 + k] = 0.0


def plant_derivatives(state: np.ndarray, v_inv, grid: ThreePhase | Sequence[float],
                      params: PlantParams) -> np.ndarray:
    out = np.empty(N_STATE)
    _derivs(np.asarray(state, dtype=float), np.asarray(tuple(v_inv), dtype=float),
            np.asarray(tuple(grid), dtype=float), params.as_array(), out)
    return out


def rk4_step(state, derivs_fn: Callable, dt: float):
    """Classical RK4 update of ``state`` under ``derivs_fn(state)``."""
    k1 = derivs_fn(state)
    k2 = derivs_fn(state + 0.5 * dt * k1)
    k3 = derivs_fn(state + 0.5 * dt * k2)
    k4 = derivs_fn(state + dt * k3)
    return state + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


@njit(cache=True)
def plant_advance(x, v_inv, mult, t0, dt, nsub, prm, v_peak, omega, phases):
    """Advance the plant ``nsub`` RK4 steps with the inverter voltage held.

    Grid multipliers are held too; the sinusoid itself is evaluated at every
    RK4 stage.
    """
    e = np.empty(3)
    k1 = np.empty(N_STATE)
    k2 = np.empty(N_STATE)
    k3 = np.empty(N_STATE)
    k4 = np.empty(N_STATE)
    tmp = np.empty(N_STATE)
    t = t0
    for _ in range(nsub):
        for j in range(3):
            e[j] = mult[j] * v_peak * math.cos(omega * t + phases[j])
        _derivs(x, v_inv, e, prm, k1)
        for i in range(N_STATE):
            tmp[i] = x[i] + 0.5 * dt * k1[i]
        th = t + 0.5 * dt
        for j in range(3):
            e[j] = mult[j] * v_peak * math.cos(omega * th + phases[j])
        _derivs(tmp, v_inv, e, prm, k2)
        for i in range(N_STATE):
            tmp[i] = x[i] + 0.5 * dt * k2[i]
        _derivs(tmp, v_inv, e, prm, k3)
        for i in range(N_STATE):
            tmp[i] = x[i] + dt * k3[i]
        for j in range(3):
            e[j] = mult[j] * v_peak * math.cos(omega * (t + dt) + phases[j])
        _derivs(tmp, v_inv, e, prm, k4)
        for i in range(N_STATE):
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
        t += dt
    return x


class Plant:
    """Mutable plant instance stepped by the runner."""

    def __init__(self, params: PlantParams, events: Sequence[GridEvent] = ()):
        validate_events(events)
        self.params = params
        self.events = list(events)
        self._prm = params.as_array()
        self._phases = np.array(PHASE_OFFSETS)
        self._v_peak = math.sqrt(2.0) * params.v_ng
        self.x = np.zeros(N_STATE)
        e0 = grid_emf(0.0, self.events, params)
        self.x[3:6] = tuple(e0)

    def advance(self, v_inv, t0: float, dt: float, nsub: int) -> None:
        mult = np.array(amplitude_multipliers(t0, self.events))
        plant_advance(self.x, np.asarray(v_inv, dtype=float), mult, t0, dt, nsub,
                      self._prm, self._v_peak, self.params.omega_ng, self._phases)

    @property
    def i_inv(self):
        return self.x[0], self.x[1], self.x[2]

    @property
    def v_pcc(self):
        return self.x[3], self.x[4], self.x[5]

    @property
    def i_out(self):
        """Current leaving the LC filter into the PCC (grid branch plus load)."""
        prm = self.params
        x = self.x
        out = []
        for k in range(3):
            i_load = 0.0
            if prm.load_l:
                i_load = x[9 + k]
            elif prm.load_r:
                i_load = x[3 + k] / prm.load_r
            out.append(x[6 + k] + i_load)
        return tuple(out)

    @property
    def i_grid(self):
        return self.x[6], self.x[7], self.x[8]
