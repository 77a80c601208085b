"""Signal primitives: phase triples, quadrature pairs, SOGI, sliding RMS, low-pass."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

SOGI_GAIN = math.sqrt(2.0)


@dataclass(frozen=True, slots=True)
class ThreePhase:
    """Instantaneous per-phase values (a, b, c)."""

    a: float
    b: float
    c: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b) and math.isfinite(self.c)):
            raise ValueError(f"non-finite phase value in ({self.a}, {self.b}, {self.c})")

    def __iter__(self) -> Iterator[float]:
        yield self.a
        yield self.b
        yield self.c

    def __getitem__(self, k: int) -> float:
        return (self.a, self.b, self.c)[k]


class QuadPair(NamedTuple):
    """A sinusoid ``d`` and its 90-degree lagging companion ``q``."""

    d: float
    q: float


@dataclass
class QsgState:
    """Second-order generalized integrator tuned at ``omega_n``.

    Discretised with the trapezoidal rule, so the passband stays centred on
    ``omega_n`` to within (omega_n*dt)^2/12.
    """

    omega_n: float
    k_sogi: float = SOGI_GAIN
    x_d: float = 0.0
    x_q: float = 0.0
    u_prev: float = 0.0


def qsg_step(state: QsgState, sample: float, dt: float) -> QuadPair:
    """Advance the SOGI by one sample and return the (d, q) estimate.

    Continuous model: d' = k*w*(u - d) - w*q,  q' = w*d.
    """
    if not math.isfinite(sample):
        raise ValueError(f"non-finite sample {sample!r}")
    w = state.omega_n
    kw = state.k_sogi * w
    h = 0.5 * dt
    # (I - hA) x1 = (I + hA) x0 + h*B*(u0 + u1), A = [[-kw, -w], [w, 0]], B = [kw, 0]
    d0, q0 = state.x_d, state.x_q
    r_d = d0 + h * (-kw * d0 - w * q0) + h * kw * (state.u_prev + sample)
    r_q = q0 + h * w * d0
    # M = [[1 + h*kw, h*w], [-h*w, 1]]
    m11 = 1.0 + h * kw
    m12 = h * w
    det = m11 + m12 * m12
    d1 = (r_d - m12 * r_q) / det
    q1 = (m11 * r_q + m12 * r_d) / det
    state.x_d, state.x_q, state.u_prev = d1, q1, sample
    return QuadPair(d1, q1)


def sogi_gain(f: float, f_n: float, k: float = SOGI_GAIN) -> float:
    """Magnitude of the SOGI d-output transfer function at frequency ``f``."""
    w, wn = 2 * math.pi * f, 2 * math.pi * f_n
    num = k * wn * w
    return num / math.hypot(wn * wn - w * w, k * wn * w)


@dataclass
class SlidingRms:
    """RMS over exactly the last ``n`` samples (rectangular window).

    The running sum of squares is rebuilt from the buffer once per window so
    rounding drift never accumulates beyond one period.
    """

    n: int
    buf: list[float] = field(default_factory=list)
    pos: int = 0
    acc: float = 0.0
    count: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("window must hold at least one sample")
        if not self.buf:
            self.buf = [0.0] * self.n

    @classmethod
    def for_period(cls, omega_n: float, dt: float) -> "SlidingRms":
        return cls(round(2 * math.pi / (omega_n * dt)))


def sliding_rms(state: SlidingRms, sample: float) -> float:
    """Push ``sample`` and return the RMS of the trailing window.

    Before the window has filled, the missing samples count as zeros.
    """
    sq = sample * sample
    old = state.buf[state.pos]
    state.buf[state.pos] = sq
    state.pos += 1
    if state.pos == state.n:
        state.pos = 0
        state.acc = math.fsum(state.buf)
    else:
        state.acc += sq - old
    state.count += 1
    return math.sqrt(max(state.acc, 0.0) / state.n)


def lowpass_alpha(cutoff: float, dt: float) -> float:
    return 1.0 - math.exp(-2.0 * math.pi * cutoff * dt)


def lowpass_step(state: float, sample: float, cutoff: float, dt: float) -> float:
    """One step of a first-order low-pass (exact step-invariant discretisation)."""
    if cutoff <= 0:
        raise ValueError("cutoff must be positive")
    return state + lowpass_alpha(cutoff, dt) * (sample - state)
