"""Symmetrical-component virtual oscillator controller.

Three Andronov-Hopf oscillators (positive, negative, zero sequence) whose
outputs are mapped onto per-phase reference pairs (v_d*, v_q*). The phase
order is the one the positive oscillator generates: phase b leads phase a by
120 degrees, so A = exp(j*2*pi/3) carries a -> b for a positive set.

Per-phase current errors are complexified as e_d - j*e_q, which co-rotates
with the oscillator states; the negative-sequence component is conjugated
before it reaches its oscillator because that oscillator's feedback enters
with the (beta, alpha) swap of its internal equations.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

from .errors import DegenerateReference
from .frames import MIN_REFERENCE, PhaseReference
from .signals import QuadPair

SQRT2 = math.sqrt(2.0)
SQRT3_2 = math.sqrt(3.0) / 2.0
A = cmath.exp(2j * math.pi / 3)
A2 = A * A


@dataclass(frozen=True)
class OscParams:
    """Oscillator gains. ``c_osc`` is the virtual capacitance C.

    ``feedback_sign`` scales the sequence feedback before it enters the
    oscillators; -1 treats the inverter current as drawn from the virtual
    capacitor, which is what makes the power loop contract.
    ``qmap`` selects the quadrature maps for the negative and zero sequence
    references: "orthogonal" yields true lagging companions for every
    sequence, "printed" uses the literal (-b, -a) and (a, b) maps.
    """

    xi: float = 0.004
    k_v: float = 1.0
    k_i: float = 1.0
    c_osc: float = 0.064
    v_n: float = 50.0
    omega_n: float = 2 * math.pi * 50
    feedback_sign: float = -1.0
    qmap: str = "orthogonal"

    def __post_init__(self):
        for name in ("xi", "k_v", "k_i", "c_osc", "v_n", "omega_n"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.qmap not in ("orthogonal", "printed"):
            raise ValueError(f"unknown qmap {self.qmap!r}")

    @property
    def amplitude(self) -> float:
        return SQRT2 * self.v_n

    @property
    def amplitude_bandwidth(self) -> float:
        return self.xi * 2 * self.v_n**2 / self.k_v**2


class SequenceFeedback(NamedTuple):
    pos: tuple[float, float]
    neg: tuple[float, float]
    zero: tuple[float, float]


class PowerSetpoints(NamedTuple):
    p_star: tuple[float, float, float]
    q_star: tuple[float, float, float]

    @classmethod
    def total(cls, p: float, q: float = 0.0) -> "PowerSetpoints":
        """Split three-phase totals equally over the phases."""
        return cls((p / 3,) * 3, (q / 3,) * 3)


@dataclass
class SvocState:
    """Oscillator states; ``neg`` and ``zero`` hold the internal circles."""

    pos: tuple[float, float]
    neg: tuple[float, float]
    zero: tuple[float, float]

    @classmethod
    def initial(cls, p: OscParams, angle: float = 0.0) -> "SvocState":
        r = p.amplitude
        start = (r * math.cos(angle), -r * math.sin(angle))
        return cls(start, (r, 0.0), (r, 0.0))


def _hopf_gain(p: OscParams, va: float, vb: float) -> float:
    return p.xi / p.k_v**2 * (2 * p.v_n**2 - (va * va + vb * vb))


def pos_osc_derivatives(state, fb, p: OscParams) -> tuple[float, float]:
    va, vb = state
    ia, ib = fb
    g = _hopf_gain(p, va, vb)
    k = p.k_v * p.k_i / p.c_osc
    return (g * va + p.omega_n * vb + k * ib,
            g * vb - p.omega_n * va - k * ia)


def _internal_norm(v) -> float:
    mag = math.hypot(v[0], v[1])
    if not mag >= MIN_REFERENCE:
        raise DegenerateReference(f"sequence oscillator magnitude {mag:.3g} V collapsed")
    return mag


def neg_osc_step_outputs(state, fb, p: OscParams):
    """Internal derivatives and deviation outputs of the negative-sequence oscillator."""
    va, vb = state
    ia, ib = fb
    mag = _internal_norm(state)
    g = _hopf_gain(p, va, vb)
    k = p.k_v * p.k_i / p.c_osc
    deriv = (g * va + p.omega_n * vb + k * (-ib),
             g * vb - p.omega_n * va - k * ia)
    dev = mag - p.amplitude
    return deriv, dev * va / mag, -dev * vb / mag


def zero_osc_step_outputs(state, fb, p: OscParams):
    """Internal derivatives and deviation outputs of the zero-sequence oscillator."""
    va, vb = state
    ia, ib = fb
    mag = _internal_norm(state)
    g = _hopf_gain(p, va, vb)
    k = p.k_v * p.k_i / p.c_osc
    deriv = (g * va + p.omega_n * vb + k * ib,
             g * vb - p.omega_n * va - k * ia)
    dev = mag - p.amplitude
    return deriv, dev * va / mag, dev * vb / mag


def _clarke_inverse(x: float, y: float) -> tuple[float, float, float]:
    return x, -0.5 * x + SQRT3_2 * y, -0.5 * x - SQRT3_2 * y


def synthesize_references(pos, neg, zero, qmap: str = "orthogonal") -> tuple[PhaseReference, ...]:
    """Sum the three sequence contributions into per-phase (v_d*, v_q*)."""
    pa, pb = pos
    na, nb = neg
    za, zb = zero
    pd = _clarke_inverse(pa, pb)
    pq = _clarke_inverse(-pb, pa)
    nd = _clarke_inverse(na, nb)
    if qmap == "printed":
        nq = _clarke_inverse(-nb, -na)
        zq = zb
    else:
        nq = _clarke_inverse(nb, -na)
        zq = -zb
    return tuple(PhaseReference(pd[x] + nd[x] + za, pq[x] + nq[x] + zq) for x in range(3))


def current_references(refs, sp: PowerSetpoints) -> tuple[QuadPair, QuadPair, QuadPair]:
    """Per-phase instantaneous current references from P*, Q*."""
    out = []
    for (vd, vq), p, q in zip(refs, sp.p_star, sp.q_star):
        m2 = vd * vd + vq * vq
        if not m2 >= MIN_REFERENCE**2:
            raise DegenerateReference("current reference from a collapsed voltage reference")
        g = 2.0 / m2
        out.append(QuadPair(g * (vd * p + vq * q), g * (vq * p - vd * q)))
    return tuple(out)


def _complexify(pair) -> complex:
    return complex(pair[0], -pair[1])


def sequence_phasors(errors) -> tuple[complex, complex, complex]:
    """Fortescue first rows applied to complexified per-phase errors."""
    ea, eb, ec = (_complexify(e) for e in errors)
    pos = (ea + A * eb + A2 * ec) / 3
    neg = (ea + A2 * eb + A * ec) / 3
    zero = (ea + eb + ec) / 3
    return pos, neg, zero


def feedback_decompose(i_inv, i_ref) -> SequenceFeedback:
    errors = [(m[0] - r[0], m[1] - r[1]) for m, r in zip(i_inv, i_ref)]
    pos, neg, zero = sequence_phasors(errors)
    return SequenceFeedback((pos.real, pos.imag), (neg.real, -neg.imag), (zero.real, zero.imag))


def recompose_feedback(fb: SequenceFeedback) -> tuple[QuadPair, QuadPair, QuadPair]:
    """Inverse of :func:`feedback_decompose` applied to the error pairs."""
    pos = complex(*fb.pos)
    neg = complex(fb.neg[0], -fb.neg[1])
    zero = complex(*fb.zero)
    phases = (pos + neg + zero, A2 * pos + A * neg + zero, A * pos + A2 * neg + zero)
    return tuple(QuadPair(z.real, -z.imag) for z in phases)


def _derivs(y, fb: SequenceFeedback, p: OscParams):
    s = p.feedback_sign
    d_pos = pos_osc_derivatives(y[0:2], (s * fb.pos[0], s * fb.pos[1]), p)
    d_neg = neg_osc_step_outputs(y[2:4], (s * fb.neg[0], s * fb.neg[1]), p)[0]
    d_zero = zero_osc_step_outputs(y[4:6], (s * fb.zero[0], s * fb.zero[1]), p)[0]
    return (*d_pos, *d_neg, *d_zero)


def sequence_outputs(state: SvocState, p: OscParams):
    """Current (pos, neg, zero) output pairs of the oscillator bank."""
    _, na, nb = neg_osc_step_outputs(state.neg, (0.0, 0.0), p)
    _, za, zb = zero_osc_step_outputs(state.zero, (0.0, 0.0), p)
    return state.pos, (na, nb), (za, zb)


def svoc_references(state: SvocState, p: OscParams) -> tuple[PhaseReference, ...]:
    return synthesize_references(*sequence_outputs(state, p), qmap=p.qmap)


def svoc_step(state: SvocState, feedback: SequenceFeedback, params: OscParams, dt: float):
    """RK4 step of all three oscillators with the feedback held over ``dt``."""
    y0 = (*state.pos, *state.neg, *state.zero)
    k1 = _derivs(y0, feedback, params)
    y1 = tuple(y + 0.5 * dt * k for y, k in zip(y0, k1))
    k2 = _derivs(y1, feedback, params)
    y2 = tuple(y + 0.5 * dt * k for y, k in zip(y0, k2))
    k3 = _derivs(y2, feedback, params)
    y3 = tuple(y + dt * k for y, k in zip(y0, k3))
    k4 = _derivs(y3, feedback, params)
    y = tuple(y + dt / 6 * (a + 2 * b + 2 * c + d)
              for y, a, b, c, d in zip(y0, k1, k2, k3, k4))
    new = SvocState(y[0:2], y[2:4], y[4:6])
    return new, svoc_references(new, params)
