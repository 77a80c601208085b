"""Per-phase instantaneous <-> synchronous frame transforms.

Each phase gets its own frame, anchored on the oscillator's reference pair
(v_d*, v_q*) for that phase. The forward map is the symmetric orthogonal
matrix [[ud, uq], [uq, -ud]], which is its own inverse.
"""
from __future__ import annotations

import math
from typing import NamedTuple

from .errors import DegenerateReference
from .signals import QuadPair

MIN_REFERENCE = 1e-6


class PhaseReference(NamedTuple):
    v_d_star: float
    v_q_star: float


class SyncFrameSample(NamedTuple):
    d: float
    q: float


def ref_magnitude(ref: PhaseReference) -> SyncFrameSample:
    return SyncFrameSample(math.hypot(ref[0], ref[1]), 0.0)


def unit_direction(ref: PhaseReference) -> tuple[float, float]:
    mag = math.hypot(ref[0], ref[1])
    if not mag >= MIN_REFERENCE:
        raise DegenerateReference(f"reference magnitude {mag:.3g} V below {MIN_REFERENCE} V")
    return ref[0] / mag, ref[1] / mag


def to_sync_frame(unit: tuple[float, float], sample: QuadPair) -> SyncFrameSample:
    ud, uq = unit
    sd, sq = sample
    return SyncFrameSample(ud * sd + uq * sq, uq * sd - ud * sq)


def to_instantaneous(unit: tuple[float, float], cmd: SyncFrameSample) -> float:
    return unit[0] * cmd[0] + unit[1] * cmd[1]


def to_common(unit: tuple[float, float], value: SyncFrameSample) -> QuadPair:
    """Map a synchronous-frame value back to its instantaneous (d, q) pair."""
    d, q = to_sync_frame(unit, value)
    return QuadPair(d, q)
