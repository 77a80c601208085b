"""Fault detection and feedback estimation for unbalanced faults.

While one or two phases are flagged faulty, the oscillator bank's feedback
for those phases is rebuilt from the healthy phases' currents, so the
controller keeps synchronising off the healthy part of the network.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .errors import WrongFaultCount
from .frames import SyncFrameSample, to_common, to_sync_frame
from .signals import QuadPair


@dataclass(frozen=True)
class DetectorConfig:
    v_n: float = 50.0
    enter_pu: float = 0.85
    exit_pu: float = 0.90
    dwell: float = 0.02


@dataclass
class FaultStatus:
    """Hysteresis state per phase.

    ``low`` is the per-phase detector output; ``faulty`` exposes it only when
    at most two phases are low, since a three-phase sag is balanced and left
    to plain current limiting.
    """

    low: list = field(default_factory=lambda: [False, False, False])
    timers: list = field(default_factory=lambda: [0.0, 0.0, 0.0])

    @property
    def faulty(self) -> tuple[bool, bool, bool]:
        if all(self.low):
            return (False, False, False)
        return tuple(self.low)


def detect_faults(v_pcc_rms: Sequence[float], status: FaultStatus, dt: float,
                  cfg: DetectorConfig = DetectorConfig()) -> list[tuple[int, bool]]:
    """Update ``status`` in place; return the (phase, now_low) transitions."""
    changes = []
    enter = cfg.enter_pu * cfg.v_n
    leave = cfg.exit_pu * cfg.v_n
    for k, v in enumerate(v_pcc_rms):
        crossing = v > leave if status.low[k] else v < enter
        status.timers[k] = status.timers[k] + dt if crossing else 0.0
        if status.timers[k] >= cfg.dwell - 1e-12:
            status.low[k] = not status.low[k]
            status.timers[k] = 0.0
            changes.append((k, status.low[k]))
    return changes


def estimate_one_fault(measured: Sequence[SyncFrameSample], units, faulty: Sequence[bool]) -> SyncFrameSample:
    """Faulty-phase feedback as minus the sum of the two healthy phases.

    The healthy phasors are moved to the common instantaneous frame, summed,
    and mapped back into the faulty phase's own frame.
    """
    if sum(faulty) != 1:
        raise WrongFaultCount(f"expected one faulty phase, got {sum(faulty)}")
    i = faulty.index(True)
    d = q = 0.0
    for j in range(3):
        if j != i:
            pair = to_common(units[j], measured[j])
            d -= pair.d
            q -= pair.q
    return to_sync_frame(units[i], QuadPair(d, q))


def estimate_two_faults(healthy: SyncFrameSample, faulty: Sequence[bool]) -> dict[int, SyncFrameSample]:
    """Copy the healthy phase's phasor into each faulty phase's own frame.

    The per-phase frames already carry the 120-degree offsets, so the copy
    realises the rotation by the sequence-appropriate multiple of 120 degrees.
    """
    if sum(faulty) != 2:
        raise WrongFaultCount(f"expected two faulty phases, got {sum(faulty)}")
    value = SyncFrameSample(*healthy)
    return {k: value for k in range(3) if faulty[k]}


def estimate(measured: Sequence[SyncFrameSample], units, faulty: Sequence[bool]) -> dict[int, SyncFrameSample]:
    n = sum(faulty)
    if n == 1:
        return {faulty.index(True): estimate_one_fault(measured, units, faulty)}
    if n == 2:
        k = list(faulty).index(False)
        return estimate_two_faults(measured[k], faulty)
    return {}


def select_feedback(faulty: Sequence[bool], measured: Sequence, estimated: dict) -> list:
    return [estimated[k] if faulty[k] else measured[k] for k in range(3)]
