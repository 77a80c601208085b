"""One controller tick of the S-VOC grid-forming inverter."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import frt
from .frames import ref_magnitude, to_common, to_instantaneous, to_sync_frame, unit_direction
from .nested_control import PhaseLoopState, PiGains, current_loop_step, voltage_loop_step
from .signals import QsgState, QuadPair, SlidingRms, qsg_step, sliding_rms
from .svoc import (OscParams, PowerSetpoints, SvocState, feedback_decompose,
                   current_references, svoc_references, svoc_step)


@dataclass
class ControllerConfig:
    osc: OscParams = field(default_factory=OscParams)
    gains: PiGains = field(default_factory=PiGains)
    i_max: float = 10.0
    t_s: float = 50e-6
    # PCC capacitance assumed by the capacitor-current feedforward
    c_f: float = 20e-6
    frt_enabled: bool = True
    detector: frt.DetectorConfig = field(default_factory=frt.DetectorConfig)


class SvocController:
    """Measurements in, per-phase inverter voltage commands out.

    The quadrature pair for each measured channel is the raw sample with the
    SOGI's lagging output as companion, so the proportional paths act on the
    instantaneous signal while the integrators and limiters see the phasor.
    """

    name = "svoc"

    def __init__(self, cfg: ControllerConfig, setpoints: PowerSetpoints, angle: float = 0.0):
        self.cfg = cfg
        self.setpoints = setpoints
        w = cfg.osc.omega_n
        self.state = SvocState.initial(cfg.osc, angle)
        self.refs = svoc_references(self.state, cfg.osc)
        # start synchronised: the PCC voltage is assumed to sit on the initial reference
        self.v_qsg = [QsgState(w, x_d=d, x_q=q, u_prev=d) for d, q in self.refs]
        self.i_qsg = [QsgState(w) for _ in range(3)]
        self.o_qsg = [QsgState(w) for _ in range(3)]
        self.v_rms = [SlidingRms.for_period(w, cfg.t_s) for _ in range(3)]
        self.loops = [PhaseLoopState.from_rms_limit(cfg.i_max) for _ in range(3)]
        self.status = frt.FaultStatus()
        self.v_pairs = [QuadPair(0.0, 0.0)] * 3
        self.i_pairs = [QuadPair(0.0, 0.0)] * 3
        self.i_cmd_mag = [0.0, 0.0, 0.0]
        self.transitions: list[tuple[int, bool]] = []

    @property
    def faulty(self):
        return self.status.faulty if self.cfg.frt_enabled else (False, False, False)

    def amplitudes(self) -> tuple[float, float, float]:
        r = self.cfg.osc.amplitude
        return (math.hypot(*self.state.pos),
                math.hypot(*self.state.neg) - r,
                math.hypot(*self.state.zero) - r)

    def measure(self, v_meas, i_meas, i_out):
        dt = self.cfg.t_s
        vp = [QuadPair(v, qsg_step(s, v, dt).q) for s, v in zip(self.v_qsg, v_meas)]
        lp = [QuadPair(i, qsg_step(s, i, dt).q) for s, i in zip(self.i_qsg, i_meas)]
        ip = [QuadPair(i, qsg_step(s, i, dt).q) for s, i in zip(self.o_qsg, i_out)]
        self.v_pairs, self.i_pairs = vp, ip
        return vp, lp, ip

    def inner_loops(self, refs, units, v_sync, l_sync, i_sync) -> list[float]:
        """Per-phase voltage then current loop; returns instantaneous commands."""
        cfg = self.cfg
        wc = cfg.osc.omega_n * cfg.c_f
        v_out = []
        for x in range(3):
            loop = self.loops[x]
            v_ref = ref_magnitude(refs[x]).d
            # output current plus the capacitor current of the reference (leads by 90 degrees)
            i_ff = (i_sync[x][0], i_sync[x][1] - wc * v_ref)
            i_cmd = voltage_loop_step(loop, v_ref, v_sync[x], i_ff, cfg.gains, cfg.t_s)
            self.i_cmd_mag[x] = math.hypot(*i_cmd)
            v_cmd = current_loop_step(loop, i_cmd, l_sync[x], v_sync[x], cfg.gains, cfg.t_s)
            v_out.append(to_instantaneous(units[x], v_cmd))
        return v_out

    def tick(self, v_meas, i_meas, i_out) -> list[float]:
        """``i_meas``: filter inductor currents; ``i_out``: filter output currents."""
        cfg = self.cfg
        dt = cfg.t_s
        vp, lp, ip = self.measure(v_meas, i_meas, i_out)

        refs = self.refs
        units = [unit_direction(r) for r in refs]
        i_star = current_references(refs, self.setpoints)
        v_sync = [to_sync_frame(u, p) for u, p in zip(units, vp)]
        i_sync = [to_sync_frame(u, p) for u, p in zip(units, ip)]
        l_sync = [to_sync_frame(u, p) for u, p in zip(units, lp)]

        rms = [sliding_rms(s, v) for s, v in zip(self.v_rms, v_meas)]
        self.transitions = frt.detect_faults(rms, self.status, dt, cfg.detector)
        faulty = self.faulty
        if any(faulty):
            chosen = frt.select_feedback(faulty, l_sync, frt.estimate(l_sync, units, faulty))
            fb_pairs = [to_common(u, s) for u, s in zip(units, chosen)]
        else:
            fb_pairs = lp
        feedback = feedback_decompose(fb_pairs, i_star)

        v_out = self.inner_loops(refs, units, v_sync, l_sync, i_sync)
        self.state, self.refs = svoc_step(self.state, feedback, cfg.osc, dt)
        return v_out
