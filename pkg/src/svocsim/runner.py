"""Scenario definition, simulation loop, measurement and output files."""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import yaml

from .baseline_dvoc import DvocController
from .controller import ControllerConfig, SvocController
from .errors import ConfigError, SimulationError
from .frt import DetectorConfig
from .nested_control import PiGains
from .plant import GridEvent, Plant, PlantParams, validate_events
from .signals import QsgState, SlidingRms, lowpass_step, qsg_step, sliding_rms
from .svoc import OscParams, PowerSetpoints

CSV_COLUMNS = ("t", "va", "vb", "vc", "ia", "ib", "ic", "Pa", "Pb", "Pc", "Qa", "Qb", "Qc",
               "irms_a", "irms_b", "irms_c", "fault_a", "fault_b", "fault_c",
               "amp_pos", "amp_neg", "amp_zero")
COL = {name: k for k, name in enumerate(CSV_COLUMNS)}
CONTROLLERS = ("svoc", "dvoc_baseline")
# substeps of the plant per controller tick when dt_plant is not given
PLANT_SUBSTEPS = 5


@dataclass(frozen=True)
class SetpointStep:
    t: float
    p_star: tuple[float, float, float]
    q_star: tuple[float, float, float]


@dataclass
class Scenario:
    name: str
    duration: float
    controller: str = "svoc"
    osc: OscParams = field(default_factory=OscParams)
    plant: PlantParams = field(default_factory=PlantParams)
    gains: PiGains = field(default_factory=PiGains)
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    i_max: float = 10.0
    t_s: float = 50e-6
    dt_plant: float | None = None
    frt_enabled: bool = True
    p_star: tuple[float, float, float] = (0.0, 0.0, 0.0)
    q_star: tuple[float, float, float] = (0.0, 0.0, 0.0)
    steps: list[SetpointStep] = field(default_factory=list)
    grid_events: list[GridEvent] = field(default_factory=list)
    decimation: int = 20
    pq_cutoff: float = 10.0
    initial_angle: float = 0.0
    baseline_loops: str = "per_phase"

    def __post_init__(self):
        if not self.duration > 0:
            raise ConfigError("duration must be positive")
        if self.controller not in CONTROLLERS:
            raise ConfigError(f"controller must be one of {CONTROLLERS}, got {self.controller!r}")
        if self.baseline_loops not in DvocController.LOOPS:
            raise ConfigError(f"baseline_loops must be one of {DvocController.LOOPS}")
        if int(self.decimation) != self.decimation or self.decimation < 1:
            raise ConfigError("decimation must be an integer >= 1")
        if not self.t_s > 0 or not self.i_max > 0:
            raise ConfigError("t_s and i_max must be positive")
        for st in self.steps:
            if not 0 <= st.t <= self.duration:
                raise ConfigError(f"setpoint step at t={st.t} outside [0, duration]")
        for ev in self.grid_events:
            if ev.t_start < 0 or ev.t_end > self.duration + 1e-12:
                raise ConfigError("grid event outside [0, duration]")
        validate_events(self.grid_events)
        _ = self.substeps

    @property
    def substeps(self) -> int:
        if self.dt_plant is None:
            return PLANT_SUBSTEPS
        n = round(self.t_s / self.dt_plant)
        if n < 1 or abs(n * self.dt_plant - self.t_s) > 1e-9 * self.t_s:
            raise ConfigError("dt_plant must divide t_s into a whole number of substeps")
        return n

    def controller_config(self) -> ControllerConfig:
        return ControllerConfig(osc=self.osc, gains=self.gains, i_max=self.i_max, t_s=self.t_s,
                                c_f=self.plant.c_pcc, frt_enabled=self.frt_enabled, detector=self.detector)


# ---------------------------------------------------------------- loading

_SECTIONS = {"osc": OscParams, "plant": PlantParams, "gains": PiGains, "detector": DetectorConfig}
_ROUTE = {f.name: sec for sec, cls in _SECTIONS.items() for f in dataclasses.fields(cls)}
# v_n is shared by the oscillator and the fault detector
_SHARED = {"v_n": ("osc", "detector")}
_SCENARIO_KEYS = {"name", "duration", "controller", "i_max", "t_s", "dt_plant", "frt_enabled",
                  "decimation", "pq_cutoff", "initial_angle", "baseline_loops"}


def _phase_triple(raw: dict, key: str, total_key: str) -> tuple[float, float, float] | None:
    if key in raw:
        vals = raw[key]
        if not isinstance(vals, (list, tuple)) or len(vals) != 3:
            raise ConfigError(f"{key} needs three per-phase values")
        return tuple(float(v) for v in vals)
    if total_key in raw:
        return (float(raw[total_key]) / 3,) * 3
    return None


def _setpoints(raw: dict, base_p=(0.0,) * 3, base_q=(0.0,) * 3):
    p = _phase_triple(raw, "p_star", "p_total")
    q = _phase_triple(raw, "q_star", "q_total")
    return p if p is not None else base_p, q if q is not None else base_q


def scenario_from_dict(raw: dict) -> Scenario:
    """Build a scenario from a flat mapping of parameter names.

    Component parameters (``l_f``, ``xi``, ``kp_v``, ...) may sit at the top
    level; they are routed to the dataclass that owns them.
    """
    raw = dict(raw)
    kwargs: dict = {}
    sections: dict = {sec: {} for sec in _SECTIONS}
    p, q = _setpoints(raw)
    steps = []
    for st in raw.pop("steps", None) or []:
        if "t" not in st:
            raise ConfigError("setpoint step needs a time 't'")
        p, q = _setpoints(st, p, q)
        steps.append(SetpointStep(float(st["t"]), p, q))
    p0, q0 = _setpoints(raw)
    for key in ("p_star", "p_total", "q_star", "q_total"):
        raw.pop(key, None)
    events = []
    for ev in raw.pop("grid_events", None) or []:
        ev = dict(ev)
        try:
            t0, t1 = float(ev.pop("t_start")), float(ev.pop("t_end"))
        except KeyError as exc:
            raise ConfigError(f"grid event missing {exc}") from None
        events.append(GridEvent(t0, t1, {k: float(v) for k, v in ev.items()}))
    for key, value in raw.items():
        if key in _SHARED:
            for sec in _SHARED[key]:
                sections[sec][key] = value
        elif key in _ROUTE:
            sections[_ROUTE[key]][key] = value
        elif key in _SCENARIO_KEYS:
            kwargs[key] = value
        else:
            raise ConfigError(f"unknown scenario key {key!r}")
    if "name" not in kwargs or "duration" not in kwargs:
        raise ConfigError("scenario needs 'name' and 'duration'")
    try:
        built = {sec: cls(**sections[sec]) for sec, cls in _SECTIONS.items()}
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return Scenario(**kwargs, **built, p_star=p0, q_star=q0, steps=steps, grid_events=events)


def load_scenario(path: str | Path) -> Scenario:
    try:
        raw = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"scenario file {path} is not a mapping")
    return scenario_from_dict(raw)


# ------------------------------------------------------------ measurement

def measure_pq(v, i) -> tuple[float, float]:
    """Per-phase P and Q from peak-valued (d, q) pairs of voltage and current.

    Positive Q means the current lags the voltage. The pairs must share one
    rotation (a proper rotating frame, or the stationary quadrature pair).
    """
    return 0.5 * (v[0] * i[0] + v[1] * i[1]), 0.5 * (v[1] * i[0] - v[0] * i[1])


@dataclass
class RunResult:
    scenario: Scenario
    data: np.ndarray  # every controller tick, columns as CSV_COLUMNS
    events: list[str]
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def column(self, name: str) -> np.ndarray:
        return self.data[:, COL[name]]

    def window(self, t0: float, t1: float) -> np.ndarray:
        t = self.data[:, 0]
        return self.data[(t >= t0 - 1e-12) & (t < t1 - 1e-12)]

    def mean(self, name: str, t0: float, t1: float) -> float:
        return float(np.mean(self.window(t0, t1)[:, COL[name]]))

    def metrics(self) -> dict:
        d = self.data
        tail = self.window(max(0.0, self.scenario.duration - 0.2), self.scenario.duration + 1)
        out = {"scenario": self.scenario.name, "controller": self.scenario.controller,
               "ticks": int(d.shape[0]), "error": self.error}
        if len(tail):
            out["final_mean"] = {c: round(float(np.mean(tail[:, COL[c]])), 6)
                                 for c in ("Pa", "Pb", "Pc", "Qa", "Qb", "Qc",
                                           "irms_a", "irms_b", "irms_c")}
        if len(d):
            out["max_irms"] = [round(float(np.max(d[:, COL[c]])), 6)
                               for c in ("irms_a", "irms_b", "irms_c")]
        return out

    def csv_text(self) -> str:
        rows = self.data[:: self.scenario.decimation]
        lines = [",".join(CSV_COLUMNS)]
        for row in rows:
            # rounding first, then + 0.0, keeps "-0.000000" out of the file
            lines.append(",".join(f"{round(x, 6) + 0.0:.6f}" for x in row))
        if self.error:
            lines.append(f"# ERROR {self.error}")
        return "\n".join(lines) + "\n"

    def write(self, out_dir: str | Path) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        stem = f"{self.scenario.name}__{self.scenario.controller}"
        (out / f"{stem}.csv").write_text(self.csv_text())
        (out / f"{stem}.metrics.json").write_text(json.dumps(self.metrics(), indent=2, sort_keys=True) + "\n")
        (out / f"{stem}.events.log").write_text("".join(e + "\n" for e in self.events))
        return out / f"{stem}.csv"


def _fmt_triple(x) -> str:
    return "(" + ", ".join(f"{v:.3f}" for v in x) + ")"


def run_scenario(s: Scenario) -> RunResult:
    """Simulate ``s`` and return the per-tick time series.

    The command computed at tick k from the measurements at the start of the
    tick is applied to the plant over tick k+1 (one tick of computation delay).
    """
    cfg = s.controller_config()
    sp = PowerSetpoints(s.p_star, s.q_star)
    if s.controller == "svoc":
        ctl = SvocController(cfg, sp, s.initial_angle)
    else:
        ctl = DvocController(cfg, sp, s.initial_angle, loops=s.baseline_loops)
    plant = Plant(s.plant, s.grid_events)
    n_sub = s.substeps
    dt = s.t_s
    n_ticks = int(round(s.duration / dt))
    w = s.osc.omega_n

    v_qsg = [QsgState(w) for _ in range(3)]
    i_qsg = [QsgState(w) for _ in range(3)]
    i_rms = [SlidingRms.for_period(w, dt) for _ in range(3)]
    P = [0.0] * 3
    Q = [0.0] * 3
    data = np.empty((n_ticks, len(CSV_COLUMNS)))
    log: list[str] = []
    steps = sorted(s.steps, key=lambda st: st.t)
    boundaries = sorted({(ev.t_start, "start", id(ev)) for ev in s.grid_events}
                        | {(ev.t_end, "end", id(ev)) for ev in s.grid_events})
    by_id = {id(ev): ev for ev in s.grid_events}
    cmd = [r[0] for r in ctl.refs]
    error = None
    k = 0
    try:
        for k in range(n_ticks):
            t = k * dt
            while steps and steps[0].t <= t + 1e-12:
                st = steps.pop(0)
                ctl.setpoints = PowerSetpoints(st.p_star, st.q_star)
                log.append(f"t={t:.6f} setpoint p_star={_fmt_triple(st.p_star)} q_star={_fmt_triple(st.q_star)}")
            while boundaries and boundaries[0][0] <= t + 1e-12:
                tb, kind, ev_id = boundaries.pop(0)
                if kind == "start":
                    log.append(f"t={t:.6f} grid_event start {by_id[ev_id].multipliers}")
                else:
                    log.append(f"t={t:.6f} grid_event end")
            v = plant.v_pcc
            i_inv = plant.i_inv
            i_out = plant.i_out
            new = ctl.tick(v, i_inv, i_out)
            for ph, now_low in ctl.transitions:
                log.append(f"t={t:.6f} fault_{'abc'[ph]} {'detected' if now_low else 'cleared'}")
            row = data[k]
            row[0] = t
            for x in range(3):
                vp = (v[x], qsg_step(v_qsg[x], v[x], dt).q)
                ip = (i_inv[x], qsg_step(i_qsg[x], i_inv[x], dt).q)
                p_x, q_x = measure_pq(vp, ip)
                P[x] = lowpass_step(P[x], p_x, s.pq_cutoff, dt)
                Q[x] = lowpass_step(Q[x], q_x, s.pq_cutoff, dt)
                row[1 + x] = v[x]
                row[4 + x] = i_inv[x]
                row[7 + x] = P[x]
                row[10 + x] = Q[x]
                row[13 + x] = sliding_rms(i_rms[x], i_inv[x])
                row[16 + x] = float(ctl.faulty[x])
            row[19:22] = ctl.amplitudes()
            plant.advance(cmd, t, dt / n_sub, n_sub)
            if not np.all(np.isfinite(plant.x)):
                raise SimulationError("plant state became non-finite")
            cmd = new
        k = n_ticks
    except (SimulationError, ValueError) as exc:
        error = f"{type(exc).__name__} at t={k * dt:.6f}: {exc}"
        log.append(f"t={k * dt:.6f} error {type(exc).__name__}: {exc}")
    return RunResult(s, data[:k], log, error)
