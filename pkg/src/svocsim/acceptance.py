"""Canonical scenario suite and the pass/fail evaluation of its criteria."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from importlib import resources
from typing import Mapping

import numpy as np

from .errors import MissingScenario
from .plant import PHASE_OFFSETS, Plant, PlantParams
from .runner import COL, RunResult, Scenario, load_scenario, run_scenario
from .svoc import (OscParams, SequenceFeedback, SvocState, feedback_decompose, pos_osc_derivatives,
                   recompose_feedback, sequence_outputs)

CANONICAL = (("track_900", "svoc"), ("sag_a_090", "svoc"), ("fault_a_010", "svoc"),
             ("fault_bc_005", "svoc"), ("fault_a_010", "dvoc_baseline"))
RATED_VA = 1000.0
# sliding-rms measurement tolerance on the current limit
RMS_TOLERANCE = 0.01
STEADY_SPAN = 0.3


@dataclass(frozen=True)
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number}. {self.title}: {self.detail}"


def key(s: Scenario) -> str:
    return f"{s.name}__{s.controller}"


def scenario_names() -> list[str]:
    files = resources.files("svocsim") / "scenarios"
    return sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".yaml"))


def canonical_scenario(name: str, controller: str = "svoc") -> Scenario:
    path = resources.files("svocsim") / "scenarios" / f"{name}.yaml"
    with resources.as_file(path) as p:
        s = load_scenario(p)
    s.controller = controller
    return s


def run_canonical(progress=None) -> dict[str, RunResult]:
    out = {}
    for name, ctl in CANONICAL:
        s = canonical_scenario(name, ctl)
        if progress:
            progress(key(s))
        out[key(s)] = run_scenario(s)
    return out


# -------------------------------------------------------------- windows

def _fault_event(r: RunResult):
    evs = r.scenario.grid_events
    if not evs:
        raise ValueError(f"{r.scenario.name} has no grid event")
    return evs[0]


def detection_time(r: RunResult) -> float:
    """Fault inception plus one rms window and the detector dwell."""
    ev = _fault_event(r)
    return ev.t_start + 2 * math.pi / r.scenario.osc.omega_n + r.scenario.detector.dwell


def steady_window(r: RunResult) -> tuple[float, float]:
    ev = _fault_event(r)
    return max(detection_time(r), ev.t_end - STEADY_SPAN), ev.t_end


def _preset(r: RunResult, phase: int, t: float) -> float:
    p = r.scenario.p_star
    for st in r.scenario.steps:
        if st.t <= t:
            p = st.p_star
    return p[phase]


def _require(results: Mapping[str, RunResult], k: str) -> RunResult:
    if k not in results:
        raise MissingScenario(k)
    r = results[k]
    if not r.ok:
        raise MissingScenario(f"{k} ended with error: {r.error}")
    return r


# ------------------------------------------------------------- criteria

def criterion_tracking(r: RunResult) -> CriterionResult:
    s = r.scenario
    t_step = s.steps[0].t
    ok = True
    parts = []
    for x, ph in enumerate("abc"):
        p0, p1 = _preset(r, x, t_step - 1e-9), _preset(r, x, t_step)
        p = r.column(f"P{ph}")
        t = r.column("t")
        after = t >= t_step
        final = r.mean(f"P{ph}", s.duration - 0.2, s.duration)
        err = abs(final - p1) / p1
        outside = np.nonzero(after & (np.abs(p - p1) > 0.05 * p1))[0]
        settle = (t[outside[-1]] - t_step + s.t_s) if len(outside) else 0.0
        span = p1 - p0
        overshoot = max(0.0, (np.max(p[after]) - p1) / span) if span > 0 else max(0.0, (p1 - np.min(p[after])) / -span)
        ok &= err <= 0.02 and settle <= 0.25 and overshoot <= 0.05
        parts.append(f"P{ph} {final:.2f} W (err {100 * err:.2f}%, settle {1e3 * settle:.0f} ms, overshoot {100 * overshoot:.2f}%)")
    return CriterionResult(1, "balanced power tracking", bool(ok), "; ".join(parts))


def criterion_sag(r: RunResult) -> CriterionResult:
    ev = _fault_event(r)
    t0, t1 = ev.t_end - 0.2, ev.t_end
    m = {c: r.mean(c, t0, t1) for c in ("Pa", "Pb", "Pc", "Qa", "Qb", "Qc")}
    s_phase = RATED_VA / 3
    pre = [_preset(r, x, t0) for x in range(3)]
    ok = (m["Qa"] > 0 and abs(m["Pb"] - pre[1]) <= 0.05 * pre[1] and abs(m["Pc"] - pre[2]) <= 0.05 * pre[2]
          and abs(m["Qb"]) <= 0.1 * s_phase and abs(m["Qc"]) <= 0.1 * s_phase)
    detail = ", ".join(f"{k} {v:.2f}" for k, v in m.items())
    return CriterionResult(2, "unbalanced sag support", bool(ok), detail)


def _faulty_phases(r: RunResult) -> list[int]:
    return ["abc".index(ph) for ph in _fault_event(r).multipliers]


def criterion_one_fault(r: RunResult) -> CriterionResult:
    limit = r.scenario.i_max * (1 + RMS_TOLERANCE)
    (k,) = _faulty_phases(r)
    ph = "abc"[k]
    w = r.window(detection_time(r), _fault_event(r).t_end)
    peak_rms = float(np.max(w[:, COL[f"irms_{ph}"]]))
    t0, t1 = steady_window(r)
    q = r.mean(f"Q{ph}", t0, t1)
    healthy = [x for x in range(3) if x != k]
    ps = {x: r.mean(f"P{'abc'[x]}", t0, t1) for x in healthy}
    ok = peak_rms <= limit and q > 0 and all(abs(ps[x] - _preset(r, x, t0)) <= 0.1 * _preset(r, x, t0) for x in healthy)
    detail = (f"max rms(i_{ph}) {peak_rms:.4f} A (limit {limit:.3f}), Q_{ph} {q:.2f} var, "
              + ", ".join(f"P{'abc'[x]} {ps[x]:.2f} W" for x in healthy))
    return CriterionResult(3, "one-phase fault ride-through", bool(ok), detail)


def criterion_two_faults(r: RunResult) -> CriterionResult:
    faulty = _faulty_phases(r)
    (h,) = [x for x in range(3) if x not in faulty]
    t0, t1 = steady_window(r)
    limit = r.scenario.i_max * (1 + RMS_TOLERANCE)
    rms = {x: float(np.max(r.window(t0, t1)[:, COL[f"irms_{'abc'[x]}"]])) for x in faulty}
    qs = {x: r.mean(f"Q{'abc'[x]}", t0, t1) for x in faulty}
    p_h = r.mean(f"P{'abc'[h]}", t0, t1)
    pre = _preset(r, h, t0)
    ok = all(v <= limit for v in rms.values()) and all(v > 0 for v in qs.values()) and abs(p_h - pre) <= 0.1 * pre
    detail = ", ".join(f"rms(i_{'abc'[x]}) {rms[x]:.4f} A, Q{'abc'[x]} {qs[x]:.2f} var" for x in faulty)
    detail += f" (limit {limit:.3f}), P{'abc'[h]} {p_h:.2f} W"
    return CriterionResult(4, "two-phase fault ride-through", bool(ok), detail)


def criterion_baseline(base: RunResult, svoc: RunResult) -> CriterionResult:
    (k,) = _faulty_phases(base)
    ph = "abc"[k]
    t0, t1 = steady_window(base)
    limit = base.scenario.i_max * (1 + RMS_TOLERANCE)
    rms = float(np.max(base.window(t0, t1)[:, COL[f"irms_{ph}"]]))
    healthy = [x for x in range(3) if x != k]
    frac_b = {x: base.mean(f"P{'abc'[x]}", t0, t1) / _preset(base, x, t0) for x in healthy}
    s0, s1 = steady_window(svoc)
    frac_s = {x: svoc.mean(f"P{'abc'[x]}", s0, s1) / _preset(svoc, x, s0) for x in healthy}
    ok = rms <= limit and all(v < 0.25 for v in frac_b.values()) and all(v >= 0.9 for v in frac_s.values())
    detail = (f"baseline rms(i_{ph}) {rms:.4f} A, healthy P/preset baseline "
              + ", ".join(f"{100 * v:.1f}%" for v in frac_b.values())
              + " vs S-VOC " + ", ".join(f"{100 * v:.1f}%" for v in frac_s.values()))
    return CriterionResult(5, "baseline failure reproduction", bool(ok), detail)


# --------------------------------------------------------- static checks

def free_oscillator(p: OscParams = OscParams(), duration: float = 1.5, dt: float = 50e-6,
                    start: float = 0.5) -> tuple[float, float]:
    """Amplitude and frequency of the unforced positive oscillator after ``duration``.

    Frequency is the unwrapped angle advance over the final 0.5 s.
    """
    v = (start * p.amplitude, 0.0)
    f = lambda s: pos_osc_derivatives(s, (0.0, 0.0), p)
    n = int(round(duration / dt))
    n_tail = int(round(0.5 / dt))
    angle = 0.0
    prev = math.atan2(v[1], v[0])
    for k in range(n):
        k1 = f(v)
        k2 = f((v[0] + 0.5 * dt * k1[0], v[1] + 0.5 * dt * k1[1]))
        k3 = f((v[0] + 0.5 * dt * k2[0], v[1] + 0.5 * dt * k2[1]))
        k4 = f((v[0] + dt * k3[0], v[1] + dt * k3[1]))
        v = tuple(v[i] + dt / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]) for i in range(2))
        cur = math.atan2(v[1], v[0])
        if k >= n - n_tail:
            angle += (prev - cur + math.pi) % (2 * math.pi) - math.pi
        prev = cur
    return math.hypot(*v), angle / (2 * math.pi * n_tail * dt)


def criterion_oscillator() -> CriterionResult:
    p = OscParams()
    amp, freq = free_oscillator(p)
    f_n = p.omega_n / (2 * math.pi)
    ea = abs(amp - p.amplitude) / p.amplitude
    ef = abs(freq - f_n) / f_n
    return CriterionResult(6, "oscillator limit cycle", ea <= 1e-3 and ef <= 1e-4,
                           f"amplitude {amp:.5f} V (rel err {ea:.2e}), frequency {freq:.6f} Hz (rel err {ef:.2e})")


def sequence_checks(n: int = 200, seed: int = 7) -> dict[str, float]:
    rng = np.random.default_rng(seed)
    zero_ref = [(0.0, 0.0)] * 3
    rt = bal = circ = 0.0
    p = OscParams()
    for _ in range(n):
        pairs = [tuple(rng.uniform(-20, 20, 2)) for _ in range(3)]
        back = recompose_feedback(feedback_decompose(pairs, zero_ref))
        scale = max(max(abs(c) for c in pr) for pr in pairs)
        rt = max(rt, max(abs(b[i] - a[i]) for a, b in zip(pairs, back) for i in range(2)) / scale)
        amp, th = rng.uniform(1, 20), rng.uniform(0, 2 * math.pi)
        # balanced set in phase order a, b, c with b leading a
        bal_pairs = [(amp * math.cos(th + o), amp * math.sin(th + o)) for o in PHASE_OFFSETS]
        fb = feedback_decompose(bal_pairs, zero_ref)
        bal = max(bal, math.hypot(*fb.neg) / amp, math.hypot(*fb.zero) / amp)
        ang1, ang2 = rng.uniform(0, 2 * math.pi, 2)
        r = p.amplitude
        st = SvocState((r, 0.0), (r * math.cos(ang1), r * math.sin(ang1)), (r * math.cos(ang2), r * math.sin(ang2)))
        _, neg, zero = sequence_outputs(st, p)
        circ = max(circ, *map(abs, neg), *map(abs, zero))
    return {"round_trip": rt, "balanced_rejection": bal, "on_circle": circ}


def criterion_sequences() -> CriterionResult:
    c = sequence_checks()
    ok = c["round_trip"] <= 1e-12 and c["balanced_rejection"] <= 1e-6 and c["on_circle"] <= 1e-9
    return CriterionResult(7, "sequence-math properties", ok,
                           ", ".join(f"{k} {v:.2e}" for k, v in c.items()))


def mesh_phasors(params: PlantParams, v_inv: complex, e: complex, omega: float) -> dict[str, complex]:
    """Steady-state phasors of one phase of the four-wire plant by mesh analysis.

    Mesh 1: inverter, L_f, C. Mesh 2: C, L_g, grid. Mesh 3 (optional): C, load.
    Mesh currents flow clockwise; the capacitor is shared by every mesh.
    """
    zf = params.r_f + 1j * omega * params.l_f
    zg = params.r_g + 1j * omega * params.l_g
    zc = 1 / (1j * omega * params.c_pcc)
    has_load = params.load_r is not None or params.load_l is not None
    if has_load:
        zl = (params.load_r or 0.0) + 1j * omega * (params.load_l or 0.0)
        z = np.array([[zf + zc, -zc, -zc], [-zc, zc + zg, zc], [-zc, zc, zc + zl]])
        rhs = np.array([v_inv, -e, 0.0])
    else:
        z = np.array([[zf + zc, -zc], [-zc, zc + zg]])
        rhs = np.array([v_inv, -e])
    m = np.linalg.solve(z, rhs)
    i_f = m[0]
    i_g = m[1]
    i_l = m[2] if has_load else 0.0
    return {"i_f": i_f, "v_c": zc * (i_f - i_g - i_l), "i_g": i_g}


def random_operating_points(n: int = 5, seed: int = 11):
    rng = np.random.default_rng(seed)
    for k in range(n):
        load = k % 2 == 1
        params = PlantParams(r_f=float(rng.uniform(0.3, 1.0)), r_g=float(rng.uniform(0.3, 1.0)),
                             load_r=float(rng.uniform(5, 100)) if load else None,
                             load_l=float(rng.uniform(2e-3, 20e-3)) if load else None)
        amps = rng.uniform(0.6, 1.1, 3)
        phases = rng.uniform(-0.5, 0.5, 3)
        mults = rng.uniform(0.1, 1.0, 3)
        yield params, amps, phases, mults


def simulate_phasors(params: PlantParams, amps, phases, mults, t_end: float = 0.3,
                     dt: float = 10e-6) -> dict[str, np.ndarray]:
    """Drive the plant with fixed sinusoids and extract fundamental phasors.

    The inverter voltage is held over each step at its mid-step value.
    """
    from .plant import GridEvent
    plant = Plant(params, [GridEvent(0.0, t_end + 1.0, dict(zip("abc", map(float, mults))))])
    w = params.omega_ng
    peak = math.sqrt(2) * params.v_ng
    n = int(round(t_end / dt))
    n_per = int(round(2 * math.pi / w / dt))
    n_fit = 5 * n_per
    acc = {name: np.zeros(3, dtype=complex) for name in ("i_f", "v_c", "i_g")}
    for k in range(n):
        t = k * dt
        tm = t + 0.5 * dt
        v = [a * peak * math.cos(w * tm + o + ph) for a, o, ph in zip(amps, PHASE_OFFSETS, phases)]
        plant.advance(v, t, dt, 1)
        if k >= n - n_fit:
            rot = cmath.exp(-1j * w * (t + dt))
            acc["i_f"] += plant.x[0:3] * rot
            acc["v_c"] += plant.x[3:6] * rot
            acc["i_g"] += plant.x[6:9] * rot
    return {name: 2 * val / n_fit for name, val in acc.items()}


def plant_oracle_errors() -> list[tuple[float, float]]:
    """(max magnitude rel error, max phase error in degrees) per operating point."""
    out = []
    for params, amps, phases, mults in random_operating_points():
        sim = simulate_phasors(params, amps, phases, mults)
        peak = math.sqrt(2) * params.v_ng
        worst_mag = worst_ph = 0.0
        for x, o in enumerate(PHASE_OFFSETS):
            vi = amps[x] * peak * cmath.exp(1j * (o + phases[x]))
            e = mults[x] * peak * cmath.exp(1j * o)
            ref = mesh_phasors(params, vi, e, params.omega_ng)
            for name, z in ref.items():
                s = sim[name][x]
                worst_mag = max(worst_mag, abs(abs(s) - abs(z)) / abs(z))
                worst_ph = max(worst_ph, abs(math.degrees(cmath.phase(s / z))))
        out.append((worst_mag, worst_ph))
    return out


def criterion_plant() -> CriterionResult:
    errs = plant_oracle_errors()
    mag = max(e[0] for e in errs)
    ph = max(e[1] for e in errs)
    return CriterionResult(8, "plant phasor oracle", mag <= 5e-3 and ph <= 0.5,
                           f"{len(errs)} points, worst magnitude {100 * mag:.4f}%, worst phase {ph:.4f} deg")


def determinism_probe() -> Scenario:
    from .plant import GridEvent
    return Scenario("determinism_probe", 0.25, p_star=(200.0,) * 3,
                    grid_events=[GridEvent(0.1, 0.25, {"a": 0.1})], decimation=5)


def criterion_determinism() -> CriterionResult:
    a = run_scenario(determinism_probe()).csv_text()
    b = run_scenario(determinism_probe()).csv_text()
    return CriterionResult(9, "determinism", a == b, f"{len(a)} bytes, identical={a == b}")


def check_acceptance(results: Mapping[str, RunResult], static: bool = True) -> list[CriterionResult]:
    """Evaluate every criterion; ``results`` is keyed ``<scenario>__<controller>``."""
    svoc_fault = _require(results, "fault_a_010__svoc")
    report = [
        criterion_tracking(_require(results, "track_900__svoc")),
        criterion_sag(_require(results, "sag_a_090__svoc")),
        criterion_one_fault(svoc_fault),
        criterion_two_faults(_require(results, "fault_bc_005__svoc")),
        criterion_baseline(_require(results, "fault_a_010__dvoc_baseline"), svoc_fault),
    ]
    if static:
        report += [criterion_oscillator(), criterion_sequences(), criterion_plant(), criterion_determinism()]
    return report
