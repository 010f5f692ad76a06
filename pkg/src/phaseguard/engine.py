"""Multi-rate simulation loop.

The electrical plant is integrated at ``dt_electrical`` by the compiled
kernel.  Junction and resistor temperatures advance at ``dt_thermal``; the
supervisory detectors, the protection state machine and the discharge
controller run at ``dt_supervisory``.  A fast short-circuit trip interrupts
the running block so the state machine reacts at the trip instant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernel as K
from .circuit import GATE_NAMES, Gate, steady_state_currents
from .config import ScenarioConfig
from .detection import (
    FAST_DETECTOR,
    SHORT_CIRCUIT,
    Detection,
    SupervisoryDetectors,
    SupervisoryMeasurement,
)
from .discharge import active_discharge_command
from .faults import (
    GateInjection,
    Overcurrent,
    Overvoltage,
    PhaseOpen,
    SensorSpoof,
    SwitchShortCircuit,
    r_th_multiplier,
)
from .protection import (
    Degraded,
    FsmMeasurements,
    Normal,
    Recovering,
    contactor_closed,
    describe,
    fsm_step,
    gate_override,
    mode,
    reconfigure_references,
)
from .thermal import resistor_step, thermal_step

class SimulationDiverged(RuntimeError):
    def __init__(self, t: float, dump: dict):
        super().__init__(f"numerical divergence at t={t:.9g} s: {dump}")
        self.t = t
        self.dump = dump


@dataclass
class Calibration:
    sc_threshold: float
    ac_peak: float
    i_nominal_rms: float
    p_reference: float
    v_mean: float

    def to_dict(self) -> dict:
        return dict(vars(self))


@dataclass
class Transition:
    t: float
    src: str
    dst: str


@dataclass
class Trace:
    config: ScenarioConfig
    calibration: Calibration
    ticks: dict[str, np.ndarray]
    transitions: list[Transition]
    detections: list[Detection]
    event_windows: list[dict]
    energy: dict[str, float]
    extra_rows: list[dict] = field(default_factory=list)
    # Steps in which the controller (not a fault) commanded both switches of a leg on.
    commanded_shoot_through: int = 0

    @property
    def n_phases(self) -> int:
        return self.config.circuit.n_phases


def _fault_arrays(cfg: ScenarioConfig):
    eng = cfg.engine
    never = np.iinfo(np.int64).max
    code, leg, value, k0, k1 = [], [], [], [], []
    for ev in cfg.faults:
        kd = ev.kind
        if isinstance(kd, SwitchShortCircuit):
            c, lg, val = (K.F_HIGH_SHORT if kd.which == "High" else K.F_LOW_SHORT), kd.leg, 0.0
        elif isinstance(kd, PhaseOpen):
            c, lg, val = K.F_OPEN, kd.leg, 0.0
        elif isinstance(kd, GateInjection):
            c, lg, val = K.F_INJECT, kd.leg, float(int(kd.forced))
        elif isinstance(kd, Overvoltage):
            c, lg, val = K.F_SURGE, 0, kd.source_surge_volts
        elif isinstance(kd, Overcurrent):
            c, lg, val = K.F_RLOAD_DIV, 0, kd.load_r_drop_factor
        elif isinstance(kd, SensorSpoof):
            if kd.channel == "v_dc":
                c, lg, val = K.F_SPOOF_V, 0, kd.offset
            elif kd.channel.startswith("i"):
                c, lg, val = K.F_SPOOF_I, int(kd.channel[1:]), kd.offset
            else:
                continue  # junction spoof is applied at the thermal rate
        else:
            continue  # thermal overload is applied at the thermal rate
        code.append(c)
        leg.append(lg)
        value.append(val)
        k0.append(eng.steps(ev.t_start))
        k1.append(never if math.isinf(ev.t_clear) else eng.steps(ev.t_clear))
    return (np.array(code, dtype=np.int64), np.array(leg, dtype=np.int64), np.array(value, dtype=float),
            np.array(k0, dtype=np.int64), np.array(k1, dtype=np.int64))


class Simulator:
    """One run of one scenario.  Not reusable."""

    def __init__(self, cfg: ScenarioConfig, calibration: Calibration | None = None, arm_detector: bool = True):
        self.cfg = cfg
        eng = cfg.engine
        p = cfg.circuit
        n = p.n_phases
        self.n = n
        self.dt = eng.dt_electrical
        self.n_steps = eng.steps(eng.t_end)
        self.sup_every = int(round(eng.dt_supervisory / eng.dt_electrical))
        self.th_every = int(round(eng.dt_thermal / eng.dt_electrical))
        sc = cfg.detector.sc
        sample_every = max(1, int(round(1.0 / (sc.sample_rate * eng.dt_electrical))))
        self.calibration = calibration

        threshold = sc.trip_threshold
        if threshold is None:
            threshold = calibration.sc_threshold if calibration is not None else math.inf
        self.pp = np.zeros(K.N_PARAMS)
        self.pp[K.P_DT] = eng.dt_electrical
        self.pp[K.P_VSRC] = p.v_source
        self.pp[K.P_RSRC] = p.r_source
        self.pp[K.P_CDC] = p.c_dc
        self.pp[K.P_ESR] = p.esr_dc
        self.pp[K.P_RON] = p.r_on
        self.pp[K.P_RLOAD] = p.r_load
        self.pp[K.P_LLOAD] = p.l_load
        self.pp[K.P_EMF] = p.emf_amplitude
        self.pp[K.P_FREQ] = p.emf_freq
        self.pp[K.P_RBLEED] = p.r_bleed
        self.pp[K.P_FPWM] = p.f_pwm
        self.pp[K.P_RACTIVE] = cfg.discharge.r_active
        dt_sample = sample_every * eng.dt_electrical
        self.pp[K.P_ALPHA] = sc.hp_time_constant / (sc.hp_time_constant + dt_sample)
        self.pp[K.P_THRESH] = threshold
        self.pp[K.P_SIGV] = eng.noise.sigma_v
        self.pp[K.P_SIGI] = eng.noise.sigma_i
        self.pp[K.P_ESW] = p.e_switch

        self.ctl = np.zeros(K.N_CONTROLS, dtype=np.int64)
        self.ctl[K.C_SOURCE_ON] = 1
        self.ctl[K.C_SAMPLE_EVERY] = sample_every
        self.ctl[K.C_CONFIRM] = sc.confirm_samples
        self.ctl[K.C_NEG_POLARITY] = 1 if sc.polarity == "negative" else 0
        self.ctl[K.C_ARMED] = 1 if (arm_detector and math.isfinite(threshold)) else 0
        self.ctl[K.C_NOISE] = 1 if eng.noise.enabled else 0
        self.ctl[K.C_SEED] = np.uint64(eng.seed).astype(np.int64)

        self.faults = _fault_arrays(cfg)

        if cfg.initial.v_dc is not None:
            v0 = cfg.initial.v_dc
        else:
            v0 = calibration.v_mean if calibration is not None else p.v_source
        self.i = steady_state_currents(0.0, p, v0) if cfg.initial.warm_start else np.zeros(n)
        self.st = np.zeros(K.N_STATE)
        self.st[K.S_VDC] = v0
        self.tj = np.full(2 * n, cfg.thermal.t_ambient)
        self.t_res = cfg.thermal.t_ambient

        self.acc = np.zeros(K.N_ACC)
        self.acc[K.A_V_LAST] = v0
        self.i2 = np.zeros(n)
        self.sw_e = np.zeros(2 * n)
        self.last_leg = np.full(n, -1, dtype=np.int64)
        self.out = np.zeros(5, dtype=np.int64)

        # full-resolution capture windows around each fault onset
        w = cfg.output.event_window
        wk0, wk1, woff, self.window_events = [], [], [], []
        total = 0
        for idx, ev in enumerate(cfg.faults):
            a = max(0, eng.steps(ev.t_start - w))
            b = min(self.n_steps, eng.steps(ev.t_start + w))
            if b <= a:
                continue
            wk0.append(a)
            wk1.append(b)
            woff.append(total)
            self.window_events.append((idx, a, b, total))
            total += b - a
        self.w_k0 = np.array(wk0, dtype=np.int64)
        self.w_k1 = np.array(wk1, dtype=np.int64)
        self.w_off = np.array(woff, dtype=np.int64)
        self.rec = np.zeros((total, 4 + 2 * n))

        self.state = Normal()
        self.override = np.full(n, -1, dtype=np.int64)
        self.iso_mask = np.zeros(n, dtype=np.bool_)
        self.refs = np.full(n, p.mod_index)
        self.discharge_on = False

        self.sup = None
        if calibration is not None:
            self.sup = SupervisoryDetectors(cfg.detector.supervisory, n, eng.dt_supervisory,
                                            calibration.i_nominal_rms, calibration.v_mean,
                                            cfg.thermal.t_limit_switch)

        self.e_src = self.e_diss = self.e_emf = self.e_bleed = self.e_active = 0.0
        self.transitions: list[Transition] = []
        self.detections: list[Detection] = []
        self.extra_rows: list[dict] = []
        self.rows: dict[str, list] = {key: [] for key in (
            "t", "v_dc", "tj_max", "t_res", "mode", "state", "flags", "power", "block_dt", "block_mode",
            "e_bleed", "e_active", "e_src", "e_diss", "e_emf", "active_on", "e_stored", "v_meas")}
        self.rows["i"] = []

    # -- helpers -------------------------------------------------------------

    def stored_energy(self) -> float:
        p = self.cfg.circuit
        return 0.5 * p.c_dc * self.st[K.S_VDC] ** 2 + 0.5 * p.l_load * float(np.dot(self.i, self.i))

    def _active_faults(self, t: float):
        out = []
        attack = False
        for ev in self.cfg.faults:
            if ev.active(t):
                out.append((ev.fault_class, -1 if ev.leg is None else ev.leg))
                if isinstance(ev.kind, (SensorSpoof, GateInjection)):
                    attack = True
        return tuple(out), attack

    def _measured_tj(self, t: float) -> np.ndarray:
        offset = sum(ev.kind.offset for ev in self.cfg.faults
                     if ev.active(t) and isinstance(ev.kind, SensorSpoof) and ev.kind.channel == "t_junction")
        return self.tj + offset

    def _flags(self) -> str:
        names = []
        if self.st[K.S_TRIPPED]:
            names.append("SC")
        if self.sup is not None:
            names.extend(sorted(s.upper() for s in self.sup.flags()))
        return "|".join(names)

    def _apply_state(self, new_state, t: float, v_meas: float):
        old = self.state
        if new_state is not old:
            for a, b in zip([describe(old), *new_state.via], [*new_state.via, describe(new_state)]):
                self.transitions.append(Transition(t, a, b))
            if isinstance(new_state, Normal) and isinstance(old, Recovering) and self.sup is not None:
                self.sup.reset()
        self.state = new_state
        self.override[:] = -1
        for leg, g in gate_override(new_state, self.n).items():
            self.override[leg] = int(g)
        self.iso_mask[:] = False
        if isinstance(new_state, Degraded) or mode(new_state) == "Isolating":
            for leg, _, _ in new_state.isolated:
                self.iso_mask[leg] = True
        p = self.cfg.circuit
        if isinstance(new_state, Degraded):
            self.refs = reconfigure_references(new_state.healthy_set, p)
        else:
            self.refs = np.full(self.n, p.mod_index)
        self.ctl[K.C_SOURCE_ON] = 1 if contactor_closed(new_state) else 0

    def _fsm(self, detections, t: float, v_meas: float, tj_meas: np.ndarray):
        active, attack = self._active_faults(t)
        meas = FsmMeasurements(v_dc=v_meas, tj_max=float(tj_meas.max()),
                               t_limit_switch=self.cfg.thermal.t_limit_switch,
                               active_faults=active, attack_active=attack,
                               v_safe=self.cfg.discharge.v_safe)
        new_state, _, discharge_cmd = fsm_step(self.state, detections, meas, t, self.cfg.fsm, self.n)
        self._apply_state(new_state, t, v_meas)
        return discharge_cmd

    def _record(self, t, power, block_dt, block_mode):
        r = self.rows
        r["t"].append(t)
        r["v_dc"].append(float(self.st[K.S_VDC]))
        r["i"].append(self.i.copy())
        r["tj_max"].append(float(self.tj.max()))
        r["t_res"].append(float(self.t_res))
        r["mode"].append(mode(self.state))
        r["state"].append(describe(self.state))
        r["flags"].append(self._flags())
        r["power"].append(power)
        r["block_dt"].append(block_dt)
        r["block_mode"].append(block_mode)
        r["e_bleed"].append(self.e_bleed)
        r["e_active"].append(self.e_active)
        r["e_src"].append(self.e_src)
        r["e_diss"].append(self.e_diss)
        r["e_emf"].append(self.e_emf)
        r["active_on"].append(self.discharge_on)
        r["e_stored"].append(self.stored_energy())
        r["v_meas"].append(float(self.acc[K.A_V_LAST]))

    def _rearm(self):
        # The fast detector re-arms once the machine is back in an operating
        # mode and the AC component has settled below the threshold.
        if self.st[K.S_TRIPPED] and isinstance(self.state, (Normal, Degraded)):
            y = self.st[K.S_HP_Y]
            mag = -y if self.ctl[K.C_NEG_POLARITY] else abs(y)
            if mag <= self.pp[K.P_THRESH]:
                self.st[K.S_TRIPPED] = 0.0
                self.st[K.S_COUNT] = 0.0

    def _kernel(self, k0: int, k1: int):
        fc, fl, fv, f0, f1 = self.faults
        K.advance(k0, k1, self.n, self.pp, self.ctl, self.refs, self.override, self.iso_mask,
                  fc, fl, fv, f0, f1, self.i, self.st, self.acc, self.i2, self.sw_e, self.last_leg,
                  self.w_k0, self.w_k1, self.w_off, self.rec, self.out)
        if self.out[K.O_DIVERGED]:
            k = int(self.out[K.O_K_STOP])
            raise SimulationDiverged(k * self.dt, {
                "v_dc": float(self.st[K.S_VDC]), "i_phase": self.i.tolist(), "state": describe(self.state)})

    def _check_finite(self, t: float):
        # finite states can still square into inf losses or stored energy
        with np.errstate(over="ignore", invalid="ignore"):
            ok = (np.all(np.isfinite(self.tj)) and math.isfinite(self.t_res)
                  and math.isfinite(self.stored_energy()) and math.isfinite(self.e_diss))
        if not ok:
            raise SimulationDiverged(t, {
                "v_dc": float(self.st[K.S_VDC]), "i_phase": self.i.tolist(), "tj_max": float(np.max(self.tj)),
                "state": describe(self.state)})

    def _fold_accumulators(self):
        self.e_src += self.acc[K.A_E_SRC]
        self.e_diss += self.acc[K.A_E_DISS]
        self.e_emf += self.acc[K.A_E_EMF]
        self.e_bleed += self.acc[K.A_E_BLEED]
        self.e_active += self.acc[K.A_E_ACTIVE]
        for idx in (K.A_E_SRC, K.A_E_DISS, K.A_E_EMF, K.A_E_BLEED, K.A_E_ACTIVE):
            self.acc[idx] = 0.0

    # -- main loop -----------------------------------------------------------

    def run(self) -> Trace:
        cfg = self.cfg
        dt = self.dt
        self._check_finite(0.0)
        e0 = self.stored_energy()
        k = 0
        last_sup = 0
        last_th = 0
        sup_e_emf = 0.0
        res_e = 0.0
        block_mode = mode(self.state)
        discharge_cmd = self._fsm([], 0.0, float(self.st[K.S_VDC]), self._measured_tj(0.0))
        self._record(0.0, math.nan, 0.0, block_mode)

        while k < self.n_steps:
            k_next = min(self.n_steps, (k // self.sup_every + 1) * self.sup_every,
                         (k // self.th_every + 1) * self.th_every)
            block_mode = mode(self.state)
            active_prev = self.discharge_on
            if discharge_cmd:
                self.discharge_on = active_discharge_command(
                    float(self.st[K.S_VDC]), self.t_res, cfg.discharge, active_prev, cfg.thermal.t_limit_res)
            else:
                self.discharge_on = False
            self.ctl[K.C_ACTIVE_ON] = 1 if self.discharge_on else 0

            kk = k
            while kk < k_next:
                self._kernel(kk, k_next)
                stop = int(self.out[K.O_K_STOP])
                if self.out[K.O_TRIP_K] >= 0:
                    t_trip = int(self.out[K.O_TRIP_K]) * dt
                    switch = {1: "High", 2: "Low"}.get(int(self.out[K.O_TRIP_SWITCH]), "")
                    det = Detection(SHORT_CIRCUIT, t_trip, FAST_DETECTOR, int(self.out[K.O_TRIP_LEG]), switch)
                    self.detections.append(det)
                    if self.sup is not None and det.leg >= 0:
                        self.sup.short_leg = det.leg
                    before = describe(self.state)
                    v_now = float(self.st[K.S_VDC])
                    discharge_cmd = self._fsm([det], t_trip, v_now, self._measured_tj(t_trip)) or discharge_cmd
                    if describe(self.state) != before:
                        self.extra_rows.append(self._snapshot(t_trip))
                    if discharge_cmd:
                        self.discharge_on = active_discharge_command(
                            v_now, self.t_res, cfg.discharge, self.discharge_on, cfg.thermal.t_limit_res)
                        self.ctl[K.C_ACTIVE_ON] = 1 if self.discharge_on else 0
                kk = stop
            k = k_next
            t = k * dt
            block_e_emf = self.acc[K.A_E_EMF]
            sup_e_emf += block_e_emf
            res_energy = self.acc[K.A_E_ACTIVE]
            self._fold_accumulators()

            res_e += res_energy
            if k % self.th_every == 0 or k == self.n_steps:
                span = (k - last_th) * dt
                if span > 0:
                    mult = r_th_multiplier(t - span, cfg.faults)
                    with np.errstate(over="ignore", invalid="ignore"):
                        self.tj = thermal_step(self.tj, self.sw_e / span, span, cfg.thermal, mult)
                        self.t_res = resistor_step(self.t_res, res_e / span, span, cfg.thermal)
                self.sw_e[:] = 0.0
                res_e = 0.0
                last_th = k
                self._check_finite(t)

            if k % self.sup_every == 0 or k == self.n_steps:
                span = (k - last_sup) * dt
                v_meas = self.acc[K.A_V_MEAS] / span
                tj_meas = self._measured_tj(t)
                dets = []
                if self.sup is not None:
                    dets = self.sup.update(SupervisoryMeasurement(span, self.i2.copy(), self.acc[K.A_V_MEAS], tj_meas), t)
                    self.detections.extend(dets)
                self.acc[K.A_V_MEAS] = 0.0
                self.i2[:] = 0.0
                power = sup_e_emf / span
                sup_e_emf = 0.0
                last_sup = k
                discharge_cmd = self._fsm(dets, t, v_meas, tj_meas)
                self._rearm()
                self._record(t, power, span, block_mode)

        ticks = {key: np.asarray(val) for key, val in self.rows.items()}
        energy = {
            "e_stored_initial": e0,
            "e_stored_final": self.stored_energy(),
            "e_source_in": self.e_src,
            "e_dissipated": self.e_diss,
            "e_backemf_work": self.e_emf,
        }
        self.commanded_shoot_through = int(self.acc[K.A_CMD_ST])
        windows = []
        for idx, a, b, off in self.window_events:
            windows.append({"event": idx, "t_start": cfg.faults[idx].t_start, "data": self.rec[off:off + (b - a)].copy()})
        return Trace(cfg, self.calibration, ticks, self.transitions, self.detections, windows, energy,
                     self.extra_rows, self.commanded_shoot_through)

    def _snapshot(self, t: float) -> dict:
        return {"t": t, "v_dc": float(self.st[K.S_VDC]), "i": self.i.copy(), "tj_max": float(self.tj.max()),
                "t_res": float(self.t_res), "state": describe(self.state), "flags": self._flags()}


# -- entry points --------------------------------------------------------------


def calibrate(cfg: ScenarioConfig) -> Calibration:
    """Fault-free pre-run with protection disabled.

    The first window lets the start-up transient settle; the second one
    provides the AC ripple peak, nominal phase RMS, delivered power and mean
    link voltage.
    """
    w = cfg.detector.sc.calibration_window
    base = replace(cfg, faults=(), fsm=replace(cfg.fsm, enabled=False, operator_stop=None),
                   initial=replace(cfg.initial, v_dc=None),
                   engine=replace(cfg.engine, t_end=2 * w))
    sim = Simulator(base, None, arm_detector=False)
    kw = base.engine.steps(w)
    sim._kernel(0, kw)
    sim.acc[:] = 0.0
    sim.i2[:] = 0.0
    sim._kernel(kw, 2 * kw)
    span = kw * sim.dt
    ac_peak = float(sim.acc[K.A_AC_PEAK])
    threshold = cfg.detector.sc.threshold_factor * ac_peak
    return Calibration(
        sc_threshold=threshold if threshold > 0 else 1e-6,
        ac_peak=ac_peak,
        i_nominal_rms=float(np.sqrt(sim.i2 / span).mean()),
        p_reference=float(sim.acc[K.A_E_EMF] / span),
        v_mean=float(sim.acc[K.A_V_MEAS] / span),
    )


def simulate(cfg: ScenarioConfig, calibration: Calibration | None = None) -> Trace:
    if calibration is None:
        calibration = calibrate(cfg)
    return Simulator(cfg, calibration).run()


def run_scenario(cfg: ScenarioConfig, calibration: Calibration | None = None):
    """Simulate ``cfg`` and evaluate it.  Returns ``(trace, metrics_report)``."""
    from .metrics import compute_metrics

    trace = simulate(cfg, calibration)
    return trace, compute_metrics(trace)


def energy_audit(trace: Trace) -> float:
    """Relative energy balance error of a run.

    ``|dE_stored - (E_in - E_diss - E_emf)| / max(E_in, E_stored_initial)``.
    """
    e = trace.energy
    delta = e["e_stored_final"] - e["e_stored_initial"]
    net = e["e_source_in"] - e["e_dissipated"] - e["e_backemf_work"]
    scale = max(e["e_source_in"], e["e_stored_initial"])
    return 0.0 if scale == 0 else abs(delta - net) / scale


def csv_header(n: int) -> list[str]:
    return ["t_s", "v_dc_V", *[f"i{k}_A" for k in range(n)], "tj_max_C", "t_res_C", "fsm_state", "det_flags"]


def trace_rows(trace: Trace) -> list[list]:
    """Decimated trace rows; every row where the state changes is kept."""
    ticks = trace.ticks
    eng = trace.config.engine
    stride = max(1, int(round(trace.config.output.trace_stride / eng.dt_supervisory)))
    rows = []
    prev_state = None
    for idx in range(len(ticks["t"])):
        state = ticks["state"][idx]
        if idx % stride == 0 or state != prev_state or idx == len(ticks["t"]) - 1:
            rows.append((float(ticks["t"][idx]), float(ticks["v_dc"][idx]), ticks["i"][idx],
                         float(ticks["tj_max"][idx]), float(ticks["t_res"][idx]), state, ticks["flags"][idx]))
        prev_state = state
    for snap in trace.extra_rows:
        rows.append((snap["t"], snap["v_dc"], snap["i"], snap["tj_max"], snap["t_res"], snap["state"], snap["flags"]))
    rows.sort(key=lambda r: r[0])
    out = []
    last_t = -math.inf
    for t, v, i, tj, tr, state, flags in rows:
        if t <= last_t:
            # an interrupt row and a tick row can share a timestamp; keep the later state
            out[-1] = [f"{t:.7f}", f"{v:.4f}", *[f"{x:.4f}" for x in i], f"{tj:.4f}", f"{tr:.4f}", state, flags]
            continue
        out.append([f"{t:.7f}", f"{v:.4f}", *[f"{x:.4f}" for x in i], f"{tj:.4f}", f"{tr:.4f}", state, flags])
        last_t = t
    return out


def write_trace_csv(trace: Trace, path) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(csv_header(trace.n_phases))
        writer.writerows(trace_rows(trace))


def event_header(n: int) -> list[str]:
    return ["event", "t_s", "v_dc_V", "v_meas_V", "hp_V", *[f"i{k}_A" for k in range(n)],
            *[f"gate{k}" for k in range(n)]]


def write_event_csv(trace: Trace, path) -> None:
    """Full-resolution samples around each fault onset, one block per event."""
    import csv

    n = trace.n_phases
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(event_header(n))
        for win in trace.event_windows:
            for row in win["data"]:
                gates = [GATE_NAMES[Gate(int(g))] for g in row[4 + n:4 + 2 * n]]
                writer.writerow([win["event"], f"{row[0]:.7f}", f"{row[1]:.4f}", f"{row[2]:.4f}", f"{row[3]:.4f}",
                                 *[f"{x:.4f}" for x in row[4:4 + n]], *gates])
