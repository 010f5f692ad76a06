import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from phaseguard.detection import (
    OVERCURRENT,
    OVERVOLTAGE,
    PHASE_OPEN,
    SHORT_CIRCUIT,
    THERMAL,
    AmbiguousMatch,
    Detection,
    HighPassState,
    ScDetectorConfig,
    ScDetectorState,
    SupervisoryConfig,
    SupervisoryDetectors,
    SupervisoryMeasurement,
    detection_latency,
    hp_filter_update,
    sc_detector_update,
)
from phaseguard.faults import FaultEvent, Overcurrent, Overvoltage, PhaseOpen, SwitchShortCircuit

DT = 1e-6
ALPHA = 100e-6 / (100e-6 + DT)


def hp_run(samples, dt=DT):
    s = HighPassState()
    out = []
    for x in samples:
        s, y = hp_filter_update(s, x, dt)
        out.append(y)
    return np.array(out)


class TestHighPass:
    def test_constant_is_zero(self):
        assert np.all(hp_run(np.full(500, 400.0)) == 0.0)

    def test_step_response(self):
        y = hp_run([400.0, 400.0, 350.0])
        assert y[2] == pytest.approx(-50.0 * ALPHA)

    def test_step_decays_with_tau(self):
        y = hp_run([400.0] + [350.0] * 101)
        assert y[-1] == pytest.approx(-50.0 * ALPHA ** 101)

    def test_passband_gain(self):
        # 50 kHz is well above the 1.6 kHz corner
        t = np.arange(4000) * DT
        y = hp_run(400.0 + np.sin(2 * np.pi * 50e3 * t))
        assert np.abs(y[-1000:]).max() >= 0.95


class TestScDetector:
    cfg = ScDetectorConfig(trip_threshold=10.0)

    def feed(self, values):
        s = ScDetectorState()
        for n, ac in enumerate(values):
            s, det = sc_detector_update(s, ac, self.cfg, n * DT)
            if det is not None:
                return n, det
        return None, None

    def test_zero_stream_never_trips(self):
        assert self.feed(np.zeros(10000)) == (None, None)

    def test_trips_after_confirm_samples(self):
        n, det = self.feed([0, -11, -11, -11, -11])
        assert n == 3 and det.kind == SHORT_CIRCUIT

    def test_interrupted_run_resets(self):
        assert self.feed([-11, -11, 0, -11, -11, 0]) == (None, None)

    def test_negative_polarity_ignores_rise(self):
        assert self.feed([11.0] * 10) == (None, None)

    def test_absolute_polarity(self):
        s = ScDetectorState()
        cfg = ScDetectorConfig(trip_threshold=10.0, polarity="absolute")
        for _ in range(3):
            s, det = sc_detector_update(s, 11.0, cfg, 0.0)
        assert det is not None

    def test_latches(self):
        s = ScDetectorState(3, True)
        assert sc_detector_update(s, -100.0, self.cfg, 0.0) == (s, None)

    def test_needs_threshold(self):
        with pytest.raises(ValueError):
            sc_detector_update(ScDetectorState(), 0.0, ScDetectorConfig(), 0.0)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            ScDetectorConfig(sample_rate=100e3)
        with pytest.raises(ValueError):
            ScDetectorConfig(polarity="up")

    @given(st.lists(st.floats(-100, 100), max_size=60), st.floats(0.1, 50), st.floats(0.1, 50))
    def test_higher_threshold_trips_no_earlier(self, stream, th1, th2):
        lo, hi = sorted((th1, th2))

        def first_trip(th):
            cfg = ScDetectorConfig(trip_threshold=th)
            s = ScDetectorState()
            for n, ac in enumerate(stream):
                s, det = sc_detector_update(s, ac, cfg, float(n))
                if det:
                    return n
            return len(stream) + 1

        assert first_trip(hi) >= first_trip(lo)


def make_sup(**kw):
    return SupervisoryDetectors(SupervisoryConfig(**kw), 5, 1e-4, i_nominal_rms=20.0, v_nominal=400.0,
                                t_limit_switch=150.0)


def nominal_meas(i_rms=20.0, v=400.0, tj=60.0, dt=1e-4, scale=None):
    sq = np.full(5, i_rms ** 2 * dt)
    if scale is not None:
        sq = sq * np.asarray(scale) ** 2
    return SupervisoryMeasurement(dt, sq, v * dt, np.full(10, tj))


class TestSupervisory:
    def test_nominal_never_trips(self):
        sup = make_sup()
        for k in range(5000):
            assert sup.update(nominal_meas(), k * 1e-4) == []

    def test_overvoltage_latency_from_window(self):
        # a 20% step over a 1.15 threshold trips once the window mean crosses
        sup = make_sup(ov_window=0.1)
        t_trip = None
        for k in range(3000):
            dets = sup.update(nominal_meas(v=480.0), k * 1e-4)
            if dets:
                t_trip = k * 1e-4
                assert dets[0].kind == OVERVOLTAGE
                break
        # window fraction f with 400 + 80 f > 460  ->  f > 0.75
        assert t_trip == pytest.approx(0.075, abs=2e-4)

    def test_overcurrent_reports_leg(self):
        sup = make_sup(oc_window=0.01)
        scale = [1, 1, 1, 3, 1]
        dets = []
        for k in range(500):
            dets += sup.update(nominal_meas(scale=scale), k * 1e-4)
        oc = [d for d in dets if d.kind == OVERCURRENT]
        assert len(oc) == 1 and oc[0].leg == 3

    def test_thermal_is_instantaneous(self):
        sup = make_sup()
        dets = sup.update(nominal_meas(tj=151.0), 0.0)
        assert [d.kind for d in dets] == [THERMAL]

    def test_imbalance_open_vs_short(self):
        for short_leg, expected in ((-1, PHASE_OPEN), (2, SHORT_CIRCUIT)):
            sup = make_sup(imbalance_window=0.01)
            sup.short_leg = short_leg
            dets = []
            for k in range(500):
                dets += sup.update(nominal_meas(scale=[1, 1, 0, 1, 1]), k * 1e-4)
            assert [(d.kind, d.leg) for d in dets] == [(expected, 2)]

    def test_latch_and_reset(self):
        sup = make_sup()
        assert sup.update(nominal_meas(tj=200.0), 0.0)
        assert sup.update(nominal_meas(tj=200.0), 1e-4) == []
        sup.reset()
        assert sup.update(nominal_meas(tj=200.0), 2e-4)

    @given(st.floats(0.5, 1.9), st.floats(300, 450), st.floats(25, 149))
    def test_in_band_never_trips(self, i_scale, v, tj):
        sup = make_sup(oc_window=0.01, ov_window=0.01)
        for k in range(300):
            assert sup.update(nominal_meas(i_rms=20.0 * i_scale, v=v, tj=tj), k * 1e-4) == []


class TestLatency:
    def test_examples(self):
        evs = [FaultEvent(SwitchShortCircuit(2), 0.25), FaultEvent(Overvoltage(100.0), 0.5)]
        dets = [Detection(SHORT_CIRCUIT, 0.25 + 3e-6, "sc_fast"), Detection(SHORT_CIRCUIT, 0.40, "imbalance"),
                Detection(OVERVOLTAGE, 0.62, "ov_avg"), Detection(OVERCURRENT, 0.7, "oc_rms")]
        lat = detection_latency(evs, dets)
        assert lat[0] == pytest.approx(3e-6) and lat[1] == pytest.approx(0.12)
        assert detection_latency(evs, dets, ["imbalance"])[0] == pytest.approx(0.15)

    def test_undetected_is_none(self):
        assert detection_latency([FaultEvent(PhaseOpen(1), 0.1)], []) == [None]

    def test_detection_before_start_ignored(self):
        evs = [FaultEvent(Overcurrent(2.0), 0.5)]
        assert detection_latency(evs, [Detection(OVERCURRENT, 0.4, "oc_rms")]) == [None]

    def test_ambiguous(self):
        evs = [FaultEvent(Overvoltage(10.0), 0.1), FaultEvent(Overvoltage(20.0), 0.2)]
        with pytest.raises(AmbiguousMatch):
            detection_latency(evs, [])
