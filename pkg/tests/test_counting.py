import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chi2

from hbtsim._rng import derive_rng
from hbtsim.analytic import g2_windowed
from hbtsim.config import CoincidenceConfig, DetectorModel, OpticalConfig, SourceGrid
from hbtsim.counting import (
    EventStream,
    coincidences_in_window,
    g2_from_counts,
    read_events,
    sample_events,
    time_difference_histogram,
    write_events,
    write_histogram,
)
from hbtsim.fock import ThermalState, g2_zero_delay_single_mode
from hbtsim.speckle import intensity_pair_chunks

DET = DetectorModel(mean_singles_rate=60000.0)


def homogeneous_stream(rate, duration, seed, detector_id=0):
    det = DetectorModel(mean_singles_rate=rate)
    trace = np.ones(16)
    return sample_events(
        trace, det, duration, seed, coherence_time=math.inf, detector_id=detector_id
    )


class TestEventStream:
    def test_validation(self):
        with pytest.raises(ValueError):
            EventStream(np.array([0.2, 0.1]), 1.0)
        with pytest.raises(ValueError):
            EventStream(np.array([0.5, 1.5]), 1.0)
        with pytest.raises(ValueError):
            EventStream(np.array([0.1]), 0.0)

    def test_round_trip_text_format(self, tmp_path):
        stream = homogeneous_stream(5000.0, 0.05, seed=3, detector_id=1)
        path = tmp_path / "events.txt"
        write_events(stream, path)
        back = read_events(path)
        assert back.detector_id == 1
        assert back.duration == stream.duration
        # 12 significant digits survive the text round trip
        assert np.allclose(back.timestamps, stream.timestamps, rtol=1e-11, atol=0)


class TestSampleEvents:
    def test_homogeneous_counts_poisson(self):
        rate, duration, reps = 50_000.0, 0.2, 30
        counts = [len(homogeneous_stream(rate, duration, seed=s)) for s in range(reps)]
        expected = rate * duration
        sigma = math.sqrt(expected / reps)
        assert abs(np.mean(counts) - expected) < 5 * sigma

    def test_zero_intensity_empty(self):
        stream = sample_events(np.zeros(8), DET, 1.0, seed=1)
        assert len(stream) == 0

    def test_determinism(self):
        a = homogeneous_stream(2000.0, 0.1, seed=9)
        b = homogeneous_stream(2000.0, 0.1, seed=9)
        assert np.array_equal(a.timestamps, b.timestamps)

    def test_negative_intensity_rejected(self):
        with pytest.raises(ValueError):
            sample_events(np.array([1.0, -0.1]), DET, 1.0, seed=1)

    def test_coarse_step_rejected(self):
        trace = np.ones(10)  # step 0.1 s vs coherence 1 us
        with pytest.raises(ValueError):
            sample_events(trace, DET, 1.0, seed=1, coherence_time=1e-6)

    def test_dark_counts_add_rate(self):
        det = DetectorModel(mean_singles_rate=10_000.0, dark_rate=10_000.0)
        # zero light: only dark counts remain, still calibrated overall
        stream = sample_events(np.zeros(8), det, 1.0, seed=4)
        assert len(stream) == pytest.approx(10_000, abs=5 * math.sqrt(10_000))

    def test_thermal_bunching_matches_fock_oracle(self):
        # single speckle, bin much shorter than the coherence time: counts are
        # Bose-Einstein with Var/mean - 1 = <n> (g2(0) - 1) = <n>
        runs, mean_n = 1500, 4.0
        bin_t = 1e-4
        det = DetectorModel(mean_singles_rate=mean_n / bin_t)
        rng = derive_rng(777)
        counts = np.empty(runs)
        for r in range(runs):
            cell = rng.exponential()
            stream = sample_events(
                np.full(4, cell), det, bin_t, seed=10_000 + r, mean_intensity=1.0
            )
            counts[r] = len(stream)
        excess = counts.var(ddof=1) / counts.mean() - 1.0
        oracle = g2_zero_delay_single_mode(ThermalState((mean_n,), n_max=80), 0)
        predicted = mean_n * (oracle - 1.0)
        # 5 sigma of the variance-ratio estimator for these moments
        assert abs(excess - predicted) < 1.9
        # and clearly super-Poissonian (Mandel Q > 0)
        assert excess > 5 * math.sqrt(2.0 / (runs - 1))


class TestHistogram:
    def test_independent_streams_flat(self):
        cfg = CoincidenceConfig(
            window=5e-6, channel_width=5e-6, histogram_range=200e-6
        )
        s1 = homogeneous_stream(40_000.0, 2.0, seed=11, detector_id=0)
        s2 = homogeneous_stream(40_000.0, 2.0, seed=12, detector_id=1)
        hist = time_difference_histogram(s1, s2, cfg)
        expected = hist.counts.mean()
        stat = np.sum((hist.counts - expected) ** 2 / expected)
        assert stat < chi2.ppf(0.95, hist.counts.size - 1)

    def test_thermal_peak_at_zero_delay(self):
        cfg_opt = OpticalConfig()
        grid = SourceGrid.for_source(cfg_opt.source_diameter)
        step = cfg_opt.coherence_time / 50
        n_steps = 2_500_000  # 50 ms
        det = DetectorModel(mean_singles_rate=400_000.0)
        times = [[], []]
        for i0, a, b in intensity_pair_chunks(0.0, 0.0, cfg_opt, grid, n_steps, step, 21):
            for d, trace in enumerate((a, b)):
                ev = sample_events(
                    trace,
                    det,
                    trace.size * step,
                    seed=500 + d * 97 + i0,
                    coherence_time=cfg_opt.coherence_time,
                    mean_intensity=1.0,
                )
                times[d].append(ev.timestamps + i0 * step)
        duration = n_steps * step
        s1 = EventStream(np.concatenate(times[0]), duration, 0)
        s2 = EventStream(np.concatenate(times[1]), duration, 1)
        cfg = CoincidenceConfig(
            window=600e-9, channel_width=100e-9, histogram_range=6e-6
        )
        hist = time_difference_histogram(s1, s2, cfg)
        center = hist.counts.size // 2
        baseline = hist.counts[np.abs(hist.centers) > 4e-6].mean()
        ratio = hist.counts[center] / baseline
        assert 1.7 < ratio < 2.3
        # width set by the coherence time: half excess at ~0.47 tau_c
        excess = hist.counts[center] - baseline
        half_idx = center + int(round(0.47 * cfg_opt.coherence_time / cfg.channel_width))
        assert hist.counts[half_idx] - baseline < 0.8 * excess

    def test_shift_translates_histogram(self):
        cfg = CoincidenceConfig(window=1e-3, channel_width=1e-3, histogram_range=10e-3)
        t1 = np.array([0.0101, 0.0302, 0.0503])
        shift = 2e-3
        s1 = EventStream(t1, 0.1, 0)
        s2a = EventStream(t1, 0.1, 1)
        s2b = EventStream(t1 + shift, 0.1, 1)
        ha = time_difference_histogram(s1, s2a, cfg)
        hb = time_difference_histogram(s1, s2b, cfg)
        k = int(round(shift / cfg.channel_width))
        assert np.array_equal(np.roll(ha.counts, -k), hb.counts)

    def test_mismatched_durations(self):
        cfg = CoincidenceConfig()
        with pytest.raises(ValueError):
            time_difference_histogram(
                EventStream(np.array([0.1]), 1.0), EventStream(np.array([0.1]), 2.0), cfg
            )

    def test_total_matches_windowed_coincidences(self):
        # histogram over +-h equals the pair count in a window of 2h
        cfg = CoincidenceConfig(
            window=1e-6, channel_width=0.25e-6, histogram_range=1e-6
        )
        s1 = homogeneous_stream(30_000.0, 0.5, seed=21, detector_id=0)
        s2 = homogeneous_stream(30_000.0, 0.5, seed=22, detector_id=1)
        hist = time_difference_histogram(s1, s2, cfg)
        assert hist.total == coincidences_in_window(s1, s2, 2 * hist.half_range)

    def test_csv_export(self, tmp_path):
        cfg = CoincidenceConfig(window=1e-6, channel_width=1e-6, histogram_range=2e-6)
        s1 = EventStream(np.array([0.1, 0.2]), 1.0, 0)
        s2 = EventStream(np.array([0.1000004]), 1.0, 1)
        hist = time_difference_histogram(s1, s2, cfg)
        path = tmp_path / "hist.csv"
        write_histogram(hist, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "channel_center_s,count"
        assert len(lines) == hist.counts.size + 1


class TestCoincidences:
    def test_identical_streams_pair_every_event(self):
        t = np.sort(derive_rng(1).random(200))
        s = EventStream(t, 1.0)
        assert coincidences_in_window(s, s, 1e-6) >= len(s)

    def test_empty_stream(self):
        s1 = EventStream(np.empty(0), 1.0)
        s2 = homogeneous_stream(1000.0, 1.0, seed=2)
        assert coincidences_in_window(s1, s2, 1e-6) == 0

    @given(
        t1=st.lists(st.integers(0, 999), min_size=0, max_size=40, unique=True),
        t2=st.lists(st.integers(0, 999), min_size=0, max_size=40, unique=True),
        half_ms=st.integers(1, 50),
    )
    @settings(max_examples=60, deadline=None)
    def test_matches_quadratic_reference(self, t1, t2, half_ms):
        # brute-force O(n^2) pair count as the oracle
        a = np.sort(np.array(t1, dtype=float)) * 1e-3
        b = np.sort(np.array(t2, dtype=float)) * 1e-3
        half = half_ms * 1e-3 + 1e-12  # keep ties unambiguous
        brute = sum(1 for x in a for y in b if abs(x - y) <= half)
        s1 = EventStream(a, 1.0)
        s2 = EventStream(b, 1.0)
        assert coincidences_in_window(s1, s2, 2 * half) == brute

    def test_accidental_rate(self):
        # independent 60 kcps streams, 600 ns window: 2160 accidentals/s
        duration = 3.0
        s1 = homogeneous_stream(60_000.0, duration, seed=31, detector_id=0)
        s2 = homogeneous_stream(60_000.0, duration, seed=32, detector_id=1)
        count = coincidences_in_window(s1, s2, 600e-9)
        expected = 60_000.0**2 * 600e-9 * duration
        assert abs(count - expected) < 5 * math.sqrt(expected)


class TestG2FromCounts:
    def test_arithmetic(self):
        assert g2_from_counts(2160, 60_000, 60_000, 1.0, 600e-9) == pytest.approx(1.0)

    def test_independent_streams_near_one(self):
        duration = 3.0
        s1 = homogeneous_stream(60_000.0, duration, seed=41, detector_id=0)
        s2 = homogeneous_stream(60_000.0, duration, seed=42, detector_id=1)
        nc = coincidences_in_window(s1, s2, 600e-9)
        value = g2_from_counts(nc, len(s1), len(s2), duration, 600e-9)
        assert value == pytest.approx(1.0, abs=0.1)

    def test_errors(self):
        with pytest.raises(ValueError):
            g2_from_counts(1, 0, 10, 1.0, 1e-6)
        with pytest.raises(ValueError):
            g2_from_counts(1, 10, 10, 0.0, 1e-6)

    def test_windowed_thermal_value(self):
        # window comparable to tau_c dilutes the excess by the g1^2 average
        cfg_opt = OpticalConfig()
        grid = SourceGrid.for_source(cfg_opt.source_diameter)
        step = cfg_opt.coherence_time / 50
        n_steps = 10_000_000  # 0.2 s
        det = DetectorModel(mean_singles_rate=500_000.0)
        times = [[], []]
        for i0, a, b in intensity_pair_chunks(0.0, 0.0, cfg_opt, grid, n_steps, step, 77):
            for d, trace in enumerate((a, b)):
                ev = sample_events(
                    trace,
                    det,
                    trace.size * step,
                    seed=900 + d * 131 + i0,
                    coherence_time=cfg_opt.coherence_time,
                    mean_intensity=1.0,
                )
                times[d].append(ev.timestamps + i0 * step)
        duration = n_steps * step
        s1 = EventStream(np.concatenate(times[0]), duration, 0)
        s2 = EventStream(np.concatenate(times[1]), duration, 1)

        for window, tol in ((600e-9, 0.08), (40e-9, 0.2)):
            nc = coincidences_in_window(s1, s2, window)
            measured = g2_from_counts(nc, len(s1), len(s2), duration, window)
            assert measured == pytest.approx(g2_windowed(0.0, window, cfg_opt), abs=tol)
