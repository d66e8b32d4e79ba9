import json
import math

import numpy as np
import pytest

from hbtsim.analytic import G2Curve, analytic_curve, correlation_width
from hbtsim.config import OpticalConfig
from hbtsim.experiments import (
    ExperimentSpec,
    emit_results,
    first_zero_crossing,
    run,
    run_analytic_curve,
    run_oracle_check,
    run_source_size_scan,
    run_spatial_scan,
    run_temporal_histogram,
    spec_from_config,
    spec_to_config,
    visibility_with_stderr,
    width_from_half_max,
)

CFG = OpticalConfig()


def small_mc_spec(**overrides):
    base = dict(
        kind="spatial-scan",
        scan_min=-2e-3,
        scan_max=2e-3,
        scan_step=4e-4,
        d1_positions=(0.0,),
        realizations=400,
        seed=77,
    )
    base.update(overrides)
    return ExperimentSpec(**base)


class TestSpec:
    def test_round_trip_through_flat_config(self):
        spec = small_mc_spec()
        again = spec_from_config(spec_to_config(spec))
        assert spec_to_config(again) == spec_to_config(spec)

    def test_unknown_keys_rejected(self):
        with pytest.raises(ValueError):
            spec_from_config({"kind": "analytic-curve", "bogus": 1})

    def test_kind_validation(self):
        with pytest.raises(ValueError):
            ExperimentSpec(kind="nope")

    def test_mc_requires_realizations(self):
        with pytest.raises(ValueError):
            small_mc_spec(realizations=50)
        ExperimentSpec(kind="analytic-curve", realizations=1)  # non-MC kind is fine

    def test_scan_positions(self):
        spec = ExperimentSpec(kind="analytic-curve", scan_min=0.0, scan_max=1e-3, scan_step=5e-4)
        assert np.allclose(spec.scan, [0.0, 5e-4, 1e-3])


class TestWidthEstimators:
    def test_half_max_width_on_analytic_curve(self):
        scan = np.arange(-4e-3, 4.0001e-3, 1e-4)
        curve = analytic_curve(0.0, scan, CFG)
        width = width_from_half_max(curve)
        assert width == pytest.approx(correlation_width(CFG), rel=0.01)

    def test_half_max_width_needs_excess(self):
        with pytest.raises(ValueError):
            width_from_half_max(G2Curve(np.arange(3.0), np.ones(3)))

    def test_sign_change_crossing_on_noisy_curve(self):
        # a curve that dips below the baseline right after the zero
        x = np.linspace(0.0, 2e-3, 21)
        y = np.clip(2.0 - x / 1e-3, 0.96, 2.0)
        y[-1] = 1.02
        crossing = first_zero_crossing(G2Curve(x, y))
        assert crossing == pytest.approx(1e-3, rel=1e-6)

    def test_sign_change_none_when_always_positive(self):
        curve = analytic_curve(0.0, np.linspace(0, 2e-3, 21), CFG)
        assert first_zero_crossing(curve) is None

    def test_visibility_stderr_propagation(self):
        curve = G2Curve(
            np.arange(3.0), np.array([2.0, 1.5, 1.0]), np.array([0.02, 0.0, 0.01])
        )
        vis, err = visibility_with_stderr(curve)
        assert vis == pytest.approx(1.0 / 3.0)
        expected = math.hypot(2 * 1.0 * 0.02 / 9.0, 2 * 2.0 * 0.01 / 9.0)
        assert err == pytest.approx(expected, rel=1e-9)


class TestRunners:
    def test_analytic_curve_runner(self):
        result = run_analytic_curve(ExperimentSpec(kind="analytic-curve"))
        assert result.labels == ["analytic"]
        assert result.derived["visibility"] == pytest.approx(1 / 3, abs=1e-3)
        assert result.metadata["seed"] == 20030317

    def test_spatial_scan_runner(self):
        result = run_spatial_scan(small_mc_spec())
        assert len(result.curves) == 1
        assert result.curves[0].g2.shape == result.overlays[0].g2.shape
        table = result.singles["d1_+0.00mm"]
        assert table.mean_scan.shape == result.curves[0].abscissa.shape
        assert abs(result.derived["argmax_m"][0]) <= 4e-4

    def test_source_size_scan_runner(self):
        spec = ExperimentSpec(
            kind="source-size-scan",
            source_diameters=(350e-6, 1100e-6),
            scan_min=-3e-3,
            scan_max=3e-3,
            scan_step=1e-4,
            realizations=2000,
            seed=5,
        )
        result = run_source_size_scan(spec)
        widths = result.derived["widths"]
        assert len(widths) == 2
        assert widths[0]["width_m"] > widths[1]["width_m"]
        for entry in widths:
            assert abs(entry["relative_error"]) < 0.1

    def test_temporal_runner_small(self):
        spec = ExperimentSpec(
            kind="temporal-histogram",
            realizations=100,
            seed=3,
        )
        spec.coincidence = spec.coincidence.__class__(
            window=600e-9,
            channel_width=50e-9,
            histogram_range=4e-6,
            acquisition_time=0.02,
        )
        spec.detectors = (
            spec.detectors[0].__class__(mean_singles_rate=300_000.0),
            spec.detectors[1].__class__(mean_singles_rate=300_000.0),
        )
        result = run_temporal_histogram(spec)
        hist = result.histogram
        assert hist is not None
        assert hist.counts.size % 2 == 1
        center = hist.counts.size // 2
        assert hist.centers[center] == pytest.approx(0.0, abs=1e-15)
        assert result.histogram_expected[center] == pytest.approx(
            2 * result.histogram_expected[0], rel=0.05
        )
        assert result.derived["windowed_g2"] > 1.2

    def test_oracle_check_runner(self):
        result = run_oracle_check(ExperimentSpec(kind="oracle-check"))
        assert result.derived["all_passed"]
        for check in result.derived["checks"]:
            assert check["max_deviation"] <= check["tolerance"]

    def test_oracle_check_reports_truncation_failure(self):
        spec = ExperimentSpec(kind="oracle-check", mode_means=(1.0,), n_max=1)
        result = run_oracle_check(spec)
        assert not result.derived["all_passed"]
        failed = [c for c in result.derived["checks"] if not c["passed"]]
        assert failed  # truncation-dominated deviation is reported, not hidden


class TestEmit:
    def test_csv_emission_and_round_trip(self, tmp_path):
        result = run_spatial_scan(small_mc_spec())
        files = emit_results(result, "csv", tmp_path / "out")
        names = {f.name for f in files}
        assert "d1_+0.00mm.csv" in names
        assert "singles_d1_+0.00mm.csv" in names
        assert "summary.json" in names

        rows = (tmp_path / "out" / "d1_+0.00mm.csv").read_text().strip().splitlines()
        assert rows[0] == "position_m,g2,stderr,analytic"
        parsed = np.array([[float(v) for v in row.split(",")] for row in rows[1:]])
        curve = result.curves[0]
        assert np.allclose(parsed[:, 0], curve.abscissa, rtol=1e-11)
        assert np.allclose(parsed[:, 1], curve.g2, rtol=1e-11)
        assert np.allclose(parsed[:, 2], curve.stderr, rtol=1e-11)

        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert summary["spec"]["kind"] == "spatial-scan"
        assert summary["spec"]["seed"] == 77

    def test_emission_is_byte_stable(self, tmp_path):
        result = run_spatial_scan(small_mc_spec())
        emit_results(result, "csv", tmp_path / "a")
        emit_results(result, "csv", tmp_path / "b")
        for name in ("d1_+0.00mm.csv", "singles_d1_+0.00mm.csv", "summary.json"):
            assert (tmp_path / "a" / name).read_bytes() == (
                tmp_path / "b" / name
            ).read_bytes()

    def test_json_format(self, tmp_path):
        result = run_analytic_curve(ExperimentSpec(kind="analytic-curve"))
        files = emit_results(result, "json", tmp_path)
        assert [f.name for f in files] == ["results.json"]
        payload = json.loads(files[0].read_text())
        assert payload["curves"][0]["label"] == "analytic"

    def test_empty_result_writes_summary_only(self, tmp_path, capsys):
        result = run_oracle_check(ExperimentSpec(kind="oracle-check"))
        files = emit_results(result, "csv", tmp_path)
        assert [f.name for f in files] == ["summary.json"]
        assert "summary only" in capsys.readouterr().out

    def test_unknown_format(self, tmp_path):
        result = run_analytic_curve(ExperimentSpec(kind="analytic-curve"))
        with pytest.raises(ValueError):
            emit_results(result, "xml", tmp_path)


class TestDispatch:
    def test_run_dispatches_by_kind(self):
        result = run(ExperimentSpec(kind="analytic-curve"))
        assert result.spec["kind"] == "analytic-curve"
