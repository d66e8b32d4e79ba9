"""Reproduction harness: composes the engine modules into full measurements.

Each run kind mirrors one measurement of the tabletop setup:

    temporal-histogram   arrival-time-difference histogram of two detectors
    spatial-scan         g2 vs detector-2 position for fixed detector-1 spots
    source-size-scan     g2 curves and correlation widths vs source diameter
    analytic-curve       closed-form reference curve only
    oracle-check         truncated Fock-space identity suite

Configuration is a flat key set (see CONFIG_KEYS) loadable from a JSON file
with command-line overrides; results echo the full spec so every run is
reproducible from its own output.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from ._rng import derive_seed
from .analytic import (
    G2Curve,
    analytic_curve,
    coherence_factor,
    correlation_width,
    g1_temporal,
    g2_windowed,
    visibility,
)
from .config import CoincidenceConfig, DetectorModel, OpticalConfig, SourceGrid
from .counting import (
    EventStream,
    TimeDifferenceHistogram,
    coincidences_in_window,
    g2_from_counts,
    sample_events,
    time_difference_histogram,
    write_histogram,
)
from .fock import (
    ThermalState,
    fourth_moment,
    g2_zero_delay_single_mode,
    second_moment,
    state_weights,
    two_delta_fourth_moment,
)
from .speckle import intensity_pair_chunks, scan_ensemble

KINDS = (
    "temporal-histogram",
    "spatial-scan",
    "source-size-scan",
    "analytic-curve",
    "oracle-check",
)

_MONTE_CARLO_KINDS = ("temporal-histogram", "spatial-scan", "source-size-scan")

# rng path tags for sub-seeding the harness stages
_TAG_SCAN = 11
_TAG_SIZE = 12
_TAG_EVENTS = 13

# batch-mean groups for scan standard errors; 40 keeps the stderr estimate
# itself well determined (the spec floor is 10)
_BATCHES = 40

#: documented flat configuration keys (JSON file and CLI overrides)
CONFIG_KEYS = {
    "kind": "one of " + ", ".join(KINDS),
    "wavelength_m": "illumination wavelength [m]",
    "source_diameter_m": "pseudo-thermal source diameter [m]",
    "focal_length_m": "lens focal length [m]",
    "coherence_time_s": "source coherence time [s]",
    "grid_n": "source grid samples per side (power of two)",
    "grid_samples_across": "source grid cells across the source diameter",
    "detector_aperture_m": "collection fiber diameter [m]",
    "detector_efficiency": "detector quantum efficiency in (0, 1]",
    "singles_rate_cps": "calibrated mean singles rate per detector [counts/s]",
    "dark_rate_cps": "detector dark rate [counts/s]",
    "window_s": "coincidence window [s]",
    "channel_width_s": "histogram channel width [s]",
    "histogram_range_s": "histogram half range [s]",
    "acquisition_time_s": "simulated acquisition time [s]",
    "scan_min_m": "detector-2 scan start [m]",
    "scan_max_m": "detector-2 scan end [m]",
    "scan_step_m": "detector-2 scan step [m]",
    "d1_positions_m": "list of fixed detector-1 positions [m]",
    "source_diameters_m": "list of source diameters for the size scan [m]",
    "x1_m": "detector-1 position for the temporal histogram [m]",
    "x2_m": "detector-2 position for the temporal histogram [m]",
    "realizations": "number of Monte Carlo screen realizations",
    "seed": "master random seed (nonnegative integer)",
    "mode_means": "oracle check: list of mode mean occupations",
    "n_max": "oracle check: Fock truncation per mode",
}


@dataclass
class ExperimentSpec:
    """Complete description of one run; every field has a reproducible default."""

    kind: str = "analytic-curve"
    optics: OpticalConfig = field(default_factory=OpticalConfig)
    grid_n: int = 512
    grid_samples_across: int = 128
    detectors: tuple[DetectorModel, DetectorModel] = field(
        default_factory=lambda: (DetectorModel(), DetectorModel())
    )
    coincidence: CoincidenceConfig = field(default_factory=CoincidenceConfig)
    scan_min: float = -4e-3
    scan_max: float = 4e-3
    scan_step: float = 1e-4
    d1_positions: tuple[float, ...] = (-1.75e-3, 0.0, 1.75e-3)
    source_diameters: tuple[float, ...] = (150e-6, 350e-6, 550e-6, 1100e-6)
    x1: float = 0.0
    x2: float = 0.0
    realizations: int = 10000
    seed: int = 20030317
    mode_means: tuple[float, ...] = (0.2, 0.35, 0.5)
    n_max: int = 24

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}; expected one of {KINDS}")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")
        if self.kind in _MONTE_CARLO_KINDS and self.realizations < 100:
            raise ValueError("Monte Carlo kinds require at least 100 realizations")
        if self.scan_step <= 0 or self.scan_max < self.scan_min:
            raise ValueError("invalid scan range")
        if self.kind == "spatial-scan" and not self.d1_positions:
            raise ValueError("spatial-scan requires at least one detector-1 position")
        if self.kind == "source-size-scan" and not self.source_diameters:
            raise ValueError("source-size-scan requires at least one source diameter")

    @property
    def scan(self) -> np.ndarray:
        n = int(round((self.scan_max - self.scan_min) / self.scan_step)) + 1
        return self.scan_min + self.scan_step * np.arange(n)

    def grid_for(self, diameter: float) -> SourceGrid:
        return SourceGrid.for_source(
            diameter, n=self.grid_n, samples_across=self.grid_samples_across
        )


def spec_to_config(spec: ExperimentSpec) -> dict:
    """Flat key/value echo of a spec (inverse of spec_from_config)."""
    det = spec.detectors[0]
    return {
        "kind": spec.kind,
        "wavelength_m": spec.optics.wavelength,
        "source_diameter_m": spec.optics.source_diameter,
        "focal_length_m": spec.optics.focal_length,
        "coherence_time_s": spec.optics.coherence_time,
        "grid_n": spec.grid_n,
        "grid_samples_across": spec.grid_samples_across,
        "detector_aperture_m": det.aperture_diameter,
        "detector_efficiency": det.efficiency,
        "singles_rate_cps": det.mean_singles_rate,
        "dark_rate_cps": det.dark_rate,
        "window_s": spec.coincidence.window,
        "channel_width_s": spec.coincidence.channel_width,
        "histogram_range_s": spec.coincidence.histogram_range,
        "acquisition_time_s": spec.coincidence.acquisition_time,
        "scan_min_m": spec.scan_min,
        "scan_max_m": spec.scan_max,
        "scan_step_m": spec.scan_step,
        "d1_positions_m": list(spec.d1_positions),
        "source_diameters_m": list(spec.source_diameters),
        "x1_m": spec.x1,
        "x2_m": spec.x2,
        "realizations": spec.realizations,
        "seed": spec.seed,
        "mode_means": list(spec.mode_means),
        "n_max": spec.n_max,
    }


def spec_from_config(config: dict) -> ExperimentSpec:
    """Build a spec from a flat configuration mapping; unknown keys are errors."""
    unknown = sorted(set(config) - set(CONFIG_KEYS))
    if unknown:
        raise ValueError(f"unknown configuration keys: {', '.join(unknown)}")
    base = spec_to_config(ExperimentSpec())
    merged = {**base, **config}
    optics = OpticalConfig(
        wavelength=float(merged["wavelength_m"]),
        source_diameter=float(merged["source_diameter_m"]),
        focal_length=float(merged["focal_length_m"]),
        coherence_time=float(merged["coherence_time_s"]),
    )
    detector = DetectorModel(
        efficiency=float(merged["detector_efficiency"]),
        mean_singles_rate=float(merged["singles_rate_cps"]),
        dark_rate=float(merged["dark_rate_cps"]),
        aperture_diameter=float(merged["detector_aperture_m"]),
    )
    coincidence = CoincidenceConfig(
        window=float(merged["window_s"]),
        channel_width=float(merged["channel_width_s"]),
        histogram_range=float(merged["histogram_range_s"]),
        acquisition_time=float(merged["acquisition_time_s"]),
    )
    return ExperimentSpec(
        kind=str(merged["kind"]),
        optics=optics,
        grid_n=int(merged["grid_n"]),
        grid_samples_across=int(merged["grid_samples_across"]),
        detectors=(detector, detector),
        coincidence=coincidence,
        scan_min=float(merged["scan_min_m"]),
        scan_max=float(merged["scan_max_m"]),
        scan_step=float(merged["scan_step_m"]),
        d1_positions=tuple(float(x) for x in merged["d1_positions_m"]),
        source_diameters=tuple(float(x) for x in merged["source_diameters_m"]),
        x1=float(merged["x1_m"]),
        x2=float(merged["x2_m"]),
        realizations=int(merged["realizations"]),
        seed=int(merged["seed"]),
        mode_means=tuple(float(x) for x in merged["mode_means"]),
        n_max=int(merged["n_max"]),
    )


def load_config(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        config = json.load(fh)
    if not isinstance(config, dict):
        raise ValueError(f"{path}: configuration must be a JSON object")
    return config


@dataclass
class SinglesTable:
    positions: np.ndarray
    mean_fixed: float
    stderr_fixed: float
    mean_scan: np.ndarray
    stderr_scan: np.ndarray


@dataclass
class RunResult:
    """Outputs of one run plus the spec echo and provenance metadata."""

    spec: dict
    labels: list[str] = field(default_factory=list)
    curves: list[G2Curve] = field(default_factory=list)
    overlays: list[G2Curve] = field(default_factory=list)
    singles: dict[str, SinglesTable] = field(default_factory=dict)
    histogram: TimeDifferenceHistogram | None = None
    histogram_expected: np.ndarray | None = None
    derived: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)


def _finish(result: RunResult, spec: ExperimentSpec, started: float) -> RunResult:
    result.metadata = {
        "seed": spec.seed,
        "runtime_s": round(time.perf_counter() - started, 3),
        "version": __version__,
    }
    return result


def visibility_with_stderr(curve: G2Curve) -> tuple[float, float]:
    """Curve visibility and its propagated standard error."""
    vis = visibility(curve)
    hi_idx = int(np.argmax(curve.g2))
    lo_idx = int(np.argmin(curve.g2))
    hi, lo = curve.g2[hi_idx], curve.g2[lo_idx]
    dh = 2.0 * lo / (hi + lo) ** 2 * curve.stderr[hi_idx]
    dl = 2.0 * hi / (hi + lo) ** 2 * curve.stderr[lo_idx]
    return vis, float(math.hypot(dh, dl))


def first_zero_crossing(curve: G2Curve) -> float | None:
    """Literal first sign change of g2 - 1 beyond the peak, linearly
    interpolated; None when the excess never goes negative.

    On Monte Carlo curves the true excess is nonnegative and only touches
    zero, so this estimator relies on a noise dip and can fail to find a
    crossing; prefer width_from_half_max for quantitative work.
    """
    x = curve.abscissa
    y = curve.g2 - 1.0
    start = int(np.argmax(y))
    for i in range(start, y.size - 1):
        if y[i] > 0.0 and y[i + 1] <= 0.0:
            frac = y[i] / (y[i] - y[i + 1])
            return float(x[i] + frac * (x[i + 1] - x[i]) - x[start])
    return None

# |2 J1(v)/v|^2 = 1/2 at v_half; first zero at J1_FIRST_ZERO
_V_HALF = 1.6163439148110654
_HALF_TO_ZERO = 3.8317059702075123 / _V_HALF


def width_from_half_max(curve: G2Curve) -> float:
    """First-zero width estimated from the half-maximum crossing of g2 - 1.

    Interpolates where the excess falls through half its peak on each side of
    the peak and rescales by the exact Airy ratio between the half point and
    the first zero.  Statistically well conditioned: the crossing sits on the
    steep flank of the curve.
    """
    x = curve.abscissa
    y = curve.g2 - 1.0
    peak = int(np.argmax(y))
    if y[peak] <= 0:
        raise ValueError("curve has no positive excess")
    level = 0.5 * y[peak]
    crossings = []
    for sl in (slice(peak, y.size), slice(peak, None, -1)):
        yy = y[sl]
        xx = x[sl]
        idx = np.nonzero(yy <= level)[0]
        if idx.size:
            i = int(idx[0])
            frac = (yy[i - 1] - level) / (yy[i - 1] - yy[i])
            crossings.append(abs(xx[i - 1] + frac * (xx[i] - xx[i - 1]) - x[peak]))
    if not crossings:
        raise ValueError("curve never falls to half maximum inside the scan")
    return float(np.mean(crossings)) * _HALF_TO_ZERO


def run_analytic_curve(spec: ExperimentSpec) -> RunResult:
    started = time.perf_counter()
    curve = analytic_curve(spec.x1, spec.scan, spec.optics)
    result = RunResult(
        spec=spec_to_config(spec),
        labels=["analytic"],
        curves=[curve],
        overlays=[curve],
        derived={
            "visibility": visibility(curve),
            "correlation_width_m": correlation_width(spec.optics),
        },
    )
    return _finish(result, spec, started)


def run_spatial_scan(spec: ExperimentSpec) -> RunResult:
    """One g2 curve per fixed detector-1 position, with analytic overlays and
    singles-vs-position tables for both detectors."""
    started = time.perf_counter()
    grid = spec.grid_for(spec.optics.source_diameter)
    scan = spec.scan
    result = RunResult(spec=spec_to_config(spec))
    argmaxes = []
    for i, d1 in enumerate(spec.d1_positions):
        stats = scan_ensemble(
            d1,
            scan,
            spec.optics,
            grid,
            spec.realizations,
            derive_seed(spec.seed, _TAG_SCAN, i),
            batches=_BATCHES,
        )
        label = f"d1_{d1 * 1e3:+.2f}mm"
        result.labels.append(label)
        result.curves.append(stats.curve)
        result.overlays.append(analytic_curve(d1, scan, spec.optics))
        result.singles[label] = SinglesTable(
            positions=scan,
            mean_fixed=stats.singles_fixed,
            stderr_fixed=stats.singles_fixed_stderr,
            mean_scan=stats.singles_scan,
            stderr_scan=stats.singles_scan_stderr,
        )
        argmaxes.append(float(scan[int(np.argmax(stats.curve.g2))]))
    vis = [visibility_with_stderr(c) for c in result.curves]
    result.derived = {
        "argmax_m": argmaxes,
        "d1_positions_m": list(spec.d1_positions),
        "visibility": [v for v, _ in vis],
        "visibility_stderr": [e for _, e in vis],
        "normalization": "singles-product division (g2_from_counts convention)",
    }
    return _finish(result, spec, started)


def run_source_size_scan(spec: ExperimentSpec) -> RunResult:
    """One curve per source diameter plus fitted correlation widths."""
    started = time.perf_counter()
    scan = spec.scan
    result = RunResult(spec=spec_to_config(spec))
    widths = []
    for i, diameter in enumerate(spec.source_diameters):
        optics = replace(spec.optics, source_diameter=diameter)
        grid = spec.grid_for(diameter)
        stats = scan_ensemble(
            0.0,
            scan,
            optics,
            grid,
            spec.realizations,
            derive_seed(spec.seed, _TAG_SIZE, i),
            batches=_BATCHES,
        )
        label = f"a_{diameter * 1e6:.0f}um"
        result.labels.append(label)
        result.curves.append(stats.curve)
        result.overlays.append(analytic_curve(0.0, scan, optics))
        expected = correlation_width(optics)
        fitted = width_from_half_max(stats.curve)
        crossing = first_zero_crossing(stats.curve)
        widths.append(
            {
                "source_diameter_m": diameter,
                "width_m": fitted,
                "width_sign_change_m": crossing,
                "predicted_m": expected,
                "relative_error": fitted / expected - 1.0,
            }
        )
    result.derived = {"widths": widths}
    return _finish(result, spec, started)


def run_temporal_histogram(spec: ExperimentSpec) -> RunResult:
    """Simulate both detectors over the acquisition time and histogram the
    pair time differences; emits the analytic expectation alongside."""
    started = time.perf_counter()
    optics = spec.optics
    grid = spec.grid_for(optics.source_diameter)
    step = optics.coherence_time / 50.0
    n_steps = max(1, int(round(spec.coincidence.acquisition_time / step)))
    duration = n_steps * step

    times: list[list[np.ndarray]] = [[], []]
    for chunk_index, (i0, trace1, trace2) in enumerate(
        intensity_pair_chunks(
            spec.x1, spec.x2, optics, grid, n_steps, step, spec.seed
        )
    ):
        offset = i0 * step
        for det_index, trace in enumerate((trace1, trace2)):
            stream = sample_events(
                trace,
                spec.detectors[det_index],
                trace.size * step,
                derive_seed(spec.seed, _TAG_EVENTS, det_index, chunk_index),
                coherence_time=optics.coherence_time,
                mean_intensity=1.0,
                detector_id=det_index,
            )
            times[det_index].append(stream.timestamps + offset)
    streams = [
        EventStream(np.concatenate(ts) if ts else np.empty(0), duration, i)
        for i, ts in enumerate(times)
    ]
    hist = time_difference_histogram(streams[0], streams[1], spec.coincidence)

    rate1 = spec.detectors[0].mean_singles_rate
    rate2 = spec.detectors[1].mean_singles_rate
    mu = coherence_factor(abs(spec.x1 - spec.x2), optics)
    pair_density = rate1 * rate2 * duration * hist.channel_width
    expected = pair_density * (
        1.0 + (mu * g1_temporal(hist.centers, optics)) ** 2
    )

    n_window = coincidences_in_window(streams[0], streams[1], spec.coincidence.window)
    g2_window = (
        g2_from_counts(
            n_window,
            len(streams[0]),
            len(streams[1]),
            duration,
            spec.coincidence.window,
        )
        if len(streams[0]) and len(streams[1])
        else float("nan")
    )
    result = RunResult(
        spec=spec_to_config(spec),
        histogram=hist,
        histogram_expected=expected,
        derived={
            "duration_s": duration,
            "singles": [len(s) for s in streams],
            "windowed_g2": g2_window,
            "windowed_g2_expected": g2_windowed(
                abs(spec.x1 - spec.x2), spec.coincidence.window, optics
            ),
            "normalization": "singles-product division (g2_from_counts convention)",
        },
    )
    return _finish(result, spec, started)


def run_oracle_check(spec: ExperimentSpec) -> RunResult:
    """Exhaustive identity suite for the truncated Fock oracle."""
    started = time.perf_counter()
    means = spec.mode_means
    state = ThermalState(means, spec.n_max)
    checks = []

    weights = state_weights(state)
    norm_dev = abs(1.0 - math.fsum(weights.values()))
    checks.append(
        {
            "check": "normalization",
            "max_deviation": norm_dev,
            "tolerance": state.tail_bound() + 1e-10,
        }
    )

    dev = 0.0
    for k in range(state.n_modes):
        for kp in range(state.n_modes):
            expected = means[k] if k == kp else 0.0
            dev = max(dev, abs(second_moment(state, k, kp) - expected))
    checks.append({"check": "second-moment-delta", "max_deviation": dev, "tolerance": 1e-6})

    equal_mean = float(np.mean(means))
    eq_state = ThermalState((equal_mean,) * state.n_modes, spec.n_max)
    dev = 0.0
    for idx in np.ndindex(*(state.n_modes,) * 4):
        k, kp, kpp, kppp = (int(i) for i in idx)
        predicted = two_delta_fourth_moment(equal_mean, k, kp, kpp, kppp)
        dev = max(dev, abs(fourth_moment(eq_state, k, kp, kpp, kppp) - predicted))
    checks.append({"check": "fourth-moment-two-delta", "max_deviation": dev, "tolerance": 1e-6})

    dev = 0.0
    for k, mean in enumerate(means):
        if mean > 0:
            dev = max(dev, abs(g2_zero_delay_single_mode(state, k) - 2.0))
    checks.append({"check": "single-mode-g2-zero-delay", "max_deviation": dev, "tolerance": 1e-6})

    if state.n_modes >= 2:
        joint = fourth_moment(state, 0, 1, 0, 1)
        product = second_moment(state, 0, 0) * second_moment(state, 1, 1)
        checks.append(
            {
                "check": "mode-factorization",
                "max_deviation": abs(joint - product),
                "tolerance": 1e-9,
            }
        )

    for entry in checks:
        entry["passed"] = bool(entry["max_deviation"] <= entry["tolerance"])
    result = RunResult(
        spec=spec_to_config(spec),
        derived={"checks": checks, "all_passed": all(c["passed"] for c in checks)},
    )
    return _finish(result, spec, started)


RUNNERS = {
    "temporal-histogram": run_temporal_histogram,
    "spatial-scan": run_spatial_scan,
    "source-size-scan": run_source_size_scan,
    "analytic-curve": run_analytic_curve,
    "oracle-check": run_oracle_check,
}


def run(spec: ExperimentSpec) -> RunResult:
    return RUNNERS[spec.kind](spec)


_FLOAT_DIGITS = 12


def _fmt(x: float) -> str:
    return f"{x:.{_FLOAT_DIGITS}g}"


def _curve_rows(curve: G2Curve, overlay: G2Curve) -> str:
    lines = ["position_m,g2,stderr,analytic"]
    for x, g, e, a in zip(curve.abscissa, curve.g2, curve.stderr, overlay.g2):
        lines.append(f"{_fmt(x)},{_fmt(g)},{_fmt(e)},{_fmt(a)}")
    return "\n".join(lines) + "\n"


def _json_ready(obj):
    if isinstance(obj, dict):
        return {k: _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_json_ready(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def emit_results(result: RunResult, fmt: str, out_dir) -> list[Path]:
    """Write result files under out_dir and return their paths.

    csv: one CSV per curve (plus singles and histogram tables) and a JSON
    summary; json: a single results.json embedding everything.  Identical
    results produce byte-identical data files; only the runtime entry in the
    metadata varies between runs.
    """
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown output format {fmt!r}")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc

    summary = {
        "spec": result.spec,
        "metadata": result.metadata,
        "derived": _json_ready(result.derived),
        "curve_labels": result.labels,
    }
    written: list[Path] = []

    def _write(path: Path, text: str) -> None:
        try:
            path.write_text(text, encoding="utf-8")
        except OSError as exc:
            raise OSError(f"failed writing {path}: {exc}") from exc
        written.append(path)

    if fmt == "json":
        payload = dict(summary)
        payload["curves"] = [
            {
                "label": label,
                "position_m": curve.abscissa.tolist(),
                "g2": curve.g2.tolist(),
                "stderr": curve.stderr.tolist(),
                "analytic": overlay.g2.tolist(),
            }
            for label, curve, overlay in zip(
                result.labels, result.curves, result.overlays
            )
        ]
        if result.histogram is not None:
            payload["histogram"] = {
                "channel_center_s": result.histogram.centers.tolist(),
                "count": result.histogram.counts.tolist(),
                "expected": result.histogram_expected.tolist(),
            }
        _write(out / "results.json", json.dumps(payload, sort_keys=True, indent=2) + "\n")
        return written

    if not result.curves and result.histogram is None:
        print(f"note: no curve data to emit; writing summary only to {out}")
    for label, curve, overlay in zip(result.labels, result.curves, result.overlays):
        _write(out / f"{label}.csv", _curve_rows(curve, overlay))
    for label, table in result.singles.items():
        lines = ["position_m,singles_fixed,stderr_fixed,singles_scan,stderr_scan"]
        for x, s, e in zip(table.positions, table.mean_scan, table.stderr_scan):
            lines.append(
                f"{_fmt(x)},{_fmt(table.mean_fixed)},{_fmt(table.stderr_fixed)},"
                f"{_fmt(s)},{_fmt(e)}"
            )
        _write(out / f"singles_{label}.csv", "\n".join(lines) + "\n")
    if result.histogram is not None:
        path = out / "histogram.csv"
        write_histogram(result.histogram, path, expected=result.histogram_expected)
        written.append(path)
    if result.derived.get("widths"):
        lines = ["source_diameter_m,width_m,width_sign_change_m,predicted_m,relative_error"]
        for w in result.derived["widths"]:
            sign = w["width_sign_change_m"]
            lines.append(
                f"{_fmt(w['source_diameter_m'])},{_fmt(w['width_m'])},"
                f"{'' if sign is None else _fmt(sign)},{_fmt(w['predicted_m'])},"
                f"{_fmt(w['relative_error'])}"
            )
        _write(out / "widths.csv", "\n".join(lines) + "\n")
    _write(out / "summary.json", json.dumps(summary, sort_keys=True, indent=2) + "\n")
    return written
