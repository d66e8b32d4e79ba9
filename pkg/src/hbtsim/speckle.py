"""Speckle-field Monte Carlo engine for far-field intensity correlations.

Spatial model
-------------
The source is a hard circular aperture of diameter a filled with
delta-correlated circular complex Gaussian cells (unit mean square modulus),
sampled on an n x n grid of pitch p.  A lens maps the source to its focal
plane, where the field is the unitary discrete Fourier transform of the
source samples; the focal-plane sample spacing is lambda f / (n p).

The detector scan runs along the horizontal axis through the optical axis.
On that line the far field depends on the screen only through its column
sums, which are independent circular Gaussians with variance equal to the
number of in-aperture cells per column.  `estimate_g2_spatial` therefore
samples column sums directly instead of materializing full screens; the
reduction is an exact marginalization, and `line_farfield` ties it to the
FFT path numerically.  The intensity correlation estimator itself never
references the closed-form disc result, so the Airy-shaped g2 emerges from
the sampled geometry alone.

Temporal model
--------------
A moving diffuser is modeled as a drifting family of independent screens
("knots") spaced a/2 apart along the drift coordinate and blended with a
Gaussian weight of the same scale.  With drift speed

    v = a * sqrt(pi / 2) / tau_c

the field autocorrelation is g1(tau) = exp(-pi tau^2 / (2 tau_c^2)).  A
rigid translation of delta-correlated cells under the fixed hard aperture
would instead give the disc-overlap autocorrelation (zero beyond tau = a/v),
so the blended family is used; it keeps every screen invariant intact (hard
aperture, unit circular-Gaussian cells) while realizing the Gaussian
spectrum.  Evolution is stationary in the screen offset: a freshly generated
screen is replaced by the stationary family on its first evolution, and
evolving by dt = 0 is the identity.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import fftconvolve

from ._rng import derive_rng, derive_seed
from .analytic import G2Curve
from .config import OpticalConfig, SourceGrid

# rng path tags
_TAG_SCREEN = 0
_TAG_SCREEN_KNOT = 1
_TAG_TRACE_KNOTS = 2
_TAG_REALIZATION = 3

_KNOT_INDEX_BIAS = 1 << 20  # keeps derived rng paths nonnegative
_SCREEN_KNOT_RADIUS = 4     # knot blend support, units of the blend sigma

# two-detector trace generation
_TRACE_KNOT_EVERY = 10      # knot spacing in trace steps
_TRACE_KERNEL_RADIUS = 8.0  # kernel support, units of the kernel sigma
_TRACE_KNOT_BLOCK = 4096    # knots drawn per rng block


class ApertureCoverageWarning(UserWarning):
    """Detector aperture covers less than one focal-plane sample."""


@dataclass
class SpeckleScreen:
    """One realization of the source-plane field.

    amplitudes is the n x n complex field (zero outside the aperture);
    screen_offset is the drift coordinate [m] of the temporal evolution.
    """

    grid: SourceGrid
    amplitudes: np.ndarray
    seed: int
    screen_offset: float = 0.0


@dataclass
class FarField:
    """Focal-plane field on the FFT grid.

    positions are the axis sample coordinates [m] (both axes share them);
    normalization is the scale applied to the unitary transform.
    """

    grid: SourceGrid
    positions: np.ndarray
    amplitudes: np.ndarray
    normalization: float


def grid_coordinates(grid: SourceGrid) -> np.ndarray:
    """Cell-center coordinates along one axis, centered on the optical axis."""
    return (np.arange(grid.n) - grid.n // 2) * grid.pitch


def aperture_mask(grid: SourceGrid) -> np.ndarray:
    xi = grid_coordinates(grid)
    r2 = xi[:, None] ** 2 + xi[None, :] ** 2
    return r2 <= (grid.aperture_diameter / 2.0) ** 2


def column_weights(grid: SourceGrid) -> tuple[np.ndarray, np.ndarray]:
    """(x-coordinates, in-aperture cell count) per grid column."""
    counts = aperture_mask(grid).sum(axis=0)
    return grid_coordinates(grid), counts


def focal_pixel(grid: SourceGrid, cfg: OpticalConfig) -> float:
    """Focal-plane sample spacing lambda f / (n pitch)."""
    return cfg.wavelength * cfg.focal_length / (grid.n * grid.pitch)


def focal_half_window(grid: SourceGrid, cfg: OpticalConfig) -> float:
    """Half extent of the computed focal-plane window."""
    return cfg.wavelength * cfg.focal_length / (2.0 * grid.pitch)


def drift_speed(cfg: OpticalConfig, grid: SourceGrid) -> float:
    """Screen drift speed v = a sqrt(pi/2) / tau_c."""
    return grid.aperture_diameter * math.sqrt(math.pi / 2.0) / cfg.coherence_time


def _gaussian_cells(rng: np.random.Generator, n: int) -> np.ndarray:
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return z * math.sqrt(0.5)


def generate_screen(grid: SourceGrid, seed: int) -> SpeckleScreen:
    """Fresh screen: i.i.d. unit circular Gaussian cells inside the aperture,
    exactly zero outside.  Identical seed gives a bitwise-identical screen."""
    rng = derive_rng(seed, _TAG_SCREEN)
    amplitudes = _gaussian_cells(rng, grid.n)
    amplitudes[~aperture_mask(grid)] = 0.0
    return SpeckleScreen(grid=grid, amplitudes=amplitudes, seed=int(seed))


def _knot_screen(grid: SourceGrid, seed: int, index: int) -> np.ndarray:
    rng = derive_rng(seed, _TAG_SCREEN_KNOT, _KNOT_INDEX_BIAS + index)
    return _gaussian_cells(rng, grid.n)


def _blended_amplitudes(grid: SourceGrid, seed: int, offset: float) -> np.ndarray:
    spacing = grid.aperture_diameter / 2.0  # knot spacing == blend sigma
    c = offset / spacing
    j_lo = math.ceil(c - _SCREEN_KNOT_RADIUS)
    j_hi = math.floor(c + _SCREEN_KNOT_RADIUS)
    js = np.arange(j_lo, j_hi + 1)
    w = np.exp(-0.5 * (c - js) ** 2)
    w /= math.sqrt(float(np.sum(w * w)))
    out = np.zeros((grid.n, grid.n), dtype=complex)
    for j, wj in zip(js, w):
        out += wj * _knot_screen(grid, seed, int(j))
    out[~aperture_mask(grid)] = 0.0
    return out


def evolve_screen(screen: SpeckleScreen, dt: float, cfg: OpticalConfig) -> SpeckleScreen:
    """Advance the screen by dt along the drift coordinate.

    dt = 0 returns an identical screen; dt > 0 lands on the stationary
    blended family at offset + v dt, deterministic in (seed, offset).  Two
    evolutions by dt and dt' compose to one by dt + dt'.  Ensemble field
    autocorrelation between offsets matches exp(-pi tau^2 / (2 tau_c^2)).
    """
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    if dt == 0.0:
        return replace(screen, amplitudes=screen.amplitudes.copy())
    offset = screen.screen_offset + drift_speed(cfg, screen.grid) * dt
    amplitudes = _blended_amplitudes(screen.grid, screen.seed, offset)
    return SpeckleScreen(
        grid=screen.grid, amplitudes=amplitudes, seed=screen.seed, screen_offset=offset
    )


def propagate_to_focal_plane(screen: SpeckleScreen, cfg: OpticalConfig) -> FarField:
    """Unitary FFT propagation to the lens focal plane.

    E(x) = (1/n) sum_xi U(xi) exp(-i 2 pi x xi / (lambda f)) on the centered
    sample grid; Parseval holds to 1e-10 relative (checked).
    """
    grid = screen.grid
    shifted = np.fft.ifftshift(screen.amplitudes)
    far = np.fft.fftshift(np.fft.fft2(shifted, norm="ortho"))
    source_power = float(np.sum(np.abs(screen.amplitudes) ** 2))
    far_power = float(np.sum(np.abs(far) ** 2))
    if source_power > 0 and abs(far_power - source_power) > 1e-10 * source_power:
        raise RuntimeError("Parseval check failed in focal-plane propagation")
    positions = (np.arange(grid.n) - grid.n // 2) * focal_pixel(grid, cfg)
    return FarField(
        grid=grid, positions=positions, amplitudes=far, normalization=1.0 / grid.n
    )


def line_farfield(screen: SpeckleScreen, positions, cfg: OpticalConfig) -> np.ndarray:
    """Far-field amplitudes on the horizontal axis at arbitrary positions.

    On the y = 0 line the 2-D transform collapses onto the screen's column
    sums; this evaluates the same unitary kernel as the FFT but at exact
    detector coordinates instead of grid samples.
    """
    grid = screen.grid
    positions = np.atleast_1d(np.asarray(positions, dtype=float))
    half = focal_half_window(grid, cfg)
    if np.any(np.abs(positions) > half):
        raise ValueError(f"positions outside computed focal window +-{half:g} m")
    cols = screen.amplitudes.sum(axis=0)
    xi = grid_coordinates(grid)
    kernel = np.exp(
        -2j * np.pi * np.outer(positions, xi) / (cfg.wavelength * cfg.focal_length)
    )
    return kernel @ cols / grid.n


def aperture_field_correlation(
    grid: SourceGrid, cfg: OpticalConfig, x1: float, x2: float
) -> float:
    """Normalized field correlation <E(x1) E*(x2)> implied by the sampled
    aperture geometry (discrete kernel sum, no closed form involved)."""
    xi, counts = column_weights(grid)
    total = counts.sum()
    phase = 2.0 * np.pi * (x1 - x2) * xi / (cfg.wavelength * cfg.focal_length)
    value = np.sum(counts * np.exp(-1j * phase)) / total
    # symmetric aperture: imaginary part vanishes identically
    return float(value.real)


def detector_intensity(farfield: FarField, x: float, aperture_diameter: float) -> float:
    """Mean |E|^2 over focal-plane samples inside the fiber aperture at (x, 0).

    When the aperture covers no sample center, falls back to the nearest
    sample and emits ApertureCoverageWarning.
    """
    pos = farfield.positions
    half_pixel = 0.5 * abs(pos[1] - pos[0])
    if not (pos[0] - half_pixel <= x <= pos[-1] + half_pixel):
        raise ValueError(f"detector position {x:g} m outside computed window")
    intensity = np.abs(farfield.amplitudes) ** 2
    r = aperture_diameter / 2.0
    if r > 0:
        ix = np.nonzero(np.abs(pos - x) <= r)[0]
        iy = np.nonzero(np.abs(pos) <= r)[0]
        if ix.size and iy.size:
            dx2 = (pos[ix] - x) ** 2
            dy2 = pos[iy] ** 2
            m = dy2[:, None] + dx2[None, :] <= r * r
            if np.any(m):
                patch = intensity[np.ix_(iy, ix)]
                return float(patch[m].mean())
        warnings.warn(
            "detector aperture covers no focal-plane sample; using nearest",
            ApertureCoverageWarning,
            stacklevel=2,
        )
    iy0 = farfield.grid.n // 2  # y = 0 row
    ix0 = int(np.argmin(np.abs(pos - x)))
    return float(intensity[iy0, ix0])


@dataclass
class SpatialScanStats:
    """Ensemble statistics of a detector-pair scan."""

    curve: G2Curve
    singles_fixed: float
    singles_fixed_stderr: float
    singles_scan: np.ndarray
    singles_scan_stderr: np.ndarray
    realizations: int


def _scan_kernel(positions: np.ndarray, cfg: OpticalConfig, grid: SourceGrid):
    xi, counts = column_weights(grid)
    live = counts > 0
    kernel = np.exp(
        -2j * np.pi * np.outer(positions, xi[live]) / (cfg.wavelength * cfg.focal_length)
    ) / grid.n
    return kernel, np.sqrt(counts[live].astype(float))


def _batch_scan_sums(
    kernel: np.ndarray,
    root_counts: np.ndarray,
    seed: int,
    realization_indices: range,
) -> tuple[np.ndarray, np.ndarray]:
    """(sum I_p, sum I_0 I_p) over one batch of realizations.

    Each realization draws its column sums from a sub-seed keyed by its own
    global index, so the result is independent of batch layout.
    """
    n_cols = root_counts.size
    rows = np.empty((len(realization_indices), n_cols), dtype=complex)
    for row, r in enumerate(realization_indices):
        rng = derive_rng(seed, _TAG_REALIZATION, r)
        z = rng.standard_normal(n_cols) + 1j * rng.standard_normal(n_cols)
        rows[row] = z * math.sqrt(0.5) * root_counts
    fields = rows @ kernel.T
    intensity = np.abs(fields) ** 2
    sum_i = intensity.sum(axis=0)
    sum_prod = (intensity[:, :1] * intensity).sum(axis=0)
    return sum_i, sum_prod


def _batch_scan_sums_full(
    positions: np.ndarray,
    cfg: OpticalConfig,
    grid: SourceGrid,
    seed: int,
    realization_indices: range,
) -> tuple[np.ndarray, np.ndarray]:
    """Full-screen reference path: FFT per realization, nearest-sample read."""
    sum_i = np.zeros(positions.size)
    sum_prod = np.zeros(positions.size)
    for r in realization_indices:
        screen = generate_screen(grid, derive_seed(seed, _TAG_REALIZATION, r))
        far = propagate_to_focal_plane(screen, cfg)
        row = np.abs(far.amplitudes[grid.n // 2]) ** 2
        idx = np.argmin(np.abs(far.positions[None, :] - positions[:, None]), axis=1)
        intensity = row[idx]
        sum_i += intensity
        sum_prod += intensity[0] * intensity
    return sum_i, sum_prod


def scan_ensemble(
    x1: float,
    x2_scan,
    cfg: OpticalConfig,
    grid: SourceGrid,
    n_realizations: int,
    seed: int,
    batches: int = 10,
    full_fields: bool = False,
) -> SpatialScanStats:
    """Ensemble g2 and singles over a horizontal detector scan.

    Accumulates <I(x1) I(x2)> / (<I(x1)> <I(x2)>) over n_realizations
    independent screens; the standard error comes from >= 10 batch means.
    """
    if n_realizations < 100:
        raise ValueError("at least 100 realizations are required")
    x2_scan = np.asarray(x2_scan, dtype=float)
    if x2_scan.size == 0:
        raise ValueError("scan positions must be non-empty")
    positions = np.concatenate(([float(x1)], x2_scan))
    half = focal_half_window(grid, cfg)
    if np.any(np.abs(positions) > half):
        raise ValueError(f"scan position outside computed focal window +-{half:g} m")
    batches = max(10, int(batches))
    if n_realizations < batches:
        raise ValueError("need at least one realization per batch")

    kernel, root_counts = _scan_kernel(positions, cfg, grid)
    edges = np.linspace(0, n_realizations, batches + 1).astype(int)
    batch_i = np.empty((batches, positions.size))
    batch_prod = np.empty((batches, positions.size))
    for b in range(batches):
        idx = range(edges[b], edges[b + 1])
        if full_fields:
            s_i, s_p = _batch_scan_sums_full(positions, cfg, grid, seed, idx)
        else:
            s_i, s_p = _batch_scan_sums(kernel, root_counts, seed, idx)
        batch_i[b] = s_i
        batch_prod[b] = s_p

    counts = np.diff(edges).astype(float)
    mean_i = batch_i.sum(axis=0) / n_realizations
    mean_prod = batch_prod.sum(axis=0) / n_realizations
    g2 = mean_prod / (mean_i[0] * mean_i)

    per_batch_mean_i = batch_i / counts[:, None]
    per_batch_g2 = (batch_prod / counts[:, None]) / (
        per_batch_mean_i[:, :1] * per_batch_mean_i
    )
    stderr = per_batch_g2.std(axis=0, ddof=1) / math.sqrt(batches)

    singles_err = per_batch_mean_i.std(axis=0, ddof=1) / math.sqrt(batches)
    curve = G2Curve(x2_scan, g2[1:], stderr[1:])
    return SpatialScanStats(
        curve=curve,
        singles_fixed=float(mean_i[0]),
        singles_fixed_stderr=float(singles_err[0]),
        singles_scan=mean_i[1:],
        singles_scan_stderr=singles_err[1:],
        realizations=n_realizations,
    )


def estimate_g2_spatial(
    x1: float,
    x2_scan,
    cfg: OpticalConfig,
    grid: SourceGrid,
    n_realizations: int,
    seed: int,
    batches: int = 10,
    full_fields: bool = False,
) -> G2Curve:
    """Monte Carlo g2(x1, x2) over the scan; see scan_ensemble."""
    return scan_ensemble(
        x1, x2_scan, cfg, grid, n_realizations, seed, batches, full_fields
    ).curve


def _trace_knots(seed: int, j_lo: int, j_hi: int) -> tuple[np.ndarray, np.ndarray]:
    """Two i.i.d. unit circular Gaussian knot sequences for indices j_lo..j_hi.

    Knots are drawn in fixed blocks keyed by (seed, block index), so the
    values are independent of chunking and evaluation order.
    """
    block = _TRACE_KNOT_BLOCK
    n_knots = j_hi - j_lo + 1
    xi = np.empty(n_knots, dtype=complex)
    eta = np.empty(n_knots, dtype=complex)
    lo_abs, hi_abs = j_lo + _KNOT_INDEX_BIAS, j_hi + _KNOT_INDEX_BIAS
    for b in range(lo_abs // block, hi_abs // block + 1):
        rng = derive_rng(seed, _TAG_TRACE_KNOTS, b)
        draws = rng.standard_normal((block, 4)) * math.sqrt(0.5)
        lo = max(lo_abs, b * block)
        hi = min(hi_abs, (b + 1) * block - 1)
        rows = slice(lo - b * block, hi - b * block + 1)
        dest = slice(lo - lo_abs, hi - lo_abs + 1)
        xi[dest] = draws[rows, 0] + 1j * draws[rows, 1]
        eta[dest] = draws[rows, 2] + 1j * draws[rows, 3]
    return xi, eta


def intensity_pair_chunks(
    x1: float,
    x2: float,
    cfg: OpticalConfig,
    grid: SourceGrid,
    n_steps: int,
    step: float,
    seed: int,
    chunk_steps: int = 1 << 21,
):
    """Yield (start_index, I1, I2): the joint intensity record at two
    focal-plane detectors on a time grid of the given step.

    Exact two-point reduction of the evolving-screen ensemble: the fields at
    two focal-plane points are jointly circular Gaussian with cross
    correlation taken from the engine's own discrete aperture kernel, and the
    Gaussian temporal blending reproduces the drifting-screen autocorrelation
    g1(tau) = exp(-pi tau^2 / (2 tau_c^2)).  Mean intensity is exactly 1;
    results do not depend on the chunk size.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be positive")
    if step <= 0:
        raise ValueError("step must be positive")
    sigma_steps = cfg.coherence_time / math.sqrt(2.0 * math.pi) / step
    if sigma_steps < 1.9 * _TRACE_KNOT_EVERY:
        raise ValueError(
            "trace step too coarse for the temporal kernel; use step <= tau_c/50"
        )
    mu = aperture_field_correlation(grid, cfg, x1, x2)
    mu_orth = math.sqrt(max(0.0, 1.0 - mu * mu))

    # polyphase Gaussian taps: sample i = every*q + r mixes knots q-d..q+d
    every = _TRACE_KNOT_EVERY
    d_max = int(math.ceil(_TRACE_KERNEL_RADIUS * sigma_steps / every)) + 1
    d = np.arange(-d_max, d_max + 1)
    lag = every * d[:, None] + np.arange(every)[None, :]
    kp = np.exp(-0.5 * (lag / sigma_steps) ** 2)
    taps = kp[::-1, :] / np.sqrt((kp**2).sum(axis=0))[None, :]

    for i0 in range(0, n_steps, chunk_steps):
        i1 = min(n_steps, i0 + chunk_steps)
        q_lo, q_hi = i0 // every, (i1 - 1) // every
        xi, eta = _trace_knots(seed, q_lo - d_max, q_hi + d_max)
        width = 2 * d_max + 1
        win_xi = np.lib.stride_tricks.sliding_window_view(xi, width)
        win_eta = np.lib.stride_tricks.sliding_window_view(eta, width)
        e1 = (win_xi @ taps).reshape(-1)
        e2 = mu * e1 + mu_orth * (win_eta @ taps).reshape(-1)
        sl = slice(i0 - every * q_lo, i0 - every * q_lo + (i1 - i0))
        yield i0, np.abs(e1[sl]) ** 2, np.abs(e2[sl]) ** 2
