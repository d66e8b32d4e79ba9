"""Closed-form correlation curves for chaotic light from a uniform disc source.

Reference curves used to validate the Monte Carlo / photon-counting chain:

    mu(dx)      = 2 J1(v) / v,    v = pi a dx / (lambda f)   (coherence factor)
    g2(x1, x2)  = 1 + mu(|x1 - x2|)^2                        (spatial)
    g1(tau)     = exp(-pi tau^2 / (2 tau_c^2))               (temporal envelope)
    g2(dx, tau) = 1 + mu^2 g1^2                              (factorized model)

The Gaussian envelope follows the convention integral |g1|^2 dtau = tau_c.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import j1 as _j1

from .config import OpticalConfig

# first positive root of J1, frozen to double precision
J1_FIRST_ZERO = 3.8317059702075123


@dataclass
class G2Curve:
    """Normalized second-order correlation sampled along positions or delays."""

    abscissa: np.ndarray
    g2: np.ndarray
    stderr: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.abscissa = np.asarray(self.abscissa, dtype=float)
        self.g2 = np.asarray(self.g2, dtype=float)
        if self.stderr is None:
            self.stderr = np.zeros_like(self.g2)
        self.stderr = np.asarray(self.stderr, dtype=float)
        if not (self.abscissa.shape == self.g2.shape == self.stderr.shape):
            raise ValueError("abscissa, g2 and stderr must have equal lengths")
        if self.g2.size and np.any(self.g2 < 0):
            raise ValueError("g2 values must be nonnegative")
        if self.stderr.size and np.any(self.stderr < 0):
            raise ValueError("stderr values must be nonnegative")

    def __len__(self) -> int:
        return self.g2.size


def bessel_j1(v):
    """Bessel function of the first kind, order one.  Odd, total, accurate to
    better than 1e-10 relative over the working range."""
    return _j1(v)


def coherence_factor(dx, cfg: OpticalConfig):
    """Normalized field correlation mu(dx) = 2 J1(v)/v between two focal-plane
    points separated by dx; mu(0) = 1 via the small-argument series."""
    v = np.pi * cfg.source_diameter * np.abs(np.asarray(dx, dtype=float))
    v = v / (cfg.wavelength * cfg.focal_length)
    small = v < 1e-6
    v_safe = np.where(small, 1.0, v)
    out = np.where(small, 1.0 - v * v / 8.0, 2.0 * _j1(v_safe) / v_safe)
    if np.ndim(dx) == 0:
        return float(out)
    return out


def g2_spatial(x1, x2, cfg: OpticalConfig):
    """1 + mu(|x1 - x2|)^2; depends on the positions only through their
    separation, so the curve shifts rigidly with the fixed detector."""
    mu = coherence_factor(np.asarray(x1, dtype=float) - np.asarray(x2, dtype=float), cfg)
    return 1.0 + mu * mu


def g1_temporal(tau, cfg: OpticalConfig):
    """Gaussian temporal envelope exp(-pi tau^2 / (2 tau_c^2)); even, g1(0)=1,
    normalized so that integral |g1|^2 dtau = tau_c."""
    t = np.asarray(tau, dtype=float) / cfg.coherence_time
    out = np.exp(-0.5 * np.pi * t * t)
    if np.ndim(tau) == 0:
        return float(out)
    return out


def g2_spatiotemporal(dx, tau, cfg: OpticalConfig):
    """Factorized model 1 + mu(dx)^2 g1(tau)^2 (cross-spectral purity)."""
    mu = coherence_factor(dx, cfg)
    g1 = g1_temporal(tau, cfg)
    return 1.0 + (mu * g1) ** 2


def window_averaged_excess(window: float, cfg: OpticalConfig) -> float:
    """Mean of g1(tau)^2 over |tau| <= window/2.

    Closed form: (tau_c / window) * erf(sqrt(pi) window / (2 tau_c)).  This is
    the factor by which a finite coincidence window dilutes the bunching
    excess of windowed counting.
    """
    if window <= 0:
        raise ValueError("window must be positive")
    u = math.sqrt(math.pi) * window / (2.0 * cfg.coherence_time)
    return cfg.coherence_time / window * math.erf(u)


def g2_windowed(dx: float, window: float, cfg: OpticalConfig) -> float:
    """Expected windowed coincidence ratio 1 + mu(dx)^2 <g1^2>_window."""
    mu = coherence_factor(dx, cfg)
    return 1.0 + mu * mu * window_averaged_excess(window, cfg)


def visibility(curve: G2Curve) -> float:
    """(max - min) / (max + min) of the curve's g2 values."""
    if len(curve) == 0:
        raise ValueError("visibility of an empty curve is undefined")
    if not np.all(np.isfinite(curve.g2)):
        raise ValueError("curve contains non-finite g2 values")
    hi = float(np.max(curve.g2))
    lo = float(np.min(curve.g2))
    if hi + lo == 0.0:
        raise ValueError("visibility undefined for an all-zero curve")
    return (hi - lo) / (hi + lo)


def correlation_width(cfg: OpticalConfig) -> float:
    """Separation of the first zero of mu: 3.8317... * lambda f / (pi a)."""
    return J1_FIRST_ZERO * cfg.wavelength * cfg.focal_length / (
        math.pi * cfg.source_diameter
    )


def analytic_curve(x1: float, positions, cfg: OpticalConfig) -> G2Curve:
    """Reference g2(x1, x) curve over the given scan positions (zero stderr)."""
    positions = np.asarray(positions, dtype=float)
    return G2Curve(positions, g2_spatial(x1, positions, cfg))
