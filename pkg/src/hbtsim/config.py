"""Configuration records shared by the simulator modules.

All records are frozen dataclasses: they validate on construction and can be
passed freely between threads or workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


def _require_positive(obj, *names: str) -> None:
    for name in names:
        value = getattr(obj, name)
        if not (math.isfinite(value) and value > 0):
            raise ValueError(f"{name} must be positive and finite, got {value!r}")


@dataclass(frozen=True)
class OpticalConfig:
    """Optical layout of the source/lens/detector arrangement.

    wavelength and source_diameter are in meters, focal_length in meters,
    coherence_time in seconds.  The defaults are the He-Ne line, a 550 um
    source, a 75 cm lens and a 1 us coherence time.
    """

    wavelength: float = 632.8e-9
    source_diameter: float = 550e-6
    focal_length: float = 0.75
    coherence_time: float = 1e-6

    def __post_init__(self):
        _require_positive(
            self, "wavelength", "source_diameter", "focal_length", "coherence_time"
        )
        # paraxial sanity: the source must be much larger than the wavelength
        if not self.wavelength < self.source_diameter / 10.0:
            raise ValueError(
                "paraxial validity requires wavelength < source_diameter / 10"
            )


@dataclass(frozen=True)
class SourceGrid:
    """Sampling of the source plane: n x n cells of size pitch [m].

    The circular aperture of diameter aperture_diameter is centered on the
    grid.  Invariants: n is a power of two, the grid spans at least twice the
    aperture (guard band) and the aperture is resolved by >= 64 cells.
    """

    n: int = 512
    pitch: float = 550e-6 / 128
    aperture_diameter: float = 550e-6

    def __post_init__(self):
        if self.n < 2 or (self.n & (self.n - 1)) != 0:
            raise ValueError(f"grid n must be a power of two, got {self.n}")
        _require_positive(self, "pitch", "aperture_diameter")
        if self.n * self.pitch < 2.0 * self.aperture_diameter * (1.0 - 1e-12):
            raise ValueError("grid span n*pitch must cover twice the aperture")
        if self.aperture_diameter / self.pitch < 64.0 * (1.0 - 1e-12):
            raise ValueError("aperture must span at least 64 cells across")

    @classmethod
    def for_source(
        cls, diameter: float, n: int = 512, samples_across: int = 128
    ) -> "SourceGrid":
        """Grid with `samples_across` cells across a source of given diameter."""
        return cls(n=n, pitch=diameter / samples_across, aperture_diameter=diameter)


@dataclass(frozen=True)
class DetectorModel:
    """Photon-counting detector: efficiency, calibrated singles rate, dark rate.

    aperture_diameter is the collection fiber diameter [m].  The singles-rate
    calibration absorbs the quantum efficiency (thinning a Poisson process is
    again Poisson), so `efficiency` only matters for uncalibrated uses.
    """

    efficiency: float = 1.0
    mean_singles_rate: float = 60000.0
    dark_rate: float = 0.0
    aperture_diameter: float = 60e-6

    def __post_init__(self):
        if not (0.0 < self.efficiency <= 1.0):
            raise ValueError(f"efficiency must be in (0, 1], got {self.efficiency}")
        if self.mean_singles_rate < 0 or self.dark_rate < 0:
            raise ValueError("rates must be nonnegative")
        if self.dark_rate > self.mean_singles_rate:
            raise ValueError("dark_rate cannot exceed mean_singles_rate")
        if self.aperture_diameter < 0:
            raise ValueError("aperture_diameter must be nonnegative")


@dataclass(frozen=True)
class CoincidenceConfig:
    """Coincidence electronics: window, histogram channel width and range [s]."""

    window: float = 600e-9
    channel_width: float = 0.3e-9
    histogram_range: float = 8e-6
    acquisition_time: float = 2.0

    def __post_init__(self):
        _require_positive(
            self, "window", "channel_width", "histogram_range", "acquisition_time"
        )
        if not self.channel_width <= self.window:
            raise ValueError("channel_width must not exceed the coincidence window")
        if self.histogram_range < self.window:
            raise ValueError("histogram_range must be at least the window")
