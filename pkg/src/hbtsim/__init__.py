"""Pseudo-thermal light correlation simulator.

Monte Carlo speckle fields, photon-counting coincidence analysis and
closed-form references for far-field intensity correlations of chaotic
light, cross-checked against a brute-force Fock-space oracle.
"""

__version__ = "0.1.0"

from .config import (  # noqa: F401
    CoincidenceConfig,
    DetectorModel,
    OpticalConfig,
    SourceGrid,
)
