"""Power-conserving polarizability model of reconfigurable scattering surfaces.

Passive lossless particles are parameterized by 6x6 unitary matrices; the
package solves the coupled scattering problem of particle arrays, assembles
end-to-end wireless channels and radar cross sections, optimizes
configurations in closed form and on the unitary manifold, and runs the
channel-estimation and RCS experiment sweeps.
"""

from .emcore import FREE_SPACE_IMPEDANCE, PlaneWave, Wavenumber
from .errors import NumericalError, RiscatError, ValidationError
from .scattering import (
    ParticleConfig,
    Polarizability,
    RisArray,
    assemble_array,
    check_passivity,
    check_reciprocity,
    polarizability_from_unitary,
    scattered_spectrum,
    scattering_matrix,
)

__version__ = "0.1.0"

__all__ = [
    "FREE_SPACE_IMPEDANCE",
    "NumericalError",
    "ParticleConfig",
    "PlaneWave",
    "Polarizability",
    "RisArray",
    "RiscatError",
    "ValidationError",
    "Wavenumber",
    "assemble_array",
    "check_passivity",
    "check_reciprocity",
    "polarizability_from_unitary",
    "scattered_spectrum",
    "scattering_matrix",
    "__version__",
]
