import numpy as np
import pytest

from riscat.emcore import Wavenumber


@pytest.fixture(scope="session")
def k1():
    """Dimensionless default medium: wavelength 1 m, impedance 1."""
    return Wavenumber.from_wavelength(1.0)


def random_direction(rng):
    v = rng.standard_normal(3)
    return v / np.linalg.norm(v)


def random_transverse_polarization(rng, direction, complex_valued=True):
    """Unit polarization orthogonal to the given propagation direction."""
    v = rng.standard_normal(3) + (1j * rng.standard_normal(3) if complex_valued else 0.0)
    v = v - (direction @ v) * direction
    n = np.linalg.norm(v)
    if n < 1e-9:
        return random_transverse_polarization(rng, direction, complex_valued)
    return v / n
