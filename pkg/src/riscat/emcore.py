"""Free-space electromagnetic primitives.

Dyadic Green's functions coupling electric and magnetic point currents, the
real-part self-term limit, and the far-field projection operators.  All phases
follow the exp(-i*k*r) outgoing-wave convention.  Positions and distances are
in meters; eta is the wave impedance of the embedding medium.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

# Wave impedance of vacuum in ohms, for runs in physical units.  Tests and the
# CLI default to the dimensionless eta = 1 mode.
FREE_SPACE_IMPEDANCE = 376.730313668


@dataclass(frozen=True)
class Wavenumber:
    """Angular wavenumber k = 2*pi/wavelength plus the medium impedance eta."""

    k: float
    eta: float = 1.0

    def __post_init__(self):
        if not (self.k > 0):
            raise ValidationError(f"wavenumber must be positive, got {self.k}")
        if not (self.eta > 0):
            raise ValidationError(f"impedance must be positive, got {self.eta}")

    @classmethod
    def from_wavelength(cls, wavelength, eta=1.0):
        if not (wavelength > 0):
            raise ValidationError(f"wavelength must be positive, got {wavelength}")
        return cls(k=2.0 * np.pi / wavelength, eta=eta)

    @property
    def wavelength(self):
        return 2.0 * np.pi / self.k


@dataclass(frozen=True)
class GreensBlock:
    """The four 3x3 dyadic blocks of the unweighted Green's matrix."""

    ee: np.ndarray
    em: np.ndarray
    me: np.ndarray
    mm: np.ndarray


@dataclass(frozen=True)
class FarFieldProjectors:
    """Transverse projector p1 = d d^T - I and cross-product matrix p2 = [d x]."""

    p1: np.ndarray
    p2: np.ndarray


@dataclass(frozen=True)
class PlaneWave:
    """A single plane wave: propagation direction, polarization, complex amplitude."""

    direction: np.ndarray
    polarization: np.ndarray
    amplitude: complex = 1.0 + 0.0j

    def spectrum(self):
        """Amplitude-weighted polarization vector (the plane-wave spectrum value)."""
        return self.amplitude * np.asarray(self.polarization, dtype=complex)


def _unit(v, name="vector"):
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0.0:
        raise ValidationError(f"{name} must be nonzero")
    return v / n


def cross_matrix(d):
    """Matrix [d x] such that cross_matrix(d) @ v == cross(d, v)."""
    d = np.asarray(d, dtype=float)
    return np.array(
        [
            [0.0, -d[2], d[1]],
            [d[2], 0.0, -d[0]],
            [-d[1], d[0], 0.0],
        ]
    )


def scalar_kernel(r, k):
    """Outgoing scalar kernel exp(-i*k*|r|) / (4*pi*|r|)."""
    rn = np.linalg.norm(np.asarray(r, dtype=float))
    if rn == 0.0:
        raise ValidationError("scalar kernel is singular at r = 0")
    return np.exp(-1j * k.k * rn) / (4.0 * np.pi * rn)


def green_ee(r, k):
    """Electric-to-electric dyadic at separation r.

    Closed-form expansion of -(1/k^2)(k^2 I + grad grad^T) applied to the
    scalar kernel; terms in 1/(kr), 1/(kr)^2, 1/(kr)^3.  Even in r, symmetric.
    """
    r = np.asarray(r, dtype=float)
    rn = np.linalg.norm(r)
    if rn == 0.0:
        raise ValidationError("green_ee is singular at r = 0; use g0_limit for the self term")
    rhat = r / rn
    kr = k.k * rn
    g = np.exp(-1j * kr) / (4.0 * np.pi * rn)
    c_i = 1.0 - 1j / kr - 1.0 / kr**2
    c_rr = -1.0 + 3j / kr + 3.0 / kr**2
    return -g * (c_i * np.eye(3) + c_rr * np.outer(rhat, rhat))


def green_em(r, k):
    """Magnetic-to-electric dyadic: -(1/ik) times the curl of the scalar kernel.

    Antisymmetric; green_me = -green_em.  Odd in r.
    """
    r = np.asarray(r, dtype=float)
    rn = np.linalg.norm(r)
    if rn == 0.0:
        raise ValidationError("green_em is singular at r = 0")
    rhat = r / rn
    kr = k.k * rn
    g = np.exp(-1j * kr) / (4.0 * np.pi * rn)
    return g * (1.0 - 1j / kr) * cross_matrix(rhat)


def green_blocks(r, k):
    """All four dyadic blocks at separation r (mm = ee, me = -em)."""
    ee = green_ee(r, k)
    em = green_em(r, k)
    return GreensBlock(ee=ee, em=em, me=-em, mm=ee)


def green_unweighted(r, k):
    """6x6 block matrix [[ee, em], [me, mm]] without the i*k and eta weights.

    This is the coupling kernel between particle current vectors in the
    impedance-normalized system.
    """
    b = green_blocks(r, k)
    out = np.zeros((6, 6), dtype=complex)
    out[:3, :3] = b.ee
    out[:3, 3:] = b.em
    out[3:, :3] = b.me
    out[3:, 3:] = b.mm
    return out


def green_full(r, k):
    """Full 6x6 Green's matrix i*k * [[ee*eta, em], [me, mm/eta]]."""
    b = green_blocks(r, k)
    out = np.zeros((6, 6), dtype=complex)
    out[:3, :3] = b.ee * k.eta
    out[:3, 3:] = b.em
    out[3:, :3] = b.me
    out[3:, 3:] = b.mm / k.eta
    return 1j * k.k * out


def g0_limit(k):
    """Real-part limit of the full Green's matrix at zero separation.

    Returns (-k^2 / 6 pi) * blockdiag(eta * I3, I3 / eta); real, diagonal,
    negative definite.
    """
    scale = -k.k**2 / (6.0 * np.pi)
    diag = np.concatenate([np.full(3, k.eta), np.full(3, 1.0 / k.eta)])
    return scale * np.diag(diag)


def farfield_projectors(d):
    """Far-field projectors for radiation direction d (any nonzero vector)."""
    dhat = _unit(d, "direction")
    p1 = np.outer(dhat, dhat) - np.eye(3)
    p2 = cross_matrix(dhat)
    return FarFieldProjectors(p1=p1, p2=p2)
