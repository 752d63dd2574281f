"""Lossless-particle polarizability and the coupled N-particle scattering matrix.

A particle is configured by a 6x6 unitary matrix; the induced electric and
magnetic dipole currents respond to the acting field through the polarizability
built from that unitary.  An array of such particles scatters an ingoing plane
wave into an outgoing plane-wave spectrum through a dense 6N x 6N linear solve
that accounts for all inter-particle interaction fields.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

from .emcore import PlaneWave, Wavenumber, farfield_projectors, g0_limit, green_unweighted
from .errors import NumericalError, ValidationError

log = logging.getLogger(__name__)

UNITARITY_TOL = 1e-9
RECIPROCITY_TOL = 1e-9
# Reciprocal condition estimate below which the coupled solve logs a diagnostic.
CONDITION_WARN = 1e8


def random_unitary(n=6, seed=None, rng=None):
    """Haar-distributed n x n unitary via phase-fixed QR of a complex Gaussian."""
    if rng is None:
        rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def unitarity_residual(u):
    u = np.asarray(u, dtype=complex)
    return np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0]))


def project_unitary(u):
    """Polar projection onto the unitary group (explicit repair, never applied silently)."""
    w, _, vh = np.linalg.svd(np.asarray(u, dtype=complex))
    return w @ vh


def _subblocks(m):
    m = np.asarray(m, dtype=complex)
    return m[:3, :3], m[:3, 3:], m[3:, :3], m[3:, 3:]


def _block_symmetry_residual(m):
    """Norm of the deviation from (ee symmetric, mm symmetric, em = -me^T)."""
    ee, em, me, mm = _subblocks(m)
    return np.sqrt(
        np.linalg.norm(ee - ee.T) ** 2
        + np.linalg.norm(mm - mm.T) ** 2
        + np.linalg.norm(em + me.T) ** 2
    )


@dataclass(frozen=True)
class ParticleConfig:
    """One particle's 6x6 unitary configuration plus its computed reciprocity flag."""

    u: np.ndarray
    reciprocal: bool = field(init=False)

    def __post_init__(self):
        u = np.asarray(self.u, dtype=complex)
        if u.shape != (6, 6):
            raise ValidationError(f"configuration matrix must be 6x6, got {u.shape}")
        res = unitarity_residual(u)
        if res > UNITARITY_TOL:
            raise ValidationError(
                f"configuration is not unitary (residual {res:.3e} > {UNITARITY_TOL:.0e}); "
                "apply project_unitary() explicitly if a repair is intended"
            )
        object.__setattr__(self, "u", u)
        rec = _block_symmetry_residual(u) <= RECIPROCITY_TOL * max(1.0, np.linalg.norm(u))
        object.__setattr__(self, "reciprocal", bool(rec))


@dataclass(frozen=True)
class Polarizability:
    """Proportionality matrix mapping the acting [e; h] field to [j; m] currents."""

    x: np.ndarray
    k: Wavenumber


def dark_config():
    """Configuration with zero scattering (u = -I)."""
    return ParticleConfig(u=-np.eye(6, dtype=complex))


def polarizability_from_unitary(cfg, k):
    """Polarizability of a passive lossless particle configured by a unitary matrix.

    X = (-G0)^(-1/2) (U + I)/2 (-G0)^(-1/2), with the inverse square root taken
    elementwise on the positive diagonal of -G0.
    """
    if not isinstance(cfg, ParticleConfig):
        cfg = ParticleConfig(u=cfg)
    half_inv = np.diag(1.0 / np.sqrt(np.diagonal(-g0_limit(k))))
    x = half_inv @ ((cfg.u + np.eye(6)) / 2.0) @ half_inv
    return Polarizability(x=x, k=k)


def _as_matrix(x):
    return x.x if isinstance(x, Polarizability) else np.asarray(x, dtype=complex)


def check_passivity(x, k):
    """Frobenius norm of (X + X^H)/2 + X^H G0 X; zero iff passive and lossless."""
    xm = _as_matrix(x)
    g0 = g0_limit(k)
    return float(np.linalg.norm((xm + xm.conj().T) / 2.0 + xm.conj().T @ g0 @ xm))


def reciprocity_residual(x):
    """Deviation of the polarizability sub-blocks from the reciprocity symmetries."""
    return float(_block_symmetry_residual(_as_matrix(x)))


def check_reciprocity(x, tol=RECIPROCITY_TOL):
    """True iff X_ee = X_ee^T, X_mm = X_mm^T and X_em = -X_me^T within tol."""
    xm = _as_matrix(x)
    return reciprocity_residual(xm) <= tol * max(1.0, float(np.linalg.norm(xm)))


def two_actor_reciprocity_probe(x, x1, x2, j, m, a_e, a_m, k, scatterer=(0.0, 0.0, 0.0)):
    """Measure the channel between two point actors in both directions.

    Forward run: the actor at x1 radiates currents (j, m) and the actor at x2
    measures along (a_e, a_m), with the scatterer of polarizability x at
    `scatterer`.  Reverse run: the actors swap roles, so the actor at x2
    radiates the old measurement pattern and the actor at x1 projects onto the
    old current pattern, with the signs of both magnetic parts flipped to
    reverse the direction of radiation and measurement.  h1 equals h2 (to
    rounding) exactly when the polarizability satisfies the reciprocity
    sub-block symmetries.
    """
    from .emcore import green_full

    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    x0 = np.asarray(scatterer, dtype=float)
    for a, b, name in ((x1, x2, "x1/x2"), (x1, x0, "x1/scatterer"), (x2, x0, "x2/scatterer")):
        if np.array_equal(a, b):
            raise ValidationError(f"positions {name} coincide")
    xm = _as_matrix(x)
    c_fwd = np.concatenate([np.asarray(j, dtype=complex), np.asarray(m, dtype=complex)])
    c_rev = np.concatenate([np.asarray(j, dtype=complex), -np.asarray(m, dtype=complex)])
    a_fwd = np.concatenate([np.asarray(a_e, dtype=complex), np.asarray(a_m, dtype=complex)])
    a_rev = np.concatenate([np.asarray(a_e, dtype=complex), -np.asarray(a_m, dtype=complex)])

    h1 = a_fwd @ (green_full(x2 - x1, k) + green_full(x2 - x0, k) @ xm @ green_full(x0 - x1, k)) @ c_fwd
    h2 = c_rev @ (green_full(x1 - x2, k) + green_full(x1 - x0, k) @ xm @ green_full(x0 - x2, k)) @ a_rev
    return complex(h1), complex(h2)


def ingoing_field_map(r_in):
    """6x3 map from the ingoing plane-wave spectrum to the [e; eta*h] pair.

    The magnetic part is +r_hat x e for a wave propagating along r_in.
    """
    p2 = farfield_projectors(r_in).p2
    return np.vstack([np.eye(3), p2])


def outgoing_projection(r_out):
    """3x6 far-field projection [P1(r_out), P2(r_out)] applied to radiating currents."""
    proj = farfield_projectors(r_out)
    return np.hstack([proj.p1, proj.p2])


def coupling_scale(k):
    """Scalar in front of the interaction term of the coupled system."""
    return 3j * np.pi / k.k


def apply_blockdiag(blocks, mat):
    """Multiply a block-diagonal matrix (given as (N, 6, 6) blocks) into mat (6N x m)."""
    n = blocks.shape[0]
    out = np.empty((6 * n, mat.shape[1]) if mat.ndim == 2 else (6 * n,), dtype=complex)
    for i in range(n):
        out[6 * i : 6 * i + 6] = blocks[i] @ mat[6 * i : 6 * i + 6]
    return out


def system_matrix(vplus_blocks, m_coupling, k):
    """I - (3i pi / k) (V + I) M for block-diagonal V + I given as (N, 6, 6) blocks."""
    n6 = m_coupling.shape[0]
    a = np.eye(n6, dtype=complex) - coupling_scale(k) * apply_blockdiag(vplus_blocks, m_coupling)
    return a


@dataclass
class RisArray:
    """Immutable assembled array: geometry, configurations, and cached coupling blocks."""

    positions: np.ndarray
    k: Wavenumber
    configs: list
    v: np.ndarray
    m: np.ndarray
    _lu: tuple | None = field(default=None, repr=False)

    @property
    def n_particles(self):
        return self.positions.shape[0]

    @property
    def v_blocks(self):
        n = self.n_particles
        return np.stack([self.v[6 * i : 6 * i + 6, 6 * i : 6 * i + 6] for i in range(n)])

    def system_lu(self):
        """LU factorization of I - (3i pi / k)(V + I) M, cached across direction pairs."""
        if self._lu is None:
            vplus = self.v_blocks + np.eye(6)
            a = system_matrix(vplus, self.m, self.k)
            self._lu = factorize_checked(a)
        return self._lu


def factorize_checked(a):
    """LU-factorize with a singularity check and a condition-number diagnostic."""
    anorm = np.linalg.norm(a, 1)
    try:
        lu, piv = sla.lu_factor(a)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - raised only on hard failure
        raise NumericalError(f"coupled system factorization failed: {exc}") from exc
    rcond, info = lapack.zgecon(lu, anorm, norm="1")
    if info != 0 or not np.isfinite(rcond) or rcond == 0.0:
        raise NumericalError("coupled system matrix is singular (rcond estimate 0)")
    if rcond < 1.0 / CONDITION_WARN:
        log.warning("coupled system is ill-conditioned: cond ~ %.3e", 1.0 / rcond)
    return lu, piv


def validate_positions(positions):
    positions = np.atleast_2d(np.asarray(positions, dtype=float))
    if positions.ndim != 2 or positions.shape[1] != 3:
        raise ValidationError(f"positions must be (N, 3), got {positions.shape}")
    n = positions.shape[0]
    if n < 1:
        raise ValidationError("array needs at least one particle")
    for i in range(n):
        for jj in range(i + 1, n):
            if np.array_equal(positions[i], positions[jj]):
                raise ValidationError(f"particles {i} and {jj} share position {positions[i]}")
    return positions


def coupling_matrix(positions, k):
    """6N x 6N interaction matrix: zero diagonal blocks, M_ij = G'(x_i - x_j)."""
    positions = validate_positions(positions)
    n = positions.shape[0]
    m = np.zeros((6 * n, 6 * n), dtype=complex)
    for i in range(n):
        for jj in range(n):
            if i == jj:
                continue
            m[6 * i : 6 * i + 6, 6 * jj : 6 * jj + 6] = green_unweighted(positions[i] - positions[jj], k)
    return m


def assemble_array(positions, configs, k):
    """Build the array: block-diagonal V of configurations and coupling matrix M.

    Inter-particle spacing must be large compared to the (unmodeled) particle
    size for the dipolar picture to hold; that precondition is documented, not
    enforced.
    """
    positions = validate_positions(positions)
    n = positions.shape[0]
    configs = [c if isinstance(c, ParticleConfig) else ParticleConfig(u=c) for c in configs]
    if len(configs) != n:
        raise ValidationError(f"{n} positions but {len(configs)} configurations")

    v = np.zeros((6 * n, 6 * n), dtype=complex)
    for i, cfg in enumerate(configs):
        v[6 * i : 6 * i + 6, 6 * i : 6 * i + 6] = cfg.u

    return RisArray(positions=positions, k=k, configs=configs, v=v, m=coupling_matrix(positions, k))


def steering_phases(positions, k, direction):
    """Per-particle phases exp(i k r_hat . x_n)."""
    d = np.asarray(direction, dtype=float)
    return np.exp(1j * k.k * positions @ d)


def outgoing_stack(array, r_out):
    """3 x 6N matrix P(r_out) H with the outgoing steering phases."""
    p = outgoing_projection(r_out)
    phases = steering_phases(array.positions, array.k, r_out)
    return np.hstack([ph * p for ph in phases])


def ingoing_stack(array, r_in):
    """6N x 3 matrix T O(r_in) with the ingoing steering phases."""
    o = ingoing_field_map(r_in)
    phases = np.conj(steering_phases(array.positions, array.k, r_in))
    return np.vstack([ph * o for ph in phases])


def scattering_matrix(array, r_out, r_in):
    """3x3 matrix mapping the ingoing plane-wave spectrum to the outgoing one.

    S = (3i/4k) P H (I - (3i pi/k)(V+I)M)^(-1) (V+I) T O, solved by dense LU
    with partial pivoting.  Directions are propagation directions of the in-
    and outgoing waves.
    """
    r_out = _unit_direction(r_out)
    r_in = _unit_direction(r_in)
    rhs = apply_blockdiag(array.v_blocks + np.eye(6), ingoing_stack(array, r_in))
    lu = array.system_lu()
    y = sla.lu_solve(lu, rhs)
    s = (3j / (4.0 * array.k.k)) * outgoing_stack(array, r_out) @ y
    return ScatteringResponse(s=s, r_in=r_in, r_out=r_out)


def _unit_direction(d):
    d = np.asarray(d, dtype=float)
    n = np.linalg.norm(d)
    if n == 0.0:
        raise ValidationError("direction must be nonzero")
    if abs(n - 1.0) > 1e-9:
        raise ValidationError(f"direction must be a unit vector, got norm {n}")
    return d


@dataclass(frozen=True)
class ScatteringResponse:
    """Scattering matrix between one ingoing and one outgoing direction."""

    s: np.ndarray
    r_in: np.ndarray
    r_out: np.ndarray


def scattered_spectrum(array, e_in, r_out):
    """Outgoing plane-wave spectrum for an ingoing plane wave."""
    if not isinstance(e_in, PlaneWave):
        raise ValidationError("e_in must be a PlaneWave")
    resp = scattering_matrix(array, r_out, e_in.direction)
    return resp.s @ e_in.spectrum()
