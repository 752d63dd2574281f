"""Closed-form single-particle analysis.

Everything here concerns one particle at the origin: the analytic scattering
expression, the SVD construction of the maximum-utility configuration, a small
catalog of named example configurations, one-way (downlink/uplink) responses,
and two-channel multiplexing.  The planar geometry places all directions in
the yz-plane with the outgoing reference along +z.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .scattering import ParticleConfig, ingoing_field_map, outgoing_projection

NAMED_CASES = ("B1", "B2", "B3", "B4", "B5", "B6")


@dataclass(frozen=True)
class SingleElementGeometry:
    """Separation angle phi, polarization rotation vartheta, phase shift rho."""

    phi: float
    vartheta: float = 0.0
    rho: float = 0.0

    @property
    def r_in(self):
        return np.array([0.0, -np.sin(self.phi), -np.cos(self.phi)])

    @property
    def r_out(self):
        return np.array([0.0, 0.0, 1.0])

    @property
    def p_in(self):
        return np.array([1.0, 0.0, 0.0], dtype=complex)

    @property
    def p_out(self):
        return np.exp(1j * self.rho) * np.array(
            [np.cos(self.vartheta), np.sin(self.vartheta), 0.0], dtype=complex
        )


def single_element_scattering(cfg, r_out, r_in, k):
    """3x3 scattering matrix (3i/4k) P (U + I) O of one particle at the origin."""
    if not isinstance(cfg, ParticleConfig):
        cfg = ParticleConfig(u=cfg)
    p = outgoing_projection(r_out)
    o = ingoing_field_map(r_in)
    return (3j / (4.0 * k.k)) * p @ (cfg.u + np.eye(6)) @ o


def _phase_fix(v):
    """Phase that makes the first entry of v with magnitude above tolerance real-positive."""
    idx = np.flatnonzero(np.abs(v) > 1e-12)
    if idx.size == 0:
        return 1.0
    a = v[idx[0]]
    return a / abs(a)


def minimal_rotation(u_from, v_to):
    """Unitary mapping u_from to v_to, acting as identity on the orthogonal complement.

    Both inputs must be unit vectors.  The rotation lives in the plane spanned
    by the two vectors, which makes the maximizer construction deterministic.
    """
    u = np.asarray(u_from, dtype=complex)
    v = np.asarray(v_to, dtype=complex)
    alpha = np.vdot(u, v)
    w = v - alpha * u
    wn = np.linalg.norm(w)
    r = np.eye(u.size, dtype=complex) + (alpha - 1.0) * np.outer(u, u.conj())
    if wn > 1e-14:
        w = w / wn
        beta = np.vdot(w, v)
        r += beta * np.outer(w, u.conj()) - np.conj(beta) * np.outer(u, w.conj()) \
            + (np.conj(alpha) - 1.0) * np.outer(w, w.conj())
    return r


def rank_one_maximizer(a_vec, b_vec):
    """Unitary U maximizing Re{Tr(U a b^H)}, deterministically completed.

    The target a b^H is rank one, so the maximizer is any unitary mapping the
    (phase-fixed) direction of a onto that of b; the minimal rotation pins the
    free completion to the identity on the orthogonal complement.  The top
    singular value |a| |b| must equal 2, which holds exactly for unit
    polarizations transverse to their propagation directions.
    """
    a = np.asarray(a_vec, dtype=complex)
    b = np.asarray(b_vec, dtype=complex)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na < 1e-12 or nb < 1e-12:
        raise ValidationError("degenerate geometry: rank-one target is zero")
    if abs(na * nb - 2.0) > 1e-9:
        raise ValidationError(
            f"top singular value is {na * nb:.6f}, expected 2; polarizations must be "
            "unit vectors transverse to their directions"
        )
    fix = _phase_fix(a)
    u1 = a / (na * fix)
    v1 = b / (nb * fix)
    return minimal_rotation(u1, v1)


def max_utility_config(r_in, p_in, r_out, p_out):
    """Configuration maximizing the utility Re{p_out^H S p_in}."""
    a = 1j * ingoing_field_map(r_in) @ np.asarray(p_in, dtype=complex)
    b = outgoing_projection(r_out).conj().T @ np.asarray(p_out, dtype=complex)
    return ParticleConfig(u=rank_one_maximizer(a, b))


def named_config(case, rho=0.0, phi=None):
    """One of the six named example configurations.

    All matrices start from a default of -1 on the diagonal and zeros
    elsewhere; the per-case entries below overwrite that default.  B1..B4
    depend on the phase shift rho; B5 and B6 are constant.  phi is accepted
    for interface parity and ignored (no named case is angle-tuned).
    """
    if case not in NAMED_CASES:
        raise ValidationError(f"unknown configuration case {case!r}; expected one of {NAMED_CASES}")
    u = -np.eye(6, dtype=complex)
    ph = np.exp(1j * (rho + np.pi / 2.0))
    c = np.sqrt(0.5) * ph
    if case == "B1":
        # Constant-amplitude phase shifting at phi = 0, parallel polarization.
        u[0, 0] = ph
        u[4, 4] = -ph
    elif case == "B2":
        # Constant-amplitude phase shifting at phi = pi/2, parallel polarization.
        u[0, 0] = ph
        u[4, 4] = 0.0
        u[5, 5] = 0.0
        u[5, 4] = -1.0
        u[4, 5] = -1.0
    elif case == "B3":
        # Constant-amplitude phase shifting for all on-axis angles, orthogonal polarization.
        u[0, 0] = 0.0
        u[1, 0] = c
        u[0, 1] = c
        u[0, 3] = c
        u[3, 0] = -c
        u[1, 1] = -0.5
        u[3, 1] = -0.5
        u[3, 3] = 0.5
        u[1, 3] = 0.5
    elif case == "B4":
        # One-way communication for all on-axis angles, orthogonal polarization.
        u[0, 0] = 0.0
        u[2, 2] = 0.0
        u[3, 3] = 0.0
        u[1, 0] = c
        u[3, 0] = -c
        u[0, 2] = -1.0
        u[2, 3] = -1.0
        u[1, 1] = -np.sqrt(0.5)
        u[3, 1] = -np.sqrt(0.5)
    elif case == "B5":
        # Spatial multiplexing, parallel transmitter/receiver pairs.
        u[4, 4] = -1j
        u[5, 5] = -1j
    elif case == "B6":
        # Spatial multiplexing, orthogonal transmitter/receiver pairs.
        u[5, 5] = 1.0
        u[0, 0] = -1.0 + np.sqrt(3.0) / 2.0
        u[1, 1] = 1.0 - np.sqrt(3.0) / 2.0
        u[1, 0] = np.sqrt(-3.0 + 4.0 * np.sqrt(3.0)) / 2.0
        u[0, 1] = np.sqrt(-3.0 + 4.0 * np.sqrt(3.0)) / 2.0
    return ParticleConfig(u=u)


def orthogonal_direction_max_config(rho):
    """Maximum-scattering configuration for phi = pi/2, parallel polarization.

    Unitary completion of u11 = u56 = e^{i(rho + pi/2)} with u16 = u51 = 0:
    the 5/6 sub-block is completed with u65 = -1, u55 = u66 = 0.
    """
    ph = np.exp(1j * (rho + np.pi / 2.0))
    u = -np.eye(6, dtype=complex)
    u[0, 0] = ph
    u[4, 5] = ph
    u[4, 4] = 0.0
    u[5, 5] = 0.0
    u[5, 4] = -1.0
    return ParticleConfig(u=u)


def one_way_parallel_config(rho):
    """One-way configuration for phi = pi/2, parallel polarization.

    Pins u11 = -1, u56 = e^{i(rho + pi/2)} and u16 = u51 = u61 = u15 = u65 = 0;
    the remaining rows are completed permutation-style (u45 = u64 = -1) to stay
    unitary.  Gives A_u = 0 and A_d = 3/(4k) at phi = pi/2.
    """
    ph = np.exp(1j * (rho + np.pi / 2.0))
    u = -np.eye(6, dtype=complex)
    u[4, 4] = 0.0
    u[5, 5] = 0.0
    u[3, 3] = 0.0
    u[4, 5] = ph
    u[3, 4] = -1.0
    u[5, 3] = -1.0
    return ParticleConfig(u=u)


def analytic_Ac(case, cfg, phi, rho, k):
    """Closed-form effective scattering for the planar single-element geometry.

    case 'parallel' evaluates the vartheta = 0 expression, case 'orthogonal'
    the vartheta = pi/2 one; both must coincide with the matrix pipeline.
    """
    if not isinstance(cfg, ParticleConfig):
        cfg = ParticleConfig(u=cfg)
    u = cfg.u
    pref = (3.0 / (4.0 * k.k)) * np.exp(-1j * (rho + np.pi / 2.0))
    sweep = np.array([np.cos(phi), np.sin(phi), 1.0])
    if case == "parallel":
        bracket = np.array(
            [
                -u[0, 4] - u[4, 4] - 1.0,
                u[0, 5] + u[4, 5],
                u[0, 0] + u[4, 0] + 1.0,
            ]
        )
    elif case == "orthogonal":
        bracket = np.array(
            [
                u[3, 4] - u[1, 4],
                u[1, 5] - u[3, 5],
                u[1, 0] - u[3, 0],
            ]
        )
    else:
        raise ValidationError(f"case must be 'parallel' or 'orthogonal', got {case!r}")
    return complex(pref * bracket @ sweep)


def effective_scattering(cfg, geometry, k):
    """Matrix-pipeline A_c = p_out^H S p_in for a single-element geometry."""
    s = single_element_scattering(cfg, geometry.r_out, geometry.r_in, k)
    return complex(geometry.p_out.conj() @ s @ geometry.p_in)


def one_way_responses(cfg, phi, vartheta, rho, k):
    """Downlink and uplink responses (A_d, A_u) of one particle.

    Downlink: wave from the phi-direction terminal scattered toward +z, read
    in polarization e^{i rho}(cos vartheta, sin vartheta, 0).  Uplink reverses
    both directions; polarization orientations stay fixed and the phase
    reference rides on the receiving side in both cases.
    """
    geo = SingleElementGeometry(phi=phi, vartheta=vartheta, rho=rho)
    a_d = effective_scattering(cfg, geo, k)
    s_up = single_element_scattering(cfg, -geo.r_in, -geo.r_out, k)
    p_rx = np.exp(1j * rho) * np.array([1.0, 0.0, 0.0], dtype=complex)
    p_tx = np.array([np.cos(vartheta), np.sin(vartheta), 0.0], dtype=complex)
    a_u = complex(p_rx.conj() @ s_up @ p_tx)
    return a_d, a_u


def multiplex_geometry(phi_t, delta_t):
    """Directions and x-polarizations of one multiplexed channel in the yz-plane."""
    r_in = np.array([0.0, -np.sin(phi_t), -np.cos(phi_t)])
    r_out = np.array([0.0, np.sin(phi_t - delta_t), np.cos(phi_t - delta_t)])
    p = np.array([1.0, 0.0, 0.0], dtype=complex)
    return r_in, p, r_out, p


def multiplexing_matrix(cfg, channels, k):
    """2x2 matrix of effective scattering between two channels.

    channels is a pair of (r_in, p_in, r_out, p_out) tuples; entry (t, s) is
    p_out_t^H S(r_out_t, r_in_s) p_in_s.
    """
    if len(channels) != 2:
        raise ValidationError("exactly two channels are required")
    out = np.zeros((2, 2), dtype=complex)
    for t in range(2):
        _, _, r_out_t, p_out_t = channels[t]
        for s in range(2):
            r_in_s, p_in_s, _, _ = channels[s]
            sm = single_element_scattering(cfg, r_out_t, r_in_s, k)
            out[t, s] = np.asarray(p_out_t).conj() @ sm @ np.asarray(p_in_s)
    return out
