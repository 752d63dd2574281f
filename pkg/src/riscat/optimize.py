"""Effective-RCS maximization over block-unitary configurations.

Two solvers: a closed form that ignores the interaction field (per-particle
rank-one maximization), and gradient ascent directly on the product of 6x6
unitary groups with polar retraction and Armijo backtracking.  The Euclidean
gradient of the coupled objective is analytic; the Riemannian one is its
skew-Hermitian projection per block, G_R = (G - U G^H U) / 2 (stated here
explicitly since it is a convention, not a given).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import ValidationError
from .scattering import (
    ParticleConfig,
    apply_blockdiag,
    coupling_matrix,
    coupling_scale,
    factorize_checked,
    ingoing_field_map,
    outgoing_projection,
    steering_phases,
    system_matrix,
)
from .single_element import rank_one_maximizer

MODES = ("rcs", "utility")


@dataclass(frozen=True)
class Objective:
    """Geometry, wave pair and objective mode for one optimization instance.

    include_coupling=False drops the interaction field (M = 0), which makes the
    closed-form solutions exactly optimal; mainly useful for validation.
    """

    positions: np.ndarray
    k: object
    r_in: np.ndarray
    p_in: np.ndarray
    r_out: np.ndarray
    p_out: np.ndarray
    mode: str = "rcs"
    include_coupling: bool = True

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValidationError(f"mode must be one of {MODES}, got {self.mode!r}")
        object.__setattr__(self, "positions", np.atleast_2d(np.asarray(self.positions, dtype=float)))
        for name in ("r_in", "r_out"):
            v = np.asarray(getattr(self, name), dtype=float)
            if abs(np.linalg.norm(v) - 1.0) > 1e-9:
                raise ValidationError(f"{name} must be a unit vector")
            object.__setattr__(self, name, v)
        for name in ("p_in", "p_out"):
            v = np.asarray(getattr(self, name), dtype=complex)
            if abs(np.linalg.norm(v) - 1.0) > 1e-9:
                raise ValidationError(f"{name} must be unit norm")
            object.__setattr__(self, name, v)

    @property
    def n_particles(self):
        return self.positions.shape[0]


class ObjectiveWork:
    """Precomputed direction-dependent vectors shared by all evaluations."""

    def __init__(self, objective):
        self.objective = objective
        self.k = objective.k
        if objective.include_coupling:
            self.m = coupling_matrix(objective.positions, objective.k)
        else:
            self.m = np.zeros((6 * objective.n_particles, 6 * objective.n_particles), dtype=complex)
        self.cs = coupling_scale(objective.k)
        self.pref = 3j / (4.0 * objective.k.k)
        o_col = ingoing_field_map(objective.r_in) @ objective.p_in
        row_seed = objective.p_out.conj() @ outgoing_projection(objective.r_out)
        t_phases = np.conj(steering_phases(objective.positions, objective.k, objective.r_in))
        h_phases = steering_phases(objective.positions, objective.k, objective.r_out)
        n = objective.n_particles
        self.c = np.concatenate([t_phases[i] * o_col for i in range(n)])
        self.row = np.concatenate([h_phases[i] * row_seed for i in range(n)])

    def solve(self, v_blocks):
        """Factorize the coupled system at V and return (lu, y, a_c)."""
        vplus = v_blocks + np.eye(6)
        a = system_matrix(vplus, self.m, self.k)
        lu = factorize_checked(a)
        y = sla.lu_solve(lu, apply_blockdiag(vplus, self.c))
        a_c = complex(self.pref * (self.row @ y))
        return lu, y, a_c

    def value(self, a_c):
        return abs(a_c) ** 2 if self.objective.mode == "rcs" else a_c.real

    def evaluate(self, v_blocks):
        _, _, a_c = self.solve(v_blocks)
        return self.value(a_c)

    def gradient_blocks(self, v_blocks, lu, y, a_c):
        """Per-block conjugate cogradient dF/dV* of the objective at V.

        For the squared-magnitude mode this is beta (3/4k)^2 times the block
        diagonal of (E^H row^H)(c^H - cs (M y)^H); the utility mode swaps the
        leading scalar for conj(pref)/2.
        """
        w = sla.lu_solve(lu, self.row.conj(), trans=2)
        zrow = self.c.conj() - self.cs * np.conj(self.m @ y)
        if self.objective.mode == "rcs":
            beta = a_c / self.pref
            factor = (3.0 / (4.0 * self.k.k)) ** 2 * beta
        else:
            factor = np.conj(self.pref) / 2.0
        n = self.objective.n_particles
        blocks = np.empty((n, 6, 6), dtype=complex)
        for i in range(n):
            blocks[i] = factor * np.outer(w[6 * i : 6 * i + 6], zrow[6 * i : 6 * i + 6])
        return blocks


def _direction_terms(objective):
    a = 1j * ingoing_field_map(objective.r_in) @ objective.p_in
    b = outgoing_projection(objective.r_out).conj().T @ objective.p_out
    theta = objective.k.k * (objective.positions @ (objective.r_out - objective.r_in))
    return a, b, theta


def closed_form_no_coupling(objective):
    """Per-particle optimal blocks when the interaction field is ignored.

    Particle n maximizes Re{Tr(A_n U_n)} with A_n the rank-one direction target
    carrying the steering phase of x_n; all blocks share singular values
    (2, 0, ..., 0) since the phase has unit magnitude.
    """
    a, b, theta = _direction_terms(objective)
    n = objective.n_particles
    blocks = np.empty((n, 6, 6), dtype=complex)
    for i in range(n):
        blocks[i] = rank_one_maximizer(a * np.exp(1j * theta[i]), b)
    return blocks


def closed_form_diagonal(objective):
    """Diagonal-unitary solution: per-entry phases cancel the target's arguments.

    Always satisfies the reciprocity sub-block symmetries.  Zero target entries
    keep phase 1.
    """
    a, b, theta = _direction_terms(objective)
    d_seed = a * np.conj(b)
    n = objective.n_particles
    blocks = np.zeros((n, 6, 6), dtype=complex)
    for i in range(n):
        d = d_seed * np.exp(1j * theta[i])
        phases = np.where(np.abs(d) > 0.0, np.conj(d) / np.where(np.abs(d) > 0.0, np.abs(d), 1.0), 1.0)
        blocks[i] = np.diag(phases)
    return blocks


def euclidean_gradient(objective, v_blocks):
    """Analytic dF/dV* restricted to the diagonal blocks, as an (N, 6, 6) stack."""
    work = ObjectiveWork(objective)
    lu, y, a_c = work.solve(np.asarray(v_blocks, dtype=complex))
    return work.gradient_blocks(v_blocks, lu, y, a_c)


def evaluate_objective(objective, v_blocks):
    """Objective value at the given blocks."""
    return ObjectiveWork(objective).evaluate(np.asarray(v_blocks, dtype=complex))


def riemannian_project(grad_blocks, v_blocks):
    """Skew-Hermitian projection per block: (G - U G^H U) / 2."""
    out = np.empty_like(grad_blocks)
    for i in range(grad_blocks.shape[0]):
        g, u = grad_blocks[i], v_blocks[i]
        out[i] = (g - u @ g.conj().T @ u) / 2.0
    return out


def polar_retract(blocks):
    """Map each 6x6 block back to the unitary group via its polar factor."""
    out = np.empty_like(blocks)
    for i in range(blocks.shape[0]):
        w, _, vh = np.linalg.svd(blocks[i])
        out[i] = w @ vh
    return out


def _diag_mask(blocks):
    eye = np.eye(6, dtype=bool)
    return blocks * eye[None, :, :]


def unitarity_residual_blocks(v_blocks):
    return max(
        float(np.linalg.norm(b.conj().T @ b - np.eye(6))) for b in v_blocks
    )


@dataclass
class OptimizerState:
    """Final iterate plus per-iteration traces and the termination status."""

    v_blocks: np.ndarray
    objective_trace: list = field(default_factory=list)
    grad_norm_trace: list = field(default_factory=list)
    iterations: int = 0
    status: str = "initialized"

    @property
    def objective(self):
        return self.objective_trace[-1]

    def to_array(self, objective):
        """Assemble the solution into a RisArray for channel-level evaluation."""
        from .scattering import assemble_array

        configs = [ParticleConfig(u=b) for b in self.v_blocks]
        return assemble_array(objective.positions, configs, objective.k)


ARMIJO_C1 = 1e-4
MAX_BACKTRACKS = 30


def manifold_optimize(objective, init=None, max_iters=2000, grad_tol=None, diagonal_only=False):
    """Gradient ascent on the product manifold of per-particle unitaries.

    Accepted steps never decrease the objective (Armijo backtracking with
    initial step 1/|G_R|, contraction 1/2); every iterate is polar-retracted,
    so feasibility is exact rather than approximate.  diagonal_only restricts
    the tangent steps to diagonal phases, which preserves reciprocity.
    """
    work = ObjectiveWork(objective)
    if init is None:
        init = closed_form_diagonal(objective) if diagonal_only else closed_form_no_coupling(objective)
    v = np.asarray(init, dtype=complex).copy()
    if v.shape != (objective.n_particles, 6, 6):
        raise ValidationError(f"init must have shape (N, 6, 6), got {v.shape}")
    if diagonal_only and not all(np.allclose(b, np.diag(np.diagonal(b))) for b in v):
        raise ValidationError("diagonal_only requires a diagonal initial point")

    lu, y, a_c = work.solve(v)
    f = work.value(a_c)
    state = OptimizerState(v_blocks=v, objective_trace=[f], grad_norm_trace=[])
    if grad_tol is None:
        grad_tol = 1e-6 * max(abs(f), 1e-15)

    for it in range(max_iters):
        grad = work.gradient_blocks(v, lu, y, a_c)
        xi = riemannian_project(grad, v)
        if diagonal_only:
            xi = _diag_mask(xi)
        gn = float(np.linalg.norm(xi))
        state.grad_norm_trace.append(gn)
        state.iterations = it
        if gn <= grad_tol:
            state.status = "converged"
            break

        slope = 2.0 * gn**2
        t = 1.0 / gn
        accepted = False
        for _ in range(MAX_BACKTRACKS):
            v_trial = polar_retract(v + t * xi)
            lu_t, y_t, a_c_t = work.solve(v_trial)
            f_trial = work.value(a_c_t)
            if f_trial >= f + ARMIJO_C1 * t * slope:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            state.status = "line_search_failed"
            break
        v, f, lu, y, a_c = v_trial, f_trial, lu_t, y_t, a_c_t
        state.v_blocks = v
        state.objective_trace.append(f)
    else:
        state.status = "max_iters"
        state.iterations = max_iters

    return state
