"""End-to-end channel assembly.

Terminals carry power-normalized effective lengths; the direct and
surface-assisted line-of-sight gains combine into the received signal.  The
array is assumed to sit around the coordinate origin, which anchors both the
scattering matrix phases and the path lengths of the assisted link.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .scattering import scattering_matrix

_ORIGIN = np.zeros(3)


@dataclass(frozen=True)
class Terminal:
    """Single-antenna terminal: position, effective length, reference power.

    effective_length maps a unit direction to the complex power-normalized
    effective length vector (units m / sqrt(W) in physical mode).
    """

    position: np.ndarray
    effective_length: object
    reference_power: float = 1.0

    def length(self, direction):
        return np.asarray(self.effective_length(np.asarray(direction, dtype=float)), dtype=complex)


def isotropic_terminal(position, k, axis="x", gain=1.0):
    """Ideal linearly polarized isotropic terminal with the given gain.

    The effective length amplitude is chosen so that 2 pi eta |l|^2 / lambda^2
    equals the gain for every direction.
    """
    pol = {"x": np.array([1.0, 0.0, 0.0]), "y": np.array([0.0, 1.0, 0.0])}
    if axis not in pol:
        raise ValidationError(f"axis must be 'x' or 'y', got {axis!r}")
    amp = k.wavelength * np.sqrt(gain / (2.0 * np.pi * k.eta))
    vec = (amp * pol[axis]).astype(complex)
    return Terminal(position=np.asarray(position, dtype=float), effective_length=lambda _d, v=vec: v)


@dataclass(frozen=True)
class UtilityReport:
    """Effective scattering of one in/out wave pair and the derived cross sections."""

    a_c: complex
    a: float
    sigma_eff: float
    sigma_bar: float


@dataclass(frozen=True)
class LinkBudget:
    """Scalar link amplitudes and the quantities they are assembled from."""

    a_d: float
    a_a: float
    gain_t: float
    gain_r: float
    d_rt: float
    d_rs: float
    d_st: float


def _sep(a, b, name):
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    dist = np.linalg.norm(d)
    if dist == 0.0:
        raise ValidationError(f"coincident positions in {name}")
    return d / dist, dist


def los_channels(tx, rx, array):
    """Direct and surface-assisted complex gains for a line-of-sight scene.

    h_d carries the transmitter/receiver effective lengths over the direct
    path; h_a routes through the array's scattering matrix evaluated at the
    (array->receiver, transmitter->array) propagation directions.
    """
    d_rt_hat, d_rt = _sep(rx.position, tx.position, "tx/rx")
    d_rs_hat, d_rs = _sep(rx.position, _ORIGIN, "rx/array")
    d_st_hat, d_st = _sep(_ORIGIN, tx.position, "array/tx")
    k = array.k

    l_r_direct = rx.length(-d_rt_hat)
    l_t_direct = tx.length(d_rt_hat)
    h_d = np.exp(-1j * k.k * d_rt) / d_rt * np.vdot(l_r_direct, l_t_direct)

    s = scattering_matrix(array, d_rs_hat, d_st_hat).s
    l_r = rx.length(-d_rs_hat)
    l_t = tx.length(d_st_hat)
    h_a = np.exp(-1j * k.k * (d_rs + d_st)) / (d_rs * d_st) * (l_r.conj() @ s @ l_t)
    return complex(h_d), complex(h_a)


def received_signal(h_d, h_a, s, k):
    """Received signal v = (eta / 2 lambda)(h_d + h_a) s, in sqrt(W)."""
    return (k.eta / (2.0 * k.wavelength)) * (h_d + h_a) * s


def channel_gain(h_d, h_a, k):
    """Power ratio |v|^2 / |s|^2 of the combined direct and assisted paths."""
    return (k.eta / (2.0 * k.wavelength)) ** 2 * abs(h_d + h_a) ** 2


def _check_unit(v, name, complex_ok=True):
    v = np.asarray(v, dtype=complex if complex_ok else float)
    n = np.linalg.norm(v)
    if abs(n - 1.0) > 1e-9:
        raise ValidationError(f"{name} must be unit norm, got {n}")
    return v


def utility(array, r_in, p_in, r_out, p_out):
    """Effective scattering A_c = p_out^H S p_in plus the derived RCS values.

    sigma_eff = 4 pi |A_c|^2 is the cross section presented to the specific
    polarization pair; sigma_bar = 4 pi |S p_in|^2 ignores the receive
    polarization.
    """
    p_in = _check_unit(p_in, "p_in")
    p_out = _check_unit(p_out, "p_out")
    s = scattering_matrix(array, r_out, r_in).s
    a_c = complex(p_out.conj() @ s @ p_in)
    s_p_in = s @ p_in
    return UtilityReport(
        a_c=a_c,
        a=a_c.real,
        sigma_eff=4.0 * np.pi * abs(a_c) ** 2,
        sigma_bar=4.0 * np.pi * float(np.linalg.norm(s_p_in) ** 2),
    )


def terminal_gain(term, direction, k):
    """Antenna gain 2 pi eta |l(direction)|^2 / lambda^2."""
    l = term.length(direction)
    return 2.0 * np.pi * k.eta * float(np.linalg.norm(l) ** 2) / k.wavelength**2


def link_budget(tx, rx, array, report):
    """Direct and assisted link amplitudes from gains, distances and sigma_bar."""
    d_rt_hat, d_rt = _sep(rx.position, tx.position, "tx/rx")
    _, d_rs = _sep(rx.position, _ORIGIN, "rx/array")
    _, d_st = _sep(_ORIGIN, tx.position, "array/tx")
    k = array.k
    d_rs_hat = np.asarray(rx.position, dtype=float) / d_rs
    d_st_hat = -np.asarray(tx.position, dtype=float) / d_st

    g_t_direct = terminal_gain(tx, d_rt_hat, k)
    g_r_direct = terminal_gain(rx, -d_rt_hat, k)
    g_t = terminal_gain(tx, d_st_hat, k)
    g_r = terminal_gain(rx, -d_rs_hat, k)
    a_d = np.sqrt(g_r_direct * g_t_direct) / d_rt
    a_a = np.sqrt(g_r * g_t * report.sigma_bar / (4.0 * np.pi)) / (d_rs * d_st)
    return LinkBudget(a_d=a_d, a_a=a_a, gain_t=g_t, gain_r=g_r, d_rt=d_rt, d_rs=d_rs, d_st=d_st)


def los_objective_f(tx, rx, array):
    """Phase-aligned link objective assembled from the normalized quantities.

    Equals (4 pi / lambda)^2 times the channel gain of the same scene; the
    sigma_bar = 0 branch (dark array) takes the direct-only path with no
    division by the vanishing normalization.
    """
    d_rt_hat, d_rt = _sep(rx.position, tx.position, "tx/rx")
    d_rs_hat, d_rs = _sep(rx.position, _ORIGIN, "rx/array")
    d_st_hat, d_st = _sep(_ORIGIN, tx.position, "array/tx")
    k = array.k

    def unit_length(term, direction):
        l = term.length(direction)
        n = np.linalg.norm(l)
        if n == 0.0:
            raise ValidationError("terminal has zero effective length")
        return l / n

    s = scattering_matrix(array, d_rs_hat, d_st_hat).s
    lt_hat = unit_length(tx, d_st_hat)
    sigma_bar = 4.0 * np.pi * float(np.linalg.norm(s @ lt_hat) ** 2)

    budget_terms = np.sqrt(terminal_gain(rx, -d_rt_hat, k) * terminal_gain(tx, d_rt_hat, k)) / d_rt
    direct = (
        budget_terms
        * np.vdot(unit_length(rx, -d_rt_hat), unit_length(tx, d_rt_hat))
        * np.exp(-1j * k.k * d_rt)
    )
    if sigma_bar == 0.0:
        return float(abs(direct) ** 2)
    p_r = (s @ lt_hat) * np.sqrt(4.0 * np.pi / sigma_bar)
    a_a = np.sqrt(terminal_gain(rx, -d_rs_hat, k) * terminal_gain(tx, d_st_hat, k) * sigma_bar / (4.0 * np.pi)) / (
        d_rs * d_st
    )
    assisted = a_a * np.vdot(unit_length(rx, -d_rs_hat), p_r) * np.exp(-1j * k.k * (d_rs + d_st))
    return float(abs(direct + assisted) ** 2)
