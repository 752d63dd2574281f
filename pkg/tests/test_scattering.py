"""Polarizability, passivity/reciprocity validators, and the coupled array solve."""

import numpy as np
import pytest

from riscat.emcore import PlaneWave, Wavenumber, g0_limit, green_full
from riscat.errors import ValidationError
from riscat.scattering import (
    ParticleConfig,
    Polarizability,
    apply_blockdiag,
    assemble_array,
    check_passivity,
    check_reciprocity,
    coupling_scale,
    dark_config,
    ingoing_field_map,
    ingoing_stack,
    outgoing_projection,
    outgoing_stack,
    polarizability_from_unitary,
    project_unitary,
    random_unitary,
    reciprocity_residual,
    scattered_spectrum,
    scattering_matrix,
    two_actor_reciprocity_probe,
    unitarity_residual,
)
from riscat.single_element import max_utility_config, named_config

from conftest import random_direction, random_transverse_polarization


@pytest.fixture()
def probe_setup():
    rng = np.random.default_rng(77)
    x1 = np.array([0.0, 2.0, 1.0])
    x2 = np.array([1.0, -1.0, 2.0])
    j = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    m = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    a_e = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    a_m = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    return x1, x2, j, m, a_e, a_m


class TestParticleConfig:
    def test_rejects_non_unitary(self):
        with pytest.raises(ValidationError):
            ParticleConfig(u=np.eye(6) * 1.5)

    def test_explicit_repair(self):
        rng = np.random.default_rng(1)
        u = random_unitary(6, rng=rng) + 1e-6 * rng.standard_normal((6, 6))
        assert unitarity_residual(u) > 1e-9
        fixed = project_unitary(u)
        assert unitarity_residual(fixed) < 1e-12

    def test_reciprocal_flag(self):
        assert ParticleConfig(u=np.diag(np.exp(1j * np.arange(6)))).reciprocal
        assert not named_config("B4", rho=0.2).reciprocal


class TestPolarizability:
    def test_dark_particle_is_zero(self, k1):
        pol = polarizability_from_unitary(dark_config(), k1)
        assert np.allclose(pol.x, 0.0)
        assert check_passivity(pol, k1) == 0.0

    def test_identity_configuration(self, k1):
        # (U + I)/2 = I makes X the inverse of -G0; both sides of the passivity
        # identity then equal 2 (-G0)^-1.
        pol = polarizability_from_unitary(ParticleConfig(u=np.eye(6, dtype=complex)), k1)
        assert np.allclose(pol.x, np.linalg.inv(-g0_limit(k1)))
        assert check_passivity(pol, k1) < 1e-12

    def test_random_unitaries_are_passive(self, k1):
        rng = np.random.default_rng(2)
        for _ in range(100):
            pol = polarizability_from_unitary(ParticleConfig(u=random_unitary(6, rng=rng)), k1)
            assert check_passivity(pol, k1) < 1e-10

    def test_amplifying_matrix_fails_passivity(self, k1):
        x = 2.0 * np.linalg.inv(-g0_limit(k1))
        assert check_passivity(x, k1) > 1e-3

    def test_physical_impedance_passivity(self):
        k = Wavenumber.from_wavelength(0.1, eta=376.73)
        rng = np.random.default_rng(3)
        pol = polarizability_from_unitary(ParticleConfig(u=random_unitary(6, rng=rng)), k)
        assert check_passivity(pol, k) < 1e-10 * np.linalg.norm(pol.x)


class TestReciprocity:
    def test_diagonal_is_reciprocal(self, k1):
        x = np.diag(np.arange(1, 7).astype(complex))
        assert check_reciprocity(x)

    def test_symmetric_em_block_is_not(self):
        x = np.zeros((6, 6), dtype=complex)
        x[:3, 3:] = np.eye(3)
        x[3:, :3] = np.eye(3)  # em = +me^T
        assert not check_reciprocity(x)
        assert reciprocity_residual(x) > 1.0

    def test_one_way_matrix_is_not(self, k1):
        pol = polarizability_from_unitary(named_config("B4", rho=0.3), k1)
        assert not check_reciprocity(pol)


class TestTwoActorProbe:
    def test_reciprocal_diagonal_config(self, k1, probe_setup):
        x1, x2, j, m, a_e, a_m = probe_setup
        rng = np.random.default_rng(8)
        pol = polarizability_from_unitary(
            ParticleConfig(u=np.diag(np.exp(1j * rng.uniform(0, 2 * np.pi, 6)))), k1
        )
        h1, h2 = two_actor_reciprocity_probe(pol, x1, x2, j, m, a_e, a_m, k1)
        assert abs(h1 - h2) < 1e-12 * abs(h1)

    def test_dark_scatterer_reduces_to_direct_coupling(self, k1, probe_setup):
        x1, x2, j, m, a_e, a_m = probe_setup
        pol = Polarizability(x=np.zeros((6, 6), dtype=complex), k=k1)
        h1, h2 = two_actor_reciprocity_probe(pol, x1, x2, j, m, a_e, a_m, k1)
        direct = np.concatenate([a_e, a_m]) @ green_full(x2 - x1, k1) @ np.concatenate([j, m])
        assert h1 == pytest.approx(direct)
        assert h2 == pytest.approx(direct)

    def test_one_way_matrix_breaks_the_probe(self, k1, probe_setup):
        x1, x2, j, m, a_e, a_m = probe_setup
        pol = polarizability_from_unitary(named_config("B4", rho=0.3), k1)
        h1, h2 = two_actor_reciprocity_probe(pol, x1, x2, j, m, a_e, a_m, k1)
        assert abs(h1 - h2) > 1e-3 * abs(h1)

    def test_probe_agrees_with_structural_check(self, k1, probe_setup):
        x1, x2, j, m, a_e, a_m = probe_setup
        rng = np.random.default_rng(10)
        for _ in range(25):
            pol = polarizability_from_unitary(ParticleConfig(u=random_unitary(6, rng=rng)), k1)
            h1, h2 = two_actor_reciprocity_probe(pol, x1, x2, j, m, a_e, a_m, k1)
            gap_small = abs(h1 - h2) <= 1e-9 * abs(h1)
            assert gap_small == check_reciprocity(pol)

    def test_coincident_positions_rejected(self, k1, probe_setup):
        x1, _, j, m, a_e, a_m = probe_setup
        pol = Polarizability(x=np.zeros((6, 6), dtype=complex), k=k1)
        with pytest.raises(ValidationError):
            two_actor_reciprocity_probe(pol, x1, x1, j, m, a_e, a_m, k1)


class TestAssembleArray:
    def test_single_particle_has_no_coupling(self, k1):
        arr = assemble_array([[0, 0, 0]], [dark_config()], k1)
        assert np.allclose(arr.m, 0.0)

    def test_two_particle_coupling_symmetries(self, k1):
        cfgs = [dark_config(), dark_config()]
        arr = assemble_array([[0, 0, 0], [0, 0.7, 0]], cfgs, k1)
        m12 = arr.m[:6, 6:]
        m21 = arr.m[6:, :6]
        # ee/mm blocks even in the separation, em/me blocks odd
        assert np.allclose(m12[:3, :3], m21[:3, :3])
        assert np.allclose(m12[3:, 3:], m21[3:, 3:])
        assert np.allclose(m12[:3, 3:], -m21[:3, 3:])
        assert np.allclose(m12[:3, :3], m12[3:, 3:])
        assert np.allclose(m12[:3, 3:], -m12[3:, :3])

    def test_lattice_dimensions_and_zero_diagonal(self, k1):
        from riscat.experiments import lattice_positions

        pos = lattice_positions(8, 8, 0.5)
        arr = assemble_array(pos, [dark_config()] * 64, k1)
        assert arr.m.shape == (384, 384)
        for i in range(64):
            assert np.allclose(arr.m[6 * i : 6 * i + 6, 6 * i : 6 * i + 6], 0.0)

    def test_duplicate_positions_rejected(self, k1):
        with pytest.raises(ValidationError):
            assemble_array([[0, 0, 0], [0, 0, 0]], [dark_config()] * 2, k1)

    def test_config_count_mismatch_rejected(self, k1):
        with pytest.raises(ValidationError):
            assemble_array([[0, 0, 0]], [dark_config()] * 2, k1)


class TestScatteringMatrix:
    def test_dark_array_scatters_nothing(self, k1):
        arr = assemble_array([[0, 0, 0]], [dark_config()], k1)
        resp = scattering_matrix(arr, np.array([0.0, 0.0, 1.0]), np.array([0.0, 0.0, -1.0]))
        assert np.allclose(resp.s, 0.0)

    def test_max_utility_config_attains_closed_form(self, k1):
        rng = np.random.default_rng(20)
        for _ in range(10):
            r_in, r_out = random_direction(rng), random_direction(rng)
            p_in = random_transverse_polarization(rng, r_in)
            p_out = random_transverse_polarization(rng, r_out)
            cfg = max_utility_config(r_in, p_in, r_out, p_out)
            arr = assemble_array([[0, 0, 0]], [cfg], k1)
            s = scattering_matrix(arr, r_out, r_in).s
            a_c = p_out.conj() @ s @ p_in
            po = p_out.conj() @ outgoing_projection(r_out) @ ingoing_field_map(r_in) @ p_in
            expect = 3.0 / (2.0 * k1.k) + (3j / (4.0 * k1.k)) * po
            assert abs(a_c - expect) < 1e-12

    def test_two_particles_match_two_term_born_series(self, k1):
        # single scattering plus one bounce at weak (5 wavelength) coupling
        rng = np.random.default_rng(21)
        cfgs = [ParticleConfig(u=random_unitary(6, rng=rng)) for _ in range(2)]
        arr = assemble_array([[0, 0, 0], [0, 5.0, 0]], cfgs, k1)
        r_in = np.array([0.0, -np.sin(0.3), -np.cos(0.3)])
        r_out = np.array([0.0, 0.0, 1.0])
        s_full = scattering_matrix(arr, r_out, r_in).s

        vplus = arr.v_blocks + np.eye(6)
        bounce = coupling_scale(k1) * apply_blockdiag(vplus, arr.m)
        to = apply_blockdiag(vplus, ingoing_stack(arr, r_in))
        ph = outgoing_stack(arr, r_out)
        s_born = (3j / (4.0 * k1.k)) * ph @ (to + bounce @ to)
        assert np.linalg.norm(s_full - s_born) / np.linalg.norm(s_full) < 1e-2

    def test_neumann_expansion_error_scales_as_fourth_power(self, k1):
        # three scattering orders leave a remainder of order |B|^4
        rng = np.random.default_rng(22)
        cfgs = [ParticleConfig(u=random_unitary(6, rng=rng)) for _ in range(3)]
        arr = assemble_array([[0, 0, 0], [0, 8.0, 0], [8.0, 0, 0]], cfgs, k1)
        r_in = np.array([0.0, 0.0, -1.0])
        r_out = np.array([0.0, np.sin(0.8), np.cos(0.8)])
        vplus = arr.v_blocks + np.eye(6)
        bounce = coupling_scale(k1) * apply_blockdiag(vplus, arr.m)
        bn = np.linalg.norm(bounce, 2)
        assert bn < 0.1
        to = apply_blockdiag(vplus, ingoing_stack(arr, r_in))
        ph = outgoing_stack(arr, r_out)
        terms = to + bounce @ to + bounce @ (bounce @ to) + bounce @ (bounce @ (bounce @ to))
        s_series = (3j / (4.0 * k1.k)) * ph @ terms
        s_full = scattering_matrix(arr, r_out, r_in).s
        rel = np.linalg.norm(s_full - s_series) / np.linalg.norm(s_full)
        assert rel < 2.0 * bn**4

    def test_non_unit_direction_rejected(self, k1):
        arr = assemble_array([[0, 0, 0]], [dark_config()], k1)
        with pytest.raises(ValidationError):
            scattering_matrix(arr, np.array([0.0, 0.0, 2.0]), np.array([0.0, 0.0, -1.0]))


class TestScatteredSpectrum:
    def _array(self, k1):
        rng = np.random.default_rng(30)
        return assemble_array([[0, 0, 0]], [ParticleConfig(u=random_unitary(6, rng=rng))], k1)

    def test_zero_input_zero_output(self, k1):
        arr = self._array(k1)
        wave = PlaneWave(direction=np.array([0.0, 0.0, -1.0]), polarization=np.array([1.0, 0, 0]), amplitude=0.0)
        assert np.allclose(scattered_spectrum(arr, wave, np.array([0.0, 0.0, 1.0])), 0.0)

    def test_linearity_in_amplitude(self, k1):
        arr = self._array(k1)
        d = np.array([0.0, 0.0, -1.0])
        pol = np.array([1.0, 0, 0])
        r_out = np.array([0.0, np.sin(0.2), np.cos(0.2)])
        one = scattered_spectrum(arr, PlaneWave(direction=d, polarization=pol, amplitude=1.0), r_out)
        scaled = scattered_spectrum(arr, PlaneWave(direction=d, polarization=pol, amplitude=2.5 - 1j), r_out)
        assert np.allclose(scaled, (2.5 - 1j) * one)

    def test_matches_matrix_composition(self, k1):
        arr = self._array(k1)
        d = np.array([0.0, -np.sin(0.5), -np.cos(0.5)])
        pol = np.array([1.0, 0, 0], dtype=complex)
        r_out = np.array([0.0, 0.0, 1.0])
        resp = scattering_matrix(arr, r_out, d)
        wave = PlaneWave(direction=d, polarization=pol, amplitude=1.3 + 0.4j)
        assert np.allclose(scattered_spectrum(arr, wave, r_out), resp.s @ wave.spectrum())
