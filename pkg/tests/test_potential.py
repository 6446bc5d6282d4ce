"""Potential algebra: construction, moments, Fourier data, serialization."""

import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from floquet_dirac import potential
from floquet_dirac.potential import PeriodicPotential


def random_symmetric_coeffs(rng, degree, n):
    c = rng.standard_normal((2 * degree + 1, n, n)) \
        + 1j * rng.standard_normal((2 * degree + 1, n, n))
    return 0.5 * (c + np.swapaxes(c, -1, -2))


def quad_grid(k=4096):
    return np.arange(k) / k


class TestConstruction:
    def test_rejects_asymmetric(self):
        c = np.zeros((1, 2, 2), dtype=complex)
        c[0, 0, 1] = 1.0
        with pytest.raises(potential.PotentialError):
            PeriodicPotential(c)

    def test_rejects_even_mode_count(self):
        with pytest.raises(potential.PotentialError):
            PeriodicPotential(np.zeros((2, 2, 2)))

    def test_rejects_channel_overflow(self):
        with pytest.raises(potential.PotentialError):
            PeriodicPotential(np.zeros((1, 17, 17)))

    def test_rejects_nonfinite(self):
        c = np.full((1, 1, 1), np.inf, dtype=complex)
        with pytest.raises(potential.PotentialError):
            PeriodicPotential(c)

    def test_coefficients_read_only(self):
        p = potential.constant_potential([[1.0]])
        with pytest.raises(ValueError):
            p.coeffs[0, 0, 0] = 2.0


class TestEvaluation:
    def test_v_at_matches_mode_sum(self):
        rng = np.random.default_rng(0)
        c = random_symmetric_coeffs(rng, 2, 2)
        p = PeriodicPotential(c)
        t = 0.37
        direct = sum(
            c[m + 2] * np.exp(2j * np.pi * m * t) for m in range(-2, 3)
        )
        assert np.allclose(p.v_at(t), direct, atol=1e-14)

    def test_big_v_block_structure(self):
        p = potential.example_4x4(1.0, 0.1)
        big = p.big_v_at(0.25)
        n = p.n
        v = p.v_at(0.25)
        assert np.allclose(big[:n, :n], 0)
        assert np.allclose(big[n:, n:], 0)
        assert np.allclose(big[:n, n:], v)
        assert np.allclose(big[n:, :n], v.conj().T)
        assert np.allclose(big, big.conj().T)

    def test_derivative_matches_finite_difference(self):
        p = potential.example_4x4(2.0, 0.1, nu=0.1)
        h = 1e-6
        t = 0.4
        fd = (p.v_at(t + h) - p.v_at(t - h)) / (2 * h)
        assert np.allclose(p.derivative().v_at(t), fd, atol=1e-5)

    def test_real_valued_detection(self):
        assert potential.example_4x4(1.0, 0.2).is_real_valued()
        c = np.zeros((3, 1, 1), dtype=complex)
        c[2, 0, 0] = 1.0  # only +1 mode: complex-valued function
        assert not PeriodicPotential(c).is_real_valued()


class TestMoments:
    def test_norm2_matches_quadrature(self):
        rng = np.random.default_rng(1)
        p = PeriodicPotential(random_symmetric_coeffs(rng, 3, 2))
        t = quad_grid()
        big = p.big_v_at(t)
        num = np.mean(np.trace(big @ big, axis1=-2, axis2=-1)).real
        assert abs(p.norm2 - num) < 1e-9 * max(1.0, abs(num))

    def test_v2_block_matches_quadrature(self):
        rng = np.random.default_rng(2)
        p = PeriodicPotential(random_symmetric_coeffs(rng, 2, 2))
        t = quad_grid()
        big = p.big_v_at(t)
        num = np.mean(big @ big, axis=0)
        mom = potential.moments(p)
        assert np.max(np.abs(mom.v2 - num)) < 1e-10 * max(1.0, np.abs(num).max())

    def test_channel_weights_ascending_real(self):
        p = potential.diagonal_potential([2.0, 1.0, 3.0])
        nu = potential.moments(p).nu
        assert np.allclose(nu, [1.0, 4.0, 9.0], atol=1e-12)

    def test_h_invariants_match_quadrature(self):
        import floquet_dirac.linalg as linalg

        p = potential.example_4x4(1.5, 0.3, nu=0.1)
        mom = potential.moments(p)
        t = quad_grid(8192)
        big = p.big_v_at(t)
        big_prime = PeriodicPotential(p.derivative_coeffs()).big_v_at(t)
        j1 = linalg.j1_matrix(p.n)
        h0 = np.mean(np.trace(big @ big, axis1=-2, axis2=-1)).real
        h1 = np.mean(
            np.trace((-1j * j1) @ big_prime @ big, axis1=-2, axis2=-1)
        ).real
        sq = big @ big
        h2 = np.mean(
            np.trace(big_prime @ big_prime + sq @ sq, axis1=-2, axis2=-1)
        ).real
        assert abs(mom.h0 - h0) < 1e-8 * max(1.0, abs(h0))
        assert abs(mom.h1 - h1) < 1e-7 * max(1.0, abs(h1))
        assert abs(mom.h2 - h2) < 1e-7 * max(1.0, abs(h2))

    def test_fourier_data_matches_quadrature(self):
        p = potential.example_4x4(1.0, 0.2, nu=0.1)
        t = quad_grid()
        vp = PeriodicPotential(p.derivative_coeffs()).v_at(t)
        for m in (1, -1, 2):
            num = np.mean(vp * np.exp(-2j * np.pi * m * t)[:, None, None], axis=0)
            fd = potential.fourier_data(p, m)
            assert np.max(np.abs(fd.vhat_prime - num)) < 1e-9
            n = p.n
            assert np.allclose(fd.big_vhat_prime[:n, n:], fd.vhat_prime)
            assert np.allclose(
                fd.big_vhat_prime[n:, :n], fd.vhat_prime.conj().T
            )


class TestBump:
    def test_unit_mass(self):
        b = potential.bump_coeffs(0.05)
        m_deg = len(b) // 2
        assert b[m_deg] == 1.0

    def test_matches_periodized_gaussian(self):
        nu = 0.08
        b = potential.bump_coeffs(nu)
        m_deg = len(b) // 2
        t = np.linspace(0.0, 1.0, 17)
        series = sum(
            b[m + m_deg] * np.exp(2j * np.pi * m * t)
            for m in range(-m_deg, m_deg + 1)
        )
        direct = np.zeros_like(t)
        for k in range(-6, 7):
            direct += np.exp(-((t - 0.5 - k) ** 2) / (2 * nu**2)) / (
                nu * np.sqrt(2 * np.pi)
            )
        assert np.max(np.abs(series.imag)) < 1e-12
        assert np.max(np.abs(series.real - direct)) < 1e-9

    def test_rejects_bad_width(self):
        with pytest.raises(potential.PotentialError):
            potential.bump_coeffs(0.0)


class TestNormalize:
    def test_diagonalizes_second_moment(self):
        rng = np.random.default_rng(4)
        p = PeriodicPotential(random_symmetric_coeffs(rng, 2, 3))
        pn, e_mat = potential.normalize(p)
        mom = potential.moments(pn)
        v1 = mom.v2[: p.n, : p.n]
        off = v1 - np.diag(np.diag(v1))
        assert np.max(np.abs(off)) < 1e-10 * max(1.0, np.abs(v1).max())
        assert np.all(np.diff(np.diag(v1).real) >= -1e-10)
        assert np.allclose(e_mat.conj().T @ e_mat, np.eye(p.n), atol=1e-12)

    def test_preserves_channel_weights(self):
        rng = np.random.default_rng(5)
        p = PeriodicPotential(random_symmetric_coeffs(rng, 1, 2))
        pn, _ = potential.normalize(p)
        assert np.allclose(
            potential.moments(p).nu, potential.moments(pn).nu, atol=1e-10
        )

    def test_transform_is_the_stated_conjugation(self):
        rng = np.random.default_rng(6)
        p = PeriodicPotential(random_symmetric_coeffs(rng, 1, 2))
        pn, e_mat = potential.normalize(p)
        t = 0.3
        expected = e_mat.conj().T @ p.v_at(t) @ e_mat.conj()
        assert np.allclose(pn.v_at(t), expected, atol=1e-12)


class TestBuilders:
    def test_example_4x4_decouples_at_zero(self):
        p = potential.example_4x4(3.0, 0.0)
        assert p.degree == 0
        assert np.allclose(p.coeffs[0], [[-3.0, 0.0], [0.0, 0.0]])

    def test_example_4x4_coupling_profile(self):
        a, tau, nu = 2.0, 0.1, 0.1
        p = potential.example_4x4(a, tau, nu)
        v_half = p.v_at(0.5)
        peak = 1.0 / (nu * np.sqrt(2 * np.pi))
        assert abs(v_half[0, 0] + a) < 1e-12
        assert abs(v_half[0, 1] + tau * peak) < 1e-6 * peak
        assert abs(v_half[1, 1]) < 1e-12

    def test_diagonal_builder(self):
        p = potential.diagonal_potential([1.0, -2.0])
        assert np.allclose(p.v_at(0.9), np.diag([1.0, -2.0]))

    def test_builtin_dispatch(self):
        p = potential.build_potential(
            {"builtin": "zero", "params": {"n": 3}}
        )
        assert p.n == 3 and p.norm2 == 0.0
        with pytest.raises(potential.PotentialError):
            potential.build_potential({"builtin": "nope"})
        with pytest.raises(potential.PotentialError):
            potential.build_potential({})


class TestSerialization:
    def test_roundtrip_bit_exact(self, tmp_path):
        p = potential.example_4x4(1.25, 0.07, nu=0.04)
        path = tmp_path / "pot.json"
        potential.save_potential(p, path)
        q = potential.load_potential(path)
        assert np.array_equal(p.coeffs, q.coeffs)

    def test_entries_mirror_symmetry(self):
        p = potential.from_entries(2, {"1,2": [[1, 0.5, -0.25]]})
        c = p.coeff(1)
        assert c[0, 1] == c[1, 0] == 0.5 - 0.25j

    def test_entry_index_bounds(self):
        with pytest.raises(potential.PotentialError):
            potential.from_entries(2, {"1,3": [[0, 1.0, 0.0]]})

    def test_schema_version_gate(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"schema_version": 99, "n": 1, "entries": {}}))
        with pytest.raises(potential.PotentialError):
            potential.load_potential(path)


@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_roundtrip_via_dict(seed):
    rng = np.random.default_rng(seed)
    degree = int(rng.integers(0, 3))
    n = int(rng.integers(1, 3))
    p = PeriodicPotential(random_symmetric_coeffs(rng, degree, n))
    q = potential.build_potential(potential.potential_to_dict(p))
    assert q.n == p.n
    assert np.max(np.abs(q.coeff(0) - p.coeff(0))) < 1e-15
    for m in range(-degree, degree + 1):
        assert np.max(np.abs(q.coeff(m) - p.coeff(m))) < 1e-15


@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_norm_and_weights_invariants(seed):
    rng = np.random.default_rng(seed)
    p = PeriodicPotential(random_symmetric_coeffs(rng, 2, 2))
    mom = potential.moments(p)
    assert mom.norm2 >= 0.0
    assert np.all(np.diff(mom.nu) >= -1e-12)  # ascending
    assert abs(mom.h0 - np.trace(mom.v2).real) < 1e-10 * max(1.0, mom.h0)
    # channel weights sum to half the squared norm (trace of one block)
    assert abs(np.sum(mom.nu) - mom.norm2 / 2.0) < 1e-9 * max(1.0, mom.norm2)
