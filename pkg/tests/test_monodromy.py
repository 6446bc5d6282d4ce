"""Integrator checks against closed forms: free flow, constant coupling,
series partial sums, structural defect caps, and multi-period traces."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from floquet_dirac import linalg, monodromy, potential


def free_psi(z, n):
    """Closed form for V = 0: block phases diag(e^{iz} I, e^{-iz} I)."""
    up = np.exp(1j * z) * np.ones(n)
    return np.diag(np.concatenate([up, 1.0 / up]))


def constant_psi(z, v0):
    """Closed form for constant V: exp(i J1 (z - V))."""
    n = v0.shape[0] // 2
    j1 = linalg.j1_matrix(n)
    return linalg.mat_exp(1j * j1 @ (z * np.eye(2 * n) - v0))


def random_constant(rng, n, scale):
    v = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    v = 0.5 * (v + v.T)
    v *= scale / max(np.linalg.norm(v), 1e-12)
    return potential.constant_potential(v)


class TestFreeFlow:
    @pytest.mark.parametrize("z", [0.3, -2.0, 1.0 + 0.5j, 4.0 - 1.0j])
    @pytest.mark.parametrize("n", [1, 2])
    def test_matches_phase_blocks(self, z, n):
        p = potential.zero_potential(n)
        res = monodromy.integrate(p, z)
        assert np.max(np.abs(res.psi1 - free_psi(z, n))) < 1e-11 * np.exp(abs(np.imag(z)))
        assert not res.flags


class TestConstantCoupling:
    def test_matches_matrix_exponential(self):
        rng = np.random.default_rng(42)
        for _ in range(8):
            n = int(rng.integers(1, 3))
            p = random_constant(rng, n, scale=float(rng.uniform(0.5, 5.0)))
            z = complex(rng.uniform(-10, 10), rng.uniform(-3, 3))
            res = monodromy.integrate(p, z)
            big = p.big_v_at(0.0)
            ref = constant_psi(z, big)
            assert np.max(np.abs(res.psi1 - ref)) < 1e-9

    def test_batch_matches_single(self):
        p = potential.example_4x4(1.0, 0.05)
        zs = np.array([0.5, 2.0 + 1.0j, -3.0])
        batch = monodromy.psi_many(p, zs)
        for i, z in enumerate(zs):
            # chunks share a step sequence, so agreement is to integration
            # tolerance rather than bitwise
            single = monodromy.integrate(p, z).psi1
            assert np.max(np.abs(batch[i] - single)) < 1e-10


class TestValidation:
    def test_rtol_range(self):
        p = potential.zero_potential(1)
        with pytest.raises(ValueError, match="rtol"):
            monodromy.integrate(p, 1.0, rtol=1.0)
        with pytest.raises(ValueError, match="rtol"):
            monodromy.integrate(p, 1.0, rtol=1e-15)

    def test_imaginary_cap(self):
        p = potential.zero_potential(1)
        with pytest.raises(ValueError, match="Im z"):
            monodromy.integrate(p, 1j * (monodromy.IM_Z_CAP + 1))


class TestStructuralDefects:
    def test_det_and_symplectic_caps(self):
        rng = np.random.default_rng(9)
        p = potential.example_4x4(2.0, 0.1)
        for _ in range(6):
            z = complex(rng.uniform(-8, 8), rng.uniform(-2, 2))
            res = monodromy.integrate(p, z)
            grow = np.exp(abs(z.imag))
            assert res.det_defect <= monodromy.DET_DEFECT_CAP * grow
            assert res.symplectic_defect <= (
                monodromy.SYMPLECTIC_DEFECT_CAP * grow * grow
            )
            assert not res.flags

    def test_symplectic_identity_directly(self):
        # psi^{-1} = -J psi^T J is the conserved structure; check it raw
        p = potential.example_4x4(1.0, 0.2)
        z = 1.7 + 0.4j
        psi = monodromy.integrate(p, z).psi1
        j = linalg.j_matrix(p.n)
        lhs = np.linalg.inv(psi)
        rhs = -j @ psi.T @ j
        assert np.max(np.abs(lhs - rhs)) < 1e-9


class TestSeries:
    def test_order_zero_is_free_flow(self):
        p = potential.example_4x4(0.1, 0.05)
        z = 0.8 + 0.3j
        sr = monodromy.series_psi(p, z, 0)
        assert np.max(np.abs(sr.psi - free_psi(z, p.n))) < 1e-12

    def test_partial_sum_within_remainder_bound(self):
        rng = np.random.default_rng(17)
        for _ in range(5):
            p = random_constant(rng, 2, scale=0.2)
            z = complex(rng.uniform(-5, 5), rng.uniform(-1, 1))
            sr = monodromy.series_psi(p, z, 6)
            psi = monodromy.integrate(p, z).psi1
            err = np.max(np.abs(sr.psi - psi))
            assert err <= sr.remainder_bound + 1e-12

    def test_terms_shrink_factorially(self):
        p = potential.example_4x4(0.3, 0.0)
        terms = monodromy.series_terms(p, 1.0, 6)
        norms = [np.max(np.abs(t)) for t in terms[1:]]
        assert all(b < a for a, b in zip(norms, norms[1:]))

    def test_order_bounds(self):
        p = potential.zero_potential(1)
        with pytest.raises(ValueError):
            monodromy.series_terms(p, 0.0, 13)


class TestTraces:
    def test_multi_period_traces_match_powers(self):
        p = potential.example_4x4(1.0, 0.1)
        z = 2.2
        psi = monodromy.integrate(p, z).psi1
        samples = monodromy.traces(p, z)
        for s in samples:
            ref = np.trace(np.linalg.matrix_power(psi, s.m))
            assert abs(s.value - ref) < 1e-8 * max(1.0, abs(ref))

    def test_traces_many_matches_single(self):
        p = potential.example_4x4(1.0, 0.1)
        zs = np.array([0.5, 1.5, 2.5])
        t1, t2 = monodromy.traces_many(p, zs)
        for i, z in enumerate(zs):
            singles = monodromy.traces(p, z)
            assert abs(t1[i] - singles[0].value) < 1e-10
            assert abs(t2[i] - singles[1].value) < 1e-10


@given(st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=10)
def test_constant_potential_closed_form(seed):
    rng = np.random.default_rng(seed)
    p = random_constant(rng, 1, scale=float(rng.uniform(0.1, 3.0)))
    z = complex(rng.uniform(-6, 6), rng.uniform(-2, 2))
    res = monodromy.integrate(p, z)
    ref = constant_psi(z, p.big_v_at(0.0))
    assert np.max(np.abs(res.psi1 - ref)) < 1e-9


@given(st.integers(min_value=0, max_value=2**32 - 1))
@settings(max_examples=10)
def test_determinant_is_unimodular(seed):
    rng = np.random.default_rng(seed)
    p = random_constant(rng, 2, scale=1.0)
    z = complex(rng.uniform(-5, 5), rng.uniform(-1.5, 1.5))
    res = monodromy.integrate(p, z)
    det = np.linalg.det(res.psi1)
    assert abs(det - 1.0) < 1e-8 * np.exp(abs(z.imag))
