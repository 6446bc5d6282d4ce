"""Two-channel coupling study: closed reference forms, config validation,
the bifurcation sweep with its slope law, and eigenvalue stability."""

import numpy as np
import pytest

from floquet_dirac import casestudy
from floquet_dirac.casestudy import CaseStudyConfig, CaseStudyError


def slope_law(ref, n, nu):
    """tau -> 0 slope of the split pair: sqrt(|R_n|) e^{-2 pi^2 n^2 nu^2}."""
    return np.sqrt(abs(ref.bifurcation_constant(n))) * np.exp(
        -2.0 * np.pi**2 * n**2 * nu**2
    )


class TestUnperturbedReference:
    def test_resonance_positions(self):
        ref = casestudy.unperturbed_reference(1.0)
        assert abs(ref.resonance(1) - (np.pi + 1.0 / (4.0 * np.pi))) < 1e-12
        want = np.array([np.pi * n + 1.0 / (4.0 * np.pi * n) for n in (1, 2, 3)])
        assert np.max(np.abs(ref.resonances(3) - want)) < 1e-12
        with pytest.raises(CaseStudyError, match="n = 0"):
            ref.resonance(0)

    def test_bifurcation_constants_a7(self):
        ref = casestudy.unperturbed_reference(7.0)
        assert abs(ref.bifurcation_constant(1) - (-0.241184)) < 5e-6
        assert abs(ref.bifurcation_constant(2) - 0.689704) < 5e-6
        assert abs(ref.bifurcation_constant(3) - 0.862091) < 5e-6

    def test_sign_rule(self):
        # R_n < 0 exactly for cells below a/(2 pi)
        ref = casestudy.unperturbed_reference(20.0)
        threshold = 20.0 / (2.0 * np.pi)  # ~3.18
        for n in range(1, 7):
            if n < threshold:
                assert ref.bifurcation_constant(n) < 0
            else:
                assert ref.bifurcation_constant(n) > 0

    def test_phi_is_entire_at_band_edge(self):
        # k(a) = 0: the z sin(z) sinc(k) form must stay finite there
        ref = casestudy.unperturbed_reference(1.5)
        val = complex(ref.phi(1.5))
        want = np.cos(1.5) + 1.5 * np.sin(1.5)
        assert np.isfinite(val)
        assert abs(val - want) < 1e-12

    def test_determinant_zeros(self):
        ref = casestudy.unperturbed_reference(1.0)
        assert abs(ref.det_periodic(2 * np.pi)) < 1e-12
        assert abs(ref.det_periodic(1.0)) < 1e-12  # massive band edge z = a
        assert abs(ref.det_antiperiodic(np.pi)) < 1e-12
        assert abs(ref.det_antiperiodic(np.sqrt(np.pi**2 + 1.0))) < 1e-12

    def test_eigenvalue_roots_table(self):
        ref = casestudy.unperturbed_reference(1.0)
        got = ref.eigenvalue_roots("periodic", (0.0, 7.0))
        want = (
            (0.0, 2),
            (1.0, 1),
            (float(2 * np.pi), 2),
            (float(np.sqrt(4 * np.pi**2 + 1.0)), 2),
        )
        assert len(got) == len(want)
        for (r_g, m_g), (r_w, m_w) in zip(got, want):
            assert abs(r_g - r_w) < 1e-12
            assert m_g == m_w
        with pytest.raises(CaseStudyError, match="kind"):
            ref.eigenvalue_roots("dirichlet", (0.0, 1.0))

    def test_reference_defects_anchor(self):
        zs = np.array([0.4, 2.0, 3.5, 5.0, 2.0 + 0.5j])
        defects = casestudy.reference_defects(1.0, zs)
        assert max(defects.values()) < 1e-8


class TestConfigValidation:
    def test_good_config_sorts_taus(self):
        cfg = CaseStudyConfig(a=7.0, tau_values=(0.04, 0.0, 0.01))
        assert cfg.tau_values == (0.0, 0.01, 0.04)

    def test_rejections(self):
        with pytest.raises(CaseStudyError, match="positive"):
            CaseStudyConfig(a=0.0, tau_values=(0.0,))
        with pytest.raises(CaseStudyError, match="integer"):
            CaseStudyConfig(a=2.0 * np.pi, tau_values=(0.0,))
        with pytest.raises(CaseStudyError, match="anchor"):
            CaseStudyConfig(a=7.0, tau_values=(0.01,))
        with pytest.raises(CaseStudyError, match="at most"):
            CaseStudyConfig(a=7.0, tau_values=(0.0, 0.3))
        with pytest.raises(CaseStudyError, match="distinct"):
            CaseStudyConfig(a=7.0, tau_values=(0.0, 0.01, 0.01))
        with pytest.raises(CaseStudyError, match="nu"):
            CaseStudyConfig(a=7.0, tau_values=(0.0,), nu=0.5)
        with pytest.raises(CaseStudyError, match="n_max"):
            CaseStudyConfig(a=7.0, tau_values=(0.0,), n_max=0)


@pytest.fixture(scope="module")
def small_sweep():
    cfg = CaseStudyConfig(a=7.0, tau_values=(0.0, 0.04), nu=0.05, n_max=2)
    return cfg, casestudy.bifurcation_sweep(cfg)


class TestBifurcationSweep:
    def test_cell_one_goes_complex(self, small_sweep):
        cfg, records = small_sweep
        rec = records[0]
        assert rec.n == 1
        assert rec.classification == "complex-pair"
        assert not rec.flags
        assert all(w == 2 for _, w in rec.winding_by_tau)
        pair = dict(rec.roots_by_tau)[0.04]
        lo, hi = pair
        assert hi.imag > 0.0 > lo.imag
        assert abs(lo - np.conj(hi)) < 1e-7  # conjugate pair
        ref = casestudy.unperturbed_reference(cfg.a)
        assert abs(rec.r0 - ref.resonance(1)) < 1e-12

    def test_cell_two_opens_real_gap(self, small_sweep):
        cfg, records = small_sweep
        rec = records[1]
        assert rec.n == 2
        assert rec.classification == "real-gap"
        pair = dict(rec.roots_by_tau)[0.04]
        lo, hi = pair
        assert abs(lo.imag) < 1e-7 and abs(hi.imag) < 1e-7
        assert lo.real < hi.real
        # the opened interval was confirmed absent from the band scan
        assert rec.gap_checks
        assert all(confirmed for _, _, confirmed in rec.gap_checks)

    def test_slope_matches_reference_law(self, small_sweep):
        cfg, records = small_sweep
        ref = casestudy.unperturbed_reference(cfg.a)
        for rec in records:
            want = slope_law(ref, rec.n, cfg.nu)
            assert rec.slope_estimate == pytest.approx(want, rel=2e-2)

    def test_anchor_pair_is_the_double_root(self, small_sweep):
        _, records = small_sweep
        for rec in records:
            pair = dict(rec.roots_by_tau)[0.0]
            assert abs(pair[0] - rec.r0) < 1e-8
            assert abs(pair[1] - rec.r0) < 1e-8

    def test_worker_pool_equals_serial(self, small_sweep):
        cfg, records = small_sweep
        pooled = casestudy.bifurcation_sweep(cfg, jobs=2)
        assert pooled == records

    def test_csv_rows(self, small_sweep):
        cfg, records = small_sweep
        rows = casestudy.sweep_csv_rows(cfg, records)
        assert rows[0] == (
            "a,nu,n,tau,re_minus,im_minus,re_plus,im_plus,classification,slope"
        )
        assert len(rows) == 1 + 2 * len(records)  # two taus per record
        traj = casestudy.trajectory_csv_rows(records)
        assert traj[0] == "n,tau,branch,re,im"
        assert len(traj) == 1 + 2 * 2 * len(records)  # two roots per located pair


class TestEigenvalueStability:
    def test_mirrored_count_conserved(self):
        cfg = CaseStudyConfig(a=1.0, tau_values=(0.0, 0.04), nu=0.05, n_max=1)
        table = casestudy.eigenvalue_stability(cfg, certify=False)
        mirrored = [counts[3] for _, counts in table.counts_by_tau]
        assert len(set(mirrored)) == 1
        # the double at z = 0 may split to +-eps; the -eps copy leaves the
        # positive window and its anchor is reported unmatched near 0
        for _tau, _kind, _side, root in table.unmatched:
            assert abs(root) < 0.05
        assert max(d for _, d in table.max_displacement_by_tau) < 0.1
        # every row pairs a root with its anchor
        for row in table.rows:
            assert abs(row.root - row.anchor) == pytest.approx(
                row.displacement, abs=1e-12
            )
