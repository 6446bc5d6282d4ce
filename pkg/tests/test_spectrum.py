"""Band structure, eigenvalue, and resonance location checked against the
closed forms of the free and constant-mass systems."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from floquet_dirac import potential, spectrum


def mass_potential(a=1.0):
    return potential.constant_potential(np.array([[a]]))


class TestFreeBands:
    @pytest.mark.parametrize("n", [1, 2])
    def test_whole_window_is_one_band(self, n):
        p = potential.zero_potential(n)
        rep = spectrum.scan_bands(p, (-5.0, 5.0))
        assert len(rep.bands) == 1
        assert len(rep.gaps) == 0
        lo, hi = rep.bands[0]
        assert abs(lo + 5.0) < 1e-9 and abs(hi - 5.0) < 1e-9
        # every branch equals cos z on the scan grid
        ref = np.cos(rep.samples_z.real)
        for j in range(n):
            assert np.max(np.abs(rep.samples_deltas[j] - ref)) < 1e-10
        # multiplicity N across the whole band
        (segments,) = rep.multiplicity_profile
        assert all(count == n for _, _, count in segments)

    def test_gap_sum_trivially_zero(self):
        p = potential.zero_potential(2)
        rep = spectrum.scan_bands(p, (-5.0, 5.0))
        lhs, rhs, ok = spectrum.gap_sum_check(rep, p)
        assert lhs == 0.0
        assert rhs == 0.0  # zero potential: both sides vanish
        assert ok


class TestFreeEigenvalues:
    @pytest.mark.parametrize("n", [1, 2])
    def test_periodic_roots_at_even_cells(self, n):
        p = potential.zero_potential(n)
        el = spectrum.find_eigenvalues(p, "periodic", (0, 4))
        assert list(el.multiplicities) == [2 * n] * 3
        assert np.max(np.abs(el.roots - np.array([0.0, 2 * np.pi, 4 * np.pi]))) < 1e-8
        assert dict(el.cell_counts) == {0: 2 * n, 1: 0, 2: 2 * n, 3: 0, 4: 2 * n}
        assert not el.flags

    def test_antiperiodic_roots_at_odd_cells(self):
        p = potential.zero_potential(1)
        el = spectrum.find_eigenvalues(p, "antiperiodic", (0, 4))
        assert np.max(np.abs(el.roots - np.array([np.pi, 3 * np.pi]))) < 1e-8
        assert list(el.multiplicities) == [2, 2]
        assert dict(el.cell_counts) == {0: 0, 1: 2, 2: 0, 3: 2, 4: 0}

    def test_residuals_are_tiny(self):
        el = spectrum.find_eigenvalues(potential.zero_potential(1), "periodic", (0, 2))
        assert np.max(el.residuals) < 1e-9


class TestConstantMassEigenvalues:
    """v = a: periodic roots +-a (simple) and sqrt(4 pi^2 m^2 + a^2) (double),
    antiperiodic roots sqrt((2m+1)^2 pi^2 + a^2) (double)."""

    def test_periodic(self):
        el = spectrum.find_eigenvalues(mass_potential(1.0), "periodic", (0, 2))
        want = np.array([-1.0, 1.0, np.sqrt(4 * np.pi**2 + 1.0)])
        assert np.max(np.abs(el.roots - want)) < 1e-9
        assert list(el.multiplicities) == [1, 1, 2]
        assert dict(el.cell_counts) == {0: 2, 1: 0, 2: 2}
        assert not el.flags

    def test_antiperiodic(self):
        el = spectrum.find_eigenvalues(mass_potential(1.0), "antiperiodic", (1, 3))
        want = np.array([np.sqrt(np.pi**2 + 1.0), np.sqrt(9 * np.pi**2 + 1.0)])
        assert np.max(np.abs(el.roots - want)) < 1e-9
        assert list(el.multiplicities) == [2, 2]

    def test_kind_validation(self):
        with pytest.raises(ValueError, match="kind"):
            spectrum.find_eigenvalues(mass_potential(), "dirichlet", (0, 1))


class TestConstantMassBands:
    def test_clipped_gap_and_endpoint_label(self):
        rep = spectrum.scan_bands(mass_potential(1.0), (0.0, 2.0))
        assert len(rep.gaps) == 1 and len(rep.bands) == 1
        g_lo, g_hi = rep.gaps[0]
        assert g_lo == 0.0  # clipped at the window edge
        assert abs(g_hi - 1.0) < 1e-6
        labels = {lab.position: lab for lab in rep.endpoint_labels}
        edge = labels[g_lo]
        assert edge.side == "window" and edge.matches == ()
        right = labels[g_hi]
        assert right.side == "right"
        kinds = {m.kind for m in right.matches}
        assert "periodic" in kinds  # band edge at z = a is a periodic root
        match = [m for m in right.matches if m.kind == "periodic"][0]
        assert abs(match.root - 1.0) < 1e-8

    def test_gap_sum_inequality(self):
        p = mass_potential(1.0)
        rep = spectrum.scan_bands(p, (0.0, 2.0))
        lhs, rhs, ok = spectrum.gap_sum_check(rep, p)
        assert ok
        assert abs(lhs - 1.0) < 1e-5  # the single unit gap, squared
        assert abs(rhs - 8.0) < 1e-12  # 4 * norm2 / N = 4 * 2 / 1

    def test_report_lines_deterministic(self):
        rep1 = spectrum.scan_bands(mass_potential(1.0), (0.0, 2.0))
        rep2 = spectrum.scan_bands(mass_potential(1.0), (0.0, 2.0))
        assert spectrum.report_lines(rep1) == spectrum.report_lines(rep2)
        assert spectrum.sample_rows(rep1) == spectrum.sample_rows(rep2)

    def test_sample_rows_shape(self):
        rep = spectrum.scan_bands(mass_potential(1.0), (0.0, 2.0))
        rows = spectrum.sample_rows(rep)
        assert rows[0] == ["z", "delta_1_re", "delta_1_im", "rho_re", "rho_im"]
        assert len(rows) == 1 + rep.samples_z.size


class TestResonances:
    def test_single_branch_has_none(self):
        rl = spectrum.find_resonances(mass_potential(1.0), window=(0.5, 2.0))
        assert rl.real_roots.size == 0 and rl.complex_roots.size == 0
        assert "single-branch-no-resonances" in rl.flags

    def test_decoupled_pair_window(self):
        p = potential.example_4x4(1.0, 0.0)
        rl = spectrum.find_resonances(p, window=(3.0, 3.5))
        assert rl.real_roots.size == 1
        r0 = np.pi + 1.0 / (4.0 * np.pi)  # exact crossing of the two branches
        assert abs(rl.real_roots[0] - r0) < 1e-7
        assert rl.real_multiplicities[0] == 2
        assert rl.complex_roots.size == 0
        assert not rl.flags

    def test_decoupled_pair_disk(self):
        p = potential.example_4x4(1.0, 0.0)
        rl = spectrum.find_resonances(p, disk=(3.2 + 0j, 0.4))
        assert rl.disk_winding == 2
        assert rl.real_roots.size == 1
        assert abs(rl.real_roots[0] - (np.pi + 1.0 / (4.0 * np.pi))) < 1e-7
        assert np.concatenate(
            [rl.real_roots.astype(complex), rl.complex_roots]
        ).size == rl.all_roots.size

    def test_region_is_required(self):
        with pytest.raises(ValueError):
            spectrum.find_resonances(potential.example_4x4(1.0, 0.0))


class TestWindowValidation:
    def test_reversed_window(self):
        with pytest.raises(ValueError):
            spectrum.scan_bands(potential.zero_potential(1), (2.0, 1.0))


@given(
    st.floats(min_value=0.2, max_value=2.5),
    st.floats(min_value=0.5, max_value=3.0),
)
@settings(max_examples=8, deadline=None)
def test_bands_and_gaps_tile_the_window(a, width):
    lo = 0.25
    window = (lo, lo + width)
    rep = spectrum.scan_bands(mass_potential(a), window)
    pieces = sorted(list(rep.bands) + list(rep.gaps))
    assert pieces[0][0] == window[0]
    assert pieces[-1][1] == window[1]
    for (s1, e1), (s2, e2) in zip(pieces, pieces[1:]):
        assert e1 == s2  # no overlap, no hole
    # the constant-mass spectrum is |z| >= a: every band lies there
    for s, e in rep.bands:
        assert e >= a - 1e-6
