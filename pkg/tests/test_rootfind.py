"""Root-finder checks on functions with known zeros: bracketed real roots,
parabola vertices, Muller polishing, and contour-integral disk counts."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from floquet_dirac import rootfind
from floquet_dirac.rootfind import RootfindError


class TestBisectSecant:
    def test_cosine_roots(self):
        lo = np.array([1.0, 4.0])
        hi = np.array([2.0, 5.0])
        roots = rootfind.bisect_secant_many(np.cos, lo, hi)
        assert np.max(np.abs(roots - np.array([np.pi / 2, 3 * np.pi / 2]))) < 1e-10

    def test_empty_input(self):
        out = rootfind.bisect_secant_many(np.cos, np.array([]), np.array([]))
        assert out.size == 0

    def test_bad_brackets(self):
        with pytest.raises(RootfindError, match="lo < hi"):
            rootfind.bisect_secant_many(np.cos, np.array([2.0]), np.array([1.0]))

    def test_flat_function_near_root(self):
        # (x - 1)^3 has a triple root; bisection safeguards must still converge
        roots = rootfind.bisect_secant_many(
            lambda x: (x - 1.0) ** 3, np.array([0.0]), np.array([30.0])
        )
        assert abs(roots[0] - 1.0) < 1e-7


class TestQuadraticVertex:
    def test_exact_parabola(self):
        xs = [0.0, 1.0, 3.0]
        vertex = 1.7
        fs = [2.0 * (x - vertex) ** 2 + 0.3 for x in xs]
        assert abs(rootfind.quadratic_vertex(xs, fs) - vertex) < 1e-12

    def test_collinear_falls_back_to_middle(self):
        assert rootfind.quadratic_vertex([0.0, 1.0, 2.0], [0.0, 1.0, 2.0]) == 1.0

    def test_concave_falls_back_to_middle(self):
        xs = [0.0, 1.0, 2.0]
        fs = [0.0, 1.0, 0.0]
        assert rootfind.quadratic_vertex(xs, fs) == 1.0

    def test_vertex_outside_window_rejected(self):
        xs = [0.0, 1.0, 2.0]
        fs = [9.0, 4.0, 1.0]  # vertex of (x-3)^2 lies right of the window
        assert rootfind.quadratic_vertex(xs, fs) == 1.0


class TestMuller:
    def test_polishes_simple_roots(self):
        def f(z):
            return (z - 1.0) * (z - 2.0j) * (z + 3.0)

        starts = np.array([1.1, 0.1 + 1.9j, -2.9])
        roots, values = rootfind.muller_many(f, starts)
        assert np.max(np.abs(roots - np.array([1.0, 2.0j, -3.0]))) < 1e-9
        assert np.max(np.abs(values)) < 1e-9

    def test_transcendental(self):
        roots, _ = rootfind.muller_many(np.sin, np.array([3.0, 6.4]))
        assert abs(roots[0] - np.pi) < 1e-10
        assert abs(roots[1] - 2 * np.pi) < 1e-10

    def test_shape_validation(self):
        with pytest.raises(RootfindError, match="1-D"):
            rootfind.muller_many(np.sin, np.array([[1.0]]))


class TestDiskRoots:
    def test_simple_and_double_root(self):
        def f(z):
            return (z - 1.0) * (z - 2.0) ** 2

        dc = rootfind.disk_roots(f, 1.5 + 0j, 1.2)
        assert dc.winding == 3
        order = np.argsort(dc.roots.real)
        roots = dc.roots[order]
        mults = dc.multiplicities[order]
        assert np.max(np.abs(roots - np.array([1.0, 2.0]))) < 1e-6
        assert list(mults) == [1, 2]
        assert not dc.flags

    def test_transcendental_roots(self):
        dc = rootfind.disk_roots(np.sin, 0.0 + 0j, 4.0)
        assert dc.winding == 3
        got = np.sort(dc.roots.real)
        assert np.max(np.abs(got - np.array([-np.pi, 0.0, np.pi]))) < 1e-8

    def test_empty_disk(self):
        dc = rootfind.disk_roots(np.exp, 0.0 + 0j, 2.0)
        assert dc.winding == 0
        assert dc.roots.size == 0

    def test_winding_only_mode(self):
        def f(z):
            return (z - 0.3) * (z + 0.4j)

        dc = rootfind.disk_roots(f, 0.0 + 0j, 1.0, recover=False)
        assert dc.winding == 2
        assert dc.roots.size == 0

    def test_count_above_recovery_cap(self):
        def f(z):
            return (z**9) - 1e-9  # nine roots on a small circle

        dc = rootfind.disk_roots(f, 0.0 + 0j, 1.0)
        assert dc.winding == 9
        assert "count-not-recovered" in dc.flags
        assert dc.roots.size == 0

    def test_boundary_root_triggers_retry(self):
        # a root exactly on the nominal circle forces a radius nudge
        def f(z):
            return z - 1.0

        dc = rootfind.disk_roots(f, 0.0 + 0j, 1.0)
        assert dc.winding == 1
        assert dc.retries >= 1
        assert abs(dc.roots[0] - 1.0) < 1e-8

    def test_bad_radius(self):
        with pytest.raises(RootfindError, match="radius"):
            rootfind.disk_roots(np.sin, 0.0 + 0j, -1.0)

    def test_conjugate_pair(self):
        def f(z):
            return (z - (2.0 + 0.3j)) * (z - (2.0 - 0.3j))

        dc = rootfind.disk_roots(f, 2.0 + 0j, 1.0)
        assert dc.winding == 2
        got = dc.roots[np.argsort(dc.roots.imag)]
        assert np.max(np.abs(got - np.array([2.0 - 0.3j, 2.0 + 0.3j]))) < 1e-8

    def test_tight_cluster_merges(self):
        # two roots separated well below cluster_tol count as one double
        eps = 1e-7

        def f(z):
            return (z - 1.0 - eps) * (z - 1.0 + eps)

        dc = rootfind.disk_roots(f, 1.0 + 0j, 0.5, cluster_tol=1e-4)
        assert dc.winding == 2
        assert dc.roots.size == 1
        assert dc.multiplicities[0] == 2
        assert abs(dc.roots[0] - 1.0) < 1e-6


@given(
    st.lists(
        st.complex_numbers(
            max_magnitude=1.5, allow_nan=False, allow_infinity=False
        ),
        min_size=1,
        max_size=4,
    )
)
@settings(max_examples=30)
def test_disk_recovers_separated_polynomial_roots(raw_roots):
    # keep the roots inside the disk, off the boundary, and apart
    roots = []
    for w in raw_roots:
        if abs(w) > 1.3:
            w = w * 1.3 / abs(w)
        if all(abs(w - r) > 0.05 for r in roots):
            roots.append(w)
    roots_arr = np.array(roots)

    def f(z):
        out = np.ones_like(np.asarray(z, dtype=complex))
        for r in roots_arr:
            out = out * (np.asarray(z, dtype=complex) - r)
        return out

    dc = rootfind.disk_roots(f, 0.0 + 0j, 2.0)
    assert dc.winding == len(roots)
    got = dc.roots.repeat(dc.multiplicities)
    assert got.size == len(roots)
    # roots are >= 0.05 apart and errors far smaller: nearest matching
    # is unambiguous (sorting would be order-unstable under roundoff)
    for w in roots_arr:
        assert np.min(np.abs(got - w)) < 1e-6
