"""Multipliers, Lyapunov branches, and their collision discriminant.

The monodromy matrix ``psi(1, z)`` of the periodic system has ``2N``
eigenvalues (multipliers) that occur in reciprocal pairs ``{tau,
1/tau}``.  Each pair carries one Lyapunov value ``Delta_j = (tau_j +
1/tau_j)/2``, which is simultaneously a double eigenvalue of the
Lyapunov matrix ``L(z) = (psi + psi^{-1})/2``.  This module extracts
both descriptions from a computed monodromy matrix, reconciles them,
and forms the discriminant

    rho(z) = prod_{i<j} (Delta_i - Delta_j)^2,

whose zeros (resonances) are the branch points of the Lyapunov
function.  For ``N = 2`` the discriminant has a globally smooth
closed form in the monodromy traces,

    rho = (T2 + 4)/2 - T1^2/4,   T_m = Tr psi(m, z),

which is preferred for root finding because the product form is only
continuous away from pairing failures.

``track`` follows the ``N`` branch values along a contour, matching
them sample-to-sample by minimal total-distance assignment and
subdividing any ambiguous cell; cells that stay ambiguous at full
depth are reported as collision cells, never silently swapped.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import linalg, monodromy
from .potential import PeriodicPotential

__all__ = [
    "LyapunovSample",
    "BranchTrack",
    "sample",
    "sample_many",
    "sample_from_psi",
    "rho_from_traces",
    "rho_n2",
    "rho_n2_many",
    "track",
]

#: Reciprocal-pairing acceptance threshold |tau * tau' - 1|.
PAIRING_TOL = 1e-6

#: Two Lyapunov values closer than this are considered in collision.
COLLISION_TOL = 1e-6

#: Deepest cell subdivision attempted before a collision mark.
MAX_SUBDIVISIONS = 8

#: Coarsest admissible step for branch tracking along real contours.
REAL_TRACK_STEP = np.pi / 200


@dataclass(frozen=True)
class LyapunovSample:
    """Floquet data derived from one monodromy matrix.

    Attributes
    ----------
    z:
        Spectral parameter.
    psi_eigenvalues:
        Raw multipliers (the ``2N`` eigenvalues of ``psi(1, z)``),
        kept so flagged samples still expose the unpaired data.
    multipliers:
        ``(N, 2)`` array of reciprocal pairs; column 0 holds the
        representative with the larger ``(log |tau|, arg tau)`` key.
    pairing_defect:
        Largest ``|tau * tau' - 1|`` over the pairs.
    deltas:
        The ``N`` Lyapunov values (centroids of the paired eigenvalues
        of ``L(z)``).
    pairing_residual:
        Largest distance from ``(tau_j + 1/tau_j)/2`` to the nearest
        entry of ``deltas`` — consistency of the two eigenproblems.
    rho:
        Discriminant ``prod_{i<j} (Delta_i - Delta_j)^2`` (empty
        product = 1 for ``N = 1``).
    cluster_margin:
        Smallest disambiguation gap used while collapsing the ``2N``
        eigenvalues of ``L`` into ``N`` doubles: the minimum over
        merge steps of (distance to second-nearest candidate) minus
        (distance to chosen partner).  Near-zero values mean the
        sample sits near a branch point and per-branch quantities are
        unreliable there.
    flags:
        Diagnostics inherited from the integrator plus
        ``pairing-failure`` (reciprocal matching exceeded tolerance)
        and ``near-branch-point`` (cluster margin below collision
        tolerance; informational, not an error).
    """

    z: complex
    psi_eigenvalues: np.ndarray
    multipliers: np.ndarray
    pairing_defect: float
    deltas: np.ndarray
    pairing_residual: float
    rho: complex
    cluster_margin: float
    flags: tuple[str, ...]

    @property
    def n(self) -> int:
        """Block size N (number of Lyapunov branches)."""
        return self.deltas.size


@dataclass(frozen=True)
class BranchTrack:
    """Continuously matched Lyapunov branches along a contour.

    ``branch_values[j, i]`` is branch ``j`` at ``grid[i]``; rows are
    matched across samples (no swaps).  ``collision_marks`` lists the
    indices ``i`` of cells ``[grid[i], grid[i+1]]`` where matching
    stayed ambiguous at full subdivision depth; branch identities are
    not trustworthy across a marked cell.  ``cluster_margins`` carries
    the per-sample pairing margins for downstream filtering.
    """

    grid: np.ndarray
    branch_values: np.ndarray
    collision_marks: tuple[int, ...]
    cluster_margins: np.ndarray

    @property
    def n(self) -> int:
        """Number of tracked branches."""
        return self.branch_values.shape[0]


def _pair_multipliers(eigs: np.ndarray) -> tuple[np.ndarray, float]:
    """Arrange the 2N multipliers into N reciprocal pairs.

    Greedy reciprocity matching: picks proceed from the most hyperbolic
    eigenvalue (largest ``|log |tau||``) and each pick takes the
    remaining eigenvalue minimising ``|tau * tau' - 1|``.  A plain
    magnitude sort would be scrambled by rounding noise whenever all
    multipliers sit on the unit circle, where magnitudes tie to within
    integrator error; the reciprocity cost has no such degeneracy.
    """
    n = eigs.size // 2
    with np.errstate(divide="ignore"):
        log_mag = np.log(np.abs(eigs))
    angles = np.angle(eigs)
    remaining = [int(i) for i in np.lexsort((angles, -np.abs(log_mag)))]
    pairs = np.empty((n, 2), dtype=complex)
    defect = 0.0
    for j in range(n):
        i = remaining.pop(0)
        costs = np.abs(eigs[i] * eigs[remaining] - 1.0)
        k = remaining.pop(int(np.argmin(costs)))
        if (log_mag[i], angles[i]) >= (log_mag[k], angles[k]):
            pairs[j] = (eigs[i], eigs[k])
        else:
            pairs[j] = (eigs[k], eigs[i])
        defect = max(defect, float(np.abs(eigs[i] * eigs[k] - 1.0)))
    if n:
        with np.errstate(divide="ignore"):
            rep_mag = np.log(np.abs(pairs[:, 0]))
        pairs = pairs[np.lexsort((np.angle(pairs[:, 0]), rep_mag))]
    return pairs, defect


def _cluster_pairs(eigs: np.ndarray) -> tuple[np.ndarray, float]:
    """Collapse the 2N eigenvalues of L into N doubles.

    Lexicographic sweep with greedy nearest-neighbour merging; returns
    the pair centroids and the smallest disambiguation margin.
    """
    order = np.lexsort((eigs.imag, eigs.real))
    remaining = list(eigs[order])
    centers: list[complex] = []
    margin = np.inf
    while remaining:
        anchor = remaining.pop(0)
        if not remaining:
            centers.append(anchor)
            break
        dists = np.abs(np.array(remaining) - anchor)
        pick = int(np.argmin(dists))
        partner = remaining.pop(pick)
        if len(dists) > 1:
            second = float(np.partition(dists, 1)[1])
            margin = min(margin, second - float(dists[pick]))
        centers.append(0.5 * (anchor + partner))
    if not np.isfinite(margin):
        margin = float("inf")
    return np.array(centers, dtype=complex), float(margin)


def _rho_product(deltas: np.ndarray) -> complex:
    out = 1.0 + 0.0j
    n = deltas.size
    for i in range(n):
        for j in range(i + 1, n):
            out *= (deltas[i] - deltas[j]) ** 2
    return complex(out)


def sample_from_psi(
    z: complex, psi: np.ndarray, flags: tuple[str, ...] = ()
) -> LyapunovSample:
    """Derive the Floquet sample from an already computed ``psi(1, z)``."""
    psi = np.asarray(psi, dtype=complex)
    eigs = linalg.eigenvalues(psi).values
    pairs, defect = _pair_multipliers(eigs)
    all_flags = tuple(flags)
    if defect > PAIRING_TOL:
        all_flags += ("pairing-failure",)

    det, inv = linalg.det_inv(psi)
    if inv is None:
        # Singular monodromy cannot occur for a genuine fundamental
        # solution (det psi = 1); treat as a defective sample.
        lmat_eigs = eigs.copy()
        all_flags += ("singular-monodromy",)
    else:
        lmat = 0.5 * (psi + inv)
        lmat_eigs = linalg.eigenvalues(lmat).values
    deltas, margin = _cluster_pairs(lmat_eigs)
    if margin < COLLISION_TOL:
        all_flags += ("near-branch-point",)

    halves = 0.5 * (pairs[:, 0] + 1.0 / pairs[:, 0])
    if deltas.size:
        residual = float(
            np.max(np.min(np.abs(halves[:, None] - deltas[None, :]), axis=1))
        )
    else:
        residual = 0.0

    return LyapunovSample(
        z=complex(z),
        psi_eigenvalues=eigs,
        multipliers=pairs,
        pairing_defect=defect,
        deltas=deltas,
        pairing_residual=residual,
        rho=_rho_product(deltas),
        cluster_margin=margin,
        flags=all_flags,
    )


def sample(
    p: PeriodicPotential, z: complex, rtol: float = monodromy.DEFAULT_RTOL
) -> LyapunovSample:
    """Floquet sample at a single spectral point."""
    res = monodromy.integrate(p, z, rtol=rtol)
    return sample_from_psi(z, res.psi1, res.flags)


def sample_many(
    p: PeriodicPotential,
    zs: np.ndarray,
    rtol: float = monodromy.DEFAULT_RTOL,
) -> list[LyapunovSample]:
    """Floquet samples for a batch of spectral points (one ODE sweep)."""
    results = monodromy.integrate_many(p, zs, rtol=rtol)
    return [sample_from_psi(r.z, r.psi1, r.flags) for r in results]


def rho_from_traces(t1: complex, t2: complex) -> complex:
    """Discriminant of a two-branch system from monodromy traces.

    For ``N = 2`` the two Lyapunov values satisfy ``Delta_{1,2} = T1/4
    +- sqrt(rho)/2`` with ``rho = (T2 + 4)/2 - T1^2/4`` where ``T_m =
    Tr psi(m, z)``; this expression is entire in ``z``.
    """
    return (t2 + 4.0) / 2.0 - t1 * t1 / 4.0


def rho_n2(
    p: PeriodicPotential, z: complex, rtol: float = monodromy.DEFAULT_RTOL
) -> complex:
    """Closed-trace discriminant at one point (two-band blocks only)."""
    return complex(rho_n2_many(p, np.array([z]), rtol=rtol)[0])


def rho_n2_many(
    p: PeriodicPotential,
    zs: np.ndarray,
    rtol: float = monodromy.DEFAULT_RTOL,
) -> np.ndarray:
    """Closed-trace discriminant on a batch of points (N = 2 only)."""
    if p.n != 2:
        raise ValueError("closed trace form requires block size N = 2, got N=%d" % p.n)
    t1, t2 = monodromy.traces_many(p, zs, rtol=rtol)
    return np.asarray(rho_from_traces(t1, t2), dtype=complex)


def _assignment_margin(cost: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> float:
    """Stability of an assignment: cheapest pair swap minus optimum."""
    n = cost.shape[0]
    if n < 2:
        return float("inf")
    base = float(cost[rows, cols].sum())
    best_alt = np.inf
    for a in range(n):
        for b in range(a + 1, n):
            swapped = (
                base
                - cost[rows[a], cols[a]]
                - cost[rows[b], cols[b]]
                + cost[rows[a], cols[b]]
                + cost[rows[b], cols[a]]
            )
            best_alt = min(best_alt, swapped)
    return float(best_alt - base)


def _match(predicted: np.ndarray, new: np.ndarray) -> tuple[np.ndarray, float]:
    """Match new branch values to their predicted positions.

    Matching against a linear extrapolation of each branch (rather than
    its last value) keeps branches on their smooth course through a
    transversal value crossing, where raw nearest-value assignment
    would prefer the spurious swap.
    """
    cost = np.abs(predicted[:, None] - new[None, :])
    rows, cols = linear_sum_assignment(cost)
    margin = _assignment_margin(cost, rows, cols)
    out = np.empty_like(new)
    out[rows] = new[cols]
    return out, margin


def _predict(
    z_prev: complex,
    d_prev: np.ndarray,
    z_before: complex | None,
    d_before: np.ndarray | None,
    z_new: complex,
) -> np.ndarray:
    """Linear extrapolation of branch values to the next contour point."""
    if d_before is None or abs(z_prev - z_before) < 1e-15:
        return d_prev
    frac = (z_new - z_prev) / (z_prev - z_before)
    return d_prev + frac * (d_prev - d_before)


def _min_gap(values: np.ndarray) -> float:
    if values.size < 2:
        return float("inf")
    diff = np.abs(values[:, None] - values[None, :])
    np.fill_diagonal(diff, np.inf)
    return float(diff.min())


def track(
    p: PeriodicPotential,
    contour: np.ndarray,
    rtol: float = monodromy.DEFAULT_RTOL,
    collision_tol: float = COLLISION_TOL,
    max_subdivisions: int = MAX_SUBDIVISIONS,
) -> BranchTrack:
    """Follow the Lyapunov branches along a contour without swaps.

    Branch values at consecutive samples are matched by minimal
    total-distance assignment.  A cell is ambiguous when branch values
    at its endpoints nearly coincide or when the optimal assignment
    beats the best alternative by less than ``collision_tol``; such a
    cell is bisected (recursively, up to ``max_subdivisions`` levels)
    and marked a collision cell if ambiguity survives.  A cell whose
    endpoints are both already degenerate is marked immediately —
    subdividing a permanently degenerate stretch (e.g. the free
    operator) cannot resolve anything.
    """
    grid = np.asarray(contour, dtype=complex)
    if grid.ndim != 1 or grid.size < 2:
        raise ValueError("contour must contain at least two points")
    if np.max(np.abs(grid.imag)) < 1e-12:
        step = float(np.max(np.abs(np.diff(grid.real))))
        if step > REAL_TRACK_STEP * (1 + 1e-9):
            raise ValueError(
                "real contour step %.3g exceeds the %.3g tracking limit"
                % (step, REAL_TRACK_STEP)
            )

    samples = sample_many(p, grid, rtol=rtol)
    nb = p.n
    values = np.empty((nb, grid.size), dtype=complex)
    margins = np.array([s.cluster_margin for s in samples])

    start = samples[0].deltas
    order = np.lexsort((start.imag, start.real))
    values[:, 0] = start[order]

    marks: list[int] = []
    for i in range(grid.size - 1):
        prev = values[:, i]
        z_before = grid[i - 1] if i >= 1 else None
        d_before = values[:, i - 1] if i >= 1 else None
        new = samples[i + 1].deltas
        predicted = _predict(grid[i], prev, z_before, d_before, grid[i + 1])
        matched, margin = _match(predicted, new)
        degenerate_ends = (
            _min_gap(prev) < collision_tol and _min_gap(new) < collision_tol
        )
        ambiguous = (
            _min_gap(new) < collision_tol
            or _min_gap(prev) < collision_tol
            or margin < collision_tol
        )
        if degenerate_ends:
            marks.append(i)
        elif ambiguous:
            resolved, matched = _resolve_cell(
                p, grid[i], prev, z_before, d_before, grid[i + 1], new,
                rtol, collision_tol, max_subdivisions,
            )
            if not resolved:
                marks.append(i)
        values[:, i + 1] = matched
    return BranchTrack(
        grid=grid,
        branch_values=values,
        collision_marks=tuple(marks),
        cluster_margins=margins,
    )


def _resolve_cell(
    p: PeriodicPotential,
    za: complex,
    deltas_a: np.ndarray,
    z_before: complex | None,
    d_before: np.ndarray | None,
    zb: complex,
    deltas_b: np.ndarray,
    rtol: float,
    collision_tol: float,
    depth: int,
) -> tuple[bool, np.ndarray]:
    """Bisect an ambiguous cell until matching stabilizes.

    Returns ``(resolved, matched_deltas_at_zb)`` where the matching is
    relative to the branch order of ``deltas_a``.
    """
    if depth <= 0:
        matched, _ = _match(
            _predict(za, deltas_a, z_before, d_before, zb), deltas_b
        )
        return False, matched
    zm = 0.5 * (za + zb)
    mid = sample(p, zm, rtol=rtol).deltas

    left, margin_left = _match(
        _predict(za, deltas_a, z_before, d_before, zm), mid
    )
    ok_left = margin_left >= collision_tol and _min_gap(mid) >= collision_tol
    if not ok_left and _min_gap(deltas_a) >= collision_tol:
        resolved_l, left = _resolve_cell(
            p, za, deltas_a, z_before, d_before, zm, mid,
            rtol, collision_tol, depth - 1,
        )
    else:
        resolved_l = ok_left

    right, margin_right = _match(_predict(zm, left, za, deltas_a, zb), deltas_b)
    ok_right = margin_right >= collision_tol and _min_gap(deltas_b) >= collision_tol
    if not ok_right and _min_gap(left) >= collision_tol:
        resolved_r, right = _resolve_cell(
            p, zm, left, za, deltas_a, zb, deltas_b,
            rtol, collision_tol, depth - 1,
        )
    else:
        resolved_r = ok_right

    return resolved_l and resolved_r, right
