"""High-energy spectral asymptotics for periodic Dirac blocks.

Inside the n-th spectral cell ``[pi n - pi/2, pi n + pi/2]`` the periodic and
antiperiodic eigenvalues and the branch resonances of a potential in normal
form drift away from ``pi n`` by ``O(1/n)`` corrections governed by two
finite-dimensional objects: the second-moment matrix ``integral V(t)^2 dt``
and the twisted Fourier coefficient of ``v'`` at frequency ``n``.  This
module computes those closed-form predictions (:func:`predict`), compares
them against the certified numerical spectrum (:func:`validate`), decides
whether the gap structure can persist at high energy (:func:`gap_criterion`),
continues the averaged quasimomentum along contours (:func:`quasimomentum`),
and checks the large-height trace expansion of the averaged quasimomentum
and the Lyapunov determinant (:func:`trace_check`).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import linalg, lyapunov, monodromy, potential, spectrum
from .potential import PeriodicPotential

__all__ = [
    "AsymptoticsError",
    "ResonanceFamily",
    "AsymptoticsPrediction",
    "MatchRow",
    "ValidationTable",
    "FamilyEvidence",
    "GapCriterionReport",
    "QuasimomentumSample",
    "TraceCheckReport",
    "predict",
    "validate",
    "gap_criterion",
    "quasimomentum",
    "trace_check",
]

# Off-diagonal mass of integral(v v*) tolerated before we refuse to predict;
# the closed forms are only valid in normal form.
NORMAL_FORM_TOL = 1e-10
# The correction matrix is Hermitian by construction, so its spectrum must be
# real to within roundoff.
ZETA_IMAG_TOL = 1e-10
# Channel weights closer than this are treated as tied.
TIE_TOL = 1e-10
# Anti-diagonal sum identity tolerance for the gap criterion.
IDENTITY_TOL = 1e-10
# Validation cells: below 2 the 1/n expansions are not trustworthy, above 60
# the integrator cost and the root spacing both degrade.
VALIDATE_CELLS = (2, 60)
# Trace-formula heights must sit where the expansion has converged but the
# monodromy is still representable.
HEIGHT_RANGE = (10.0, 50.0)
MIN_HEIGHTS = 4
# Least-squares designs worse conditioned than this yield raw samples only.
FIT_COND_LIMIT = 1e8

VERDICT_FINITE = "finitely-many-gaps-predicted"
VERDICT_INFINITE = "infinite-gaps-possible"


class AsymptoticsError(ValueError):
    """A precondition of an asymptotic formula failed."""


# ---------------------------------------------------------------------------
# prediction


@dataclass(frozen=True)
class ResonanceFamily:
    """Predicted resonance pair for one channel pair ``alpha = (j, j')``.

    The pair sits at ``pi n + (nu_j + nu_j' -+ 2 c) / (4 pi n)`` where ``c``
    is the coupling ``|vhat'_n[j, j']|``; ``pair`` stores (minus, plus) in
    that sign order.
    """

    alpha: tuple[int, int]
    nu_sum: float
    coupling: float
    pair: tuple[float, float]


@dataclass(frozen=True)
class AsymptoticsPrediction:
    """Closed-form cell-``n`` spectral data of a normal-form potential.

    ``zeta`` are the ``2N`` ascending eigenvalues of the correction matrix
    ``integral V^2 - i J1 Vhat'_n``; the predicted periodic/antiperiodic
    eigenvalues are ``pi n + zeta / (2 pi n)``.  ``resonance_families``
    carries one entry per channel pair with distinct weights; pairs with
    tied weights are listed in ``omitted_families`` with the reason.
    """

    n: int
    nu: np.ndarray
    zeta: np.ndarray
    predicted_eigenvalues: np.ndarray
    resonance_families: tuple[ResonanceFamily, ...]
    omitted_families: tuple[tuple[tuple[int, int], str], ...]
    hermiticity_defect: float

    def branch_shape(self, j: int):
        """Leading shape of Lyapunov branch ``j``: ``z -> cos(z - nu_j/2z)``."""
        if not 1 <= j <= len(self.nu):
            raise AsymptoticsError(f"branch index {j} outside 1..{len(self.nu)}")
        weight = float(self.nu[j - 1])

        def shape(z):
            zc = np.asarray(z, dtype=np.complex128)
            return np.cos(zc - weight / (2.0 * zc))

        return shape


def _channel_weights(p: PeriodicPotential) -> tuple[np.ndarray, float]:
    """Diagonal of integral(v v*) in channel order; refuses off normal form."""
    mom = potential.moments(p)
    nch = p.n
    v1 = mom.v2[:nch, :nch]
    scale = max(1.0, float(np.max(np.abs(v1), initial=0.0)))
    off = v1 - np.diag(np.diag(v1))
    off_mass = float(np.max(np.abs(off), initial=0.0))
    if off_mass > NORMAL_FORM_TOL * scale:
        raise AsymptoticsError(
            "potential is not in normal form: integral(v v*) has off-diagonal "
            f"mass {off_mass:.3g}; rotate with potential.normalize first"
        )
    return np.real(np.diag(v1)).copy(), scale


def predict(p: PeriodicPotential, n: int) -> AsymptoticsPrediction:
    """Closed-form eigenvalue and resonance predictions for cell ``n``.

    Requires a normal-form potential and ``|n| >= 1``.  Eigenvalues come
    from the spectrum of the Hermitian correction matrix; the resonance
    pair of channels ``(j, j')`` splits symmetrically around
    ``pi n + (nu_j + nu_j')/(4 pi n)`` by the coupling ``|vhat'_n[j, j']|
    / (2 pi n)``.  Channel pairs with tied weights have no isolated pair
    at this order and are omitted with a recorded reason.
    """
    n = int(n)
    if abs(n) < 1:
        raise AsymptoticsError("cell index n must satisfy |n| >= 1")
    nu, scale = _channel_weights(p)
    nch = p.n
    mom = potential.moments(p)
    fd = potential.fourier_data(p, n)
    j1 = linalg.j1_matrix(nch)
    gamma = mom.v2 - 1j * (j1 @ fd.big_vhat_prime)
    herm_defect = float(np.max(np.abs(gamma - gamma.conj().T), initial=0.0))
    if herm_defect > ZETA_IMAG_TOL * max(1.0, scale):
        raise AsymptoticsError(
            f"correction matrix lost hermiticity (defect {herm_defect:.3g}); "
            "the potential block structure is inconsistent"
        )
    zeta_raw = np.linalg.eigvals(gamma)
    imag_mass = float(np.max(np.abs(zeta_raw.imag), initial=0.0))
    if imag_mass > ZETA_IMAG_TOL * max(1.0, scale):
        raise AsymptoticsError(
            f"correction spectrum is not real (max |Im| {imag_mass:.3g})"
        )
    zeta = np.sort(zeta_raw.real)
    predicted = np.pi * n + zeta / (2.0 * np.pi * n)

    families: list[ResonanceFamily] = []
    omitted: list[tuple[tuple[int, int], str]] = []
    for j in range(1, nch + 1):
        for jp in range(j + 1, nch + 1):
            nu_j, nu_jp = float(nu[j - 1]), float(nu[jp - 1])
            if abs(nu_j - nu_jp) <= TIE_TOL * max(1.0, scale):
                omitted.append(
                    ((j, jp),
                     f"channel weights nu_{j} and nu_{jp} are tied "
                     f"({nu_j:.12g}); the isolated-pair formula needs "
                     "distinct weights")
                )
                continue
            coupling = float(np.abs(fd.vhat_prime[j - 1, jp - 1]))
            center = np.pi * n + (nu_j + nu_jp) / (4.0 * np.pi * n)
            half = coupling / (2.0 * np.pi * n)
            families.append(
                ResonanceFamily(
                    alpha=(j, jp),
                    nu_sum=nu_j + nu_jp,
                    coupling=coupling,
                    pair=(float(center - half), float(center + half)),
                )
            )
    return AsymptoticsPrediction(
        n=n,
        nu=nu,
        zeta=zeta,
        predicted_eigenvalues=predicted,
        resonance_families=tuple(families),
        omitted_families=tuple(omitted),
        hermiticity_defect=herm_defect,
    )


# ---------------------------------------------------------------------------
# validation against the numerical spectrum


@dataclass(frozen=True)
class MatchRow:
    """One predicted value matched (or not) against the numerical spectrum.

    ``family`` is ``"eig<i>"`` for the i-th predicted eigenvalue of the
    cell or ``"res(j,j')-"`` / ``"res(j,j')+"`` for a resonance pair
    member.  ``numeric`` is ``None`` when no numerical root was available
    to match; ``scaled`` is the residual amplified by ``n^2``, the natural
    size of the neglected next-order term.
    """

    n: int
    family: str
    predicted: float
    numeric: float | None
    residual: float | None
    scaled: float | None


@dataclass(frozen=True)
class ValidationTable:
    """Cell-by-cell comparison of predictions with located roots.

    ``unmatched_numeric`` lists numerical roots (n, kind, root,
    multiplicity) that no prediction claimed; they are reported, never
    dropped.  ``summary`` is the maximum ``|scaled|`` over matched rows.
    """

    n_range: tuple[int, int]
    rows: tuple[MatchRow, ...]
    unmatched_numeric: tuple[tuple[int, str, float, int], ...]
    summary: float
    flags: tuple[str, ...]

    CSV_HEADER = "n,family,predicted,numeric,residual,scaled_residual"

    def csv_rows(self) -> list[str]:
        """Rows in the documented column order (numeric blanks when absent)."""
        out = [self.CSV_HEADER]
        for row in self.rows:
            if row.numeric is None:
                out.append(f"{row.n},{row.family},{row.predicted!r},,,")
            else:
                out.append(
                    f"{row.n},{row.family},{row.predicted!r},{row.numeric!r},"
                    f"{row.residual!r},{row.scaled!r}"
                )
        return out


def _assign(predicted: np.ndarray, numeric: np.ndarray) -> list[tuple[int, int]]:
    """Minimal-total-distance pairing of predictions with numeric roots."""
    if len(predicted) == 0 or len(numeric) == 0:
        return []
    cost = np.abs(predicted[:, None] - numeric[None, :])
    rows, cols = linear_sum_assignment(cost)
    return list(zip(rows.tolist(), cols.tolist()))


def _expand(roots: np.ndarray, mults: np.ndarray) -> np.ndarray:
    """Repeat each root by its multiplicity."""
    if len(roots) == 0:
        return np.empty(0, dtype=float)
    return np.repeat(np.asarray(roots, dtype=float), np.asarray(mults, dtype=int))


def validate(
    p: PeriodicPotential,
    n_range: tuple[int, int],
    rtol: float = monodromy.DEFAULT_RTOL,
    *,
    include_resonances: bool = True,
    certify: bool = False,
) -> ValidationTable:
    """Compare cell predictions with located eigenvalues and resonances.

    For each cell in ``n_range`` (within 2..60) the ``2N`` predicted
    eigenvalues are matched against the union of periodic and antiperiodic
    roots found in that cell (multiplicities expanded), and each resonance
    family pair against real resonances near the cell center.  Matching is
    by minimal total distance; leftover numerical roots are listed in
    ``unmatched_numeric`` and leftover predictions keep a row with an empty
    numeric column.  ``summary`` is the worst ``residual * n^2``.
    """
    n_lo, n_hi = int(n_range[0]), int(n_range[1])
    lo_ok, hi_ok = VALIDATE_CELLS
    if not (lo_ok <= n_lo <= n_hi <= hi_ok):
        raise AsymptoticsError(
            f"validation cells must satisfy {lo_ok} <= n_lo <= n_hi <= {hi_ok}, "
            f"got ({n_lo}, {n_hi})"
        )
    flags: list[str] = []
    rows: list[MatchRow] = []
    unmatched: list[tuple[int, str, float, int]] = []

    kinds = {}
    for kind in ("periodic", "antiperiodic"):
        listing = spectrum.find_eigenvalues(
            p, kind, (n_lo, n_hi), rtol, certify=certify
        )
        kinds[kind] = listing
        flags.extend(f"{kind}:{f}" for f in listing.flags)

    by_cell: dict[int, list[tuple[str, float, int]]] = {
        n: [] for n in range(n_lo, n_hi + 1)
    }
    for kind, listing in kinds.items():
        for root, mult in zip(listing.roots, listing.multiplicities):
            cell = int(np.rint(root / np.pi))
            if n_lo <= cell <= n_hi:
                by_cell[cell].append((kind, float(root), int(mult)))

    for n in range(n_lo, n_hi + 1):
        pred = predict(p, n)

        cell_roots = by_cell[n]
        numeric = np.concatenate(
            [np.full(m, r) for _, r, m in cell_roots]
        ) if cell_roots else np.empty(0)
        origin = sum(([(kind, r, m)] * m for kind, r, m in cell_roots), [])
        predicted = pred.predicted_eigenvalues
        pairs = _assign(predicted, numeric)
        used = set()
        matched_pred = set()
        for i, k in pairs:
            res = float(numeric[k] - predicted[i])
            rows.append(MatchRow(n=n, family=f"eig{i + 1}",
                                 predicted=float(predicted[i]),
                                 numeric=float(numeric[k]),
                                 residual=res, scaled=res * n * n))
            used.add(k)
            matched_pred.add(i)
        for i in range(len(predicted)):
            if i not in matched_pred:
                rows.append(MatchRow(n=n, family=f"eig{i + 1}",
                                     predicted=float(predicted[i]),
                                     numeric=None, residual=None, scaled=None))
        leftovers: dict[tuple[str, float], int] = {}
        for k in range(len(numeric)):
            if k not in used:
                kind, r, _ = origin[k]
                leftovers[(kind, r)] = leftovers.get((kind, r), 0) + 1
        for (kind, r), m in sorted(leftovers.items(), key=lambda kv: kv[0][1]):
            unmatched.append((n, kind, r, m))

        if include_resonances and p.n >= 2 and pred.resonance_families:
            pred_res = []
            labels = []
            for fam in pred.resonance_families:
                j, jp = fam.alpha
                pred_res.extend(fam.pair)
                labels.extend([f"res({j},{jp})-", f"res({j},{jp})+"])
            pred_res = np.asarray(pred_res)
            width = max(0.05, 2.0 * float(np.max(np.abs(pred_res - np.pi * n))))
            width = min(width, np.pi / 2 - 0.05)
            window = (np.pi * n - width, np.pi * n + width)
            listing = spectrum.find_resonances(p, window=window)
            flags.extend(f"resonance:{f}" for f in listing.flags)
            numeric_res = _expand(listing.real_roots, listing.real_multiplicities)
            pairs = _assign(pred_res, numeric_res)
            used = set()
            matched_pred = set()
            for i, k in pairs:
                res = float(numeric_res[k] - pred_res[i])
                rows.append(MatchRow(n=n, family=labels[i],
                                     predicted=float(pred_res[i]),
                                     numeric=float(numeric_res[k]),
                                     residual=res, scaled=res * n * n))
                used.add(k)
                matched_pred.add(i)
            for i in range(len(pred_res)):
                if i not in matched_pred:
                    rows.append(MatchRow(n=n, family=labels[i],
                                         predicted=float(pred_res[i]),
                                         numeric=None, residual=None,
                                         scaled=None))
            leftover_res: dict[float, int] = {}
            for k in range(len(numeric_res)):
                if k not in used:
                    r = float(numeric_res[k])
                    leftover_res[r] = leftover_res.get(r, 0) + 1
            for r, m in sorted(leftover_res.items()):
                unmatched.append((n, "resonance", r, m))

    scaled = [abs(row.scaled) for row in rows if row.scaled is not None]
    summary = float(max(scaled)) if scaled else 0.0
    return ValidationTable(
        n_range=(n_lo, n_hi),
        rows=tuple(rows),
        unmatched_numeric=tuple(unmatched),
        summary=summary,
        flags=tuple(dict.fromkeys(flags)),
    )


# ---------------------------------------------------------------------------
# gap criterion


@dataclass(frozen=True)
class FamilyEvidence:
    """Coupling evidence for an anti-diagonal channel pair ``(j, N+1-j)``.

    ``max_coupling`` is the largest ``|vhat'_n|`` entry over the nonzero
    frequencies the potential actually carries; a pair whose couplings all
    vanish cannot open gaps at this order no matter how the weights align.
    """

    alpha: tuple[int, int]
    nu_sum: float
    max_coupling: float
    nondegenerate: bool


@dataclass(frozen=True)
class GapCriterionReport:
    """High-energy gap persistence verdict.

    Gaps can survive to arbitrarily high cells only if anti-diagonal
    channel pairs resonate at a common location, i.e. all sums
    ``nu_j + nu_{N+1-j}`` agree; ``identity_defect`` measures the failure
    of that alignment.  ``evidence`` qualifies an
    ``infinite-gaps-possible`` verdict: with zero couplings the aligned
    resonances still do not split, so no gap actually opens at this order.
    """

    nu: np.ndarray
    verdict: str
    anti_diagonal_sums: np.ndarray
    identity_defect: float
    evidence: tuple[FamilyEvidence, ...]
    flags: tuple[str, ...]


def gap_criterion(p: PeriodicPotential) -> GapCriterionReport:
    """Decide whether gaps can persist in arbitrarily high cells.

    Requires strictly increasing channel weights; tied weights make the
    anti-diagonal alignment question ill-posed and the call refuses,
    naming the tied pair.
    """
    nu, scale = _channel_weights(p)
    nch = p.n
    for j in range(nch - 1):
        gap = float(nu[j + 1] - nu[j])
        if abs(gap) <= TIE_TOL * max(1.0, scale):
            raise AsymptoticsError(
                f"channel weights nu_{j + 1} and nu_{j + 2} are tied "
                f"({float(nu[j]):.12g}); the gap criterion needs strictly "
                "ordered weights"
            )
        if gap < 0:
            raise AsymptoticsError(
                "channel weights are not ascending; rotate with "
                "potential.normalize first"
            )

    sums = np.array([float(nu[j] + nu[nch - 1 - j]) for j in range((nch + 1) // 2)])
    identity_defect = (
        float(np.max(np.abs(sums - sums[0]))) if len(sums) else 0.0
    )
    aligned = identity_defect <= IDENTITY_TOL * max(1.0, scale)
    verdict = VERDICT_INFINITE if aligned else VERDICT_FINITE

    evidence: list[FamilyEvidence] = []
    flags: list[str] = []
    for j in range(1, nch // 2 + 1):
        jp = nch + 1 - j
        best = 0.0
        for m in range(1, p.degree + 1):
            for sign in (m, -m):
                fd = potential.fourier_data(p, sign)
                best = max(best, float(np.abs(fd.vhat_prime[j - 1, jp - 1])))
        nondeg = best > TIE_TOL * max(1.0, scale)
        evidence.append(FamilyEvidence(alpha=(j, jp), nu_sum=float(nu[j - 1] + nu[jp - 1]),
                                       max_coupling=best, nondegenerate=nondeg))
        if aligned and not nondeg:
            flags.append(f"degenerate-coupling-({j},{jp})")
    return GapCriterionReport(
        nu=nu,
        verdict=verdict,
        anti_diagonal_sums=sums,
        identity_defect=identity_defect,
        evidence=tuple(evidence),
        flags=tuple(flags),
    )


# ---------------------------------------------------------------------------
# quasimomentum


@dataclass(frozen=True)
class QuasimomentumSample:
    """Averaged quasimomentum at one contour point.

    ``k`` is the branch-averaged continued inverse cosine of the Lyapunov
    values; ``p`` and ``q`` are its real and imaginary parts.  ``branch_k``
    keeps the per-branch values.  ``flagged`` marks samples adjacent to a
    collision cell, where branch identities (hence the continuation) are
    not trustworthy.
    """

    z: complex
    k: complex
    p: float
    q: float
    branch_k: np.ndarray
    flagged: bool


def _continue_arccos(values: np.ndarray) -> np.ndarray:
    """Continuous inverse cosine along a sampled curve.

    ``arccos`` is two-valued up to sign and ``2 pi`` shifts; each sample
    picks the candidate closest to its predecessor.  The anchor (and exact
    ties, which occur when a branch touches ``+-1`` between samples) prefer
    the upper half plane, which selects the physical sheet where the
    averaged quasimomentum has nonnegative imaginary part.
    """
    base = np.arccos(values.astype(np.complex128))
    out = np.empty_like(base)
    out[0] = base[0] if base[0].imag >= 0 else -base[0]
    two_pi = 2.0 * np.pi
    for m in range(1, len(base)):
        prev = out[m - 1]
        best = None
        best_d = np.inf
        for cand0 in (base[m], -base[m]):
            shift = np.rint((prev.real - cand0.real) / two_pi)
            for dl in (-1.0, 0.0, 1.0):
                cand = cand0 + two_pi * (shift + dl)
                d = abs(cand - prev) + (1e-9 if cand.imag < 0 else 0.0)
                if d < best_d:
                    best_d = d
                    best = cand
        out[m] = best
    return out


def quasimomentum(
    p: PeriodicPotential,
    contour: np.ndarray,
    rtol: float = monodromy.DEFAULT_RTOL,
) -> list[QuasimomentumSample]:
    """Averaged quasimomentum along a contour by branch continuation.

    Tracks the Lyapunov branches along ``contour`` (step at most pi/200 on
    real contours), continues each branch's inverse cosine, and averages.
    Samples touching a collision cell are flagged rather than smoothed
    over; choose contours avoiding branch collisions for clean data.
    """
    tr = lyapunov.track(p, contour, rtol=rtol)
    nb, m = tr.branch_values.shape
    ks = np.empty((nb, m), dtype=np.complex128)
    for j in range(nb):
        ks[j] = _continue_arccos(tr.branch_values[j])
    kbar = ks.mean(axis=0)
    bad = set()
    for i in tr.collision_marks:
        bad.add(i)
        bad.add(i + 1)
    return [
        QuasimomentumSample(
            z=complex(tr.grid[i]),
            k=complex(kbar[i]),
            p=float(kbar[i].real),
            q=float(kbar[i].imag),
            branch_k=ks[:, i].copy(),
            flagged=i in bad,
        )
        for i in range(m)
    ]


# ---------------------------------------------------------------------------
# trace formulas


@dataclass(frozen=True)
class TraceCheckReport:
    """Trace-expansion check along the imaginary axis.

    ``q0, q1, q2`` are the moment-side coefficients ``H0/4N, H1/8N,
    H2/16N``; ``fitted_*`` recover them from a least-squares fit of
    ``kbar(iy) - iy`` against ``1/z, 1/z^2, 1/z^3`` (``None`` when the
    design is too ill-conditioned, flagged).  ``detl_defects`` compares
    ``log det L(iy)`` with its closed asymptotic form per height;
    ``detl_defect`` is the maximum.
    """

    heights: np.ndarray
    q0: float
    q1: float
    q2: float
    k_samples: np.ndarray
    fitted_q0: float | None
    fitted_q1: float | None
    fitted_q2: float | None
    fit_condition: float
    detl_defects: np.ndarray
    detl_defect: float
    flags: tuple[str, ...]


def trace_check(
    p: PeriodicPotential,
    heights,
    rtol: float = monodromy.DEFAULT_RTOL,
) -> TraceCheckReport:
    """Check the averaged-quasimomentum trace expansion at large height.

    At ``z = iy`` the averaged quasimomentum expands as ``kbar = z - Q0/z
    - Q1/z^2 - Q2/z^3 + O(z^-4)`` with the moment coefficients above, and
    ``log det L = -i(2N z - H0/2z - H1/(2z)^2 - H2/(2z)^3) - 2N log 2`` up
    to exponentially small terms.  Heights must give at least four
    distinct values inside [10, 50].  ``kbar`` and ``det L`` both come
    from Lyapunov values rebuilt from the dominant Floquet multipliers,
    which stay accurate where the monodromy itself is stiff.
    """
    h = np.asarray(heights, dtype=float).ravel()
    lo, hi = HEIGHT_RANGE
    if len(np.unique(h)) < MIN_HEIGHTS:
        raise AsymptoticsError(
            f"need at least {MIN_HEIGHTS} distinct heights, got {len(np.unique(h))}"
        )
    if np.any(h < lo) or np.any(h > hi):
        raise AsymptoticsError(
            f"heights must lie in [{lo:g}, {hi:g}]; got range "
            f"[{h.min():g}, {h.max():g}]"
        )
    mom = potential.moments(p)
    n2 = 2 * p.n
    q0 = mom.h0 / (2.0 * n2)
    q1 = mom.h1 / (4.0 * n2)
    q2 = mom.h2 / (8.0 * n2)

    zs = 1j * h
    psis = monodromy.psi_many(p, zs, rtol=rtol)
    flags: list[str] = []
    k_samples = np.empty(len(h), dtype=np.complex128)
    detl_defects = np.empty(len(h), dtype=float)
    for i, (z, psi) in enumerate(zip(zs, psis)):
        # At these heights the recessive multipliers 1/tau ~ exp(-y) sit
        # below the eigensolver noise floor eps*|psi| ~ eps*exp(y), so the
        # Lyapunov values are rebuilt from the N dominant multipliers with
        # the exact reciprocal instead of the generic pairing.
        eigs = np.linalg.eigvals(psi)
        taus = eigs[np.argsort(-np.abs(eigs))[: p.n]]
        if np.min(np.abs(taus)) < 10.0:
            flags.append(f"h{h[i]:g}:weak-multiplier-separation")
        deltas = (taus + 1.0 / taus) / 2.0
        k_j = np.arccos(deltas.astype(np.complex128))
        k_j = np.where(k_j.imag < 0, -k_j, k_j)
        k_samples[i] = k_j.mean()
        # det L = prod Delta_j^2; per-factor principal logs cannot wrap
        # because each Delta_j(iy) hugs the positive real axis.
        log_detl = 2.0 * np.sum(np.log(deltas.astype(np.complex128)))
        predicted = (
            -1j * (n2 * z - mom.h0 / (2 * z) - mom.h1 / (2 * z) ** 2
                   - mom.h2 / (2 * z) ** 3)
            - n2 * np.log(2.0)
        )
        detl_defects[i] = float(np.abs(log_detl - predicted))

    resid = k_samples - zs
    design = np.stack([1.0 / zs, 1.0 / zs**2, 1.0 / zs**3], axis=1)
    a_real = np.concatenate([design.real, design.imag], axis=0)
    b_real = np.concatenate([resid.real, resid.imag])
    fit_condition = float(np.linalg.cond(a_real))
    if fit_condition > FIT_COND_LIMIT:
        flags.append("ill-conditioned-fit")
        fitted = (None, None, None)
    else:
        coef, *_ = np.linalg.lstsq(a_real, b_real, rcond=None)
        fitted = (float(-coef[0]), float(-coef[1]), float(-coef[2]))

    return TraceCheckReport(
        heights=h,
        q0=float(q0),
        q1=float(q1),
        q2=float(q2),
        k_samples=k_samples,
        fitted_q0=fitted[0],
        fitted_q1=fitted[1],
        fitted_q2=fitted[2],
        fit_condition=fit_condition,
        detl_defects=detl_defects,
        detl_defect=float(np.max(detl_defects)),
        flags=tuple(dict.fromkeys(flags)),
    )
