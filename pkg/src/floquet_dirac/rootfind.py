"""Root location for analytic functions that are expensive to evaluate.

Every routine here treats the target function as a black box mapping a
numpy array of points to an array of values of the same shape.  The
callers in this package evaluate such functions by integrating an ODE
for a whole batch of points at once, so the utilities are organized
around *batched* iterations: each refinement step issues one vectorized
call covering every active root, instead of one call per root.

Provided tools:

``bisect_secant_many``
    Simultaneous refinement of many bracketed sign changes of a real
    function: a bisection phase that shrinks every bracket to a safe
    width, then safeguarded secant steps to the target tolerance.

``bisect_predicate_many``
    Plain bisection on a boolean predicate (used for indicator-type
    boundaries, e.g. "is this point inside the spectrum").

``quadratic_vertex``
    Vertex abscissa of the parabola through three samples; the standard
    first estimate for a non-sign-changing minimum (double root).

``muller_many``
    Simultaneous Muller iteration for simple complex roots; derivative
    free and quadratically convergent near a simple zero.

``disk_roots``
    Argument-principle counting on a circle plus recovery of the root
    positions inside.  The winding number gives the exact count; the
    power sums of the roots are obtained from spectrally accurate
    contour moments of the (unwrapped) logarithm, converted to a monic
    polynomial via Newton's identities.  Clusters of nearly coincident
    roots are reported as a single root with multiplicity (their
    centroid is well conditioned even when the individual points are
    not), and isolated simple roots are polished by Muller iteration.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "RootfindError",
    "DiskCount",
    "bisect_secant_many",
    "bisect_predicate_many",
    "quadratic_vertex",
    "muller_many",
    "disk_roots",
]

#: Largest winding number for which root positions are recovered from
#: moments.  Beyond this the polynomial reconstruction is too ill
#: conditioned to trust; callers get the bare count instead.
MAX_RECOVERY_COUNT = 8

#: Roots closer to the circle than this fraction of the radius degrade
#: the trapezoid moments (slow Fourier decay), so the disk is re-tried
#: with a nudged radius.
SAFE_INTERIOR_FRACTION = 0.95

#: Hard minimum distance between any root and the circle, as an
#: absolute length; violating it after all retries is a failure.
BOUNDARY_MARGIN = 1e-4

#: Deterministic radius multipliers tried when a circle lands too close
#: to a root (first entry = original radius).  Growth is preferred so a
#: root hugging the boundary from inside stays inside; shrinking is the
#: last resort.  Callers with a hard outer limit pass their own factors.
RETRY_FACTORS = (1.0, 1.12, 1.25, 0.85)


class RootfindError(RuntimeError):
    """Raised when a root search cannot certify its result."""


# ---------------------------------------------------------------------------
# bracketed real roots
# ---------------------------------------------------------------------------

def bisect_secant_many(
    func: Callable[[np.ndarray], np.ndarray],
    lo: np.ndarray,
    hi: np.ndarray,
    *,
    xtol: float = 1e-11,
    switch_width: float = 1e-5,
    max_iter: int = 120,
) -> np.ndarray:
    """Refine many bracketed sign changes of a real-valued function.

    ``func`` maps a 1-D float array to a same-shaped float array; each
    ``(lo[i], hi[i])`` must bracket a sign change.  All brackets are
    refined together: bisection until every width is below
    ``switch_width``, then safeguarded secant steps (falling back to
    bisection whenever a secant step leaves its bracket or the secant
    denominator degenerates) until every width is below ``xtol``.

    Returns the root estimates (midpoints of the final brackets).
    """
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    if lo.shape != hi.shape or lo.ndim != 1:
        raise RootfindError("brackets must be two 1-D arrays of equal length")
    if lo.size == 0:
        return lo
    if not np.all(hi > lo):
        raise RootfindError("each bracket must satisfy lo < hi")
    flo = np.asarray(func(lo), dtype=float)
    fhi = np.asarray(func(hi), dtype=float)
    exact_lo = flo == 0.0
    exact_hi = fhi == 0.0
    bad = np.sign(flo) * np.sign(fhi) > 0
    bad &= ~(exact_lo | exact_hi)
    if np.any(bad):
        raise RootfindError(
            "no sign change on bracket(s) %s" % np.nonzero(bad)[0].tolist()
        )

    for _ in range(max_iter):
        width = hi - lo
        active = width > xtol
        if not np.any(active):
            break
        mid = 0.5 * (lo + hi)
        use_secant = width <= switch_width
        if np.any(use_secant):
            denom = fhi - flo
            ok = denom != 0.0
            sec = np.where(
                ok, hi - fhi * np.where(ok, (hi - lo) / np.where(ok, denom, 1.0), 0.0), mid
            )
            inside = (sec > lo) & (sec < hi)
            margin = 0.01 * width
            inside &= (sec - lo > margin) & (hi - sec > margin)
            mid = np.where(use_secant & inside, sec, mid)
        fmid = np.asarray(func(np.where(active, mid, lo)), dtype=float)
        move_lo = np.sign(fmid) == np.sign(flo)
        new_lo = np.where(active & move_lo, mid, lo)
        new_flo = np.where(active & move_lo, fmid, flo)
        new_hi = np.where(active & ~move_lo, mid, hi)
        new_fhi = np.where(active & ~move_lo, fmid, fhi)
        lo, flo, hi, fhi = new_lo, new_flo, new_hi, new_fhi

    return 0.5 * (lo + hi)


def bisect_predicate_many(
    predicate: Callable[[np.ndarray], np.ndarray],
    lo: np.ndarray,
    hi: np.ndarray,
    *,
    xtol: float = 1e-9,
    max_iter: int = 80,
) -> np.ndarray:
    """Bisection on a boolean predicate that flips across each bracket.

    ``predicate`` maps a 1-D float array to a boolean array.  Each
    bracket must have ``predicate(lo[i]) != predicate(hi[i])``; the flip
    point is located to within ``xtol``.  Returns bracket midpoints.
    """
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    if lo.shape != hi.shape or lo.ndim != 1:
        raise RootfindError("brackets must be two 1-D arrays of equal length")
    if lo.size == 0:
        return lo
    plo = np.asarray(predicate(lo), dtype=bool)
    phi = np.asarray(predicate(hi), dtype=bool)
    if np.any(plo == phi):
        bad = np.nonzero(plo == phi)[0].tolist()
        raise RootfindError("predicate does not flip on bracket(s) %s" % bad)
    for _ in range(max_iter):
        active = (hi - lo) > xtol
        if not np.any(active):
            break
        mid = 0.5 * (lo + hi)
        pmid = np.asarray(predicate(mid), dtype=bool)
        match_lo = pmid == plo
        lo = np.where(active & match_lo, mid, lo)
        hi = np.where(active & ~match_lo, mid, hi)
    return 0.5 * (lo + hi)


def quadratic_vertex(
    x: Sequence[float] | np.ndarray, f: Sequence[float] | np.ndarray
) -> float:
    """Vertex abscissa of the parabola through three (x, f) samples.

    Used as the first position estimate for a local minimum seen on a
    scan grid.  Falls back to the middle abscissa when the three points
    are (numerically) collinear or curve downward.
    """
    x0, x1, x2 = (float(v) for v in x)
    f0, f1, f2 = (float(v) for v in f)
    d1 = (f1 - f0) / (x1 - x0)
    d2 = (f2 - f1) / (x2 - x1)
    curv = (d2 - d1) / (x2 - x0)
    if not np.isfinite(curv) or curv <= 0.0:
        return x1
    vertex = 0.5 * (x0 + x1) - d1 / (2.0 * curv)
    if vertex < min(x0, x1, x2) or vertex > max(x0, x1, x2):
        return x1
    return vertex


# ---------------------------------------------------------------------------
# Muller iteration for simple complex roots
# ---------------------------------------------------------------------------

def muller_many(
    func: Callable[[np.ndarray], np.ndarray],
    starts: np.ndarray,
    *,
    spread: float = 1e-4,
    tol: float = 1e-12,
    max_iter: int = 40,
) -> tuple[np.ndarray, np.ndarray]:
    """Simultaneous Muller refinement of simple complex roots.

    Each root keeps a triple of iterates through which a quadratic is
    fitted; the next iterate is the quadratic's root closest to the
    newest point.  One batched ``func`` call drives every active root
    per iteration.  Iteration stops per root once the step is below
    ``tol * max(1, |z|)`` or the value stops improving.

    Returns ``(roots, values)`` with ``values = func(roots)``.
    """
    z2 = np.array(starts, dtype=complex)
    if z2.ndim != 1:
        raise RootfindError("starts must be a 1-D complex array")
    if z2.size == 0:
        return z2, z2.copy()
    scale = np.maximum(1.0, np.abs(z2))
    z0 = z2 - spread * scale
    z1 = z2 + spread * scale
    f0 = np.asarray(func(z0), dtype=complex)
    f1 = np.asarray(func(z1), dtype=complex)
    f2 = np.asarray(func(z2), dtype=complex)
    active = np.ones(z2.shape, dtype=bool)

    for _ in range(max_iter):
        if not np.any(active):
            break
        h1 = z1 - z0
        h2 = z2 - z1
        with np.errstate(divide="ignore", invalid="ignore"):
            d1 = (f1 - f0) / h1
            d2 = (f2 - f1) / h2
            a = (d2 - d1) / (h2 + h1)
        b = d2 + h2 * a
        disc = np.sqrt(b * b - 4.0 * f2 * a)
        den_plus = b + disc
        den_minus = b - disc
        den = np.where(np.abs(den_plus) >= np.abs(den_minus), den_plus, den_minus)
        ok = np.isfinite(den) & (den != 0.0)
        step = np.where(ok, -2.0 * f2 / np.where(ok, den, 1.0), 0.0)
        step = np.where(np.isfinite(step), step, 0.0)
        znew = z2 + step
        feval = np.asarray(func(np.where(active, znew, z2)), dtype=complex)
        fnew = np.where(active, feval, f2)
        improved = np.abs(fnew) <= np.abs(f2)
        take = active & ok & improved
        z0 = np.where(take, z1, z0)
        f0 = np.where(take, f1, f0)
        z1 = np.where(take, z2, z1)
        f1 = np.where(take, f2, f1)
        z2 = np.where(take, znew, z2)
        f2 = np.where(take, fnew, f2)
        done = np.abs(step) <= tol * np.maximum(1.0, np.abs(z2))
        active &= take & ~done

    return z2, f2


# ---------------------------------------------------------------------------
# argument-principle disk counting and root recovery
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiskCount:
    """Roots of an analytic function inside a disk.

    Attributes
    ----------
    center, radius:
        The certified circle (after any retries).
    winding:
        Winding number of the function around the circle = number of
        roots inside, counted with multiplicity.
    roots:
        Distinct root positions (empty when ``winding == 0`` or when
        the count exceeds the recovery cap).
    multiplicities:
        Multiplicity per entry of ``roots`` (cluster sizes).
    residuals:
        ``|func|`` at each reported root.
    retries:
        Number of radius nudges performed.
    flags:
        Diagnostics, e.g. ``count-not-recovered`` when only the winding
        is available.
    """

    center: complex
    radius: float
    winding: int
    roots: np.ndarray
    multiplicities: np.ndarray
    residuals: np.ndarray
    retries: int
    flags: tuple[str, ...]


def _newton_identities(power_sums: np.ndarray) -> np.ndarray:
    """Elementary symmetric functions e_1..e_W from power sums p_1..p_W."""
    count = power_sums.size
    elem = np.zeros(count + 1, dtype=complex)
    elem[0] = 1.0
    for k in range(1, count + 1):
        acc = 0.0 + 0.0j
        for i in range(1, k + 1):
            acc += (-1) ** (i - 1) * elem[k - i] * power_sums[i - 1]
        elem[k] = acc / k
    return elem[1:]


def _circle_moments(
    values: np.ndarray, radius: float, count: int
) -> tuple[float, np.ndarray, float, float]:
    """Winding number and root power sums from boundary samples.

    ``values`` are the function values at ``n`` equispaced points
    ``center + radius * exp(2*pi*i*j/n)``.  Returns ``(winding_float,
    power_sums, max_step, noise_est)`` where ``power_sums[k-1]``
    approximates the sum of the k-th powers of the roots *relative to
    the center*, ``max_step`` is the largest phase increment between
    neighbouring samples (a resolution diagnostic), and ``noise_est``
    estimates the per-sample relative accuracy of the boundary data.

    The power sums come from integrating z^k d(log f) by parts: with
    the unwrapped logarithm L(theta) along the circle and its periodic
    part Ltilde = L - i * W * theta,

        p_k = -(k r^k / n) * sum_j Ltilde_j exp(i k theta_j),

    a trapezoid rule that converges geometrically in ``n`` for roots
    away from the circle.

    The Fourier coefficients of Ltilde decay geometrically for roots
    inside the circle, so the flat floor they reach at high frequency
    measures the noise in log f — which is exactly the relative noise
    of f itself.  Functions produced by cancellation-heavy pipelines
    carry far more relative noise than the integration tolerance
    suggests, and the cluster merging downstream needs to know.
    """
    n = values.size
    steps = np.angle(np.roll(values, -1) / values)
    max_step = float(np.max(np.abs(steps)))
    winding_float = float(np.sum(steps) / (2.0 * np.pi))
    winding = int(round(winding_float))
    power_sums = np.zeros(max(count, 0), dtype=complex)
    noise_est = 0.0
    if count > 0:
        theta = 2.0 * np.pi * np.arange(n) / n
        unwrapped = np.angle(values[0]) + np.concatenate(([0.0], np.cumsum(steps[:-1])))
        ltilde = np.log(np.abs(values)) + 1j * (unwrapped - winding * theta)
        for k in range(1, count + 1):
            coeff = np.mean(ltilde * np.exp(1j * k * theta))
            power_sums[k - 1] = -(k * radius**k) * coeff
        spectrum_hf = np.fft.fft(ltilde) / n
        band = spectrum_hf[n // 3 : (2 * n) // 3]
        noise_est = float(np.sqrt(np.mean(np.abs(band) ** 2) * n))
    return winding_float, power_sums, max_step, noise_est


#: Assumed relative accuracy of the boundary data entering the contour
#: moments; sets the scale on which a multiple root's recovered
#: candidates scatter.
NOISE_REL = 1e-11

#: Safety factor on the noise-splitting scale used when merging.
MERGE_SAFETY = 2.5


def _noise_split(radius: float, m: int, noise_rel: float) -> float:
    """Scatter diameter of an order-m root recovered from noisy moments.

    Perturbing the moment data of ``u^m`` by a relative ``eps`` moves
    the recovered roots onto a ring of radius ``~ radius * eps**(1/m)``
    around the true position, so candidates within that distance of
    each other carry no evidence of being distinct roots.
    """
    return MERGE_SAFETY * radius * noise_rel ** (1.0 / m)


def _cluster_roots(
    roots: np.ndarray, cluster_tol: float, radius: float,
    noise_rel: float = NOISE_REL,
) -> tuple[np.ndarray, np.ndarray]:
    """Merge nearly coincident roots into (centroid, multiplicity) pairs.

    A first pass groups candidates within ``cluster_tol``.  A second,
    multiplicity-aware pass then merges groups whose combined diameter
    stays below the order-m noise-splitting scale: an exactly multiple
    root passes through the moment recovery as a tight constellation
    much wider than ``cluster_tol`` (width ``radius * noise^(1/m)``),
    while genuinely distinct roots keep a larger separation.  The
    centroid of a merged group is moment-accurate even though its
    members individually are not.
    """
    order = np.lexsort((roots.imag, roots.real))
    groups: list[list[complex]] = []
    for pt in roots[order]:
        placed = False
        for group in groups:
            if abs(pt - np.mean(group)) <= cluster_tol:
                group.append(pt)
                placed = True
                break
        if not placed:
            groups.append([pt])

    # An order-m root scatters into a shell of singletons none of whose
    # pairs pass the order-2 threshold, so merging must consider whole
    # subsets, not just pairs.  The median-distance guard admits such
    # shells (all pairwise distances comparable) while refusing to
    # swallow a genuinely distinct root sitting far outside the shell.
    changed = True
    while changed and len(groups) > 1:
        changed = False
        candidates: list[tuple[float, tuple[int, ...]]] = []
        for k in range(2, len(groups) + 1):
            for idxs in combinations(range(len(groups)), k):
                pts = [p for i in idxs for p in groups[i]]
                dists = [abs(x - y) for x, y in combinations(pts, 2)]
                diam = max(dists)
                if diam > max(cluster_tol, _noise_split(radius, len(pts), noise_rel)):
                    continue
                if len(pts) > 2 and diam > 3.0 * float(np.median(dists)):
                    continue
                candidates.append((diam, idxs))
        if candidates:
            _, idxs = min(candidates)
            merged_group = [p for i in idxs for p in groups[i]]
            groups = [g for i, g in enumerate(groups) if i not in idxs]
            groups.append(merged_group)
            changed = True

    centers = np.array([np.mean(g) for g in groups], dtype=complex)
    mults = np.array([len(g) for g in groups], dtype=int)
    return centers, mults


def disk_roots(
    func: Callable[[np.ndarray], np.ndarray],
    center: complex,
    radius: float,
    *,
    boundary_points: int = 512,
    cluster_tol: float = 1e-4,
    refine_tol: float = 1e-12,
    value_scale: float | None = None,
    recover: bool = True,
    retry_factors: Sequence[float] = RETRY_FACTORS,
    noise_rel: float = NOISE_REL,
    noise_abs: float = 0.0,
) -> DiskCount:
    """Count and locate the roots of an analytic function in a disk.

    The winding number of ``func`` along a ``boundary_points``-point
    circle gives the root count; contour moments plus Newton's
    identities reconstruct the root positions when the count is at most
    ``MAX_RECOVERY_COUNT``.  Roots closer together than ``cluster_tol``
    — or than the multiplicity-dependent scatter scale implied by the
    boundary-data noise — are merged into one root with multiplicity;
    isolated simple roots are polished with Muller iteration.

    The noise scale combines three sources: the ``noise_rel`` floor,
    a spectral estimate of white noise in the boundary data, and the
    caller-supplied absolute error ``noise_abs`` of the evaluated
    function.  The last matters when the function is produced by a
    cancellation-heavy pipeline: its error is smooth along the circle
    (invisible to the spectral estimate) and can dwarf the nominal
    relative accuracy once the boundary values themselves are small.

    The circle must separate cleanly from the roots: if the winding
    fails to close, the phase is under-resolved, the boundary values
    dip to zero, or a recovered root sits within ``BOUNDARY_MARGIN`` of
    the circle, the radius is nudged (up to three retries) before the
    search fails.
    """
    if radius <= 0.0 or not np.isfinite(radius):
        raise RootfindError("disk radius must be positive and finite")
    center = complex(center)
    failures: list[str] = []

    for attempt, factor in enumerate(retry_factors):
        r = radius * factor
        theta = 2.0 * np.pi * np.arange(boundary_points) / boundary_points
        ring = center + r * np.exp(1j * theta)
        values = np.asarray(func(ring), dtype=complex)
        if not np.all(np.isfinite(values)):
            failures.append("non-finite boundary value at radius %.6g" % r)
            continue
        if np.any(values == 0.0):
            failures.append("exact zero on boundary at radius %.6g" % r)
            continue
        scale = value_scale if value_scale is not None else float(np.median(np.abs(values)))
        if scale <= 0.0:
            failures.append("degenerate value scale at radius %.6g" % r)
            continue
        if float(np.min(np.abs(values))) < 1e-10 * scale:
            failures.append("boundary value near zero at radius %.6g" % r)
            continue

        want = MAX_RECOVERY_COUNT if recover else 0
        winding_float, power_sums, max_step, _ = _circle_moments(values, r, 0)
        winding = int(round(winding_float))
        if abs(winding_float - winding) > 0.01:
            failures.append(
                "winding did not close (%.4f) at radius %.6g" % (winding_float, r)
            )
            continue
        if max_step > 2.5:
            failures.append("phase under-resolved at radius %.6g" % r)
            continue
        if winding < 0:
            raise RootfindError(
                "negative winding %d: function not analytic in disk" % winding
            )

        nudged = ("radius-nudged",) if attempt > 0 else ()
        if winding == 0:
            return DiskCount(
                center, r, 0,
                np.zeros(0, dtype=complex), np.zeros(0, dtype=int),
                np.zeros(0, dtype=float), attempt, nudged,
            )
        if not recover or winding > want:
            flags = ("count-not-recovered",) if winding > want and recover else ()
            return DiskCount(
                center, r, winding,
                np.zeros(0, dtype=complex), np.zeros(0, dtype=int),
                np.zeros(0, dtype=float), attempt, nudged + flags,
            )

        _, power_sums, _, noise_est = _circle_moments(values, r, winding)
        elem = _newton_identities(power_sums)
        coeffs = np.concatenate(([1.0 + 0.0j], elem * (-1.0) ** np.arange(1, winding + 1)))
        rel_roots = np.roots(coeffs) if winding > 1 else np.array([elem[0]])
        last_attempt = attempt + 1 >= len(retry_factors)
        if np.max(np.abs(rel_roots)) > r - BOUNDARY_MARGIN:
            failures.append("root within margin of boundary at radius %.6g" % r)
            continue
        accuracy_flag: tuple[str, ...] = ()
        if np.max(np.abs(rel_roots)) > SAFE_INTERIOR_FRACTION * r:
            if not last_attempt:
                failures.append("root near boundary fraction at radius %.6g" % r)
                continue
            accuracy_flag = ("near-boundary-accuracy",)

        ring_level = float(np.median(np.abs(values)))
        centers, mults = _cluster_roots(
            center + rel_roots, cluster_tol, r,
            noise_rel=max(noise_rel, 3.0 * noise_est, noise_abs / ring_level),
        )

        simple = mults == 1
        roots = centers.copy()
        if np.any(simple):
            polished, _ = muller_many(
                func, centers[simple], spread=10 * cluster_tol, tol=refine_tol
            )
            inside = np.abs(polished - center) < r - BOUNDARY_MARGIN
            roots[simple] = np.where(inside, polished, centers[simple])
        residuals = np.abs(np.asarray(func(roots), dtype=complex))

        if int(np.sum(mults)) != winding:
            raise RootfindError(
                "winding count %d does not match %d refined root(s)"
                % (winding, int(np.sum(mults)))
            )
        order = np.lexsort((roots.imag, roots.real))
        return DiskCount(
            center, r, winding,
            roots[order], mults[order], residuals[order], attempt,
            nudged + accuracy_flag,
        )

    raise RootfindError(
        "disk root search failed after %d radii: %s"
        % (len(retry_factors), "; ".join(failures))
    )
