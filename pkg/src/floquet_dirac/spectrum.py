"""Band/gap decomposition, eigenvalue location, and resonance search.

The spectrum of the periodic operator on the real axis is the set of
``z`` where some Lyapunov value ``Delta_j(z)`` is real and lies in
``[-1, 1]``.  This module produces that decomposition on a window
(``scan_bands``), locates the periodic and anti-periodic eigenvalues
(roots of ``det(psi(1,z) -/+ I)``) cell by cell (``find_eigenvalues``),
finds real and complex zeros of the discriminant ``rho``
(``find_resonances``), and checks the gap-length sum inequality
(``gap_sum_check``).

Root searches combine three mechanisms and cross-check them:

* bracketed sign changes, refined by batched bisection + secant;
* non-sign-changing minima (the generic double root: every eigenvalue
  of the unperturbed two-channel examples is a contact-order-two zero,
  i.e. a closed gap), confirmed and located through a small
  argument-principle disk around the parabola-vertex estimate;
* an optional full-cell winding count certifying that nothing between
  the scan nodes was missed — a mismatch replaces the cell's roots by
  the disk recovery and flags the cell, never silently.

Double roots are reported with multiplicity 2 rather than dropped: a
double eigenvalue is a zero-length (closed) gap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import lyapunov, monodromy, rootfind
from .potential import PeriodicPotential

__all__ = [
    "RootMatch",
    "EndpointLabel",
    "SpectralReport",
    "EigenvalueList",
    "ResonanceList",
    "scan_bands",
    "find_eigenvalues",
    "find_resonances",
    "gap_sum_check",
    "report_lines",
    "sample_rows",
]

#: Default integration tolerance for root-finding paths (tighter than
#: the plain monodromy default so determinant noise sits near the
#: double-root detection gate).
ROOT_RTOL = 1e-12

#: Coarsest admissible scan step.
MAX_GRID_STEP = np.pi / 200

#: A Lyapunov value counts as real when its imaginary part is below this.
REALITY_TOL = 1e-7

#: Two located roots closer than this are considered the same root.
DEDUPE_TOL = 1e-7

#: Matching distance for endpoint classification.
CLASSIFY_TOL = 1e-6

#: Scan nodes per pi-cell in eigenvalue searches.
NODES_PER_CELL = 64

#: Pre-filter for double-root minima: the vertex value must sit below
#: this fraction of the local scale before a confirming disk is spent.
#: The parabola vertex carries a bias of order (grid step)^2 from slow
#: modulation of the function, which lifts the sampled value of a true
#: double root well above the noise floor; the confirming disk's
#: winding number, not this gate, decides whether a root is present.
MINIMUM_GATE = 1e-5


# ---------------------------------------------------------------------------
# result types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RootMatch:
    """A defining equation satisfied at (or near) a gap endpoint."""

    kind: str        # "periodic" | "antiperiodic" | "resonance"
    root: float      # located root of the defining function
    distance: float  # |endpoint - root|
    residual: float  # |defining function| at the root


@dataclass(frozen=True)
class EndpointLabel:
    """Classification of one gap endpoint.

    ``matches`` lists every defining function that vanishes within
    tolerance at the endpoint (an endpoint may satisfy several
    defining equations at once; all are reported).  ``side`` is
    ``"left"``/``"right"`` of the gap, or ``"window"`` when the gap is
    clipped by the window edge (no classification applies there).
    """

    position: float
    side: str
    matches: tuple[RootMatch, ...]


@dataclass(frozen=True)
class SpectralReport:
    """Band/gap decomposition of a real window.

    ``bands`` are closed intervals, ``gaps`` open ones; together they
    tile the window.  ``multiplicity_profile`` holds, per band, the
    segments ``(start, end, count)`` of constant spectral multiplicity
    (the number of branches inside ``[-1, 1]``).  ``samples_*`` carry
    the scan table (branch-matched Lyapunov values and discriminant)
    for plotting and serialization.
    """

    window: tuple[float, float]
    bands: tuple[tuple[float, float], ...]
    gaps: tuple[tuple[float, float], ...]
    endpoint_labels: tuple[EndpointLabel, ...]
    multiplicity_profile: tuple[tuple[tuple[float, float, int], ...], ...]
    samples_z: np.ndarray
    samples_deltas: np.ndarray
    samples_rho: np.ndarray
    collision_marks: tuple[int, ...]
    grid_step: float
    flags: tuple[str, ...]


@dataclass(frozen=True)
class EigenvalueList:
    """Ordered real roots of one flavour of determinant.

    ``roots``/``multiplicities``/``residuals`` are aligned;
    ``cell_counts`` maps the cell index n (around ``pi*n``) to the root
    count found there with multiplicity.  A cell holding more than
    ``2N`` roots violates the localization expectation and flags the
    list; a certification mismatch (full-cell winding differing from
    the scan) replaces the cell's roots by the disk recovery and is
    flagged as well.
    """

    kind: str
    roots: np.ndarray
    multiplicities: np.ndarray
    residuals: np.ndarray
    n_window: tuple[int, int]
    cell_counts: tuple[tuple[int, int], ...]
    flags: tuple[str, ...]


@dataclass(frozen=True)
class ResonanceList:
    """Zeros of the discriminant rho in a window or disk.

    ``real_roots`` collects zeros on the real axis (double zeros are
    the generic case since rho >= 0 there on gap-free stretches);
    ``complex_roots`` collects strictly complex zeros, which occur in
    conjugate pairs for the Hermitian potential class.
    ``disk_winding`` is the argument-principle count when a disk was
    requested.  ``pairing`` is optionally filled by asymptotic
    matching with ``(n, (j, j'))`` labels.
    """

    region: tuple
    real_roots: np.ndarray
    real_multiplicities: np.ndarray
    real_residuals: np.ndarray
    complex_roots: np.ndarray
    complex_multiplicities: np.ndarray
    complex_residuals: np.ndarray
    disk_winding: int | None
    value_scale: float
    pairing: tuple | None
    flags: tuple[str, ...]

    @property
    def all_roots(self) -> np.ndarray:
        """Real and complex roots in one complex array."""
        return np.concatenate(
            [self.real_roots.astype(complex), self.complex_roots]
        )


# ---------------------------------------------------------------------------
# evaluators
# ---------------------------------------------------------------------------

def _det_evaluator(p: PeriodicPotential, kind: str, rtol: float):
    """Vectorized z -> det(psi(1,z) -/+ I) for the requested flavour."""
    if kind == "periodic":
        shift = -1.0
    elif kind == "antiperiodic":
        shift = 1.0
    else:
        raise ValueError("kind must be 'periodic' or 'antiperiodic', got %r" % kind)
    eye = np.eye(2 * p.n)

    def evaluate(zs):
        zs = np.asarray(zs, dtype=complex).ravel()
        psis = monodromy.psi_many(p, zs, rtol=rtol)
        return np.linalg.det(psis + shift * eye)

    return evaluate


def _rho_noise_abs(p: PeriodicPotential, center: complex, radius: float, rtol: float) -> float:
    """Absolute error scale of the trace-based discriminant on a disk.

    The discriminant is assembled from monodromy traces of size up to
    ``2N exp(N |Im z|)`` with heavy cancellation, so its absolute error
    tracks the trace scale times the integration tolerance rather than
    the (possibly tiny) discriminant value itself.
    """
    return 16.0 * rtol * float(np.exp(2.0 * p.n * (abs(np.imag(center)) + radius)))


def _det_noise_abs(rtol: float, scale: float) -> float:
    """Absolute error scale of a monodromy determinant evaluation."""
    return 50.0 * rtol * max(1.0, scale)


def _rho_evaluator(p: PeriodicPotential, rtol: float):
    """Vectorized z -> rho(z); closed trace form when N = 2."""
    if p.n == 2:
        def evaluate(zs):
            return lyapunov.rho_n2_many(p, np.asarray(zs, dtype=complex).ravel(), rtol=rtol)
    else:
        def evaluate(zs):
            zs = np.asarray(zs, dtype=complex).ravel()
            return np.array([s.rho for s in lyapunov.sample_many(p, zs, rtol=rtol)])
    return evaluate


class _RealAxisFn:
    """Real-argument view of a complex evaluator, tracking Im leakage."""

    def __init__(self, fn):
        self._fn = fn
        self.max_imag = 0.0

    def __call__(self, xs):
        values = np.asarray(self._fn(np.asarray(xs, dtype=float)), dtype=complex)
        if values.size:
            self.max_imag = max(self.max_imag, float(np.max(np.abs(values.imag))))
        return values.real


# ---------------------------------------------------------------------------
# shared scan machinery
# ---------------------------------------------------------------------------

def _sign_change_brackets(xs: np.ndarray, fs: np.ndarray) -> list[tuple[float, float]]:
    out = []
    for i in range(fs.size - 1):
        if fs[i] == 0.0:
            continue
        if fs[i] * fs[i + 1] < 0.0:
            out.append((float(xs[i]), float(xs[i + 1])))
    return out


def _interior_minima(xs: np.ndarray, fs: np.ndarray) -> list[int]:
    """Indices of non-sign-changing local minima of |f|."""
    a = np.abs(fs)
    out = []
    for i in range(1, fs.size - 1):
        if a[i] <= a[i - 1] and a[i] <= a[i + 1]:
            if np.sign(fs[i - 1]) == np.sign(fs[i]) == np.sign(fs[i + 1]) != 0:
                out.append(i)
    return out


def _merge_roots(
    entries: list[tuple[float, int, float]], tol: float = DEDUPE_TOL
) -> list[tuple[float, int, float]]:
    """Deduplicate (position, multiplicity, residual) root entries.

    Entries within ``tol`` of each other describe the same root; the
    one with the larger multiplicity wins (a disk recovery knows the
    multiplicity, a plain bracket does not), ties keep the smaller
    residual.
    """
    entries = sorted(entries)
    merged: list[tuple[float, int, float]] = []
    for pos, mult, res in entries:
        if merged and abs(pos - merged[-1][0]) <= tol:
            ppos, pmult, pres = merged[-1]
            if mult > pmult or (mult == pmult and res < pres):
                merged[-1] = (pos, mult, res)
        else:
            merged.append((pos, mult, res))
    return merged


# ---------------------------------------------------------------------------
# eigenvalues
# ---------------------------------------------------------------------------

def find_eigenvalues(
    p: PeriodicPotential,
    kind: str,
    n_range: tuple[int, int],
    rtol: float = monodromy.DEFAULT_RTOL,
    *,
    nodes_per_cell: int = NODES_PER_CELL,
    certify: bool = True,
) -> EigenvalueList:
    """Real roots of ``det(psi(1,z) -/+ I)`` on a range of pi-cells.

    Every cell ``|z - pi*n| < pi/2`` for ``n_range[0] <= n <=
    n_range[1]`` is scanned for the requested determinant flavour
    (both flavours have roots in cells of either parity, so no cell is
    skipped on parity grounds).  Sign changes are refined by batched
    bisection + secant; non-sign-changing minima are vertex-estimated
    and confirmed by a small argument-principle disk, which also
    supplies the multiplicity.  With ``certify=True`` a full-cell
    winding count verifies the cell total.
    """
    n_lo, n_hi = int(n_range[0]), int(n_range[1])
    if n_hi < n_lo:
        raise ValueError("empty cell range %r" % (n_range,))
    det = _det_evaluator(p, kind, rtol)
    rdet = _RealAxisFn(det)
    two_n = 2 * p.n

    cells = list(range(n_lo, n_hi + 1))
    offsets = np.linspace(-np.pi / 2, np.pi / 2, nodes_per_cell + 1)
    grid = np.concatenate([np.pi * n + offsets for n in cells])
    values = rdet(grid)
    node_h = float(offsets[1] - offsets[0])

    flags: list[str] = []
    per_cell_entries: dict[int, list[tuple[float, int, float]]] = {n: [] for n in cells}
    brackets_lo: list[float] = []
    brackets_hi: list[float] = []
    bracket_cell: list[int] = []
    minima: list[tuple[int, float]] = []  # (cell, vertex estimate)

    for ci, n in enumerate(cells):
        sl = slice(ci * (nodes_per_cell + 1), (ci + 1) * (nodes_per_cell + 1))
        xs, fs = grid[sl], values[sl]
        scale = float(np.max(np.abs(fs)))
        if scale == 0.0:
            flags.append("cell-%d-degenerate" % n)
            continue
        for lo, hi in _sign_change_brackets(xs, fs):
            brackets_lo.append(lo)
            brackets_hi.append(hi)
            bracket_cell.append(n)
        # A node hitting a root exactly defeats both the sign-change and
        # the minimum detectors; send it to the confirming disk, which
        # also supplies its multiplicity.
        for i in np.nonzero(fs == 0.0)[0]:
            minima.append((n, float(xs[i])))
        for i in _interior_minima(xs, fs):
            vertex = rootfind.quadratic_vertex(xs[i - 1 : i + 2], np.abs(fs[i - 1 : i + 2]))
            minima.append((n, vertex))

    if brackets_lo:
        roots = rootfind.bisect_secant_many(
            rdet, np.array(brackets_lo), np.array(brackets_hi), xtol=1e-11
        )
        residuals = np.abs(np.asarray(det(roots)))
        for pos, res, n in zip(roots, residuals, bracket_cell):
            per_cell_entries[n].append((float(pos), 1, float(res)))

    cell_scale = {
        n: float(
            np.max(
                np.abs(values[ci * (nodes_per_cell + 1) : (ci + 1) * (nodes_per_cell + 1)])
            )
        )
        for ci, n in enumerate(cells)
    }
    if minima:
        vertex_vals = np.abs(rdet(np.array([v for _, v in minima])))
        for (n, vertex), val in zip(minima, vertex_vals):
            if val > MINIMUM_GATE * max(cell_scale[n], 1e-300):
                continue
            try:
                disk = rootfind.disk_roots(
                    det, vertex + 0j, 2.5 * node_h, cluster_tol=1e-5,
                    value_scale=cell_scale[n], boundary_points=256,
                    noise_abs=_det_noise_abs(rtol, cell_scale[n]),
                )
            except rootfind.RootfindError:
                flags.append("cell-%d-minimum-unconfirmed" % n)
                continue
            for root, mult, res in zip(disk.roots, disk.multiplicities, disk.residuals):
                if abs(root.imag) > 1e-8 * max(1.0, abs(root.real)):
                    flags.append("cell-%d-complex-root" % n)
                    continue
                per_cell_entries[n].append((float(root.real), int(mult), float(res)))

    if certify:
        # Counting is integer-robust, so the certification ring can run
        # at a much looser integration tolerance than position recovery.
        det_count = _det_evaluator(p, kind, max(rtol, 1e-9))
        for n in cells:
            if cell_scale.get(n, 0.0) == 0.0:
                continue
            merged = _merge_roots(per_cell_entries[n])
            found = sum(m for _, m, _ in merged)
            try:
                count = rootfind.disk_roots(
                    det_count, np.pi * n + 0j, np.pi / 2, recover=False,
                    value_scale=cell_scale[n], boundary_points=256,
                ).winding
            except rootfind.RootfindError:
                flags.append("cell-%d-uncertified" % n)
                continue
            if count != found:
                flags.append("cell-%d-recount-%d-vs-%d" % (n, count, found))
                try:
                    disk = rootfind.disk_roots(
                        det, np.pi * n + 0j, np.pi / 2, cluster_tol=1e-4,
                        value_scale=cell_scale[n],
                        noise_abs=_det_noise_abs(rtol, cell_scale[n]),
                    )
                except rootfind.RootfindError:
                    flags.append("cell-%d-recovery-failed" % n)
                    continue
                entries = []
                for root, mult, res in zip(disk.roots, disk.multiplicities, disk.residuals):
                    if abs(root.imag) > 1e-8 * max(1.0, abs(root.real)):
                        flags.append("cell-%d-complex-root" % n)
                        continue
                    entries.append((float(root.real), int(mult), float(res)))
                per_cell_entries[n] = entries

    all_entries: list[tuple[float, int, float]] = []
    cell_counts: list[tuple[int, int]] = []
    for n in cells:
        merged = _merge_roots(per_cell_entries[n])
        count = sum(m for _, m, _ in merged)
        cell_counts.append((n, count))
        if count > two_n:
            flags.append("cell-%d-overfull" % n)
        all_entries.extend(merged)

    merged_all = _merge_roots(all_entries)
    if rdet.max_imag > 1e-8:
        flags.append("imaginary-part-defect")

    roots = np.array([e[0] for e in merged_all])
    mults = np.array([e[1] for e in merged_all], dtype=int)
    residuals = np.array([e[2] for e in merged_all])
    return EigenvalueList(
        kind=kind,
        roots=roots,
        multiplicities=mults,
        residuals=residuals,
        n_window=(n_lo, n_hi),
        cell_counts=tuple(cell_counts),
        flags=tuple(dict.fromkeys(flags)),
    )


# ---------------------------------------------------------------------------
# resonances
# ---------------------------------------------------------------------------

def find_resonances(
    p: PeriodicPotential,
    *,
    window: tuple[float, float] | None = None,
    disk: tuple[complex, float] | None = None,
    rtol: float = ROOT_RTOL,
    grid_step: float = np.pi / 200,
    cluster_tol: float = 1e-4,
) -> ResonanceList:
    """Zeros of the discriminant rho in a real window or a disk.

    Window mode scans rho on the real axis: sign changes are bisected,
    and non-sign-changing minima (rho >= 0 makes every double zero a
    minimum) are confirmed through a small argument-principle disk
    around the vertex estimate.  Disk mode counts roots by the winding
    number on a 512-point circle and recovers their positions from
    contour moments, polishing simple ones by Muller iteration.
    """
    if (window is None) == (disk is None):
        raise ValueError("provide exactly one of window= or disk=")
    if p.n == 1:
        region = ("window", *window) if window else ("disk", *disk)
        return ResonanceList(
            region=region,
            real_roots=np.zeros(0), real_multiplicities=np.zeros(0, dtype=int),
            real_residuals=np.zeros(0),
            complex_roots=np.zeros(0, dtype=complex),
            complex_multiplicities=np.zeros(0, dtype=int),
            complex_residuals=np.zeros(0),
            disk_winding=None if window else 0,
            value_scale=1.0,
            pairing=None,
            flags=("single-branch-no-resonances",),
        )

    rho = _rho_evaluator(p, rtol)
    flags: list[str] = []

    if disk is not None:
        center, radius = complex(disk[0]), float(disk[1])
        result = rootfind.disk_roots(
            rho, center, radius, cluster_tol=cluster_tol,
            noise_abs=_rho_noise_abs(p, center, radius, rtol),
        )
        flags.extend(result.flags)
        scale = _ring_scale(rho, result.center, result.radius)
        real_mask = np.abs(result.roots.imag) <= REALITY_TOL
        region = ("disk", center, radius)
        return _assemble_resonances(
            region, result.roots, result.multiplicities, result.residuals,
            real_mask, result.winding, scale, flags,
        )

    a, b = float(window[0]), float(window[1])
    if not b > a:
        raise ValueError("window must satisfy a < b")
    if grid_step > MAX_GRID_STEP * (1 + 1e-9):
        raise ValueError("grid step %.3g exceeds the %.3g limit" % (grid_step, MAX_GRID_STEP))
    rreal = _RealAxisFn(rho)
    count = max(int(np.ceil((b - a) / grid_step)), 8)
    xs = np.linspace(a, b, count + 1)
    fs = rreal(xs)
    scale = float(np.max(np.abs(fs)))
    entries: list[tuple[complex, int, float]] = []

    if scale > 0.0:
        brackets = _sign_change_brackets(xs, fs)
        if brackets:
            lo = np.array([x for x, _ in brackets])
            hi = np.array([x for _, x in brackets])
            roots = rootfind.bisect_secant_many(rreal, lo, hi, xtol=1e-11)
            residuals = np.abs(np.asarray(rho(roots)))
            for pos, res in zip(roots, residuals):
                entries.append((complex(pos), 1, float(res)))
        minima = _interior_minima(xs, fs)
        if minima:
            vertices = np.array(
                [
                    rootfind.quadratic_vertex(xs[i - 1 : i + 2], np.abs(fs[i - 1 : i + 2]))
                    for i in minima
                ]
            )
            vertex_vals = np.abs(rreal(vertices))
            h = float(xs[1] - xs[0])
            for vertex, val in zip(vertices, vertex_vals):
                if val > MINIMUM_GATE * scale:
                    continue
                try:
                    result = rootfind.disk_roots(
                        rho, vertex + 0j, 2.5 * h, cluster_tol=cluster_tol,
                        value_scale=scale,
                        noise_abs=_rho_noise_abs(p, vertex, 2.5 * h, rtol),
                    )
                except rootfind.RootfindError:
                    flags.append("minimum-unconfirmed-near-%.6f" % vertex)
                    continue
                for root, mult, res in zip(
                    result.roots, result.multiplicities, result.residuals
                ):
                    entries.append((complex(root), int(mult), float(res)))
    else:
        flags.append("identically-zero-on-window")

    entries = _merge_complex_entries(entries)
    roots = np.array([e[0] for e in entries], dtype=complex)
    mults = np.array([e[1] for e in entries], dtype=int)
    residuals = np.array([e[2] for e in entries])
    real_mask = np.abs(roots.imag) <= REALITY_TOL if roots.size else np.zeros(0, dtype=bool)
    keep = (
        (roots.real >= a - DEDUPE_TOL) & (roots.real <= b + DEDUPE_TOL)
    ) if roots.size else np.zeros(0, dtype=bool)
    return _assemble_resonances(
        ("window", a, b),
        roots[keep], mults[keep], residuals[keep], real_mask[keep],
        None, scale, flags,
    )


def _ring_scale(rho, center: complex, radius: float) -> float:
    theta = 2.0 * np.pi * np.arange(64) / 64
    return float(np.max(np.abs(rho(center + radius * np.exp(1j * theta)))))


def _merge_complex_entries(
    entries: list[tuple[complex, int, float]], tol: float = DEDUPE_TOL
) -> list[tuple[complex, int, float]]:
    merged: list[tuple[complex, int, float]] = []
    for pos, mult, res in sorted(entries, key=lambda e: (e[0].real, e[0].imag)):
        if merged and abs(pos - merged[-1][0]) <= tol:
            ppos, pmult, pres = merged[-1]
            if mult > pmult or (mult == pmult and res < pres):
                merged[-1] = (pos, mult, res)
        else:
            merged.append((pos, mult, res))
    return merged


def _assemble_resonances(
    region, roots, mults, residuals, real_mask, winding, scale, flags
) -> ResonanceList:
    roots = np.asarray(roots, dtype=complex)
    real = roots[real_mask].real if roots.size else np.zeros(0)
    cplx = roots[~real_mask] if roots.size else np.zeros(0, dtype=complex)
    if cplx.size:
        # Hermitian potentials force conjugate-paired complex zeros.
        paired = np.zeros(cplx.size, dtype=bool)
        for i, r in enumerate(cplx):
            if paired[i]:
                continue
            d = np.abs(cplx - np.conj(r))
            j = int(np.argmin(d))
            if d[j] <= 1e-7 * max(1.0, abs(r)):
                paired[i] = paired[j] = True
        if not np.all(paired):
            flags = list(flags) + ["unpaired-complex-root"]
    return ResonanceList(
        region=region,
        real_roots=real,
        real_multiplicities=np.asarray(mults)[real_mask] if roots.size else np.zeros(0, dtype=int),
        real_residuals=np.asarray(residuals)[real_mask] if roots.size else np.zeros(0),
        complex_roots=cplx,
        complex_multiplicities=np.asarray(mults)[~real_mask] if roots.size else np.zeros(0, dtype=int),
        complex_residuals=np.asarray(residuals)[~real_mask] if roots.size else np.zeros(0),
        disk_winding=winding,
        value_scale=scale,
        pairing=None,
        flags=tuple(dict.fromkeys(flags)),
    )


# ---------------------------------------------------------------------------
# band scan
# ---------------------------------------------------------------------------

def _spectral_mask(deltas: np.ndarray) -> np.ndarray:
    """Columns of a (N, M) branch table that touch the spectrum."""
    real = np.abs(deltas.imag) <= REALITY_TOL
    inside = np.abs(deltas.real) <= 1.0
    return np.any(real & inside, axis=0)


def _multiplicity(deltas: np.ndarray) -> np.ndarray:
    real = np.abs(deltas.imag) <= REALITY_TOL
    inside = np.abs(deltas.real) <= 1.0
    return np.sum(real & inside, axis=0)


def scan_bands(
    p: PeriodicPotential,
    window: tuple[float, float],
    grid_step: float = MAX_GRID_STEP,
    rtol: float = monodromy.DEFAULT_RTOL,
    *,
    classify: bool = True,
) -> SpectralReport:
    """Band/gap decomposition of the spectrum on a real window.

    A branch-matched scan marks each node spectral when some Lyapunov
    value is real (within tolerance) inside ``[-1, 1]``; boundaries
    between spectral and non-spectral nodes are refined by bisection
    on that indicator to width 1e-9 and then classified by matching
    nearby periodic/anti-periodic eigenvalues and real resonances.
    Bands narrower than the grid step can escape the scan; halving the
    step moves detected boundaries by less than the step (stability
    property verified in the test suite).
    """
    a, b = float(window[0]), float(window[1])
    if not b > a:
        raise ValueError("window must satisfy a < b")
    if grid_step > MAX_GRID_STEP * (1 + 1e-9):
        raise ValueError("grid step %.3g exceeds the %.3g limit" % (grid_step, MAX_GRID_STEP))

    count = max(int(np.ceil((b - a) / grid_step)), 4)
    grid = np.linspace(a, b, count + 1)
    track = lyapunov.track(p, grid, rtol=rtol)
    deltas = track.branch_values
    rho_vals = np.empty(grid.size, dtype=complex)
    for i in range(grid.size):
        col = deltas[:, i]
        rho_vals[i] = lyapunov._rho_product(col)

    spectral = _spectral_mask(deltas)
    counts = _multiplicity(deltas)
    flags: list[str] = []

    def indicator(xs: np.ndarray) -> np.ndarray:
        samples = lyapunov.sample_many(p, np.asarray(xs, dtype=complex), rtol=rtol)
        return np.array([
            bool(np.any((np.abs(s.deltas.imag) <= REALITY_TOL)
                        & (np.abs(s.deltas.real) <= 1.0)))
            for s in samples
        ])

    flips = np.nonzero(spectral[:-1] != spectral[1:])[0]
    if flips.size:
        lo = grid[flips]
        hi = grid[flips + 1]
        edges = rootfind.bisect_predicate_many(indicator, lo, hi, xtol=1e-9)
    else:
        edges = np.zeros(0)

    # Assemble maximal spectral runs into bands.
    bands: list[tuple[float, float]] = []
    i = 0
    edge_for_flip = {int(f): float(e) for f, e in zip(flips, edges)}
    while i <= count:
        if not spectral[i]:
            i += 1
            continue
        start = a if i == 0 else edge_for_flip[i - 1]
        j = i
        while j + 1 <= count and spectral[j + 1]:
            j += 1
        end = b if j == count else edge_for_flip[j]
        bands.append((start, end))
        i = j + 1

    gaps: list[tuple[float, float]] = []
    cursor = a
    for start, end in bands:
        if start > cursor + 1e-12:
            gaps.append((cursor, start))
        cursor = end
    if cursor < b - 1e-12:
        gaps.append((cursor, b))

    # Multiplicity profile: constant-count segments inside each band.
    profile: list[tuple[tuple[float, float, int], ...]] = []
    for start, end in bands:
        inside = np.nonzero((grid >= start - 1e-12) & (grid <= end + 1e-12) & spectral)[0]
        if inside.size == 0:
            mid_count = int(
                _multiplicity(
                    np.array([lyapunov.sample(p, 0.5 * (start + end), rtol=rtol).deltas]).T
                )[0]
            )
            profile.append(((start, end, mid_count),))
            continue
        segs: list[tuple[float, float, int]] = []
        seg_start = start
        cur = int(counts[inside[0]])
        for prev_idx, idx in zip(inside[:-1], inside[1:]):
            nxt = int(counts[idx])
            if nxt != cur:
                boundary = _refine_count_boundary(
                    p, grid[prev_idx], grid[idx], cur, rtol
                )
                segs.append((seg_start, boundary, cur))
                seg_start = boundary
                cur = nxt
        segs.append((seg_start, end, cur))
        profile.append(tuple(segs))

    # Endpoint classification.
    labels: list[EndpointLabel] = []
    if classify:
        for g_start, g_end in gaps:
            for pos, side in ((g_start, "left"), (g_end, "right")):
                if abs(pos - a) <= 1e-12 or abs(pos - b) <= 1e-12:
                    labels.append(EndpointLabel(pos, "window", ()))
                    continue
                matches = _classify_endpoint(p, pos, rtol)
                if not matches:
                    flags.append("unclassified-endpoint-%.9f" % pos)
                labels.append(EndpointLabel(pos, side, matches))

    return SpectralReport(
        window=(a, b),
        bands=tuple(bands),
        gaps=tuple(gaps),
        endpoint_labels=tuple(labels),
        multiplicity_profile=tuple(profile),
        samples_z=grid,
        samples_deltas=deltas,
        samples_rho=rho_vals,
        collision_marks=track.collision_marks,
        grid_step=float(grid[1] - grid[0]),
        flags=tuple(dict.fromkeys(flags)),
    )


def _refine_count_boundary(
    p: PeriodicPotential, lo: float, hi: float, left_count: int, rtol: float
) -> float:
    def predicate(xs: np.ndarray) -> np.ndarray:
        samples = lyapunov.sample_many(p, np.asarray(xs, dtype=complex), rtol=rtol)
        return np.array(
            [int(_multiplicity(s.deltas[:, None])[0]) == left_count for s in samples]
        )

    try:
        return float(
            rootfind.bisect_predicate_many(
                predicate, np.array([lo]), np.array([hi]), xtol=1e-9
            )[0]
        )
    except rootfind.RootfindError:
        return 0.5 * (lo + hi)


def _classify_endpoint(
    p: PeriodicPotential, pos: float, rtol: float
) -> tuple[RootMatch, ...]:
    n_cell = int(round(pos / np.pi))
    matches: list[RootMatch] = []
    for kind in ("periodic", "antiperiodic"):
        found = find_eigenvalues(p, kind, (n_cell, n_cell), rtol=rtol, certify=False)
        for root, res in zip(found.roots, found.residuals):
            if abs(root - pos) <= CLASSIFY_TOL:
                matches.append(RootMatch(kind, float(root), abs(root - pos), float(res)))
    if p.n >= 2:
        res_list = find_resonances(
            p, window=(pos - 0.05, pos + 0.05), rtol=max(rtol, ROOT_RTOL)
        )
        for root, res in zip(res_list.real_roots, res_list.real_residuals):
            if abs(root - pos) <= CLASSIFY_TOL:
                matches.append(RootMatch("resonance", float(root), abs(root - pos), float(res)))
    return tuple(matches)


# ---------------------------------------------------------------------------
# gap sum inequality
# ---------------------------------------------------------------------------

def gap_sum_check(report: SpectralReport, p: PeriodicPotential) -> tuple[float, float, bool]:
    """Windowed check of the gap-length sum inequality.

    Returns ``(lhs, rhs, ok)`` with ``lhs = sum |g|^2`` over the gaps
    found in the window and ``rhs = 4 ||V||^2 / N``; the windowed
    left-hand side underestimates the full sum, so the inequality
    direction is preserved.
    """
    lhs = float(sum((end - start) ** 2 for start, end in report.gaps))
    rhs = float(4.0 * p.norm2 / p.n)
    return lhs, rhs, lhs <= rhs + 1e-12


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def report_lines(report: SpectralReport) -> list[str]:
    """Structured text rendering of a spectral report (deterministic)."""
    out = ["window %r %r" % report.window]
    for i, (s, e) in enumerate(report.bands):
        out.append("band %d %r %r" % (i, s, e))
    for i, (s, e) in enumerate(report.gaps):
        out.append("gap %d %r %r" % (i, s, e))
    for lab in report.endpoint_labels:
        if lab.side == "window":
            names = "window-edge"
        else:
            names = ",".join(
                "%s:%r:%r" % (m.kind, m.root, m.residual) for m in lab.matches
            ) or "unclassified"
        out.append("endpoint %r %s %s" % (lab.position, lab.side, names))
    for bi, segs in enumerate(report.multiplicity_profile):
        for s, e, c in segs:
            out.append("profile %d %r %r %d" % (bi, s, e, c))
    for flag in report.flags:
        out.append("flag %s" % flag)
    return out


def sample_rows(report: SpectralReport) -> list[list[str]]:
    """CSV rows (z, Delta_1..Delta_N, rho) of the scan table."""
    n = report.samples_deltas.shape[0]
    header = ["z"] + ["delta_%d_re" % (j + 1) for j in range(n)] + [
        "delta_%d_im" % (j + 1) for j in range(n)
    ] + ["rho_re", "rho_im"]
    rows = [header]
    for i, z in enumerate(report.samples_z):
        col = report.samples_deltas[:, i]
        rows.append(
            [repr(float(z.real))]
            + [repr(float(v.real)) for v in col]
            + [repr(float(v.imag)) for v in col]
            + [repr(float(report.samples_rho[i].real)), repr(float(report.samples_rho[i].imag))]
        )
    return rows
