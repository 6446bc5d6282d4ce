"""Two-channel constant-mass case study with a Gaussian coupling.

The block potential ``v = -[[a, tau b_nu], [tau b_nu, 0]]`` decouples at
``tau = 0`` into a constant-mass channel (Lyapunov value ``cos k(z)`` with
``k = sqrt(z^2 - a^2)``) and a free channel (``cos z``), so every spectral
object has a closed form (:func:`unperturbed_reference`).  Each cell ``n``
carries a double resonance at ``r_n0 = pi n + a^2/(4 pi n)``; switching on
the coupling splits it into a pair ``r_n0 +- tau(sqrt(R_n) + o(1))`` that
is a real gap or a complex-conjugate pair according to the sign of ``R_n``
— negative exactly when ``n < a/(2 pi)``.  :func:`bifurcation_sweep`
measures that splitting with certified disk counts, classifies each pair,
fits the slope, and cross-checks real pairs against the band scan;
:func:`eigenvalue_stability` tracks how the periodic and antiperiodic
roots drift from their anchors as ``tau`` grows.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import lyapunov, monodromy, potential, rootfind, spectrum
from .potential import PeriodicPotential

__all__ = [
    "CaseStudyError",
    "CaseStudyConfig",
    "UnperturbedReference",
    "BifurcationRecord",
    "StabilityRow",
    "StabilityTable",
    "unperturbed_reference",
    "reference_defects",
    "bifurcation_sweep",
    "eigenvalue_stability",
    "sweep_csv_rows",
    "trajectory_csv_rows",
]

TAU_LIMIT = 0.2
NU_RANGE = (0.02, 0.2)
N_MAX_LIMIT = 12
# a/2pi sitting on an integer degenerates the unperturbed resonance pattern;
# keep a guard distance.
MASS_MARGIN = 1e-3
# A pair is a complex pair only if its members are conjugate to this accuracy.
CONJUGATE_TOL = 1e-7
# tau = 0 must reproduce the closed-form resonance to this accuracy.
ANCHOR_TOL = 1e-8
# Band-scan cross-check shrinks the candidate gap by this much at each end.
GAP_ENDPOINT_TOL = 1e-6
# Disk radius cap for the per-cell resonance disks.
KAPPA_CAP = 0.3


class CaseStudyError(ValueError):
    """Invalid case-study configuration or sweep precondition."""


@dataclass(frozen=True)
class CaseStudyConfig:
    """Parameters of one bifurcation sweep.

    ``a`` is the constant mass (with ``a/2pi`` at least ``MASS_MARGIN``
    away from the integers), ``tau_values`` the coupling strengths (the
    anchor ``0`` must be present, magnitudes at most ``TAU_LIMIT``),
    ``nu`` the Gaussian bump width, and ``n_max`` the largest cell index
    swept.
    """

    a: float
    tau_values: tuple[float, ...]
    nu: float = 0.05
    n_max: int = 3

    def __post_init__(self):
        if not (self.a > 0 and np.isfinite(self.a)):
            raise CaseStudyError(f"mass a must be positive, got {self.a}")
        ratio = self.a / (2.0 * np.pi)
        if abs(ratio - round(ratio)) < MASS_MARGIN:
            raise CaseStudyError(
                f"a/2pi = {ratio:.6f} sits within {MASS_MARGIN:g} of an "
                "integer; the unperturbed resonances degenerate there"
            )
        taus = tuple(sorted(float(t) for t in self.tau_values))
        if not taus or 0.0 not in taus:
            raise CaseStudyError("tau_values must include 0 as the anchor")
        if any(abs(t) > TAU_LIMIT for t in taus):
            raise CaseStudyError(f"|tau| must stay at most {TAU_LIMIT:g}")
        if len(set(taus)) != len(taus):
            raise CaseStudyError("tau_values must be distinct")
        object.__setattr__(self, "tau_values", taus)
        lo, hi = NU_RANGE
        if not (lo <= self.nu <= hi):
            raise CaseStudyError(f"bump width nu must lie in [{lo:g}, {hi:g}]")
        if not (1 <= int(self.n_max) <= N_MAX_LIMIT):
            raise CaseStudyError(f"n_max must lie in 1..{N_MAX_LIMIT}")
        object.__setattr__(self, "n_max", int(self.n_max))

    def potential_at(self, tau: float) -> PeriodicPotential:
        """The family member at coupling ``tau``."""
        return potential.example_4x4(self.a, tau, self.nu)


# ---------------------------------------------------------------------------
# closed forms at tau = 0


@dataclass(frozen=True)
class UnperturbedReference:
    """Closed spectral forms of the decoupled two-channel operator.

    All callables accept scalars or arrays.  They are built from
    ``k(z) = sqrt(z^2 - a^2)`` but depend on it only through even
    functions, so the branch of the square root never matters.
    """

    a: float

    def k(self, z):
        """Momentum of the massive channel (principal square root)."""
        return np.sqrt(np.asarray(z, dtype=np.complex128) ** 2 - self.a**2)

    def delta1(self, z):
        """Lyapunov value of the massive channel, cos k(z)."""
        return np.cos(self.k(z))

    def delta2(self, z):
        """Lyapunov value of the free channel, cos z."""
        return np.cos(np.asarray(z, dtype=np.complex128))

    def rho(self, z):
        """Branch discriminant (cos k - cos z)^2."""
        return (self.delta1(z) - self.delta2(z)) ** 2

    def trace(self, m: int, z):
        """Trace of the m-period monodromy, 2(cos mk + cos mz)."""
        zc = np.asarray(z, dtype=np.complex128)
        return 2.0 * (np.cos(m * self.k(zc)) + np.cos(m * zc))

    def det_periodic(self, z):
        """det(psi - I) = 4(cos k - 1)(cos z - 1)."""
        return 4.0 * (self.delta1(z) - 1.0) * (self.delta2(z) - 1.0)

    def det_antiperiodic(self, z):
        """det(psi + I) = 4(cos k + 1)(cos z + 1)."""
        return 4.0 * (self.delta1(z) + 1.0) * (self.delta2(z) + 1.0)

    def phi(self, z):
        """cos k cos z + (z/k) sin z sin k, entire via sin(k)/k."""
        zc = np.asarray(z, dtype=np.complex128)
        k = self.k(zc)
        return np.cos(k) * np.cos(zc) + zc * np.sin(zc) * np.sinc(k / np.pi)

    def resonance(self, n: int) -> float:
        """Exact double zero of rho in cell n: pi n + a^2/(4 pi n)."""
        if int(n) == 0:
            raise CaseStudyError("cell n = 0 carries no resonance")
        return float(np.pi * n + self.a**2 / (4.0 * np.pi * n))

    def resonances(self, n_max: int) -> np.ndarray:
        """Positive-cell resonances r_10 .. r_{n_max}0."""
        return np.array([self.resonance(n) for n in range(1, int(n_max) + 1)])

    def rho_curvature(self, n: int) -> float:
        """f(r_n0) = rho(z)/(z - r_n0)^2 at the resonance (positive)."""
        r = self.resonance(n)
        k = float(np.real(self.k(r)))
        d = np.sin(r) - (r / k) * np.sin(k)
        return float(d * d)

    def bifurcation_constant(self, n: int) -> float:
        """R_n = -2(phi(r_n0) - 1)/f(r_n0); negative iff n < a/2pi.

        The split pair behaves as ``r_n0 +- tau(sqrt(R_n) + o(1))``:
        negative ``R_n`` sends it off the real axis as a conjugate pair,
        positive ``R_n`` opens a real gap.
        """
        r = self.resonance(n)
        return float(-2.0 * (np.real(self.phi(r)) - 1.0) / self.rho_curvature(n))

    def resonance_quasimomentum(self, n: int) -> float:
        """Massive-channel momentum k(r_n0) = |pi n - a^2/(4 pi n)|."""
        return abs(float(np.pi * n - self.a**2 / (4.0 * np.pi * n)))

    def eigenvalue_roots(
        self, kind: str, window: tuple[float, float]
    ) -> tuple[tuple[float, int], ...]:
        """Closed-form det roots with multiplicities inside ``window``.

        Periodic roots: ``2 pi m`` (double), ``+-a`` (simple, the massive
        band edge), ``+-sqrt((2 pi m)^2 + a^2)`` (double).  Antiperiodic
        roots: ``(2m+1) pi`` (double) and ``+-sqrt(((2m+1) pi)^2 + a^2)``
        (double).
        """
        lo, hi = float(window[0]), float(window[1])
        if kind not in ("periodic", "antiperiodic"):
            raise CaseStudyError(f"unknown determinant kind {kind!r}")
        top = max(abs(lo), abs(hi)) + 1.0
        roots: list[tuple[float, int]] = []

        def add(val: float, mult: int):
            if lo <= val <= hi:
                roots.append((float(val), mult))

        m = 0
        while True:
            free_root = (2 * m) * np.pi if kind == "periodic" else (2 * m + 1) * np.pi
            if free_root > top:
                break
            add(free_root, 2)
            if free_root > 0:
                add(-free_root, 2)
            m += 1
        m = 0
        while True:
            k_val = (2 * m) * np.pi if kind == "periodic" else (2 * m + 1) * np.pi
            massive_root = float(np.sqrt(k_val**2 + self.a**2))
            if massive_root > top:
                break
            mult = 1 if (kind == "periodic" and m == 0) else 2
            add(massive_root, mult)
            add(-massive_root, mult)
            m += 1
        return tuple(sorted(set(roots)))


def unperturbed_reference(a: float) -> UnperturbedReference:
    """Closed-form bundle for the decoupled operator at mass ``a``."""
    if not (a > 0 and np.isfinite(a)):
        raise CaseStudyError(f"mass a must be positive, got {a}")
    return UnperturbedReference(a=float(a))


def reference_defects(
    a: float,
    zs: np.ndarray,
    rtol: float = monodromy.DEFAULT_RTOL,
) -> dict[str, float]:
    """Worst deviation of the numeric pipeline from the closed forms.

    Compares branch values (as unordered pairs), the discriminant, and the
    one- and two-period traces at the sample points ``zs``; the returned
    maxima anchor the tau = 0 end of every sweep.
    """
    ref = unperturbed_reference(a)
    p = potential.example_4x4(a, 0.0)
    zs = np.asarray(zs, dtype=np.complex128).ravel()
    samples = lyapunov.sample_many(p, zs, rtol=rtol)
    delta_defect = 0.0
    for z, s in zip(zs, samples):
        got = np.sort_complex(s.deltas)
        want = np.sort_complex(np.array([ref.delta1(z), ref.delta2(z)]))
        delta_defect = max(delta_defect, float(np.max(np.abs(got - want))))
    rho_vals = lyapunov.rho_n2_many(p, zs, rtol=rtol)
    rho_defect = float(np.max(np.abs(rho_vals - ref.rho(zs)), initial=0.0))
    t1, t2 = monodromy.traces_many(p, zs, rtol=rtol)
    t1_defect = float(np.max(np.abs(t1 - ref.trace(1, zs)), initial=0.0))
    t2_defect = float(np.max(np.abs(t2 - ref.trace(2, zs)), initial=0.0))
    return {
        "delta": delta_defect,
        "rho": rho_defect,
        "trace1": t1_defect,
        "trace2": t2_defect,
    }


# ---------------------------------------------------------------------------
# bifurcation sweep


@dataclass(frozen=True)
class BifurcationRecord:
    """Split of the cell-``n`` double resonance across the tau sweep.

    ``roots_by_tau`` holds the located pair per coupling, ordered by
    (imaginary, real) part so a real pair reads ``(r-, r+)`` and a
    complex pair ``(conjugate, upper)``; a failed disk leaves ``None``.
    ``slope_estimate`` is ``|r+ - r-|/(2 tau)`` averaged over the two
    smallest nonzero couplings, the numerical counterpart of
    ``sqrt(|R_n|)``; ``reference_constant`` is the closed-form ``R_n``
    (reported for context, not a target).  ``gap_checks`` lists, for
    every real pair, the open interval and whether the band scan
    confirmed it lies outside the spectrum.
    """

    n: int
    r0: float
    roots_by_tau: tuple[tuple[float, tuple[complex, complex] | None], ...]
    winding_by_tau: tuple[tuple[float, int], ...]
    classification: str
    slope_estimate: float | None
    reference_constant: float
    gap_checks: tuple[tuple[float, tuple[float, float], bool], ...]
    flags: tuple[str, ...]


def _disk_radius(ref: UnperturbedReference, n: int, n_max: int) -> float:
    """min(0.3, half distance to the neighboring resonances)."""
    r = ref.resonance(n)
    dists = [abs(ref.resonance(n + 1) - r)]
    if n > 1:
        dists.append(abs(r - ref.resonance(n - 1)))
    else:
        dists.append(abs(r - (-r)))
    return min(KAPPA_CAP, 0.5 * min(dists))


def _classify_pair(pair: tuple[complex, complex]) -> str:
    lo, hi = pair
    scale = max(1.0, abs(lo), abs(hi))
    if abs(lo.imag) <= CONJUGATE_TOL and abs(hi.imag) <= CONJUGATE_TOL:
        return "real-gap"
    if abs(lo - np.conj(hi)) <= CONJUGATE_TOL * scale:
        return "complex-pair"
    return "irregular"


def _sweep_cell(task: tuple) -> BifurcationRecord:
    """One cell of the coupling sweep (module level so pools can pickle it)."""
    cfg, n, rtol, check_gaps = task
    ref = unperturbed_reference(cfg.a)
    r0 = ref.resonance(n)
    kappa = _disk_radius(ref, n, cfg.n_max)
    flags: list[str] = []
    roots_by_tau: list[tuple[float, tuple[complex, complex] | None]] = []
    winding_by_tau: list[tuple[float, int]] = []
    gap_checks: list[tuple[float, tuple[float, float], bool]] = []
    labels: list[str] = []
    for tau in cfg.tau_values:
        p = cfg.potential_at(tau)

        def rho_eval(zs, _p=p):
            return lyapunov.rho_n2_many(_p, np.asarray(zs), rtol=rtol)

        noise = spectrum._rho_noise_abs(p, complex(r0), kappa, rtol)
        try:
            dc = rootfind.disk_roots(
                rho_eval,
                complex(r0),
                kappa,
                boundary_points=512,
                cluster_tol=1e-4,
                noise_abs=noise,
            )
        except rootfind.RootfindError as exc:
            flags.append(f"n{n}-tau{tau:g}-disk-failed:{exc}")
            roots_by_tau.append((tau, None))
            winding_by_tau.append((tau, -1))
            continue
        winding_by_tau.append((tau, dc.winding))
        total = int(np.sum(dc.multiplicities)) if len(dc.multiplicities) else 0
        if dc.winding != 2 or total != 2:
            flags.append(f"n{n}-tau{tau:g}-winding-{dc.winding}-recovered-{total}")
            roots_by_tau.append((tau, None))
            continue
        expanded: list[complex] = []
        for root, mult in zip(dc.roots, dc.multiplicities):
            expanded.extend([complex(root)] * int(mult))
        # Roundoff-sized imaginary parts must not decide the order of a
        # real pair, so they are squashed before the (imag, real) sort.
        expanded.sort(
            key=lambda w: (0.0 if abs(w.imag) <= CONJUGATE_TOL else w.imag,
                           w.real)
        )
        pair = (expanded[0], expanded[1])
        roots_by_tau.append((tau, pair))

        if tau == 0.0:
            anchor = max(abs(pair[0] - r0), abs(pair[1] - r0))
            if anchor > ANCHOR_TOL:
                flags.append(f"n{n}-anchor-defect-{anchor:.3g}")
            continue

        label = _classify_pair(pair)
        labels.append(label)
        if label == "irregular":
            flags.append(f"n{n}-tau{tau:g}-unpaired-roots")
        if check_gaps and label == "real-gap":
            r_minus, r_plus = pair[0].real, pair[1].real
            window = (r0 - kappa, r0 + kappa)
            # The candidate gap can be narrower than the default scan
            # step; sample finely enough that it cannot slip between
            # grid points.
            step = min(spectrum.MAX_GRID_STEP, (r_plus - r_minus) / 8.0)
            report = spectrum.scan_bands(p, window, grid_step=step,
                                         rtol=rtol, classify=False)
            inner = (r_minus + GAP_ENDPOINT_TOL, r_plus - GAP_ENDPOINT_TOL)
            clear = inner[0] < inner[1] and all(
                min(b1, inner[1]) <= max(b0, inner[0])
                for b0, b1 in report.bands
            )
            gap_checks.append((tau, (r_minus, r_plus), clear))
            if not clear:
                flags.append(f"n{n}-tau{tau:g}-gap-overlaps-band")

    if labels and all(lab == labels[0] for lab in labels):
        classification = labels[0]
    elif labels:
        classification = "mixed"
        flags.append(f"n{n}-mixed-classification")
    else:
        classification = "undetermined"

    nonzero = [
        (tau, pair) for tau, pair in roots_by_tau if tau != 0.0 and pair
    ]
    nonzero.sort(key=lambda item: abs(item[0]))
    slopes = [
        abs(pair[1] - pair[0]) / (2.0 * abs(tau))
        for tau, pair in nonzero[:2]
    ]
    slope = float(np.mean(slopes)) if slopes else None

    return BifurcationRecord(
        n=n,
        r0=r0,
        roots_by_tau=tuple(roots_by_tau),
        winding_by_tau=tuple(winding_by_tau),
        classification=classification,
        slope_estimate=slope,
        reference_constant=ref.bifurcation_constant(n),
        gap_checks=tuple(gap_checks),
        flags=tuple(flags),
    )


def bifurcation_sweep(
    cfg: CaseStudyConfig,
    rtol: float = monodromy.DEFAULT_RTOL,
    *,
    check_gaps: bool = True,
    jobs: int | None = None,
) -> list[BifurcationRecord]:
    """Track the resonance pair of each cell across the coupling sweep.

    For every cell ``n`` up to ``cfg.n_max`` and every ``tau``, counts
    and locates the discriminant roots in the disk around ``r_n0`` (512
    boundary points; radius from the neighbor-spacing rule).  A disk
    whose winding is not 2 produces a flagged record entry rather than
    roots.  Real pairs are cross-checked against :func:`spectrum.scan_bands`
    over a covering window; the interval must be disjoint from every
    band up to ``GAP_ENDPOINT_TOL``.

    Cells are independent, so ``jobs > 1`` runs them on a process pool;
    records are assembled in cell order either way and the output does
    not depend on the worker count.
    """
    tasks = [(cfg, n, rtol, check_gaps) for n in range(1, cfg.n_max + 1)]
    if jobs is not None and int(jobs) > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(int(jobs), len(tasks))) as pool:
            return list(pool.map(_sweep_cell, tasks))
    return [_sweep_cell(task) for task in tasks]


def sweep_csv_rows(cfg: CaseStudyConfig, records: list[BifurcationRecord]) -> list[str]:
    """Sweep table in the documented column order (one row per n, tau)."""
    rows = ["a,nu,n,tau,re_minus,im_minus,re_plus,im_plus,classification,slope"]
    for rec in records:
        slope = "" if rec.slope_estimate is None else repr(rec.slope_estimate)
        for tau, pair in rec.roots_by_tau:
            if pair is None:
                rows.append(
                    f"{cfg.a!r},{cfg.nu!r},{rec.n},{tau!r},,,,,"
                    f"{rec.classification},{slope}"
                )
            else:
                lo, hi = pair
                rows.append(
                    f"{cfg.a!r},{cfg.nu!r},{rec.n},{tau!r},"
                    f"{lo.real!r},{lo.imag!r},{hi.real!r},{hi.imag!r},"
                    f"{rec.classification},{slope}"
                )
    return rows


def trajectory_csv_rows(records: list[BifurcationRecord]) -> list[str]:
    """Plot data: one row per located root, ordered by (n, tau, branch)."""
    rows = ["n,tau,branch,re,im"]
    for rec in records:
        for tau, pair in rec.roots_by_tau:
            if pair is None:
                continue
            for branch, root in enumerate(pair):
                rows.append(f"{rec.n},{tau!r},{branch},{root.real!r},{root.imag!r}")
    return rows


# ---------------------------------------------------------------------------
# eigenvalue stability


@dataclass(frozen=True)
class StabilityRow:
    """One tracked det-root copy: its anchor at tau = 0 and where it moved.

    Roots are expanded by multiplicity before matching, so a split double
    produces two rows sharing the same anchor.
    """

    tau: float
    kind: str
    anchor: float
    root: float
    displacement: float


@dataclass(frozen=True)
class StabilityTable:
    """Periodic/antiperiodic root drift across the coupling sweep.

    ``counts_by_tau`` maps each tau to per-determinant root counts
    (multiplicity summed over ``0 <= z <= pi n_max + 1``) plus a mirrored
    total doubling the positive side (the spectrum of the real-valued
    family is symmetric) without double-counting ``z = 0``; the mirrored
    total is the conserved quantity when a split pair straddles ``z = 0``.
    ``unmatched`` lists leftover root copies from either side of the
    matching, labeled ``anchor`` or ``current``.
    """

    window_top: float
    rows: tuple[StabilityRow, ...]
    unmatched: tuple[tuple[float, str, str, float], ...]
    max_displacement_by_tau: tuple[tuple[float, float], ...]
    counts_by_tau: tuple[tuple[float, tuple[int, int, int, int]], ...]
    flags: tuple[str, ...]


def eigenvalue_stability(
    cfg: CaseStudyConfig,
    rtol: float = monodromy.DEFAULT_RTOL,
    *,
    certify: bool = True,
) -> StabilityTable:
    """Match det roots at each tau against their tau = 0 anchors.

    Scans cells ``0..n_max`` for both determinants at every coupling,
    keeps roots in ``[0, pi n_max + 1]``, and pairs each tau's roots to
    the anchors by minimal total displacement.  Roots left over on
    either side are listed, never dropped.
    """
    from scipy.optimize import linear_sum_assignment

    top = np.pi * cfg.n_max + 1.0
    n_range = (0, cfg.n_max)
    flags: list[str] = []

    def span(tau: float) -> dict[str, list[tuple[float, int]]]:
        p = cfg.potential_at(tau)
        out: dict[str, list[tuple[float, int]]] = {}
        for kind in ("periodic", "antiperiodic"):
            listing = spectrum.find_eigenvalues(p, kind, n_range, rtol,
                                                certify=certify)
            flags.extend(f"tau{tau:g}-{kind}:{f}" for f in listing.flags)
            out[kind] = [
                (float(r), int(m))
                for r, m in zip(listing.roots, listing.multiplicities)
                if -1e-9 <= r <= top
            ]
        return out

    anchors = span(0.0)
    rows: list[StabilityRow] = []
    unmatched: list[tuple[float, str, str, float]] = []
    max_disp: list[tuple[float, float]] = []
    counts: list[tuple[float, tuple[int, int, int, int]]] = []

    def expand_entries(entries: list[tuple[float, int]]) -> list[float]:
        out: list[float] = []
        for r, m in entries:
            out.extend([r] * m)
        return out

    def count_entry(tau: float, data: dict) -> tuple[float, tuple[int, int, int, int]]:
        per = sum(m for _, m in data["periodic"])
        anti = sum(m for _, m in data["antiperiodic"])
        at_zero = sum(m for r, m in data["periodic"] + data["antiperiodic"]
                      if abs(r) <= 1e-7)
        total = per + anti
        return (tau, (per, anti, total, 2 * total - at_zero))

    counts.append(count_entry(0.0, anchors))

    for tau in cfg.tau_values:
        if tau == 0.0:
            continue
        data = span(tau)
        counts.append(count_entry(tau, data))
        worst = 0.0
        for kind in ("periodic", "antiperiodic"):
            ref_roots = expand_entries(anchors[kind])
            new_roots = expand_entries(data[kind])
            if ref_roots and new_roots:
                cost = np.abs(
                    np.array(ref_roots)[:, None] - np.array(new_roots)[None, :]
                )
                ridx, cidx = linear_sum_assignment(cost)
            else:
                ridx, cidx = np.array([], dtype=int), np.array([], dtype=int)
            for i, j in zip(ridx, cidx):
                disp = abs(new_roots[j] - ref_roots[i])
                worst = max(worst, disp)
                rows.append(StabilityRow(tau=tau, kind=kind,
                                         anchor=ref_roots[i],
                                         root=new_roots[j],
                                         displacement=disp))
            for i in sorted(set(range(len(ref_roots))) - set(ridx.tolist())):
                unmatched.append((tau, kind, "anchor", ref_roots[i]))
            for j in sorted(set(range(len(new_roots))) - set(cidx.tolist())):
                unmatched.append((tau, kind, "current", new_roots[j]))
        max_disp.append((tau, worst))

    return StabilityTable(
        window_top=top,
        rows=tuple(rows),
        unmatched=tuple(unmatched),
        max_displacement_by_tau=tuple(max_disp),
        counts_by_tau=tuple(counts),
        flags=tuple(dict.fromkeys(flags)),
    )
