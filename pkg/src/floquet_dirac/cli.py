"""Command-line front end: parse a run configuration, drive one pipeline,
and emit deterministic report artifacts.

Every run produces, inside the output directory:

``report.json``
    machine-readable results (``schema_version`` 1, sorted keys),
``summary.txt``
    the human-readable lines also printed to stdout,
``manifest.json``
    always written, even on failure: run status, exit code, every flag
    raised by the underlying modules, the error (if any), and the list
    of artifacts that were completed,
plus one or more CSV tables per command (``bands.csv``,
``eigenvalues.csv``, ``resonances.csv``, ``asymptotics.csv``,
``traces.csv``, ``sweep.csv`` + ``trajectories.csv`` +
optional ``stability.csv``).

Outputs are byte-identical across repeated runs with the same
configuration: floats are rendered by ``repr``, JSON keys are sorted, no
timestamps or environment details are recorded, and parallel sweeps
assemble their records in index order, so the emitted bytes do not
depend on the worker count either.

Exit status: ``0`` — completed with no flags; ``1`` — completed with
flags, or failed at runtime (partial artifacts are kept and the
manifest records the error); ``2`` — invalid configuration (the
diagnostic names the offending field).

Configuration precedence is flag > config file > default.  The JSON
config schema::

    {
      "schema_version": 1,
      "command":   "bands|eigenvalues|resonances|asymptotics|traces|casestudy",
      "potential": {"builtin": "zero|constant|diagonal|example_4x4",
                    "params": {...}}
                   | {"n": N, "entries": {"j,k": [[m, re, im], ...]}}
                   | {"file": "potential.json"},
      "window":    [a, b],
      "n_range":   [lo, hi],
      "disk":      [re, im, radius],
      "rtol":      1e-11,
      "jobs":      4,
      "out":       "out",
      "kind":      "periodic|antiperiodic",
      "heights":   [20.0, ..., 40.0],
      "casestudy": {"a": 7.0, "tau_values": [0.0, 0.01, 0.02, 0.04],
                    "nu": 0.05, "n_max": 3, "stability": false}
    }

The inline ``potential`` object accepts exactly the files written by
:func:`floquet_dirac.potential.save_potential`.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import traceback
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import asymptotics, casestudy, monodromy, potential, spectrum
from .potential import PeriodicPotential

__all__ = ["ConfigError", "RunConfig", "main"]

SCHEMA_VERSION = 1

COMMANDS = (
    "bands",
    "eigenvalues",
    "resonances",
    "asymptotics",
    "traces",
    "casestudy",
)
KINDS = ("periodic", "antiperiodic")

EXIT_OK = 0
EXIT_FLAGGED = 1
EXIT_USAGE = 2

_KNOWN_KEYS = frozenset({
    "schema_version", "command", "potential", "window", "n_range", "disk",
    "rtol", "jobs", "out", "kind", "heights", "casestudy",
})
_KNOWN_CASESTUDY_KEYS = frozenset({
    "a", "tau_values", "nu", "n_max", "stability",
})

_DEFAULT_POTENTIAL = {"builtin": "zero", "params": {"n": 2}}
_DEFAULT_N_RANGE = {"eigenvalues": (1, 8), "asymptotics": (2, 8)}
_DEFAULT_HEIGHTS = tuple(np.linspace(20.0, 40.0, 9).tolist())
_DEFAULT_CASESTUDY = {
    "a": 7.0, "tau_values": (0.0, 0.01, 0.02, 0.04), "nu": 0.05, "n_max": 3,
}


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending field."""


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved settings for one CLI run."""

    command: str
    p: PeriodicPotential
    out_dir: Path
    rtol: float
    jobs: int
    window: tuple[float, float] | None = None
    n_range: tuple[int, int] | None = None
    disk: tuple[complex, float] | None = None
    kind: str = "periodic"
    heights: tuple[float, ...] = _DEFAULT_HEIGHTS
    case: casestudy.CaseStudyConfig | None = None
    stability: bool = False


# ---------------------------------------------------------------------------
# configuration resolution
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="floquet-dirac",
        description=(
            "Floquet spectral analysis for 2Nx2N periodic Dirac systems: "
            "band/gap scans, periodic and antiperiodic eigenvalues, "
            "resonances, high-energy asymptotics, trace-formula checks, "
            "and the two-channel bifurcation case study."
        ),
        epilog=(
            "The JSON config file shares the potential schema with "
            "save_potential(); flags override config values.  Artifacts "
            "(report.json, summary.txt, per-command CSV tables, and a "
            "manifest.json that is written even on failure) land in the "
            "output directory and are byte-identical across reruns."
        ),
    )
    parser.add_argument("--config", metavar="PATH",
                        help="JSON run configuration file")
    parser.add_argument("--command", metavar="NAME",
                        help="one of: %s" % ", ".join(COMMANDS))
    parser.add_argument("--out", metavar="DIR",
                        help="output directory (default: out)")
    parser.add_argument("--rtol", type=float, metavar="X",
                        help="integration tolerance (within [%g, %g])"
                             % (monodromy.RTOL_MIN, monodromy.RTOL_MAX))
    parser.add_argument("--jobs", type=int, metavar="K",
                        help="worker processes for record-level sweeps "
                             "(default: all cores; output is identical "
                             "for every K)")
    parser.add_argument("--window", type=float, nargs=2, metavar=("A", "B"),
                        help="real window for bands/resonances")
    parser.add_argument("--n-range", dest="n_range", type=int, nargs=2,
                        metavar=("A", "B"),
                        help="cell range for eigenvalues/asymptotics")
    parser.add_argument("--disk", type=float, nargs=3,
                        metavar=("RE", "IM", "RAD"),
                        help="complex disk for resonances")
    return parser


def _load_config_file(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"config: {path} is not valid JSON at line {exc.lineno}, "
            f"column {exc.colno}: {exc.msg}"
        )
    if not isinstance(data, dict):
        raise ConfigError(f"config: {path} must hold a JSON object")
    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(
            f"config: unsupported schema_version {version!r} "
            f"(this build reads {SCHEMA_VERSION})"
        )
    unknown = sorted(set(data) - _KNOWN_KEYS)
    if unknown:
        raise ConfigError(
            f"config: unknown key(s) {', '.join(map(repr, unknown))}; "
            f"known keys: {', '.join(sorted(_KNOWN_KEYS))}"
        )
    return data


def _as_pair(value, name: str, cast, kind_name: str) -> tuple:
    try:
        seq = list(value)
    except TypeError:
        raise ConfigError(f"{name}: expected two {kind_name}s, got {value!r}")
    if len(seq) != 2:
        raise ConfigError(f"{name}: expected two {kind_name}s, got {value!r}")
    try:
        return (cast(seq[0]), cast(seq[1]))
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: expected two {kind_name}s, got {value!r}")


def _as_int(value, name: str) -> int:
    if isinstance(value, bool):
        raise ConfigError(f"{name}: expected an integer, got {value!r}")
    out = float(value)
    if out != int(out):
        raise ConfigError(f"{name}: expected an integer, got {value!r}")
    return int(out)


def _build_run_potential(raw) -> PeriodicPotential:
    if not isinstance(raw, dict):
        raise ConfigError(f"potential: must be an object, got {raw!r}")
    try:
        if "file" in raw:
            return potential.load_potential(raw["file"])
        return potential.build_potential(raw)
    except OSError as exc:
        raise ConfigError(f"potential: cannot read {raw.get('file')!r}: {exc}")
    except potential.PotentialError as exc:
        raise ConfigError(f"potential: {exc}")
    except KeyError as exc:
        raise ConfigError(f"potential: missing parameter {exc}")
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"potential: {exc}")


def _resolve_casestudy(raw) -> tuple[casestudy.CaseStudyConfig, bool]:
    if not isinstance(raw, dict):
        raise ConfigError(f"casestudy: must be an object, got {raw!r}")
    unknown = sorted(set(raw) - _KNOWN_CASESTUDY_KEYS)
    if unknown:
        raise ConfigError(
            f"casestudy: unknown key(s) {', '.join(map(repr, unknown))}; "
            f"known keys: {', '.join(sorted(_KNOWN_CASESTUDY_KEYS))}"
        )
    merged = dict(_DEFAULT_CASESTUDY)
    merged.update({k: v for k, v in raw.items() if k != "stability"})
    stability = bool(raw.get("stability", False))
    try:
        cs = casestudy.CaseStudyConfig(
            a=float(merged["a"]),
            tau_values=tuple(float(t) for t in merged["tau_values"]),
            nu=float(merged["nu"]),
            n_max=_as_int(merged["n_max"], "casestudy.n_max"),
        )
    except casestudy.CaseStudyError as exc:
        raise ConfigError(f"casestudy: {exc}")
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"casestudy: {exc}")
    return cs, stability


def resolve(args: argparse.Namespace) -> RunConfig:
    """Merge flags over the config file over defaults into a RunConfig.

    Raises :class:`ConfigError` with a field-naming diagnostic on any
    invalid or missing setting.
    """
    data = _load_config_file(args.config) if args.config else {}

    command = args.command if args.command is not None else data.get("command")
    if command is None:
        raise ConfigError(
            "command: required (pass --command NAME or a config file "
            "with a 'command' key)"
        )
    if command not in COMMANDS:
        raise ConfigError(
            f"command: {command!r} is not one of {', '.join(COMMANDS)}"
        )

    rtol_default = (
        spectrum.ROOT_RTOL if command == "resonances" else monodromy.DEFAULT_RTOL
    )
    raw_rtol = args.rtol if args.rtol is not None else data.get("rtol", rtol_default)
    try:
        rtol = float(raw_rtol)
    except (TypeError, ValueError):
        raise ConfigError(f"rtol: expected a number, got {raw_rtol!r}")
    if not (monodromy.RTOL_MIN <= rtol <= monodromy.RTOL_MAX):
        raise ConfigError(
            f"rtol = {rtol:g} outside [{monodromy.RTOL_MIN:g}, "
            f"{monodromy.RTOL_MAX:g}]"
        )

    raw_jobs = args.jobs if args.jobs is not None else data.get("jobs")
    if raw_jobs is None:
        jobs = os.cpu_count() or 1
    else:
        jobs = _as_int(raw_jobs, "jobs")
        if jobs < 1:
            raise ConfigError(f"jobs = {jobs} must be a positive integer")

    out_name = args.out if args.out is not None else data.get("out", "out")
    out_dir = Path(out_name)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"out: cannot create directory {out_dir}: {exc}")
    if not os.access(out_dir, os.W_OK):
        raise ConfigError(f"out: directory {out_dir} is not writable")

    p = _build_run_potential(data.get("potential", _DEFAULT_POTENTIAL))

    window = None
    raw_window = args.window if args.window is not None else data.get("window")
    if raw_window is not None:
        window = _as_pair(raw_window, "window", float, "number")
        if not window[0] < window[1]:
            raise ConfigError(
                f"window: must satisfy A < B, got [{window[0]:g}, {window[1]:g}]"
            )

    n_range = None
    raw_n_range = args.n_range if args.n_range is not None else data.get("n_range")
    if raw_n_range is None and command in _DEFAULT_N_RANGE:
        n_range = _DEFAULT_N_RANGE[command]
    elif raw_n_range is not None:
        n_range = _as_pair(raw_n_range, "n_range", lambda v: _as_int(v, "n_range"),
                           "integer")
        if n_range[0] > n_range[1]:
            raise ConfigError(
                f"n_range: must satisfy A <= B, got [{n_range[0]}, {n_range[1]}]"
            )

    disk = None
    raw_disk = args.disk if args.disk is not None else data.get("disk")
    if raw_disk is not None:
        try:
            re, im, rad = (float(v) for v in raw_disk)
        except (TypeError, ValueError):
            raise ConfigError(
                f"disk: expected three numbers [re, im, radius], got {raw_disk!r}"
            )
        if not rad > 0:
            raise ConfigError(f"disk: radius must be positive, got {rad:g}")
        disk = (complex(re, im), rad)

    kind = data.get("kind", "periodic")
    if kind not in KINDS:
        raise ConfigError(f"kind: {kind!r} is not one of {', '.join(KINDS)}")

    raw_heights = data.get("heights", _DEFAULT_HEIGHTS)
    try:
        heights = tuple(float(h) for h in raw_heights)
    except (TypeError, ValueError):
        raise ConfigError(f"heights: expected a list of numbers, got {raw_heights!r}")
    if command == "traces":
        lo, hi = asymptotics.HEIGHT_RANGE
        if len(set(heights)) < asymptotics.MIN_HEIGHTS:
            raise ConfigError(
                f"heights: need at least {asymptotics.MIN_HEIGHTS} distinct "
                f"values, got {len(set(heights))}"
            )
        if any(not (lo <= h <= hi) for h in heights):
            raise ConfigError(f"heights: values must lie in [{lo:g}, {hi:g}]")

    case = None
    stability = False
    if command == "casestudy":
        case, stability = _resolve_casestudy(data.get("casestudy", {}))

    if command == "bands" and window is None:
        raise ConfigError("window: required for the bands command (--window A B)")
    if command == "resonances":
        # window and disk are alternative region forms; a region flag
        # replaces whatever region the config file carries.
        if (args.window is None) != (args.disk is None):
            if args.window is None:
                window = None
            else:
                disk = None
        if (window is None) == (disk is None):
            raise ConfigError(
                "window/disk: the resonances command needs exactly one of "
                "--window A B or --disk RE IM RAD"
            )
    if command == "asymptotics":
        lo_ok, hi_ok = asymptotics.VALIDATE_CELLS
        if not (lo_ok <= n_range[0] <= n_range[1] <= hi_ok):
            raise ConfigError(
                f"n_range: asymptotic validation covers cells {lo_ok}..{hi_ok}, "
                f"got [{n_range[0]}, {n_range[1]}]"
            )

    return RunConfig(
        command=command, p=p, out_dir=out_dir, rtol=rtol, jobs=jobs,
        window=window, n_range=n_range, disk=disk, kind=kind,
        heights=heights, case=case, stability=stability,
    )


# ---------------------------------------------------------------------------
# artifact collection
# ---------------------------------------------------------------------------

class _Collector:
    """Serialized artifact writer; completed files survive a later failure."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.written: list[str] = []

    def emit(self, name: str, text: str) -> None:
        (self.out_dir / name).write_text(text)
        self.written.append(name)

    def emit_rows(self, name: str, rows: list[str]) -> None:
        self.emit(name, "\n".join(rows) + "\n")


def _floats(xs) -> list[float]:
    return [float(x) for x in xs]


def _ints(xs) -> list[int]:
    return [int(x) for x in xs]


def _re_im(z) -> list[float]:
    return [float(np.real(z)), float(np.imag(z))]


def _cell_of(root: float) -> int:
    return int(np.rint(root / np.pi))


# ---------------------------------------------------------------------------
# command runners
# ---------------------------------------------------------------------------

def _run_bands(cfg: RunConfig, out: _Collector):
    report = spectrum.scan_bands(cfg.p, cfg.window, rtol=cfg.rtol)
    out.emit_rows("bands.csv", [",".join(r) for r in spectrum.sample_rows(report)])
    lhs, rhs, ok = spectrum.gap_sum_check(report, cfg.p)
    results = {
        "window": _floats(report.window),
        "grid_step": float(report.grid_step),
        "bands": [_floats(b) for b in report.bands],
        "gaps": [_floats(g) for g in report.gaps],
        "endpoints": [
            {
                "position": float(lab.position),
                "side": lab.side,
                "matches": [
                    {
                        "kind": m.kind,
                        "root": float(m.root),
                        "distance": float(m.distance),
                        "residual": float(m.residual),
                    }
                    for m in lab.matches
                ],
            }
            for lab in report.endpoint_labels
        ],
        "multiplicity_profile": [
            [[float(s), float(e), int(c)] for s, e, c in segs]
            for segs in report.multiplicity_profile
        ],
        "collision_samples": len(report.collision_marks),
        "gap_sum": {"lhs": lhs, "rhs": rhs, "ok": ok},
        "flags": list(report.flags),
    }
    summary = spectrum.report_lines(report)
    summary.append("gap-sum %r <= %r %s" % (lhs, rhs, "ok" if ok else "VIOLATED"))
    flags = [f"bands:{f}" for f in report.flags]
    return results, summary, flags


def _run_eigenvalues(cfg: RunConfig, out: _Collector):
    listing = spectrum.find_eigenvalues(cfg.p, cfg.kind, cfg.n_range, cfg.rtol)
    rows = ["kind,cell,root,multiplicity,residual"]
    for root, mult, res in zip(listing.roots, listing.multiplicities,
                               listing.residuals):
        rows.append(
            f"{listing.kind},{_cell_of(float(root))},{float(root)!r},"
            f"{int(mult)},{float(res)!r}"
        )
    out.emit_rows("eigenvalues.csv", rows)
    results = {
        "kind": listing.kind,
        "n_range": list(listing.n_window),
        "roots": _floats(listing.roots),
        "multiplicities": _ints(listing.multiplicities),
        "residuals": _floats(listing.residuals),
        "cell_counts": [[int(n), int(c)] for n, c in listing.cell_counts],
        "flags": list(listing.flags),
    }
    summary = [
        "kind %s" % listing.kind,
        "cells %d..%d" % listing.n_window,
        "roots %d (multiplicity %d)"
        % (len(listing.roots), int(np.sum(listing.multiplicities, initial=0))),
    ]
    summary += [
        "root %r multiplicity %d residual %r" % (float(r), int(m), float(s))
        for r, m, s in zip(listing.roots, listing.multiplicities, listing.residuals)
    ]
    summary += ["cell %d count %d" % (n, c) for n, c in listing.cell_counts]
    summary += ["flag %s" % f for f in listing.flags]
    flags = [f"eigenvalues:{f}" for f in listing.flags]
    return results, summary, flags


def _run_resonances(cfg: RunConfig, out: _Collector):
    listing = spectrum.find_resonances(
        cfg.p, window=cfg.window, disk=cfg.disk, rtol=cfg.rtol
    )
    rows = ["type,re,im,multiplicity,residual"]
    for root, mult, res in zip(listing.real_roots, listing.real_multiplicities,
                               listing.real_residuals):
        rows.append(f"real,{float(root)!r},0.0,{int(mult)},{float(res)!r}")
    for root, mult, res in zip(listing.complex_roots,
                               listing.complex_multiplicities,
                               listing.complex_residuals):
        rows.append(
            f"complex,{float(root.real)!r},{float(root.imag)!r},"
            f"{int(mult)},{float(res)!r}"
        )
    out.emit_rows("resonances.csv", rows)
    if cfg.disk is not None:
        region = {"type": "disk", "center": _re_im(cfg.disk[0]),
                  "radius": float(cfg.disk[1])}
    else:
        region = {"type": "window", "window": _floats(cfg.window)}
    results = {
        "region": region,
        "real_roots": _floats(listing.real_roots),
        "real_multiplicities": _ints(listing.real_multiplicities),
        "real_residuals": _floats(listing.real_residuals),
        "complex_roots": [_re_im(z) for z in listing.complex_roots],
        "complex_multiplicities": _ints(listing.complex_multiplicities),
        "complex_residuals": _floats(listing.complex_residuals),
        "disk_winding": listing.disk_winding,
        "value_scale": float(listing.value_scale),
        "flags": list(listing.flags),
    }
    summary = [
        "region %s" % json.dumps(region, sort_keys=True),
        "real roots %d complex roots %d"
        % (len(listing.real_roots), len(listing.complex_roots)),
    ]
    summary += [
        "real %r multiplicity %d residual %r" % (float(r), int(m), float(s))
        for r, m, s in zip(listing.real_roots, listing.real_multiplicities,
                           listing.real_residuals)
    ]
    summary += [
        "complex %r %r multiplicity %d residual %r"
        % (float(z.real), float(z.imag), int(m), float(s))
        for z, m, s in zip(listing.complex_roots, listing.complex_multiplicities,
                           listing.complex_residuals)
    ]
    if listing.disk_winding is not None:
        summary.append("winding %d" % listing.disk_winding)
    summary += ["flag %s" % f for f in listing.flags]
    flags = [f"resonances:{f}" for f in listing.flags]
    return results, summary, flags


def _run_asymptotics(cfg: RunConfig, out: _Collector):
    pn, _ = potential.normalize(cfg.p)
    rotated = not np.array_equal(pn.coeffs, cfg.p.coeffs)
    crit = asymptotics.gap_criterion(pn)
    table = asymptotics.validate(pn, cfg.n_range, cfg.rtol)
    out.emit_rows("asymptotics.csv", table.csv_rows())
    results = {
        "n_range": list(table.n_range),
        "rotated_to_normal_form": rotated,
        "summary": float(table.summary),
        "unmatched": [
            [int(n), kind, float(root), int(mult)]
            for n, kind, root, mult in table.unmatched_numeric
        ],
        "gap_criterion": {
            "verdict": crit.verdict,
            "nu": _floats(crit.nu),
            "anti_diagonal_sums": _floats(crit.anti_diagonal_sums),
            "identity_defect": float(crit.identity_defect),
            "evidence": [
                {
                    "alpha": [int(ev.alpha[0]), int(ev.alpha[1])],
                    "nu_sum": float(ev.nu_sum),
                    "max_coupling": float(ev.max_coupling),
                    "nondegenerate": ev.nondegenerate,
                }
                for ev in crit.evidence
            ],
            "flags": list(crit.flags),
        },
        "flags": list(table.flags),
    }
    summary = [
        "cells %d..%d" % table.n_range,
        "worst scaled residual %r" % float(table.summary),
        "verdict %s (identity defect %r)"
        % (crit.verdict, float(crit.identity_defect)),
    ]
    summary += [
        "channel weights %s" % " ".join(repr(float(v)) for v in crit.nu),
    ]
    summary += [
        "family (%d,%d) nu-sum %r max-coupling %r %s"
        % (ev.alpha[0], ev.alpha[1], float(ev.nu_sum), float(ev.max_coupling),
           "nondegenerate" if ev.nondegenerate else "degenerate")
        for ev in crit.evidence
    ]
    summary += [
        "unmatched %d %s %r multiplicity %d" % (n, kind, float(root), int(mult))
        for n, kind, root, mult in table.unmatched_numeric
    ]
    summary += ["flag validate:%s" % f for f in table.flags]
    summary += ["flag gap-criterion:%s" % f for f in crit.flags]
    flags = [f"validate:{f}" for f in table.flags]
    flags += [f"gap-criterion:{f}" for f in crit.flags]
    return results, summary, flags


def _run_traces(cfg: RunConfig, out: _Collector):
    rep = asymptotics.trace_check(cfg.p, cfg.heights, cfg.rtol)
    rows = ["y,kbar_re,kbar_im,detl_defect"]
    for y, k, d in zip(rep.heights, rep.k_samples, rep.detl_defects):
        rows.append(f"{float(y)!r},{float(k.real)!r},{float(k.imag)!r},{float(d)!r}")
    out.emit_rows("traces.csv", rows)
    results = {
        "heights": _floats(rep.heights),
        "q0": rep.q0, "q1": rep.q1, "q2": rep.q2,
        "fitted_q0": rep.fitted_q0,
        "fitted_q1": rep.fitted_q1,
        "fitted_q2": rep.fitted_q2,
        "fit_condition": rep.fit_condition,
        "detl_defects": _floats(rep.detl_defects),
        "detl_defect": rep.detl_defect,
        "flags": list(rep.flags),
    }
    summary = [
        "heights %r..%r (%d)" % (float(rep.heights[0]), float(rep.heights[-1]),
                                 len(rep.heights)),
        "q0 %r fitted %r" % (rep.q0, rep.fitted_q0),
        "q1 %r fitted %r" % (rep.q1, rep.fitted_q1),
        "q2 %r fitted %r" % (rep.q2, rep.fitted_q2),
        "fit condition %r" % rep.fit_condition,
        "det-L defect %r" % rep.detl_defect,
    ]
    summary += ["flag %s" % f for f in rep.flags]
    flags = [f"traces:{f}" for f in rep.flags]
    return results, summary, flags


def _run_casestudy(cfg: RunConfig, out: _Collector):
    cs = cfg.case
    records = casestudy.bifurcation_sweep(cs, cfg.rtol, jobs=cfg.jobs)
    out.emit_rows("sweep.csv", casestudy.sweep_csv_rows(cs, records))
    out.emit_rows("trajectories.csv", casestudy.trajectory_csv_rows(records))
    rec_dicts = []
    flags: list[str] = []
    for rec in records:
        rec_dicts.append({
            "n": rec.n,
            "r0": float(rec.r0),
            "classification": rec.classification,
            "slope_estimate": rec.slope_estimate,
            "reference_constant": float(rec.reference_constant),
            "winding_by_tau": [[float(t), int(w)] for t, w in rec.winding_by_tau],
            "roots_by_tau": [
                {
                    "tau": float(t),
                    "pair": None if pair is None else [_re_im(pair[0]),
                                                       _re_im(pair[1])],
                }
                for t, pair in rec.roots_by_tau
            ],
            "gap_checks": [
                {"tau": float(t), "interval": _floats(iv), "clear": ok}
                for t, iv, ok in rec.gap_checks
            ],
            "flags": list(rec.flags),
        })
        flags += [f"sweep:{f}" for f in rec.flags]
    results = {
        "a": cs.a, "nu": cs.nu, "n_max": cs.n_max,
        "tau_values": _floats(cs.tau_values),
        "records": rec_dicts,
        "stability": None,
    }
    summary = [
        "case a %r nu %r n_max %d taus %s"
        % (cs.a, cs.nu, cs.n_max, " ".join(repr(t) for t in cs.tau_values)),
    ]
    for rec in records:
        summary.append(
            "cell %d r0 %r %s slope %r reference %r"
            % (rec.n, float(rec.r0), rec.classification, rec.slope_estimate,
               float(rec.reference_constant))
        )
        summary += [
            "cell %d gap tau %r interval [%r, %r] %s"
            % (rec.n, float(t), float(iv[0]), float(iv[1]),
               "clear" if ok else "OVERLAPS-BAND")
            for t, iv, ok in rec.gap_checks
        ]
        summary += ["flag sweep:%s" % f for f in rec.flags]

    if cfg.stability:
        table = casestudy.eigenvalue_stability(cs, cfg.rtol)
        rows = ["tau,kind,anchor,root,displacement"]
        rows += [
            f"{row.tau!r},{row.kind},{row.anchor!r},{row.root!r},"
            f"{row.displacement!r}"
            for row in table.rows
        ]
        out.emit_rows("stability.csv", rows)
        results["stability"] = {
            "window_top": float(table.window_top),
            "counts_by_tau": [
                [float(t), _ints(counts)] for t, counts in table.counts_by_tau
            ],
            "max_displacement_by_tau": [
                [float(t), float(d)] for t, d in table.max_displacement_by_tau
            ],
            "unmatched": [
                [float(t), kind, side, float(root)]
                for t, kind, side, root in table.unmatched
            ],
            "flags": list(table.flags),
        }
        summary += [
            "stability tau %r counts per %d anti %d total %d mirrored %d"
            % (float(t), *counts)
            for t, counts in table.counts_by_tau
        ]
        summary += [
            "stability tau %r max displacement %r" % (float(t), float(d))
            for t, d in table.max_displacement_by_tau
        ]
        summary += [
            "stability unmatched tau %r %s %s %r"
            % (float(t), kind, side, float(root))
            for t, kind, side, root in table.unmatched
        ]
        summary += ["flag stability:%s" % f for f in table.flags]
        flags += [f"stability:{f}" for f in table.flags]
    return results, summary, flags


_RUNNERS = {
    "bands": _run_bands,
    "eigenvalues": _run_eigenvalues,
    "resonances": _run_resonances,
    "asymptotics": _run_asymptotics,
    "traces": _run_traces,
    "casestudy": _run_casestudy,
}


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _write_manifest(out: _Collector, command: str, status: str,
                    exit_code: int, flags: list[str], error: str | None) -> None:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "status": status,
        "exit_code": exit_code,
        "flags": list(flags),
        "error": error,
        "artifacts": sorted(out.written),
    }
    (out.out_dir / "manifest.json").write_text(
        json.dumps(doc, sort_keys=True, indent=1) + "\n"
    )


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = resolve(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    out = _Collector(cfg.out_dir)
    try:
        results, summary, flags = _RUNNERS[cfg.command](cfg, out)
    except Exception as exc:  # partial artifacts stay; manifest records the error
        traceback.print_exc()
        _write_manifest(out, cfg.command, "failed", EXIT_FLAGGED, [],
                        f"{type(exc).__name__}: {exc}")
        print(f"{cfg.command} failed: {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return EXIT_FLAGGED

    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": cfg.command,
        "potential": potential.potential_to_dict(cfg.p),
        "rtol": cfg.rtol,
        "results": results,
        "flags": list(flags),
    }
    out.emit("report.json", json.dumps(doc, sort_keys=True, indent=1) + "\n")
    out.emit("summary.txt", "\n".join(summary) + "\n")
    status = "flagged" if flags else "ok"
    code = EXIT_FLAGGED if flags else EXIT_OK
    _write_manifest(out, cfg.command, status, code, flags, None)
    for line in summary:
        print(line)
    return code


if __name__ == "__main__":
    sys.exit(main())
