"""Scan the band/gap structure of a potential and dump the data as CSV.

Emits two files into --out: the sample table (z, Lyapunov branches, rho)
ready for plotting, and the interval table (bands, gaps, endpoint
classifications).  Rendering is left to downstream tools.

Examples
--------
python scripts/band_portrait.py --builtin constant --param a=1 --window 0.5 8
python scripts/band_portrait.py --builtin example_4x4 --param a=7 tau=0.04 \\
    --window 6.5 10.5 --out portraits/coupled
"""

from __future__ import annotations

import argparse
from pathlib import Path

from floquet_dirac import potential, spectrum


def parse_params(items: list[str]) -> dict:
    out = {}
    for item in items:
        key, _, value = item.partition("=")
        out[key] = float(value)
    return out


def build(args: argparse.Namespace):
    params = parse_params(args.param)
    if args.builtin == "constant":
        return potential.constant_potential([[-params.get("a", 1.0)]])
    if args.builtin == "diagonal":
        values = [params[k] for k in sorted(params)]
        return potential.diagonal_potential(values)
    if args.builtin == "example_4x4":
        return potential.example_4x4(
            params["a"], params.get("tau", 0.0), params.get("nu", 0.05)
        )
    if args.builtin == "zero":
        return potential.zero_potential(int(params.get("n", 2)))
    raise SystemExit(f"unknown builtin {args.builtin!r}")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--builtin", default="constant",
                        choices=["zero", "constant", "diagonal", "example_4x4"])
    parser.add_argument("--param", nargs="*", default=["a=1"],
                        metavar="KEY=VALUE", help="builder parameters")
    parser.add_argument("--window", type=float, nargs=2, required=True,
                        metavar=("A", "B"))
    parser.add_argument("--rtol", type=float, default=1e-11)
    parser.add_argument("--out", default="band_portrait", metavar="DIR")
    args = parser.parse_args()

    p = build(args)
    report = spectrum.scan_bands(p, tuple(args.window), rtol=args.rtol)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    samples = spectrum.sample_rows(report)
    (out_dir / "samples.csv").write_text(
        "\n".join(",".join(row) for row in samples) + "\n"
    )
    intervals = ["type,index,start,end"]
    intervals += [f"band,{i},{s!r},{e!r}" for i, (s, e) in enumerate(report.bands)]
    intervals += [f"gap,{i},{s!r},{e!r}" for i, (s, e) in enumerate(report.gaps)]
    (out_dir / "intervals.csv").write_text("\n".join(intervals) + "\n")

    for line in spectrum.report_lines(report):
        print(line)
    print(f"wrote {out_dir}/samples.csv ({len(samples) - 1} samples) and "
          f"{out_dir}/intervals.csv")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
