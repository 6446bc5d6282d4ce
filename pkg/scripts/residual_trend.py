"""Track how fast the high-energy predictions converge, cell by cell.

For a chosen potential, compares the order-one eigenvalue and resonance
predictions against the located roots on a range of cells and writes the
per-root residuals (raw and scaled by n^2) to CSV.  A bounded scaled
column is the numerical signature of the one-over-n residual law.

Example
-------
python scripts/residual_trend.py --values 1 2 --cells 3 15 --out trend_12
"""

from __future__ import annotations

import argparse
from pathlib import Path

from floquet_dirac import asymptotics, potential


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--values", type=float, nargs="+", default=[1.0, 2.0],
                        help="diagonal constants of the potential block")
    parser.add_argument("--cells", type=int, nargs=2, default=[3, 12],
                        metavar=("LO", "HI"))
    parser.add_argument("--rtol", type=float, default=1e-11)
    parser.add_argument("--out", default="residual_trend", metavar="DIR")
    args = parser.parse_args()

    p = potential.diagonal_potential(args.values)
    table = asymptotics.validate(p, tuple(args.cells), args.rtol)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "residuals.csv").write_text("\n".join(table.csv_rows()) + "\n")

    print(f"cells {args.cells[0]}..{args.cells[1]}: "
          f"worst scaled residual {table.summary!r}")
    per_cell: dict[int, float] = {}
    for row in table.rows:
        if row.scaled is not None:
            per_cell[row.n] = max(per_cell.get(row.n, 0.0), abs(row.scaled))
    for n in sorted(per_cell):
        print(f"cell {n}: max |residual * n^2| = {per_cell[n]!r}")
    for flag in table.flags:
        print(f"flag {flag}")
    print(f"wrote {out_dir}/residuals.csv")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
