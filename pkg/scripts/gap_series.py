"""Gap between the closed-form optimal drive and the drive that minimises
the steady |C200| numerically, at ten frequencies of the default pump grid.

Writes tests/data/gap_series.csv (the frozen regression artifact).

    python scripts/gap_series.py [--print-only]
"""

import argparse
from pathlib import Path

import numpy as np

from magnoblock.model import TWO_PI, SystemParams, compute_detunings
from magnoblock.steady import c200_root_check, optimal_drive
from magnoblock.sweep import omega0_grid

DATA = Path(__file__).resolve().parent.parent / "tests" / "data"
HEADER = "index,omega0_hz,E_formula_hz,E_root_hz,relative_gap"


def gap_rows(base: SystemParams | None = None) -> list[tuple]:
    base = base or SystemParams()
    grid = omega0_grid(base)
    rows = []
    for i in np.round(np.linspace(0, len(grid) - 1, 10)).astype(int):
        p = base.replace(omega_drive=float(grid[i]))
        det = compute_detunings(p)
        e_star = optimal_drive(p, det).e_star
        e_root, gap = c200_root_check(p, det)
        rows.append((int(i), float(grid[i]) / TWO_PI, e_star / TWO_PI, e_root / TWO_PI, gap))
    return rows


def to_csv(rows) -> str:
    body = [",".join([str(r[0])] + [repr(float(x)) for x in r[1:]]) for r in rows]
    return "\n".join([HEADER] + body) + "\n"


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--print-only", action="store_true")
    args = ap.parse_args()
    text = to_csv(gap_rows())
    print(text, end="")
    if not args.print_only:
        DATA.mkdir(parents=True, exist_ok=True)
        (DATA / "gap_series.csv").write_text(text)


if __name__ == "__main__":
    main()
