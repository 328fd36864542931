"""Regenerate the data (and optionally SVG views) behind every figure.

    python scripts/reproduce_figures.py OUT_DIR [--workers N] [--svg] [--only fig3 fig7]

The surface figures (fig4, fig6) run 101 x 201 points each and take a few
minutes apiece on one core.
"""

import argparse
import time
from pathlib import Path

from magnoblock.config import RunConfig
from magnoblock.experiments import FIGURES, run_figure


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out", type=Path)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--svg", action="store_true")
    ap.add_argument("--only", nargs="+", choices=FIGURES, default=list(FIGURES))
    args = ap.parse_args()

    cfg = RunConfig()
    for name in args.only:
        t0 = time.perf_counter()
        paths = run_figure(name, cfg, args.out, args.workers, args.svg)
        print(f"{name}: {time.perf_counter() - t0:.1f} s -> {', '.join(str(p) for p in paths)}")


if __name__ == "__main__":
    main()
