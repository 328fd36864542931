"""Full-resolution optimal-feedback surface: record the deepest g2_avg.

Writes tests/data/depth_baseline.json. Takes a few minutes on one core.

    python scripts/depth_baseline.py [--workers N] [--coarse]
"""

import argparse
import json
import math
import time
from pathlib import Path

from magnoblock.config import RunConfig, SweepSettings
from magnoblock.experiments import ratio_grid, spec_for
from magnoblock.model import TWO_PI
from magnoblock.sweep import sweep_2d

DATA = Path(__file__).resolve().parent.parent / "tests" / "data"


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--coarse", action="store_true", help="21 x 41 grid instead of 101 x 201")
    args = ap.parse_args()

    sweep = SweepSettings(n_omega0=41, n_omega_m=21) if args.coarse else SweepSettings()
    cfg = RunConfig(sweep=sweep)
    t0 = time.perf_counter()
    grid = sweep_2d(spec_for(cfg, "optimal-feedback", args.workers, omega_m_grid=ratio_grid(cfg)))
    elapsed = time.perf_counter() - t0

    best = min((r for row in grid for r in row if not math.isnan(r.g2_avg)), key=lambda r: r.g2_avg)
    result = {
        "grid": [len(grid), len(grid[0])],
        "min_g2_avg": best.g2_avg,
        "omega0_hz": best.omega0 / TWO_PI,
        "omega_m_over_omega_c": best.omega_m / best.omega_c,
        "steady_reached": best.steady_reached,
        "failed_points": sum(1 for row in grid for r in row if r.error),
        "seconds": round(elapsed, 1),
    }
    print(json.dumps(result, indent=2))
    if not args.coarse:
        DATA.mkdir(parents=True, exist_ok=True)
        (DATA / "depth_baseline.json").write_text(json.dumps(result, indent=2) + "\n")


if __name__ == "__main__":
    main()
