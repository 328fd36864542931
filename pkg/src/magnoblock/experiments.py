"""Figure experiments: each runner turns a RunConfig into CSV files (and
optional SVG views) in an output directory and returns the paths written."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .config import RunConfig
from .model import TWO_PI
from .sweep import (
    SweepSpec,
    compare_optimal_vs_constant,
    locus_csv,
    matrix_csv,
    omega0_grid,
    omega_m_ratios,
    paired_csv,
    phase_drive_locus,
    records_csv,
    sweep_1d,
    sweep_2d,
)

FIGURES = ("fig2", "fig3", "fig4", "fig5", "fig6", "fig7")


class OutputError(OSError):
    """An output file could not be written; ``path`` names it."""

    def __init__(self, path, cause: Exception):
        super().__init__(f"cannot write {path}: {cause}")
        self.path = str(path)


def write_text(path: Path, text: str) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OutputError(path, exc) from exc
    return path


def _svg(fn, path: Path, *args, **kwargs) -> Path:
    try:
        fn(path, *args, **kwargs)
    except OSError as exc:
        raise OutputError(path, exc) from exc
    return path


def spec_for(cfg: RunConfig, mode: str, workers: int = 1, **overrides) -> SweepSpec:
    s = cfg.sweep
    kwargs = dict(
        omega0_grid=tuple(omega0_grid(cfg.params, s.n_omega0, s.omega0_span)),
        mode=mode,
        base=cfg.params,
        integrator=cfg.integrator,
        horizon=s.horizon_s,
        samples=s.samples,
        workers=workers,
        method=s.method,
        constant_phi=s.constant_phi,
        constant_E=TWO_PI * (s.no_feedback_E_hz if mode == "no-feedback" else s.constant_E_hz),
    )
    kwargs.update(overrides)
    return SweepSpec(**kwargs)


def _offset_mhz(cfg: RunConfig, omega0) -> np.ndarray:
    return (np.asarray(omega0, dtype=float) - float(cfg.params.omega_c)) / TWO_PI / 1e6


def ratio_grid(cfg: RunConfig) -> tuple:
    s = cfg.sweep
    return tuple(omega_m_ratios(s.n_omega_m, s.omega_m_ratio_min, s.omega_m_ratio_max))


def fig2(cfg: RunConfig, out: Path, workers: int = 1, svg: bool = False) -> list[Path]:
    """Optimal phase and drive along the pump-frequency grid."""
    grid = omega0_grid(cfg.params, cfg.sweep.n_omega0, cfg.sweep.omega0_span)
    pts = phase_drive_locus(cfg.params, grid)
    paths = [write_text(out / "fig2_locus.csv", locus_csv(pts))]
    if svg:
        from .plotting import scatter_svg

        paths.append(_svg(scatter_svg, out / "fig2_locus.svg",
                          [p.phi_star for p in pts], [p.e_star / TWO_PI for p in pts],
                          "phi* (rad)", "E* / 2pi (Hz)", "optimal drive locus"))
    return paths


def fig3(cfg: RunConfig, out: Path, workers: int = 1, svg: bool = False) -> list[Path]:
    """1-D pump-frequency sweep with the optimal feedback drive."""
    recs = sweep_1d(spec_for(cfg, "optimal-feedback", workers))
    paths = [write_text(out / "fig3_sweep.csv", records_csv(recs))]
    if svg:
        from .plotting import line_svg

        paths.append(_svg(line_svg, out / "fig3_sweep.svg", _offset_mhz(cfg, [r.omega0 for r in recs]),
                          {"optimal feedback": [r.log10_g2_avg for r in recs]},
                          "(omega0 - omega_c) / 2pi (MHz)", "log10 g2(0)"))
    return paths


def _surface(cfg, out, workers, mode, stem, ratios):
    grid = sweep_2d(spec_for(cfg, mode, workers, omega_m_grid=ratios))
    paths = [
        write_text(out / f"{stem}_records.csv", records_csv([r for row in grid for r in row])),
        write_text(out / f"{stem}_matrix.csv", matrix_csv(grid)),
    ]
    return grid, paths


def fig4(cfg: RunConfig, out: Path, workers: int = 1, svg: bool = False) -> list[Path]:
    """2-D (omega0, omega_m) surface with the optimal feedback drive."""
    grid, paths = _surface(cfg, out, workers, "optimal-feedback", "fig4", ratio_grid(cfg))
    if svg:
        paths.append(_heatmap(cfg, grid, out / "fig4_surface.svg", "optimal feedback"))
    return paths


def fig5(cfg: RunConfig, out: Path, workers: int = 1, svg: bool = False) -> list[Path]:
    """Fixed-omega_m slices of the optimal-feedback surface."""
    grid, paths = _surface(cfg, out, workers, "optimal-feedback", "fig5", cfg.sweep.slice_ratios)
    if svg:
        from .plotting import line_svg

        x = _offset_mhz(cfg, [r.omega0 for r in grid[0]])
        curves = {f"omega_m = {ratio:g} omega_c": [r.log10_g2_avg for r in row]
                  for ratio, row in zip(cfg.sweep.slice_ratios, grid)}
        paths.append(_svg(line_svg, out / "fig5_slices.svg", x, curves,
                          "(omega0 - omega_c) / 2pi (MHz)", "log10 g2(0)"))
    return paths


def fig6(cfg: RunConfig, out: Path, workers: int = 1, svg: bool = False) -> list[Path]:
    """2-D surface without feedback (Omega mu = 0)."""
    grid, paths = _surface(cfg, out, workers, "no-feedback", "fig6", ratio_grid(cfg))
    if svg:
        paths.append(_heatmap(cfg, grid, out / "fig6_surface.svg", "no feedback"))
    return paths


def fig7(cfg: RunConfig, out: Path, workers: int = 1, svg: bool = False) -> list[Path]:
    """Optimal feedback drive against a constant (phi, E) drive."""
    s = cfg.sweep
    base = spec_for(cfg, "optimal-feedback", workers)
    pairs = compare_optimal_vs_constant(
        cfg.params, base.omega0_grid, s.constant_phi, TWO_PI * s.constant_E_hz,
        integrator=cfg.integrator, horizon=s.horizon_s, samples=s.samples,
        workers=workers, method=s.method,
    )
    paths = [write_text(out / "fig7_paired.csv", paired_csv(pairs))]
    if svg:
        from .plotting import line_svg

        x = _offset_mhz(cfg, [a.omega0 for a, _ in pairs])
        curves = {"optimal": [a.log10_g2_avg for a, _ in pairs],
                  "constant": [b.log10_g2_avg for _, b in pairs]}
        paths.append(_svg(line_svg, out / "fig7_compare.svg", x, curves,
                          "(omega0 - omega_c) / 2pi (MHz)", "log10 g2(0)"))
    return paths


def _heatmap(cfg, grid, path, title):
    from .plotting import heatmap_svg

    x = _offset_mhz(cfg, [r.omega0 for r in grid[0]])
    y = [row[0].omega_m / row[0].omega_c for row in grid]
    z = [[r.log10_g2_avg for r in row] for row in grid]
    return _svg(heatmap_svg, path, x, y, z, "(omega0 - omega_c) / 2pi (MHz)",
                "omega_m / omega_c", "log10 g2(0)", title)


RUNNERS = {"fig2": fig2, "fig3": fig3, "fig4": fig4, "fig5": fig5, "fig6": fig6, "fig7": fig7}


def run_figure(name: str, cfg: RunConfig, out, workers: int = 1, svg: bool = False) -> list[Path]:
    if name not in RUNNERS:
        raise KeyError(f"unknown figure {name!r}; valid names: {', '.join(FIGURES)}")
    return RUNNERS[name](cfg, Path(out), workers, svg)
