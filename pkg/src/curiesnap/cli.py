"""``curiesnap`` command line: simulate, thresholds, force-table, sweep, optimize, plot.

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O failure.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import RunConfig, dumps17, parse_config
from .engine import force_table_for, simulate
from .errors import ConfigError, CurieSnapError
from .explorer import config_thresholds, optimize, sweep, threshold_report
from .magnetics import ForceTable, interp_force
from .output import (
    emit_optimization,
    emit_simulation,
    emit_sweep,
    emit_thresholds,
    read_timeseries,
    trace_svg,
    write_text,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4


def _load(args) -> RunConfig:
    cfg = parse_config(args.config)
    updates = {}
    if args.backend:
        updates["sim.backend"] = args.backend
    if args.out:
        updates["output.dir"] = args.out
    if args.svg:
        updates["output.svg"] = True
    return cfg.with_updates(updates) if updates else cfg


def _table(cfg: RunConfig, threads: int, sim=None):
    sim = sim or cfg.sim_config()
    if cfg.sim.force_table_csv:
        try:
            return ForceTable.from_csv(Path(cfg.base_dir) / cfg.sim.force_table_csv)
        except (ValueError, IndexError) as exc:
            raise ConfigError(f"unreadable force table: {exc}", "/sim/force_table_csv") from exc
    return force_table_for(sim, cfg.geometry, cfg.magnet, cfg.material, cfg.profile(), threads)


def _thresholds(cfg: RunConfig, table):
    if cfg.sim.backend == "analytic" and not cfg.sim.force_table_csv:
        return config_thresholds(cfg)
    mat = cfg.material
    band = (max(mat.curie_temp - cfg.explorer.band_below_curie, table.t_grid[0]), mat.curie_temp)
    return threshold_report(cfg.lumped_params(), cfg.geometry, cfg.magnet, mat, band=band,
                            force=lambda x, T: interp_force(table, x, T))


def cmd_simulate(cfg: RunConfig, args) -> list[Path]:
    sim = cfg.sim_config()
    table = _table(cfg, args.threads, sim)
    result = simulate(sim, cfg.lumped_params(), cfg.geometry, cfg.magnet, cfg.material, cfg.profile(), table)
    return emit_simulation(result, cfg, _thresholds(cfg, table), cfg.output.dir, svg=cfg.output.svg)


def cmd_thresholds(cfg: RunConfig, args) -> list[Path]:
    table = None if cfg.sim.backend == "analytic" else _table(cfg, args.threads)
    return emit_thresholds(_thresholds(cfg, table), cfg, cfg.output.dir)


def cmd_force_table(cfg: RunConfig, args) -> list[Path]:
    table = _table(cfg, args.threads)
    out = Path(cfg.output.dir)
    path = out / "force_table.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(path)
    summary = {
        "kind": "force-table",
        "source": table.source,
        "x_points": int(table.x_grid.size),
        "t_points": int(table.t_grid.size),
        "x_range_m": [float(table.x_grid[0]), float(table.x_grid[-1])],
        "t_range_c": [float(table.t_grid[0]), float(table.t_grid[-1])],
        "antisymmetry_error": table.antisymmetry_error(),
    }
    return [path, write_text(out / "summary.json", dumps17(summary))]


def cmd_sweep(cfg: RunConfig, args) -> list[Path]:
    grid = cfg.explorer.sweep
    rows = sweep(cfg, grid, threads=args.threads)
    return emit_sweep(rows, grid, cfg, cfg.output.dir)


def cmd_optimize(cfg: RunConfig, args) -> list[Path]:
    bounds = {k: tuple(v) for k, v in cfg.explorer.bounds.items()}
    res = optimize(cfg, bounds, cfg.explorer.budget, restarts=cfg.explorer.restarts, threads=args.threads)
    return emit_optimization(res, bounds, cfg.explorer.budget, cfg, cfg.output.dir)


def cmd_plot(cfg: RunConfig, args) -> list[Path]:
    source = Path(args.input) if args.input else Path(cfg.output.dir) / "timeseries.csv"
    try:
        data = read_timeseries(source)
    except ValueError as exc:
        raise ConfigError(str(exc), "/input") from exc
    return [write_text(Path(cfg.output.dir) / "trace.svg", trace_svg(data["t_s"], data["x_m"]))]


COMMANDS = {
    "simulate": (cmd_simulate, "run one hybrid simulation and write CSV / JSON (and SVG) outputs"),
    "thresholds": (cmd_thresholds, "static release and capture temperatures"),
    "force-table": (cmd_force_table, "tabulate the magnetic force on the (T, x) grid"),
    "sweep": (cmd_sweep, "energy per cycle over the explorer.sweep grid"),
    "optimize": (cmd_optimize, "multi-start simplex search over explorer.bounds"),
    "plot": (cmd_plot, "render trace.svg from a time-series CSV"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration (every field optional)")
    common.add_argument("--out", help="output directory (overrides output.dir)")
    common.add_argument("--backend", choices=("analytic", "moment"), help="force backend (overrides sim.backend)")
    common.add_argument("--threads", type=int, default=1, help="worker threads for tables, sweeps, optimisation")
    common.add_argument("--svg", action="store_true", help="also write trace.svg")
    parser = argparse.ArgumentParser(prog="curiesnap", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text)
        if name == "plot":
            p.add_argument("--input", help="time-series CSV (default: <out>/timeseries.csv)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = _load(args)
        files = COMMANDS[args.command][0](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (CurieSnapError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    for path in files:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
