"""Artifact writers: time-series and event CSVs, JSON summaries, SVG traces.

Every float is printed with 17 significant digits so reruns are byte-identical.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .config import RunConfig, config_to_dict, dumps17
from .engine import SimResult, energy_balance_residual
from .explorer import DesignPoint, OptimizationResult, ThresholdReport, device_volume, pyroelectric_reference

TIMESERIES_HEADER = "t_s,temp_c,x_m,xdot_m_s,v_volt,mode,p_harv_w"
EVENTS_HEADER = "t_s,event,side,temp_c"
SVG_WIDTH, SVG_HEIGHT = 1200, 400
NORMALIZATION_NOTE = (
    "energy density is reported both per device bounding-box volume and per piezoelectric volume; "
    "the choice of normalisation is open"
)


def f17(value) -> str:
    return format(float(value), ".17g")


def write_text(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


def timeseries_csv(result: SimResult) -> str:
    lines = [TIMESERIES_HEADER]
    for i in range(result.n_samples):
        lines.append(",".join((
            f17(result.t[i]), f17(result.temp[i]), f17(result.x[i]), f17(result.x_dot[i]),
            f17(result.v[i]), str(result.mode[i]), f17(result.p_harv[i]),
        )))
    return "\n".join(lines) + "\n"


def events_csv(result: SimResult) -> str:
    lines = [EVENTS_HEADER]
    lines += [f"{f17(e.t)},{e.kind},{e.side},{f17(e.temp)}" for e in result.events]
    return "\n".join(lines) + "\n"


def read_timeseries(path) -> dict:
    """Columns of a time-series CSV written by :func:`timeseries_csv`."""
    with open(path) as fh:
        header = fh.readline().strip()
        if header != TIMESERIES_HEADER:
            raise ValueError(f"{path}: unexpected header {header!r}")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    names = header.split(",")
    cols = {n: [r[i] for r in rows] for i, n in enumerate(names)}
    out = {n: np.array(cols[n], dtype=float) for n in names if n != "mode"}
    out["mode"] = np.array(cols["mode"], dtype=object)
    return out


def trace_svg(t, x, title: str = "tip displacement") -> str:
    """Self-contained 1200 x 400 SVG polyline of x (mm) against t (s)."""
    t = np.asarray(t, float)
    x_mm = np.asarray(x, float) * 1e3
    left, right, top, bottom = 70, 20, 30, 40
    w, h = SVG_WIDTH - left - right, SVG_HEIGHT - top - bottom
    t0, t1 = (float(t[0]), float(t[-1])) if t.size else (0.0, 1.0)
    if t1 <= t0:
        t1 = t0 + 1.0
    ymax = max(float(np.max(np.abs(x_mm))) if x_mm.size else 0.0, 1e-9) * 1.05
    px = left + (t - t0) / (t1 - t0) * w
    py = top + (ymax - x_mm) / (2 * ymax) * h
    points = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
    zero = top + h / 2
    return "\n".join([
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" '
        f'viewBox="0 0 {SVG_WIDTH} {SVG_HEIGHT}">',
        f'<rect x="0" y="0" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{w}" height="{h}" fill="none" stroke="black"/>',
        f'<line x1="{left}" y1="{zero:.2f}" x2="{left + w}" y2="{zero:.2f}" stroke="#bbbbbb"/>',
        f'<text x="{left}" y="20" font-family="sans-serif" font-size="14">{title}</text>',
        f'<text x="5" y="{top + 12}" font-family="sans-serif" font-size="12">{ymax:.3g} mm</text>',
        f'<text x="5" y="{top + h}" font-family="sans-serif" font-size="12">{-ymax:.3g} mm</text>',
        f'<text x="{left}" y="{SVG_HEIGHT - 10}" font-family="sans-serif" font-size="12">{t0:.4g} s</text>',
        f'<text x="{left + w - 60}" y="{SVG_HEIGHT - 10}" font-family="sans-serif" font-size="12">{t1:.4g} s</text>',
        f'<polyline fill="none" stroke="#1f4e9c" stroke-width="1" points="{points}"/>',
        "</svg>",
        "",
    ])


def _design_dict(p: DesignPoint) -> dict:
    return {
        "params": p.params,
        "energy_per_cycle_J": p.energy_per_cycle,
        "energy_density_device_J_per_m3": p.energy_density,
        "energy_density_piezo_J_per_m3": p.energy_density_active,
        "pyroelectric_ratio": p.pyro_ratio,
        "thresholds": p.thresholds.as_dict() if p.thresholds else None,
        "status": p.status,
        "diagnostic": p.diagnostic,
    }


def designs_csv(points: list[DesignPoint], names: list[str]) -> str:
    header = names + [
        "energy_per_cycle_j", "energy_density_j_m3", "energy_density_piezo_j_m3", "pyro_ratio",
        "t_release_c", "t_capture_c", "hysteresis_c", "bistable", "status",
    ]
    lines = [",".join(header)]
    for p in points:
        th = p.thresholds
        vals = [f17(p.params[n]) for n in names]
        vals += [f17(p.energy_per_cycle), f17(p.energy_density), f17(p.energy_density_active), f17(p.pyro_ratio)]
        for v in (th.t_release, th.t_capture, th.hysteresis_width) if th else (None, None, None):
            vals.append("" if v is None else f17(v))
        vals.append("" if th is None else str(th.bistable).lower())
        vals.append(p.status)
        lines.append(",".join(vals))
    return "\n".join(lines) + "\n"


def _base_summary(kind: str, cfg: RunConfig, thresholds: ThresholdReport | None) -> dict:
    return {
        "kind": kind,
        "thresholds": thresholds.as_dict() if thresholds else None,
        "pyroelectric_reference": pyroelectric_reference(),
        "normalization": {
            "device_volume_m3": device_volume(cfg),
            "piezo_volume_m3": cfg.bimorph.piezo_volume,
            "note": NORMALIZATION_NOTE,
        },
        "config": config_to_dict(cfg),
    }


def emit_simulation(result: SimResult, cfg: RunConfig, thresholds: ThresholdReport | None,
                    out_dir, svg: bool = False) -> list[Path]:
    out = Path(out_dir)
    files = [
        write_text(out / "timeseries.csv", timeseries_csv(result)),
        write_text(out / "events.csv", events_csv(result)),
    ]
    harvested = result.ledger.energy_harvested
    summary = _base_summary("simulate", cfg, thresholds)
    summary.update({
        "status": result.status,
        "energy_ledger": result.ledger.as_dict(),
        "initial_energies": dict(zip(("kinetic", "spring", "electrical"), result.initial_energies)),
        "energy_balance_residual": energy_balance_residual(result),
        "energy_harvested_J": harvested,
        "energy_density_device_J_per_m3": harvested / device_volume(cfg),
        "energy_density_piezo_J_per_m3": harvested / cfg.bimorph.piezo_volume,
        "pyroelectric_ratio": harvested / device_volume(cfg) / pyroelectric_reference()["energy_density_J_per_m3"],
        "events": [{"t_s": e.t, "event": e.kind, "side": e.side, "temp_c": e.temp} for e in result.events],
        "lumped": {
            "m_eff": result.params.m_eff, "k": result.params.k, "c": result.params.c,
            "theta": result.params.theta, "c_p": result.params.c_p, "r_load": result.params.r_load,
            "coupling_figure": result.params.coupling_figure,
            "natural_frequency_hz": result.params.natural_frequency,
        },
    })
    files.append(write_text(out / "summary.json", dumps17(summary)))
    if svg:
        files.append(write_text(out / "trace.svg", trace_svg(result.t, result.x)))
    return files


def emit_thresholds(report: ThresholdReport, cfg: RunConfig, out_dir) -> list[Path]:
    summary = _base_summary("thresholds", cfg, report)
    return [write_text(Path(out_dir) / "summary.json", dumps17(summary))]


def emit_sweep(rows: list[DesignPoint], grid: dict, cfg: RunConfig, out_dir) -> list[Path]:
    out = Path(out_dir)
    names = list(grid)
    best = max(rows, key=lambda r: r.energy_per_cycle) if rows else None
    summary = _base_summary("sweep", cfg, best.thresholds if best else None)
    summary.update({
        "grid": grid,
        "rows": len(rows),
        "best": _design_dict(best) if best else None,
        "statuses": {s: sum(r.status == s for r in rows) for s in sorted({r.status for r in rows})},
    })
    return [
        write_text(out / "sweep.csv", designs_csv(rows, names)),
        write_text(out / "summary.json", dumps17(summary)),
    ]


def emit_optimization(res: OptimizationResult, bounds: dict, budget: int, cfg: RunConfig, out_dir) -> list[Path]:
    out = Path(out_dir)
    names = list(bounds)
    summary = _base_summary("optimize", cfg, res.best.thresholds)
    summary.update({
        "bounds": {k: list(v) for k, v in bounds.items()},
        "budget": budget,
        "evaluations": len(res.log),
        "restarts_run": res.restarts_run,
        "best": _design_dict(res.best),
    })
    return [
        write_text(out / "optimize_log.csv", designs_csv(res.log, names)),
        write_text(out / "summary.json", dumps17(summary)),
    ]
