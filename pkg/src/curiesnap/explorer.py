"""Static thresholds, energy per thermal cycle, sweeps and design optimisation."""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .config import RunConfig
from .engine import SimResult, force_table_for, simulate
from .errors import CurieSnapError
from .harvester import LumpedParams
from .magnetics import MagnetSpec, SheetPairGeometry, _net_force_unchecked, analytic_force_gradient
from .materials import ThermoMagneticMaterial

THRESHOLD_TOL = 1e-4  # deg C
FD_STEP = 1e-6  # m

# Pyroelectric comparison baseline: 1 uW/cm^3 sustained over a 20 s, 10 degC swing.
PYRO_POWER_DENSITY_UW_CM3 = 1.0
PYRO_SWING_C = 10.0
PYRO_SWING_DURATION_S = 20.0
PYRO_ENERGY_DENSITY_J_M3 = PYRO_POWER_DENSITY_UW_CM3 * PYRO_SWING_DURATION_S  # 1 uW/cm^3 == 1 W/m^3

ForceModel = Callable[[float, float], float]


def pyroelectric_reference() -> dict:
    return {
        "power_density_uW_per_cm3": PYRO_POWER_DENSITY_UW_CM3,
        "temperature_swing_C": PYRO_SWING_C,
        "swing_duration_s": PYRO_SWING_DURATION_S,
        "energy_density_J_per_m3": PYRO_ENERGY_DENSITY_J_M3,
    }


# -- static thresholds ------------------------------------------------------------

@dataclass(frozen=True)
class ThresholdReport:
    t_release: float | None
    t_capture: float | None
    hysteresis_width: float | None
    bistable: bool

    def as_dict(self) -> dict:
        return {
            "t_release_C": self.t_release,
            "t_capture_C": self.t_capture,
            "hysteresis_width_C": self.hysteresis_width,
            "bistable": self.bistable,
        }


def _bisect_decreasing(fn, lo, hi, tol):
    """Root of ``fn`` on [lo, hi] given fn(lo) > 0 >= fn(hi)."""
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if fn(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _band(mat, band):
    if band is None:
        return mat.curie_temp - 2.0 * mat.transition_scale, mat.curie_temp
    return float(band[0]), float(band[1])


def release_margin(temp, params: LumpedParams, geom: SheetPairGeometry, magnet: MagnetSpec,
                   mat: ThermoMagneticMaterial, force: ForceModel | None = None) -> float:
    """h(T) = F(x_c, T) - k x_c: positive while a tip held on the top stop stays put."""
    x_c = geom.contact_limit
    f = force(x_c, temp) if force else float(_net_force_unchecked(x_c, temp, geom, magnet.dipole_moment, mat))
    return f - params.k * x_c


def capture_margin(temp, params: LumpedParams, geom: SheetPairGeometry, magnet: MagnetSpec,
                   mat: ThermoMagneticMaterial, force: ForceModel | None = None) -> float:
    """g(T) = dF/dx(0, T) - k: positive once the centre is unstable."""
    if force is None:
        grad = float(analytic_force_gradient(0.0, temp, geom, magnet, mat, FD_STEP))
    else:
        grad = (force(FD_STEP, temp) - force(-FD_STEP, temp)) / (2.0 * FD_STEP)
    return grad - params.k


def find_release_temperature(params, geom, magnet, mat, *, band=None, force=None, tol=THRESHOLD_TOL):
    """Temperature at which a tip stuck on a stop lets go on heating, or None.

    The search band defaults to [T_C - 2 scale, T_C]; above T_C the hold force
    is zero so the margin is -k x_c there.
    """
    lo, hi = _band(mat, band)

    def h(T):
        return release_margin(T, params, geom, magnet, mat, force)

    if h(lo) <= 0.0 or h(hi) > 0.0:
        return None
    return _bisect_decreasing(h, lo, hi, tol)


def find_capture_temperature(params, geom, magnet, mat, *, band=None, force=None, tol=THRESHOLD_TOL):
    """Temperature below which the centre position becomes unstable on cooling, or None."""
    lo, hi = _band(mat, band)

    def g(T):
        return capture_margin(T, params, geom, magnet, mat, force)

    if g(lo) <= 0.0 or g(hi) > 0.0:
        return None
    return _bisect_decreasing(g, lo, hi, tol)


def threshold_report(params, geom, magnet, mat, *, band=None, force=None) -> ThresholdReport:
    t_rel = find_release_temperature(params, geom, magnet, mat, band=band, force=force)
    t_cap = find_capture_temperature(params, geom, magnet, mat, band=band, force=force)
    bistable = t_rel is not None and t_cap is not None and t_cap <= t_rel
    width = t_rel - t_cap if (t_rel is not None and t_cap is not None) else None
    return ThresholdReport(t_rel, t_cap, width, bistable)


def config_thresholds(cfg: RunConfig) -> ThresholdReport:
    mat = cfg.material
    band = (mat.curie_temp - cfg.explorer.band_below_curie, mat.curie_temp)
    return threshold_report(cfg.lumped_params(), cfg.geometry, cfg.magnet, mat, band=band)


# -- energy per cycle ----------------------------------------------------------------

def device_volume(cfg: RunConfig) -> float:
    """Bounding box of beam and sheet pair: length x max(width) x sheet-to-sheet height."""
    g, b = cfg.geometry, cfg.bimorph
    height = 2.0 * (g.half_gap + abs(g.sheet_offset) + g.sheet_thickness)
    return b.length * max(b.width, g.sheet_width) * height


@dataclass
class DesignPoint:
    params: dict
    energy_per_cycle: float = 0.0
    energy_density: float = 0.0
    energy_density_active: float = 0.0
    pyro_ratio: float = 0.0
    thresholds: ThresholdReport | None = None
    status: str = "ok"
    diagnostic: str = ""
    events: int = 0
    result: SimResult | None = field(default=None, repr=False, compare=False)

    @property
    def feasible(self) -> bool:
        return self.status == "ok"


def energy_per_cycle(cfg: RunConfig, *, table=None, threads: int = 1, keep_result: bool = False,
                     params: dict | None = None) -> DesignPoint:
    """Harvested energy over one thermal period, measured after one warm-up period.

    Non-bistable designs, or thresholds outside the thermal band, give 0 J
    with status ``no-snap``.  Table profiles have no repeat, so the whole
    record is measured without warm-up.
    """
    params = dict(params or {})
    report = config_thresholds(cfg)
    profile = cfg.profile()
    point = DesignPoint(params=params, thresholds=report)
    if not report.bistable:
        which = "release" if report.t_release is None else "capture"
        point.status, point.diagnostic = "no-snap", f"no {which} threshold below the Curie point"
        return point
    if not (profile.t_min < report.t_capture and report.t_release < profile.t_max):
        point.status = "no-snap"
        point.diagnostic = (
            f"thresholds [{report.t_capture:.4f}, {report.t_release:.4f}] C not crossed by the "
            f"thermal band [{profile.t_min}, {profile.t_max}] C"
        )
        return point

    lumped = cfg.lumped_params()
    period = profile.cycle_period
    if profile.kind == "table":
        t0, t_warm, t_end = profile.table_times[0], None, profile.table_times[-1]
    else:
        t0, t_warm, t_end = 0.0, period, 2.0 * period
    base = cfg.sim_config(t_start=t0, t_end=t_end)
    if table is None:
        table = force_table_for(base, cfg.geometry, cfg.magnet, cfg.material, profile, threads)
    initial = None
    if t_warm is not None:
        warm = simulate(replace(base, t_end=t_warm), lumped, cfg.geometry, cfg.magnet, cfg.material, profile, table)
        initial = warm.final_state
        t0 = t_warm
    run = simulate(replace(base, t_start=t0, initial=initial or base.initial), lumped, cfg.geometry,
                   cfg.magnet, cfg.material, profile, table)

    energy = max(run.ledger.energy_harvested, 0.0)
    point.energy_per_cycle = energy
    point.energy_density = energy / device_volume(cfg)
    point.energy_density_active = energy / cfg.bimorph.piezo_volume
    point.pyro_ratio = point.energy_density / PYRO_ENERGY_DENSITY_J_M3
    point.events = len(run.events)
    if keep_result:
        point.result = run
    if not any(e.kind == "release" for e in run.events):
        point.status, point.diagnostic = "no-snap", "no release event during the measured period"
    return point


# -- sweeps ------------------------------------------------------------------------

def grid_points(grid: dict) -> list[dict]:
    """Cartesian product of a {name: values} grid, last name varying fastest."""
    names = list(grid)
    return [dict(zip(names, combo)) for combo in itertools.product(*(grid[n] for n in names))]


def evaluate_design(base: RunConfig, assignment: dict) -> DesignPoint:
    """energy_per_cycle of one design; failures become the row status instead of raising."""
    try:
        cfg = base.with_updates(assignment)
        return energy_per_cycle(cfg, params=assignment)
    except CurieSnapError as exc:
        return DesignPoint(params=dict(assignment), status="failed", diagnostic=str(exc))


def sweep(base: RunConfig, grid: dict, *, threads: int = 1) -> list[DesignPoint]:
    """One independently evaluated row per grid point, in grid order."""
    points = grid_points(grid)
    if threads <= 1:
        return [evaluate_design(base, p) for p in points]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda p: evaluate_design(base, p), points))


# -- optimisation -----------------------------------------------------------------

class OptimizationError(CurieSnapError):
    """Every evaluated design was infeasible."""


@dataclass
class OptimizationResult:
    best: DesignPoint
    log: list
    restarts_run: int


def halton(index: int, dim: int) -> np.ndarray:
    """Point ``index`` (>= 1) of the Halton sequence in [0, 1)^dim."""
    primes = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37]
    out = np.empty(dim)
    for d in range(dim):
        base, f, r, i = primes[d], 1.0, 0.0, index
        while i > 0:
            f /= base
            r += f * (i % base)
            i //= base
        out[d] = r
    return out


class _Budget(Exception):
    pass


def optimize(
    base: RunConfig | None,
    bounds: dict,
    budget: int,
    *,
    restarts: int = 5,
    objective: Callable[[dict], float] | None = None,
    start: dict | None = None,
    initial_step: float = 0.25,
    xtol: float = 1e-4,
    threads: int = 1,
) -> OptimizationResult:
    """Bounded multi-start Nelder-Mead maximising energy per cycle.

    Works in the unit cube spanned by ``bounds``; trial points are clipped
    onto it.  ``objective`` replaces the simulation with f(assignment).
    Restarts share the evaluation budget and run one after another: restart 0
    starts at ``start`` (default the box centre), later ones at Halton points.
    """
    names = list(bounds)
    dim = len(names)
    lo = np.array([bounds[n][0] for n in names], float)
    hi = np.array([bounds[n][1] for n in names], float)
    if np.any(~(lo < hi)):
        raise CurieSnapError("bounds must satisfy lo < hi")
    if budget < dim + 2:
        raise CurieSnapError(f"budget must be >= dimension + 2 = {dim + 2}")
    if objective is None and base is None:
        raise CurieSnapError("either a base config or an objective is required")

    log: list[DesignPoint] = []

    def assignment(u):
        p = lo + np.clip(u, 0.0, 1.0) * (hi - lo)
        return {n: float(v) for n, v in zip(names, p)}

    def run_one(u):
        a = assignment(u)
        if objective is not None:
            return DesignPoint(params=a, energy_per_cycle=float(objective(a)))
        return evaluate_design(base, a)

    def score(pt):
        # infeasible points sit below every feasible one
        return pt.energy_per_cycle if pt.feasible else -1.0

    def evaluate(us):
        if len(log) + len(us) > budget:
            raise _Budget
        us = [np.clip(u, 0.0, 1.0) for u in us]
        if threads > 1 and len(us) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                pts = list(pool.map(run_one, us))
        else:
            pts = [run_one(u) for u in us]
        log.extend(pts)
        return us, [-score(p) for p in pts]

    restarts_run = 0
    u0 = np.full(dim, 0.5)
    if start is not None:
        u0 = np.array([(start[n] - bounds[n][0]) / (bounds[n][1] - bounds[n][0]) for n in names])
    for r in range(restarts):
        if budget - len(log) < dim + 1:
            break
        restarts_run += 1
        start_u = u0 if r == 0 else halton(r, dim)
        try:
            _nelder_mead(evaluate, start_u, dim, initial_step, xtol, budget, log)
        except _Budget:
            break

    best = max(log, key=score)  # first of equal scores
    if not any(p.feasible for p in log):
        raise OptimizationError(
            f"all {len(log)} evaluated designs infeasible; best attempt {best.params}: "
            f"{best.status} ({best.diagnostic})"
        )
    return OptimizationResult(best=best, log=log, restarts_run=restarts_run)


def _nelder_mead(evaluate, start, dim, step, xtol, budget, log):
    """Minimise in the unit cube; stops on simplex collapse, a flat simplex, or budget exhaustion."""
    simplex = [np.clip(start, 0.0, 1.0)]
    for i in range(dim):
        v = simplex[0].copy()
        v[i] = v[i] + step if v[i] + step <= 1.0 else v[i] - step
        simplex.append(v)
    simplex, vals = evaluate(simplex)
    simplex, vals = np.array(simplex), np.array(vals)

    while budget - len(log) >= 2:
        order = np.argsort(vals, kind="stable")
        simplex, vals = simplex[order], vals[order]
        if np.max(np.abs(simplex[1:] - simplex[0])) < xtol or vals[-1] == vals[0]:
            return
        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        (xr,), (fr,) = evaluate([centroid + (centroid - worst)])
        if fr < vals[0]:
            (xe,), (fe,) = evaluate([centroid + 2.0 * (centroid - worst)])
            simplex[-1], vals[-1] = (xe, fe) if fe < fr else (xr, fr)
            continue
        if fr < vals[-2]:
            simplex[-1], vals[-1] = xr, fr
            continue
        if fr < vals[-1]:
            (xc,), (fc,) = evaluate([centroid + 0.5 * (xr - centroid)])
            accept = fc <= fr
        else:
            (xc,), (fc,) = evaluate([centroid + 0.5 * (worst - centroid)])
            accept = fc < vals[-1]
        if accept:
            simplex[-1], vals[-1] = xc, fc
            continue
        shrunk = [simplex[0] + 0.5 * (v - simplex[0]) for v in simplex[1:]]
        pts, fs = evaluate(shrunk)
        simplex[1:], vals[1:] = np.array(pts), np.array(fs)
