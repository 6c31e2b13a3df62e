"""Hybrid event-driven simulation of the thermally switched harvester.

Fixed-step RK4 in free flight; a crossing of either stop is localised by
bisection on the step length, after which the tip sticks (perfectly
inelastic contact) and only the piezo voltage relaxes until the hold force
gives way.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels as K
from .errors import ConfigError, InvalidInputError, NumericalFailure
from .harvester import (
    FREE,
    MODES,
    STUCK_BOTTOM,
    STUCK_TOP,
    EnergyLedger,
    HarvesterState,
    LumpedParams,
    mode_transition,
    stored_energies,
)
from .magnetics import (
    ForceTable,
    MagnetSpec,
    SheetPairGeometry,
    build_force_table,
    default_t_grid,
    default_x_grid,
)
from .materials import ThermoMagneticMaterial
from .thermal import ThermalProfile, temperature_at

MODE_CODES = {FREE: 0, STUCK_TOP: 1, STUCK_BOTTOM: 2}
SIDE_NAMES = {1: "top", -1: "bottom"}


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-4
    t_end: float = 400.0
    t_start: float = 0.0
    event_tol: float = 1e-9
    sample_every: int = 100
    coupling: bool = True
    backend: str = "analytic"
    x_points: int = 1701
    t_step: float = 0.01
    t_margin: float = 0.5
    mesh_counts: tuple = (10, 10, 1)
    kernel: str = "prism"
    initial: HarvesterState | None = None

    def __post_init__(self):
        if not (self.dt > 0):
            raise InvalidInputError("dt must be > 0")
        if not (self.t_end > self.t_start):
            raise InvalidInputError("t_end must exceed t_start")
        if not (0 < self.event_tol < self.dt):
            raise InvalidInputError("event_tol must lie in (0, dt)")
        if self.sample_every < 1:
            raise InvalidInputError("sample_every must be >= 1")
        if self.backend not in ("analytic", "moment"):
            raise InvalidInputError(f"unknown backend {self.backend!r}")

    def initial_state(self, geom: SheetPairGeometry, profile: ThermalProfile) -> HarvesterState:
        temp = temperature_at(profile, self.t_start)
        if self.initial is None:
            return HarvesterState(self.t_start, temp, geom.contact_limit, 0.0, 0.0, STUCK_TOP)
        return replace(self.initial, t=self.t_start, temp=temp)


@dataclass
class Event:
    t: float
    kind: str  # "stick" | "release"
    side: str  # "top" | "bottom"
    temp: float
    v: float = 0.0
    x_dot: float = 0.0


@dataclass
class SimResult:
    t: np.ndarray
    temp: np.ndarray
    x: np.ndarray
    x_dot: np.ndarray
    v: np.ndarray
    mode: np.ndarray  # mode labels
    p_harv: np.ndarray
    events: list
    ledger: EnergyLedger
    initial_energies: tuple
    final_state: HarvesterState
    status: str = "completed"
    params: LumpedParams | None = field(default=None, repr=False)
    dt: float = 0.0

    @property
    def n_samples(self) -> int:
        return self.t.size


def force_table_for(cfg: SimConfig, geom, magnet, mat, profile, threads: int = 1) -> ForceTable:
    lo = min(profile.t_min, mat.curie_temp) - cfg.t_margin
    hi = max(profile.t_max, mat.curie_temp) + cfg.t_margin
    return build_force_table(
        cfg.backend,
        default_x_grid(geom, cfg.x_points),
        default_t_grid(lo, hi, cfg.t_step, mat.curie_temp),
        geom,
        magnet,
        mat,
        mesh_counts=cfg.mesh_counts,
        kernel=cfg.kernel,
        threads=threads,
    )


def _check_table(table: ForceTable, geom, profile):
    if table.x_grid[0] > -geom.contact_limit or table.x_grid[-1] < geom.contact_limit:
        raise ConfigError("force table does not span the stops", "/sim/force_table")
    if table.t_grid[0] > profile.t_min or table.t_grid[-1] < profile.t_max:
        raise ConfigError(
            f"force table temperatures [{table.t_grid[0]}, {table.t_grid[-1]}] do not cover "
            f"the profile band [{profile.t_min}, {profile.t_max}]",
            "/sim/force_table",
        )


def simulate(
    cfg: SimConfig,
    params: LumpedParams,
    geom: SheetPairGeometry,
    magnet: MagnetSpec,
    mat: ThermoMagneticMaterial,
    profile: ThermalProfile,
    table: ForceTable | None = None,
) -> SimResult:
    if table is None:
        table = force_table_for(cfg, geom, magnet, mat, profile)
    _check_table(table, geom, profile)
    if profile.kind == "table" and not (
        profile.table_times[0] <= cfg.t_start and cfg.t_end <= profile.table_times[-1]
    ):
        raise ConfigError("simulation window outside the tabulated temperature record", "/sim/t_end")

    xg, tg, vals = table.x_grid, table.t_grid, table.values
    kind = K.PROFILE_CODES[profile.kind]
    prof = np.array([
        profile.t_min, profile.t_max, profile.rate or 0.0,
        profile.cycle_period if profile.kind != "table" else 1.0, profile.phase,
    ])
    tab_t = np.asarray(profile.table_times or (0.0, 1.0), dtype=float)
    tab_v = np.asarray(profile.table_temps or (0.0, 0.0), dtype=float)

    def temp(t):
        return float(K.temp_at(t, kind, prof, tab_t, tab_v))

    def force(x, T):
        return float(K.table_force(xg, tg, vals, x, T))

    theta = params.theta if cfg.coupling else 0.0
    lp = np.array([params.m_eff, params.k, params.c, theta, params.c_p, 1.0 / params.r_load])
    xc = geom.contact_limit
    dt, t0 = cfg.dt, cfg.t_start
    n_total = int(round((cfg.t_end - t0) / dt))
    every = cfg.sample_every

    state = cfg.initial_state(geom, profile)
    if abs(state.x) > xc + 1e-12:
        raise ConfigError(f"initial |x| = {abs(state.x)} exceeds the stop {xc}", "/sim/initial/x")
    if state.mode != FREE:
        state = replace(state, x=state.side * xc, x_dot=0.0)
    e0 = stored_energies(state, params)

    buf = np.empty((n_total // every + 8, 6))
    count = K._record(buf, 0, t0, state.temp, state.x, state.x_dot, state.v, float(MODE_CODES[state.mode]))
    ledger = np.zeros(3)  # magnetic work, damped, harvested
    impact = 0.0
    events: list[Event] = []

    def transition(s):
        new, lost = mode_transition(s, params, geom, force, cfg.coupling)
        if new.mode != s.mode:
            side = new.side if new.mode != FREE else s.side
            events.append(Event(s.t, "stick" if new.mode != FREE else "release", SIDE_NAMES[side], s.temp,
                                s.v, s.x_dot))
        return new, lost

    state, _ = transition(state)
    n = 0
    while n < n_total:
        if state.mode == FREE:
            status, n, x, xd, v, count = K.advance_free(
                n, n_total, t0, dt, state.x, state.x_dot, state.v, lp, xc, xg, tg, vals,
                kind, prof, tab_t, tab_v, every, buf, count, ledger,
            )
            t = t0 + n * dt
            state = HarvesterState(t, temp(t), x, xd, v, FREE)
            if status == K.STATUS_NONFINITE:
                raise NumericalFailure(f"non-finite state after t = {t:.9g} s", time=t)
            if status != K.STATUS_CROSS:
                continue
            state, n, count, lost = _resolve_crossing(
                state, n, t0, dt, cfg.event_tol, lp, xc, table, kind, prof, tab_t, tab_v, params,
                every, buf, count, ledger, transition, temp, force,
            )
            impact += lost
        else:
            side = state.side
            status, n, v, count = K.advance_stuck(
                n, n_total, t0, dt, side, state.v, lp, xc, cfg.coupling, xg, tg, vals,
                kind, prof, tab_t, tab_v, every, buf, count, ledger,
            )
            t = t0 + n * dt
            state = replace(state, t=t, temp=temp(t), v=v)
            if status == K.STATUS_RELEASE:
                state, _ = transition(state)

    final_t = t0 + n_total * dt
    if count == 0 or buf[count - 1, 0] != final_t:
        count = K._record(buf, count, final_t, state.temp, state.x, state.x_dot, state.v,
                          float(MODE_CODES[state.mode]))
    ek, es, ee = stored_energies(state, params)
    led = EnergyLedger(
        work_magnetic=float(ledger[0]),
        energy_kinetic=ek,
        energy_spring=es,
        energy_electrical_stored=ee,
        energy_damped=float(ledger[1]),
        energy_harvested=float(ledger[2]),
        energy_impact_lost=impact,
    )
    data = buf[:count]
    labels = np.array(MODES, dtype=object)[data[:, 5].astype(int)]
    return SimResult(
        t=data[:, 0].copy(), temp=data[:, 1].copy(), x=data[:, 2].copy(), x_dot=data[:, 3].copy(),
        v=data[:, 4].copy(), mode=labels, p_harv=data[:, 4] ** 2 / params.r_load,
        events=events, ledger=led, initial_energies=e0, final_state=state, params=params, dt=dt,
    )


def _resolve_crossing(state, n, t0, dt, tol, lp, xc, table, kind, prof, tab_t, tab_v, params,
                      every, buf, count, ledger, transition, temp, force):
    """Bisect the step from ``state`` (at step ``n``) onto the stop, stick, and finish the step."""
    xg, tg, vals = table.x_grid, table.t_grid, table.values
    t = state.t
    f0 = force(state.x, state.temp)

    def trial(h):
        return K.rk4_free(t, h, state.x, state.x_dot, state.v, f0, lp, xg, tg, vals, kind, prof, tab_t, tab_v)

    lo, hi = 0.0, dt
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if abs(trial(mid)[0]) > xc:
            hi = mid
        else:
            lo = mid
    x1, xd1, v1, dw, dd, dh = trial(hi)
    t_hit = t + hi
    T_hit = temp(t_hit)
    ledger[0] += dw
    ledger[1] += dd
    ledger[2] += dh
    hit = HarvesterState(t_hit, T_hit, x1, xd1, v1, FREE)
    stuck, lost = transition(hit)
    if stuck.mode == FREE:
        raise NumericalFailure(f"stop crossing at t = {t_hit:.9g} s could not be resolved", time=t_hit)

    # remainder of the step on the stop
    rest = dt - hi
    v_end = stuck.v * math.exp(-rest * lp[5] / lp[4])
    ledger[2] += 0.5 * lp[4] * (stuck.v**2 - v_end**2)
    n += 1
    t_end = t0 + n * dt
    state = replace(stuck, t=t_end, temp=temp(t_end), v=v_end)
    if n % every == 0:
        count = K._record(buf, count, state.t, state.temp, state.x, 0.0, state.v, float(MODE_CODES[state.mode]))
    state, _ = transition(state)
    return state, n, count, lost


def energy_balance_residual(result: SimResult) -> float:
    """Relative violation of  W_mag = dE_kin + dE_spring + dE_elec + damped + harvested + impact."""
    led = result.ledger
    ek0, es0, ee0 = result.initial_energies
    dissipated = led.energy_damped + led.energy_harvested + led.energy_impact_lost
    gap = (
        led.work_magnetic
        - (led.energy_kinetic - ek0)
        - (led.energy_spring - es0)
        - (led.energy_electrical_stored - ee0)
        - dissipated
    )
    ref = max(abs(led.work_magnetic), dissipated, 1e-15)
    return abs(gap) / ref
