"""Lumped electromechanical model of the magnet-tipped piezoelectric bimorph."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from typing import Callable

from .errors import InvalidInputError
from .magnetics import SheetPairGeometry

EPS0 = 8.8541878128e-12

FREE = "FREE"
STUCK_TOP = "STUCK_TOP"
STUCK_BOTTOM = "STUCK_BOTTOM"
MODES = (FREE, STUCK_TOP, STUCK_BOTTOM)
MODE_SIDE = {STUCK_TOP: 1, STUCK_BOTTOM: -1, FREE: 0}

ForceModel = Callable[[float, float], float]


@dataclass(frozen=True)
class BimorphConfig:
    """PZT / shim / PZT cantilever with the magnet as tip mass.

    Defaults: a 40 x 6.4 mm PZT-5A bimorph on a brass shim, sized so the
    derived stiffness is close to 70 N/m and the effective mass 5 g.
    """

    length: float = 0.040
    width: float = 0.0064
    piezo_layer_thickness: float = 1.27e-4
    shim_thickness: float = 1.0e-4
    piezo_modulus: float = 62e9
    shim_modulus: float = 100e9
    piezo_d31: float = -190e-12
    piezo_permittivity: float = 1800 * EPS0
    piezo_density: float = 7750.0
    shim_density: float = 8500.0
    wiring: str = "parallel"
    damping_ratio: float = 0.02
    tip_mass: float = 4.83e-3
    load_resistance: float = 1.0e5

    def __post_init__(self):
        for name in (
            "length", "width", "piezo_layer_thickness", "shim_thickness", "piezo_modulus",
            "shim_modulus", "piezo_permittivity", "piezo_density", "shim_density", "tip_mass",
            "load_resistance",
        ):
            if not (getattr(self, name) > 0.0):
                raise InvalidInputError(f"bimorph {name} must be > 0")
        if self.piezo_d31 == 0.0 or not math.isfinite(self.piezo_d31):
            raise InvalidInputError("piezo_d31 must be finite and non-zero")
        if not (0.0 < self.damping_ratio < 1.0):
            raise InvalidInputError("damping_ratio must lie in (0, 1)")
        if self.wiring not in ("series", "parallel"):
            raise InvalidInputError(f"wiring must be 'series' or 'parallel', got {self.wiring!r}")

    @property
    def beam_mass(self) -> float:
        return self.length * self.width * (
            2 * self.piezo_layer_thickness * self.piezo_density + self.shim_thickness * self.shim_density
        )

    @property
    def piezo_volume(self) -> float:
        return 2 * self.length * self.width * self.piezo_layer_thickness


@dataclass(frozen=True)
class LumpedParams:
    m_eff: float
    k: float
    c: float
    theta: float
    c_p: float
    r_load: float = 1.0e5
    damping_ratio: float = 0.02

    def __post_init__(self):
        for name in ("m_eff", "k", "c", "theta", "c_p", "r_load"):
            if not (getattr(self, name) > 0.0):
                raise InvalidInputError(f"lumped parameter {name} must be > 0")

    @classmethod
    def from_ratio(cls, m_eff, k, damping_ratio, theta, c_p, r_load) -> "LumpedParams":
        return cls(m_eff, k, 2.0 * damping_ratio * math.sqrt(k * m_eff), theta, c_p, r_load, damping_ratio)

    def with_overrides(self, **kw) -> "LumpedParams":
        """Replace any of m_eff, k, damping_ratio, theta, c_p, r_load; damping is re-derived."""
        fields = dict(m_eff=self.m_eff, k=self.k, damping_ratio=self.damping_ratio,
                      theta=self.theta, c_p=self.c_p, r_load=self.r_load)
        unknown = set(kw) - set(fields)
        if unknown:
            raise InvalidInputError(f"unknown lumped overrides {sorted(unknown)}")
        fields.update({k: v for k, v in kw.items() if v is not None})
        return LumpedParams.from_ratio(**fields)

    @property
    def coupling_figure(self) -> float:
        """Electromechanical coupling figure Theta^2 / (k C_p)."""
        return self.theta**2 / (self.k * self.c_p)

    @property
    def natural_frequency(self) -> float:
        return math.sqrt(self.k / self.m_eff) / (2 * math.pi)

    @property
    def time_constant(self) -> float:
        return self.r_load * self.c_p


def flexural_rigidity(cfg: BimorphConfig) -> float:
    """Composite EI of the symmetric three-layer section about its mid-plane."""
    hs, hp = cfg.shim_thickness, cfg.piezo_layer_thickness
    zc = (hs + hp) / 2
    shim = cfg.shim_modulus * hs**3 / 12
    piezo = cfg.piezo_modulus * (hp**3 / 12 + hp * zc**2)
    return cfg.width * (shim + 2 * piezo)


def derive_lumped(cfg: BimorphConfig) -> LumpedParams:
    """Reduce the bimorph to a single-mode tip oscillator.

    Stiffness and coupling use the static tip-load deflection shape; each
    layer collects charge ``3 d31 E_p w z_c / (2 L)`` per metre of tip travel.
    Parallel wiring doubles charge and capacitance, series wiring keeps the
    single-layer charge and halves the capacitance, so ``Theta^2 / C_p``
    is the same for both.
    """
    L = cfg.length
    k = 3.0 * flexural_rigidity(cfg) / L**3
    m_eff = cfg.tip_mass + 33.0 / 140.0 * cfg.beam_mass
    zc = (cfg.shim_thickness + cfg.piezo_layer_thickness) / 2
    theta_layer = 3.0 * abs(cfg.piezo_d31) * cfg.piezo_modulus * cfg.width * zc / (2.0 * L)
    c_layer = cfg.piezo_permittivity * cfg.width * L / cfg.piezo_layer_thickness
    if cfg.wiring == "parallel":
        theta, c_p = 2.0 * theta_layer, 2.0 * c_layer
    else:
        theta, c_p = theta_layer, c_layer / 2.0
    return LumpedParams.from_ratio(m_eff, k, cfg.damping_ratio, theta, c_p, cfg.load_resistance)


@dataclass(frozen=True)
class HarvesterState:
    t: float = 0.0
    temp: float = 40.0
    x: float = 0.0
    x_dot: float = 0.0
    v: float = 0.0
    mode: str = FREE

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidInputError(f"unknown mode {self.mode!r}")

    @property
    def side(self) -> int:
        return MODE_SIDE[self.mode]


@dataclass
class EnergyLedger:
    work_magnetic: float = 0.0
    energy_kinetic: float = 0.0
    energy_spring: float = 0.0
    energy_electrical_stored: float = 0.0
    energy_damped: float = 0.0
    energy_harvested: float = 0.0
    energy_impact_lost: float = 0.0

    def as_dict(self) -> dict:
        return asdict(self)


def stored_energies(state: HarvesterState, params: LumpedParams) -> tuple[float, float, float]:
    """(kinetic, spring, electrical) energy of a state."""
    return (
        0.5 * params.m_eff * state.x_dot**2,
        0.5 * params.k * state.x**2,
        0.5 * params.c_p * state.v**2,
    )


def rhs(state: HarvesterState, params: LumpedParams, f_mag: float, coupling: bool = True):
    """(x_dot, x_ddot, v_dot) of the coupled beam / piezo equations."""
    theta = params.theta if coupling else 0.0
    if state.mode != FREE:
        return 0.0, 0.0, -state.v / (params.r_load * params.c_p)
    x_ddot = (f_mag - params.k * state.x - params.c * state.x_dot - theta * state.v) / params.m_eff
    v_dot = (theta * state.x_dot - state.v / params.r_load) / params.c_p
    return state.x_dot, x_ddot, v_dot


def harvested_power(v: float, params: LumpedParams) -> float:
    return v * v / params.r_load


def hold_margin(side: int, x_c: float, temp: float, v: float, params: LumpedParams,
                force: ForceModel, coupling: bool = True) -> float:
    """Net force pressing the tip into the stop on ``side`` (+1 top, -1 bottom); < 0 means release."""
    theta = params.theta if coupling else 0.0
    return side * (force(side * x_c, temp) - theta * v) - params.k * x_c


def mode_transition(state: HarvesterState, params: LumpedParams, geom: SheetPairGeometry,
                    force: ForceModel, coupling: bool = True) -> tuple[HarvesterState, float]:
    """Apply the contact rules; returns the new state and the impact energy lost."""
    x_c = geom.contact_limit
    if state.mode == FREE:
        if state.x >= x_c and state.x_dot >= 0.0:
            mode = STUCK_TOP
        elif state.x <= -x_c and state.x_dot <= 0.0:
            mode = STUCK_BOTTOM
        else:
            return state, 0.0
        lost = 0.5 * params.m_eff * state.x_dot**2
        return replace(state, x=MODE_SIDE[mode] * x_c, x_dot=0.0, mode=mode), lost
    side = state.side
    if hold_margin(side, x_c, state.temp, state.v, params, force, coupling) < 0.0:
        return replace(state, x=side * x_c, x_dot=0.0, mode=FREE), 0.0
    return state, 0.0
