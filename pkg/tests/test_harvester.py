import math
from dataclasses import replace

import numpy as np
import pytest

from curiesnap.errors import InvalidInputError
from curiesnap.explorer import find_release_temperature
from curiesnap.harvester import (
    FREE,
    STUCK_BOTTOM,
    STUCK_TOP,
    BimorphConfig,
    EnergyLedger,
    HarvesterState,
    LumpedParams,
    derive_lumped,
    flexural_rigidity,
    harvested_power,
    hold_margin,
    mode_transition,
    rhs,
)
from curiesnap.magnetics import MagnetSpec, SheetPairGeometry, net_analytic_force
from curiesnap.materials import ThermoMagneticMaterial

CFG = BimorphConfig()
P = derive_lumped(CFG)
GEOM = SheetPairGeometry()
MAG = MagnetSpec()
MAT = ThermoMagneticMaterial()


def analytic(x, t):
    return net_analytic_force(x, t, GEOM, MAG, MAT)


def test_composite_rigidity_hand_oracle():
    hs, hp, w = CFG.shim_thickness, CFG.piezo_layer_thickness, CFG.width
    layers = [  # (modulus, z_bottom, z_top) measured from the mid-plane
        (CFG.piezo_modulus, -hs / 2 - hp, -hs / 2),
        (CFG.shim_modulus, -hs / 2, hs / 2),
        (CFG.piezo_modulus, hs / 2, hs / 2 + hp),
    ]
    ei = sum(e * w * (z1**3 - z0**3) / 3 for e, z0, z1 in layers)
    assert flexural_rigidity(CFG) == pytest.approx(ei, rel=1e-12)
    assert P.k == pytest.approx(3 * ei / CFG.length**3, rel=1e-9)


def test_baseline_lumped_values():
    assert P.k == pytest.approx(70.0, rel=0.01)
    assert P.m_eff == pytest.approx(5e-3, rel=0.01)
    assert P.r_load == 1e5
    assert P.c == pytest.approx(2 * 0.02 * math.sqrt(P.k * P.m_eff), rel=1e-15)
    assert P.natural_frequency == pytest.approx(18.8, abs=0.1)


def test_length_scaling():
    long = derive_lumped(replace(CFG, length=2 * CFG.length))
    assert long.k == pytest.approx(P.k / 8, rel=1e-12)
    assert replace(CFG, length=2 * CFG.length).beam_mass == pytest.approx(2 * CFG.beam_mass, rel=1e-15)


def test_wiring_invariance():
    par = derive_lumped(replace(CFG, wiring="parallel"))
    ser = derive_lumped(replace(CFG, wiring="series"))
    assert par.theta**2 / par.c_p == pytest.approx(ser.theta**2 / ser.c_p, rel=1e-12)
    assert par.coupling_figure == pytest.approx(ser.coupling_figure, rel=1e-12)
    assert par.c_p / ser.c_p == pytest.approx(4.0, rel=1e-12)


@pytest.mark.parametrize(
    "kw",
    [{"length": 0.0}, {"damping_ratio": 1.0}, {"damping_ratio": 0.0}, {"wiring": "delta"}, {"piezo_d31": 0.0}],
)
def test_invalid_bimorph(kw):
    with pytest.raises(InvalidInputError):
        BimorphConfig(**kw)


def test_lumped_validation_and_overrides():
    with pytest.raises(InvalidInputError):
        LumpedParams(1e-3, -1.0, 0.1, 1e-3, 1e-8)
    over = P.with_overrides(k=70.0, m_eff=5e-3)
    assert (over.k, over.m_eff) == (70.0, 5e-3)
    assert over.c == pytest.approx(2 * 0.02 * math.sqrt(70.0 * 5e-3))
    with pytest.raises(InvalidInputError):
        P.with_overrides(spring=1.0)


def test_rhs_equilibrium_and_unit_voltage():
    assert rhs(HarvesterState(x=0.0, v=0.0), P, 0.0) == (0.0, 0.0, 0.0)
    xd, xdd, vd = rhs(HarvesterState(x=0.0, x_dot=0.0, v=1.0), P, 0.0)
    assert xd == 0.0
    assert xdd == pytest.approx(-P.theta / P.m_eff, rel=1e-15)
    assert vd == pytest.approx(-1.0 / (P.r_load * P.c_p), rel=1e-15)


def test_rhs_stuck_only_voltage():
    s = HarvesterState(x=GEOM.contact_limit, v=2.0, mode=STUCK_TOP)
    assert rhs(s, P, 5.0) == (0.0, 0.0, -2.0 / (P.r_load * P.c_p))


def test_harvested_power():
    assert harvested_power(2.0, P) == pytest.approx(40e-6, rel=1e-15)


def test_power_bookkeeping_identity():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        x, xd, v, f = rng.uniform(-0.0085, 0.0085), rng.uniform(-5, 5), rng.uniform(-20, 20), rng.uniform(-50, 50)
        dx, dxd, dv = rhs(HarvesterState(x=x, x_dot=xd, v=v), P, f)
        lhs = P.m_eff * xd * dxd + P.k * x * dx + P.c_p * v * dv
        rhs_ = f * xd - P.c * xd**2 - v**2 / P.r_load
        scale = abs(f * xd) + abs(P.k * x * xd) + P.c * xd**2 + abs(P.theta * xd * v) + v**2 / P.r_load
        assert abs(lhs - rhs_) <= 1e-12 * scale


def test_release_above_curie():
    s = HarvesterState(temp=46.0, x=GEOM.contact_limit, mode=STUCK_TOP)
    new, lost = mode_transition(s, P, GEOM, analytic)
    assert new.mode == FREE and lost == 0.0


def test_stick_on_outward_crossing():
    s = HarvesterState(temp=44.0, x=GEOM.contact_limit + 1e-12, x_dot=2.0)
    new, lost = mode_transition(s, P, GEOM, analytic)
    assert new.mode == STUCK_TOP and new.x_dot == 0.0 and new.x == GEOM.contact_limit
    assert lost == pytest.approx(0.5 * P.m_eff * 4.0)
    s = HarvesterState(temp=44.0, x=-GEOM.contact_limit, x_dot=-1.0)
    assert mode_transition(s, P, GEOM, analytic)[0].mode == STUCK_BOTTOM


def test_no_stick_when_moving_inward():
    s = HarvesterState(temp=44.0, x=GEOM.contact_limit, x_dot=-1.0)
    assert mode_transition(s, P, GEOM, analytic)[0].mode == FREE


def test_baseline_holds_ten_degrees_below_curie():
    t = MAT.curie_temp - 10.0
    margin = hold_margin(1, GEOM.contact_limit, t, 0.0, P, analytic)
    assert margin == pytest.approx(analytic(GEOM.contact_limit, t) - P.k * GEOM.contact_limit)
    assert margin > 0
    s = HarvesterState(temp=t, x=GEOM.contact_limit, mode=STUCK_TOP)
    assert mode_transition(s, P, GEOM, analytic)[0].mode == STUCK_TOP


def test_voltage_enters_hold_margin():
    t = 44.0
    base = hold_margin(1, GEOM.contact_limit, t, 0.0, P, analytic)
    assert hold_margin(1, GEOM.contact_limit, t, 10.0, P, analytic) == pytest.approx(base - P.theta * 10.0)
    assert hold_margin(1, GEOM.contact_limit, t, 10.0, P, analytic, coupling=False) == base


def test_release_temperature_monotone_in_k():
    temps = [find_release_temperature(P.with_overrides(k=k), GEOM, MAG, MAT) for k in (50, 60, 70, 80, 100, 140)]
    assert all(t is not None for t in temps)
    assert all(a > b for a, b in zip(temps, temps[1:]))


def test_state_and_ledger_types():
    with pytest.raises(InvalidInputError):
        HarvesterState(mode="FLOATING")
    assert HarvesterState(mode=STUCK_BOTTOM).side == -1
    assert set(EnergyLedger().as_dict()) == {
        "work_magnetic", "energy_kinetic", "energy_spring", "energy_electrical_stored",
        "energy_damped", "energy_harvested", "energy_impact_lost",
    }
