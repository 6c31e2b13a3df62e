import numpy as np
import pytest

from curiesnap.errors import CurieSnapError
from curiesnap.explorer import (
    PYRO_ENERGY_DENSITY_J_M3,
    OptimizationError,
    config_thresholds,
    energy_per_cycle,
    find_capture_temperature,
    find_release_temperature,
    grid_points,
    halton,
    optimize,
    pyroelectric_reference,
    release_margin,
    sweep,
)
from curiesnap.magnetics import net_analytic_force
from curiesnap.materials import ThermoMagneticMaterial


@pytest.fixture(scope="module")
def fast_cfg(baseline_cfg):
    """Baseline device under a 1 degC/s triangle (20 s period) so full cycles are cheap."""
    return baseline_cfg.with_updates({"thermal.rate": 1.0})


def _scan_oracle(fn, lo=40.0, hi=45.0, step=1e-3):
    temps = lo + step * np.arange(int(round((hi - lo) / step)) + 1)
    vals = np.array([fn(t) for t in temps])
    i = np.nonzero((vals[:-1] > 0) & (vals[1:] <= 0))[0]
    assert len(i) == 1
    return temps[i[0]], temps[i[0] + 1]


def test_thresholds_match_dense_scan(baseline_cfg):
    cfg = baseline_cfg
    p, g, mag, mat = cfg.lumped_params(), cfg.geometry, cfg.magnet, cfg.material
    xc = g.contact_limit
    t_rel = find_release_temperature(p, g, mag, mat)
    t_cap = find_capture_temperature(p, g, mag, mat)
    lo, hi = _scan_oracle(lambda t: net_analytic_force(xc, t, g, mag, mat) - p.k * xc)
    assert lo - 1e-3 <= t_rel <= hi + 1e-3
    h = 1e-6
    lo, hi = _scan_oracle(
        lambda t: (net_analytic_force(h, t, g, mag, mat) - net_analytic_force(-h, t, g, mag, mat)) / (2 * h) - p.k
    )
    assert lo - 1e-3 <= t_cap <= hi + 1e-3
    assert 40.0 < t_cap < t_rel < 45.0


def test_margin_above_curie(baseline_cfg):
    cfg = baseline_cfg
    p = cfg.lumped_params()
    for t in (45.0, 47.0, 80.0):
        assert release_margin(t, p, cfg.geometry, cfg.magnet, cfg.material) == -p.k * cfg.geometry.contact_limit


def test_degenerate_material_has_no_thresholds(baseline_cfg):
    cfg = baseline_cfg
    flat = ThermoMagneticMaterial(mu_max=1.0)
    assert find_capture_temperature(cfg.lumped_params(), cfg.geometry, cfg.magnet, flat) is None
    assert find_release_temperature(cfg.lumped_params(), cfg.geometry, cfg.magnet, flat) is None


def test_doubling_k_lowers_release(baseline_cfg):
    cfg = baseline_cfg
    p = cfg.lumped_params()
    t1 = find_release_temperature(p, cfg.geometry, cfg.magnet, cfg.material)
    t2 = find_release_temperature(p.with_overrides(k=2 * p.k), cfg.geometry, cfg.magnet, cfg.material)
    assert t2 < t1


def test_hysteresis_non_negative_over_default_sweep_ranges(baseline_cfg):
    found = 0
    for point in grid_points(baseline_cfg.explorer.sweep):
        rep = config_thresholds(baseline_cfg.with_updates(point))
        if rep.bistable:
            found += 1
            assert rep.hysteresis_width >= 0.0
            assert rep.t_capture <= rep.t_release <= baseline_cfg.material.curie_temp
    assert found > 0


def test_non_bistable_gives_zero(baseline_cfg):
    cfg = baseline_cfg.with_updates({"magnet.volume": 5e-8})
    point = energy_per_cycle(cfg)
    assert point.status == "no-snap" and point.energy_per_cycle == 0.0 and point.diagnostic


def test_energy_matches_power_integral(fast_cfg):
    cfg = fast_cfg.with_updates({"sim.sample_every": 1})
    point = energy_per_cycle(cfg, keep_result=True)
    assert point.status == "ok" and point.energy_per_cycle > 0
    r = point.result
    integral = float(np.sum(0.5 * (r.p_harv[1:] + r.p_harv[:-1]) * np.diff(r.t)))
    assert integral == pytest.approx(point.energy_per_cycle, rel=1e-3)
    assert r.t[0] == pytest.approx(20.0) and r.t[-1] == pytest.approx(40.0)
    box = 0.04 * 0.02 * 2 * (0.010 + 1e-6 + 0.001)
    assert point.energy_density == pytest.approx(point.energy_per_cycle / box, rel=1e-12)
    assert point.pyro_ratio == pytest.approx(point.energy_density / PYRO_ENERGY_DENSITY_J_M3)


def test_open_circuit_limit(fast_cfg):
    base = energy_per_cycle(fast_cfg)
    open_cfg = fast_cfg.with_updates({"lumped.r_load": 1e13, "sim.sample_every": 1})
    point = energy_per_cycle(open_cfg, keep_result=True)
    assert point.energy_per_cycle < 1e-5 * base.energy_per_cycle
    v = point.result.v
    assert np.abs(v).max() > 1.0  # charge still sloshes on the capacitance


def test_pyroelectric_reference():
    ref = pyroelectric_reference()
    assert ref["power_density_uW_per_cm3"] == 1.0
    assert ref["temperature_swing_C"] == 10.0
    assert ref["swing_duration_s"] == 20.0
    assert ref["energy_density_J_per_m3"] == 20.0


def test_sweep_rows_and_singleton(fast_cfg):
    rows = sweep(fast_cfg, {"geometry.half_gap": [0.0095, 0.010, 0.0105]})
    assert len(rows) == 3
    assert [r.params["geometry.half_gap"] for r in rows] == [0.0095, 0.010, 0.0105]
    single = sweep(fast_cfg, {"geometry.half_gap": [0.010]})
    direct = energy_per_cycle(fast_cfg.with_updates({"geometry.half_gap": 0.010}))
    assert single[0].energy_per_cycle == direct.energy_per_cycle
    assert single[0].status == direct.status


def test_sweep_across_bistability_boundary(fast_cfg):
    # snapping needs both thresholds and a capture temperature inside the 40-50 degC band
    gaps = np.linspace(0.0095, 0.013, 71)
    reports = [config_thresholds(fast_cfg.with_updates({"geometry.half_gap": float(g)})) for g in gaps]
    flags = [r.bistable and r.t_capture > 40.0 for r in reports]
    edge = flags.index(False)
    assert all(flags[:edge]) and not any(flags[edge:])
    grid = {"geometry.half_gap": [float(gaps[edge - 3]), float(gaps[edge - 1]), float(gaps[edge]), float(gaps[edge + 3])]}
    rows = sweep(fast_cfg, grid)
    assert [r.energy_per_cycle > 0 for r in rows] == [True, True, False, False]
    assert [r.status for r in rows[2:]] == ["no-snap", "no-snap"]


def test_sweep_determinism_and_threads(fast_cfg):
    grid = {"bimorph.load_resistance": [3e4, 3e5], "geometry.half_gap": [0.0095]}
    a = sweep(fast_cfg, grid)
    b = sweep(fast_cfg, grid, threads=2)
    assert a == b


def test_sweep_captures_failures(fast_cfg):
    rows = sweep(fast_cfg, {"geometry.half_gap": [0.008, 0.010]})
    assert rows[0].status == "failed" and "half_gap" in rows[0].diagnostic
    assert rows[1].status == "ok"
    rows = sweep(fast_cfg, {"geometry.nonsense": [1.0]})
    assert rows[0].status == "failed"


def _quad(a):
    return -(a["p1"] - 0.3) ** 2 - (a["p2"] + 0.1) ** 2


def test_optimizer_analytic_objective():
    res = optimize(None, {"p1": (-1.0, 1.0), "p2": (-1.0, 1.0)}, 200, objective=_quad)
    assert len(res.log) <= 200
    assert abs(res.best.params["p1"] - 0.3) < 1e-3 and abs(res.best.params["p2"] + 0.1) < 1e-3


def test_optimizer_argmax_consistency():
    res = optimize(None, {"p1": (-1.0, 1.0), "p2": (-1.0, 1.0)}, 80, objective=_quad)
    assert any(p is res.best for p in res.log)
    assert all(res.best.energy_per_cycle >= p.energy_per_cycle for p in res.log)


def test_optimizer_minimal_budget_is_initial_simplex():
    res = optimize(None, {"p1": (-1.0, 1.0), "p2": (-1.0, 1.0)}, 4, objective=_quad)
    assert len(res.log) == 3
    assert res.best.energy_per_cycle == max(p.energy_per_cycle for p in res.log)
    starts = [tuple(p.params.values()) for p in res.log]
    assert starts[0] == (0.0, 0.0)


def test_optimizer_is_deterministic_and_bounded():
    bounds = {"p1": (0.5, 1.0), "p2": (-1.0, -0.5)}
    a = optimize(None, bounds, 60, objective=_quad)
    b = optimize(None, bounds, 60, objective=_quad)
    assert [p.params for p in a.log] == [p.params for p in b.log]
    for p in a.log:
        assert 0.5 <= p.params["p1"] <= 1.0 and -1.0 <= p.params["p2"] <= -0.5
    assert a.best.params["p1"] == pytest.approx(0.5, abs=1e-3)  # optimum clipped onto the bound
    assert a.best.params["p2"] == pytest.approx(-0.5, abs=1e-3)


def test_optimizer_all_infeasible(baseline_cfg):
    with pytest.raises(OptimizationError, match="no-snap"):
        optimize(baseline_cfg, {"magnet.volume": (1e-8, 2e-8)}, 4)


def test_optimizer_preconditions():
    with pytest.raises(CurieSnapError):
        optimize(None, {"p1": (1.0, 0.0)}, 10, objective=_quad)
    with pytest.raises(CurieSnapError):
        optimize(None, {"p1": (0.0, 1.0), "p2": (0.0, 1.0)}, 3, objective=_quad)


def test_halton_points():
    np.testing.assert_allclose(halton(1, 2), [0.5, 1 / 3])
    np.testing.assert_allclose(halton(2, 2), [0.25, 2 / 3])
