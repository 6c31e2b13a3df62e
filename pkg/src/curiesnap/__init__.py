"""Simulator and design explorer for a Curie-threshold snap-through thermal harvester.

A magnet-tipped piezoelectric bimorph sits between two soft ferromagnetic
sheets whose permeability collapses at the Curie temperature.  Heating past
the release threshold lets the tip spring free; cooling below the capture
threshold snaps it onto a sheet again.  Each snap rings the beam and the
piezo layers convert part of that motion into electrical energy.
"""
from .config import RunConfig, parse_config
from .engine import SimConfig, SimResult, energy_balance_residual, simulate
from .errors import (
    ConfigError,
    CurieSnapError,
    InvalidInputError,
    NumericalFailure,
    OutOfDomainError,
    SingularityError,
)
from .explorer import (
    DesignPoint,
    ThresholdReport,
    energy_per_cycle,
    find_capture_temperature,
    find_release_temperature,
    optimize,
    sweep,
    threshold_report,
)
from .harvester import BimorphConfig, HarvesterState, LumpedParams, derive_lumped
from .magnetics import ForceTable, MagnetSpec, SheetPairGeometry, build_force_table, net_analytic_force
from .materials import ThermoMagneticMaterial, relative_permeability
from .thermal import ThermalProfile, temperature_at

__version__ = "0.1.0"
