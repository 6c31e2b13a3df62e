"""Temperature-dependent permeability of the soft-ferromagnetic FeNi sheets.

Above the Curie temperature the sheets are magnetically transparent
(``mu_r == 1``); below it the relative permeability rises smoothly towards
``mu_max``.  The shape of that rise is a named law so that alternatives can be
registered without touching callers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InvalidInputError

PermeabilityLaw = Callable[[np.ndarray, "ThermoMagneticMaterial"], np.ndarray]

_LAWS: dict[str, PermeabilityLaw] = {}


def register_law(name: str):
    """Decorator adding a permeability law under ``name``.

    A law receives the undercooling ``curie_temp - temp`` (already clipped at
    zero) and the material, and returns ``mu_r``.
    """

    def wrap(fn: PermeabilityLaw) -> PermeabilityLaw:
        _LAWS[name] = fn
        return fn

    return wrap


@register_law("tanh")
def _tanh_law(undercool, mat):
    return 1.0 + (mat.mu_max - 1.0) * np.tanh(undercool / mat.transition_scale)


@register_law("linear")
def _linear_law(undercool, mat):
    return 1.0 + (mat.mu_max - 1.0) * np.minimum(undercool / mat.transition_scale, 1.0)


def available_laws() -> tuple[str, ...]:
    return tuple(_LAWS)


@dataclass(frozen=True)
class ThermoMagneticMaterial:
    curie_temp: float = 45.0
    mu_max: float = 50.0
    transition_scale: float = 10.0
    law: str = "tanh"

    def __post_init__(self):
        if not math.isfinite(self.curie_temp):
            raise InvalidInputError("curie_temp must be finite")
        if not (self.mu_max >= 1.0):
            raise InvalidInputError(f"mu_max must be >= 1, got {self.mu_max}")
        if not (self.transition_scale > 0.0):
            raise InvalidInputError(f"transition_scale must be > 0, got {self.transition_scale}")
        if self.law not in _LAWS:
            raise InvalidInputError(f"unknown permeability law {self.law!r}; known: {available_laws()}")


def relative_permeability(mat: ThermoMagneticMaterial, temp):
    """Relative permeability at ``temp`` (deg C); scalar in, float out, array in, array out."""
    t = np.asarray(temp, dtype=float)
    if not np.all(np.isfinite(t)):
        raise InvalidInputError("temperature must be finite")
    undercool = np.maximum(mat.curie_temp - t, 0.0)
    mu = np.where(undercool > 0.0, _LAWS[mat.law](undercool, mat), 1.0)
    mu = np.clip(mu, 1.0, mat.mu_max)
    if mu.ndim == 0:
        return float(mu)
    return mu


def susceptibility(mat: ThermoMagneticMaterial, temp):
    return relative_permeability(mat, temp) - 1.0


def image_coefficient(mat: ThermoMagneticMaterial, temp):
    """(mu_r - 1) / (mu_r + 1): strength of the mirror dipole in a permeable half-space."""
    mu = relative_permeability(mat, temp)
    return (mu - 1.0) / (mu + 1.0)
