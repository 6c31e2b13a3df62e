"""Magnet, sheet-pair geometry, analytic image-dipole force and the force table.

Sign convention: the tip displacement ``x`` is positive towards the *top*
sheet and a positive force pushes the tip towards the top sheet.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, NumericalFailure, OutOfDomainError, SingularityError
from .materials import ThermoMagneticMaterial, image_coefficient, relative_permeability

MU0 = 4e-7 * math.pi


@dataclass(frozen=True)
class MagnetSpec:
    """NdFeB tip magnet, reduced to a point dipole along the motion axis."""

    remanence: float = 1.2
    volume: float = 2.1e-7

    def __post_init__(self):
        if not (self.remanence >= 0.0):
            raise InvalidInputError(f"remanence must be >= 0, got {self.remanence}")
        if not (self.volume > 0.0):
            raise InvalidInputError(f"magnet volume must be > 0, got {self.volume}")

    @property
    def dipole_moment(self) -> float:
        return dipole_moment(self.remanence, self.volume)


@dataclass(frozen=True)
class SheetPairGeometry:
    """Two FeNi sheets facing each other across the beam's rest position.

    ``half_gap`` is the distance from the beam rest line to each sheet surface,
    ``contact_limit`` the mechanical stop.  ``sheet_offset`` shifts the sheet
    pair along +x relative to the beam rest line (a fabrication tolerance; zero
    gives a perfectly symmetric device).
    """

    half_gap: float = 0.010
    contact_limit: float = 0.0085
    sheet_offset: float = 1e-6
    sheet_width: float = 0.020
    sheet_height: float = 0.020
    sheet_thickness: float = 0.001

    def __post_init__(self):
        for name in ("half_gap", "contact_limit", "sheet_width", "sheet_height", "sheet_thickness"):
            if not (getattr(self, name) > 0.0):
                raise InvalidInputError(f"{name} must be > 0")
        if not (self.contact_limit < self.half_gap - abs(self.sheet_offset)):
            raise InvalidInputError(
                "contact_limit must be smaller than half_gap - |sheet_offset| "
                f"(contact_limit={self.contact_limit}, half_gap={self.half_gap})"
            )

    @property
    def symmetric(self) -> bool:
        return self.sheet_offset == 0.0

    @property
    def min_distance(self) -> float:
        return self.half_gap - abs(self.sheet_offset) - self.contact_limit

    def distances(self, x):
        """(distance to top sheet, distance to bottom sheet) for tip position ``x``."""
        return (self.half_gap + self.sheet_offset - x, self.half_gap - self.sheet_offset + x)


def dipole_moment(remanence: float, volume: float) -> float:
    if not (volume > 0.0):
        raise InvalidInputError(f"volume must be > 0, got {volume}")
    if not (remanence >= 0.0):
        raise InvalidInputError(f"remanence must be >= 0, got {remanence}")
    return remanence * volume / MU0


def _image_force(m, d, beta):
    return 3.0 * MU0 * m * m / (2.0 * math.pi * (2.0 * d) ** 4) * beta


def image_force_single_sheet(m: float, d, mu_r: float):
    """Attraction (N, >= 0) between a dipole normal to a permeable half-space and its image.

    The mirror dipole sits at distance ``2 d`` with strength
    ``(mu_r - 1) / (mu_r + 1)``; the coaxial dipole-dipole force then falls
    off as ``d**-4``.  ``mu_r = inf`` gives the ideal-mirror limit.
    """
    d_arr = np.asarray(d, dtype=float)
    if np.any(~(d_arr > 0.0)):
        raise SingularityError("magnet-sheet distance must be > 0 (clamp violated?)")
    if not (mu_r >= 1.0):
        raise InvalidInputError(f"mu_r must be >= 1, got {mu_r}")
    beta = 1.0 if math.isinf(mu_r) else (mu_r - 1.0) / (mu_r + 1.0)
    out = _image_force(m, d_arr, beta)
    return float(out) if out.ndim == 0 else out


def net_analytic_force(x, temp, geom: SheetPairGeometry, magnet: MagnetSpec, mat: ThermoMagneticMaterial):
    """Signed net pull of both sheets on the tip magnet at displacement ``x``."""
    x_arr = np.asarray(x, dtype=float)
    if np.any(np.abs(x_arr) > geom.contact_limit):
        raise OutOfDomainError(f"|x| exceeds contact limit {geom.contact_limit}")
    out = _net_force_unchecked(x_arr, temp, geom, magnet.dipole_moment, mat)
    return float(out) if np.ndim(out) == 0 else out


def _net_force_unchecked(x, temp, geom, m, mat):
    beta = image_coefficient(mat, temp)
    d_top, d_bot = geom.distances(x)
    return _image_force(m, d_top, beta) - _image_force(m, d_bot, beta)


def analytic_force_gradient(x, temp, geom, magnet, mat, step=1e-6):
    """Central finite-difference dF/dx of the analytic force (N/m)."""
    m = magnet.dipole_moment
    return (_net_force_unchecked(x + step, temp, geom, m, mat) - _net_force_unchecked(x - step, temp, geom, m, mat)) / (
        2.0 * step
    )


@dataclass(frozen=True)
class ForceTable:
    """Magnetic force sampled on a (temperature, displacement) grid.

    ``values[j, i]`` is the force at ``(x_grid[i], t_grid[j])``; rows are
    temperatures, matching the CSV layout.
    """

    x_grid: np.ndarray
    t_grid: np.ndarray
    values: np.ndarray
    source: str = "analytic"
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        x = np.ascontiguousarray(self.x_grid, dtype=float)
        t = np.ascontiguousarray(self.t_grid, dtype=float)
        v = np.ascontiguousarray(self.values, dtype=float)
        object.__setattr__(self, "x_grid", x)
        object.__setattr__(self, "t_grid", t)
        object.__setattr__(self, "values", v)
        if x.ndim != 1 or t.ndim != 1 or x.size < 2 or t.size < 2:
            raise InvalidInputError("force table grids need at least two nodes each")
        if np.any(np.diff(x) <= 0) or np.any(np.diff(t) <= 0):
            raise InvalidInputError("force table grids must be strictly increasing")
        if v.shape != (t.size, x.size):
            raise InvalidInputError(f"values shape {v.shape} does not match grids ({t.size}, {x.size})")
        if self.source not in ("analytic", "moment"):
            raise InvalidInputError(f"unknown force table source {self.source!r}")

    def antisymmetry_error(self) -> float:
        """max |F(x,T) + F(-x,T)| over nodes, for a grid symmetric about zero."""
        if not np.allclose(self.x_grid, -self.x_grid[::-1], rtol=0, atol=1e-15):
            raise InvalidInputError("x grid is not symmetric about zero")
        return float(np.max(np.abs(self.values + self.values[:, ::-1])))

    def contains(self, x, temp) -> bool:
        return bool(self.x_grid[0] <= x <= self.x_grid[-1] and self.t_grid[0] <= temp <= self.t_grid[-1])

    def to_csv(self, path) -> None:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([self.source] + [f"{xi:.17g}" for xi in self.x_grid])
            for tj, row in zip(self.t_grid, self.values):
                w.writerow([f"{tj:.17g}"] + [f"{f:.17g}" for f in row])

    @classmethod
    def from_csv(cls, path) -> "ForceTable":
        with Path(path).open(newline="") as fh:
            rows = list(csv.reader(fh))
        if len(rows) < 3:
            raise InvalidInputError(f"{path}: force table needs a header and at least two rows")
        head = rows[0]
        source = head[0].strip() or "analytic"
        x = np.array([float(s) for s in head[1:]])
        t = np.array([float(r[0]) for r in rows[1:]])
        v = np.array([[float(s) for s in r[1:]] for r in rows[1:]])
        return cls(x, t, v, source=source)


def interp_force(table: ForceTable, x: float, temp: float) -> float:
    """Bilinear interpolation; exact at grid nodes, no extrapolation."""
    if not table.contains(x, temp):
        raise OutOfDomainError(
            f"query (x={x}, T={temp}) outside table hull "
            f"x in [{table.x_grid[0]}, {table.x_grid[-1]}], T in [{table.t_grid[0]}, {table.t_grid[-1]}]"
        )
    i, wx = _cell(table.x_grid, x)
    j, wt = _cell(table.t_grid, temp)
    v = table.values
    lo = (1.0 - wx) * v[j, i] + wx * v[j, i + 1]
    if wt == 0.0:
        return float(lo)
    hi = (1.0 - wx) * v[j + 1, i] + wx * v[j + 1, i + 1]
    return float((1.0 - wt) * lo + wt * hi)


def _cell(grid, q):
    i = int(np.searchsorted(grid, q, side="right")) - 1
    i = min(max(i, 0), grid.size - 2)
    w = (q - grid[i]) / (grid[i + 1] - grid[i])
    return i, w


def default_x_grid(geom: SheetPairGeometry, points: int = 1701) -> np.ndarray:
    """Uniform grid on [-x_c, x_c], symmetric bit-for-bit about zero."""
    if points < 3 or points % 2 == 0:
        raise InvalidInputError("x grid needs an odd number (>= 3) of points so that x = 0 is a node")
    half = np.linspace(0.0, geom.contact_limit, points // 2 + 1)
    return np.concatenate([-half[:0:-1], half])


def default_t_grid(t_lo: float, t_hi: float, step: float, curie_temp: float | None = None) -> np.ndarray:
    n = int(math.ceil((t_hi - t_lo) / step - 1e-9))
    grid = t_lo + step * np.arange(n + 1)
    grid[-1] = max(grid[-1], t_hi)
    if curie_temp is not None and t_lo < curie_temp < t_hi and not np.any(grid == curie_temp):
        grid = np.sort(np.append(grid, curie_temp))
        grid = grid[np.concatenate([[True], np.diff(grid) > 1e-9 * step])]
    return grid


def build_force_table(
    backend: str,
    x_grid,
    t_grid,
    geom: SheetPairGeometry,
    magnet: MagnetSpec,
    mat: ThermoMagneticMaterial,
    *,
    mesh_counts=(10, 10, 1),
    kernel: str = "prism",
    threads: int = 1,
) -> ForceTable:
    x_grid = np.asarray(x_grid, dtype=float)
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(x_grid) <= 0) or np.any(np.diff(t_grid) <= 0):
        raise InvalidInputError("grids must be strictly increasing")
    if np.any(np.abs(x_grid) > geom.contact_limit):
        raise InvalidInputError("x grid must lie inside [-contact_limit, contact_limit]")
    if backend == "analytic":
        values = _net_force_unchecked(x_grid[None, :], t_grid[:, None], geom, magnet.dipole_moment, mat)
        values = np.broadcast_to(values, (t_grid.size, x_grid.size)).copy()
        return ForceTable(x_grid, t_grid, values, source="analytic")
    if backend != "moment":
        raise InvalidInputError(f"unknown force backend {backend!r}")

    from . import moment_method as mm

    meshes = [mm.mesh_sheet(geom, side, *mesh_counts) for side in ("top", "bottom")]
    mesh = mm.merge_meshes(meshes)
    operator = mm.assemble_system(mesh, kernel)

    def row(j):
        temp = t_grid[j]
        try:
            return mm.axial_forces_along_axis(mesh, operator, magnet, x_grid, float(relative_permeability(mat, temp)) - 1.0)
        except NumericalFailure as exc:
            raise NumericalFailure(f"moment solve failed at T={temp}: {exc}", node=(None, temp)) from exc

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(row, range(t_grid.size)))
    else:
        rows = [row(j) for j in range(t_grid.size)]
    values = np.vstack(rows)
    if not np.all(np.isfinite(values)):
        j, i = np.argwhere(~np.isfinite(values))[0]
        raise NumericalFailure("non-finite moment-method force", node=(x_grid[i], t_grid[j]))
    return ForceTable(x_grid, t_grid, values, source="moment", meta={"mesh_counts": tuple(mesh_counts), "kernel": kernel})
