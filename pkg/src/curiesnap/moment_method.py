"""Magnetostatic moment method for the FeNi sheets.

The sheets are cut into uniformly magnetized rectangular cells.  Each cell
centre sees the magnet's field, the field of every other cell and its own
demagnetizing field; with a linear material ``M = chi * H`` this yields
the dense system ``(I - chi K) M = chi H_applied``.  The reaction on the
magnet is the sum of closed-form dipole-dipole forces from all cells.

Coordinates: the sheets lie in the x-y plane and the tip magnet moves along
z, so the scalar tip displacement of the lumped model is the magnet's z
coordinate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidInputError, NumericalFailure, SingularityError
from .magnetics import MU0, MagnetSpec, SheetPairGeometry
from .materials import ThermoMagneticMaterial, susceptibility

RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class CellMesh:
    centers: np.ndarray  # (N, 3) m
    sizes: np.ndarray  # (N, 3) edge lengths, m
    chi: np.ndarray | None = None  # (N,) susceptibility; filled in per solve

    def __post_init__(self):
        c = np.ascontiguousarray(self.centers, dtype=float).reshape(-1, 3)
        s = np.ascontiguousarray(self.sizes, dtype=float).reshape(-1, 3)
        if c.shape != s.shape:
            raise InvalidInputError("centers and sizes must have the same shape")
        if np.any(s <= 0):
            raise InvalidInputError("cell edge lengths must be > 0")
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "sizes", s)
        chi = np.zeros(len(c)) if self.chi is None else np.broadcast_to(np.asarray(self.chi, float), (len(c),)).copy()
        object.__setattr__(self, "chi", chi)

    def __len__(self):
        return self.centers.shape[0]

    @property
    def volumes(self) -> np.ndarray:
        return np.prod(self.sizes, axis=1)

    def with_susceptibility(self, chi) -> "CellMesh":
        return replace(self, chi=chi)


@dataclass(frozen=True)
class PointDipole:
    position: np.ndarray
    moment: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float).reshape(3))
        object.__setattr__(self, "moment", np.asarray(self.moment, dtype=float).reshape(3))

    @classmethod
    def from_magnet(cls, magnet: MagnetSpec, z: float) -> "PointDipole":
        return cls((0.0, 0.0, z), (0.0, 0.0, magnet.dipole_moment))


@dataclass
class MagnetizationSolution:
    magnetization: np.ndarray  # (N, 3) A/m
    residual_norm: float


def mesh_box(center, dims, counts) -> CellMesh:
    """Regular ``counts[0] x counts[1] x counts[2]`` partition of an axis-aligned box."""
    counts = tuple(int(n) for n in counts)
    if len(counts) != 3 or min(counts) < 1:
        raise InvalidInputError(f"mesh counts must be three integers >= 1, got {counts}")
    center = np.asarray(center, dtype=float)
    dims = np.asarray(dims, dtype=float)
    cell = dims / counts
    axes = [center[k] - dims[k] / 2 + cell[k] * (np.arange(counts[k]) + 0.5) for k in range(3)]
    gx, gy, gz = np.meshgrid(*axes, indexing="ij")
    centers = np.column_stack([gx.ravel(), gy.ravel(), gz.ravel()])
    return CellMesh(centers, np.tile(cell, (len(centers), 1)))


def mesh_sheet(geom: SheetPairGeometry, which: str, nx: int, ny: int, nz: int) -> CellMesh:
    """Mesh one sheet: ``nx`` x ``ny`` cells in plane, ``nz`` through the thickness."""
    t = geom.sheet_thickness
    if which == "top":
        zc = geom.sheet_offset + geom.half_gap + t / 2
    elif which == "bottom":
        zc = geom.sheet_offset - geom.half_gap - t / 2
    else:
        raise InvalidInputError(f"which must be 'top' or 'bottom', got {which!r}")
    return mesh_box((0.0, 0.0, zc), (geom.sheet_width, geom.sheet_height, t), (nx, ny, nz))


def merge_meshes(meshes) -> CellMesh:
    return CellMesh(
        np.vstack([m.centers for m in meshes]),
        np.vstack([m.sizes for m in meshes]),
        np.concatenate([m.chi for m in meshes]),
    )


def _prism_factor(a, b, c):
    """Demagnetizing factor along the axis of half-length ``c`` for a 2a x 2b x 2c prism."""
    r = np.sqrt(a * a + b * b + c * c)
    ab = np.sqrt(a * a + b * b)
    bc = np.sqrt(b * b + c * c)
    ac = np.sqrt(a * a + c * c)
    s = (
        (b * b - c * c) / (2 * b * c) * np.log((r - a) / (r + a))
        + (a * a - c * c) / (2 * a * c) * np.log((r - b) / (r + b))
        + b / (2 * c) * np.log((ab + a) / (ab - a))
        + a / (2 * c) * np.log((ab + b) / (ab - b))
        + c / (2 * a) * np.log((bc - b) / (bc + b))
        + c / (2 * b) * np.log((ac - a) / (ac + a))
        + 2 * np.arctan(a * b / (c * r))
        + (a**3 + b**3 - 2 * c**3) / (3 * a * b * c)
        + (a * a + b * b - 2 * c * c) / (3 * a * b * c) * r
        + c / (a * b) * (ac + bc)
        - (ab**3 + bc**3 + ac**3) / (3 * a * b * c)
    )
    return s / np.pi


def demag_factors(sizes) -> np.ndarray:
    """Diagonal self-demagnetizing tensor (Nxx, Nyy, Nzz) of rectangular cells, rows summing to 1."""
    sizes = np.atleast_2d(np.asarray(sizes, dtype=float))
    a, b, c = (sizes[:, k] / 2 for k in range(3))
    # normalise so the log terms stay well conditioned for very flat cells
    scale = np.max(sizes, axis=1) / 2
    a, b, c = a / scale, b / scale, c / scale
    return np.column_stack([_prism_factor(b, c, a), _prism_factor(c, a, b), _prism_factor(a, b, c)])


def dipole_kernel(r) -> np.ndarray:
    """Field per unit moment, (3 r_hat r_hat^T - I) / (4 pi |r|^3), for separations ``r`` (..., 3)."""
    r = np.asarray(r, dtype=float)
    d = np.linalg.norm(r, axis=-1)
    if np.any(d == 0):
        raise SingularityError("dipole kernel evaluated at zero separation")
    rh = r / d[..., None]
    outer = 3.0 * rh[..., :, None] * rh[..., None, :] - np.eye(3)
    return outer / (4.0 * math.pi * d[..., None, None] ** 3)


def applied_field(dipole: PointDipole, point) -> np.ndarray:
    """H (A/m) of a point dipole at ``point`` (shape (3,) or (n, 3))."""
    p = np.asarray(point, dtype=float)
    return np.einsum("...ij,j->...i", dipole_kernel(p - dipole.position), dipole.moment)


def prism_field_tensor(r, size) -> np.ndarray:
    """Point demagnetizing tensor of a uniformly magnetized prism.

    For a prism with edge lengths ``size`` centred at the origin, the field at
    offset ``r`` is ``H = -N(r) @ M``.  At the centre of a cube ``N = I / 3``;
    far away ``N -> -V * dipole_kernel(r)``.  Broadcasts over leading axes.
    """
    r = np.asarray(r, dtype=float)
    size = np.asarray(size, dtype=float)
    shape = np.broadcast_shapes(r.shape, size.shape)[:-1]
    n = np.zeros(shape + (3, 3))
    with np.errstate(divide="ignore", invalid="ignore"):
        for sx in (-1.0, 1.0):
            for sy in (-1.0, 1.0):
                for sz in (-1.0, 1.0):
                    x = r[..., 0] - sx * size[..., 0] / 2
                    y = r[..., 1] - sy * size[..., 1] / 2
                    z = r[..., 2] - sz * size[..., 2] / 2
                    rr = np.sqrt(x * x + y * y + z * z)
                    s = sx * sy * sz
                    n[..., 0, 0] -= s * np.arctan(y * z / (x * rr))
                    n[..., 1, 1] -= s * np.arctan(x * z / (y * rr))
                    n[..., 2, 2] -= s * np.arctan(x * y / (z * rr))
                    n[..., 0, 1] += s * _log_sum(z, rr, x, y)
                    n[..., 0, 2] += s * _log_sum(y, rr, x, z)
                    n[..., 1, 2] += s * _log_sum(x, rr, y, z)
    n[..., 1, 0] = n[..., 0, 1]
    n[..., 2, 0] = n[..., 0, 2]
    n[..., 2, 1] = n[..., 1, 2]
    return n / (4.0 * math.pi)


def _log_sum(u, rr, p, q):
    # log(u + rr) without cancellation when u < 0: u + rr = (p^2 + q^2) / (rr - u)
    return np.where(u >= 0, np.log(u + rr), np.log(p * p + q * q) - np.log(rr - u))


def _check_overlap(mesh: CellMesh):
    c, s = mesh.centers, mesh.sizes
    n = len(c)
    tol = 1e-12 * float(np.max(s))
    for i in range(n - 1):
        gap = np.abs(c[i + 1 :] - c[i]) - (s[i + 1 :] + s[i]) / 2
        hit = np.all(gap < -tol, axis=1)
        if np.any(hit):
            j = i + 1 + int(np.argmax(hit))
            raise InvalidInputError(f"cells {i} and {j} overlap")


KERNELS = ("prism", "dipole")


def assemble_system(mesh: CellMesh, kernel: str = "prism") -> np.ndarray:
    """Dense 3N x 3N interaction operator K (H_cells = K M), index ``3 * cell + component``.

    ``kernel="prism"`` collocates the exact field of each uniformly magnetized
    source cell at every cell centre (self block: the centre value of the
    cell's own tensor).  ``kernel="dipole"`` treats source cells as point
    dipoles and uses volume-averaged self-demagnetizing factors; it is cheaper
    but inaccurate for touching cells at high susceptibility.
    """
    n = len(mesh)
    if n < 1:
        raise InvalidInputError("mesh has no cells")
    if kernel not in KERNELS:
        raise InvalidInputError(f"unknown kernel {kernel!r}; expected one of {KERNELS}")
    _check_overlap(mesh)
    idx = np.arange(n)
    if kernel == "prism":
        r = mesh.centers[:, None, :] - mesh.centers[None, :, :]
        blocks = -prism_field_tensor(r, mesh.sizes[None, :, :])
        # the tensor is even in r; average equal-size pairs so K_ij == K_ji survives rounding
        same = np.all(mesh.sizes[:, None, :] == mesh.sizes[None, :, :], axis=-1)
        blocks = np.where(same[..., None, None], 0.5 * (blocks + blocks.transpose(1, 0, 2, 3)), blocks)
    else:
        blocks = np.zeros((n, n, 3, 3))
        if n > 1:
            r = mesh.centers[:, None, :] - mesh.centers[None, :, :]
            off = ~np.eye(n, dtype=bool)
            blocks[off] = dipole_kernel(r[off]) * mesh.volumes[np.nonzero(off)[1], None, None]
        blocks[idx, idx] = -np.einsum("ni,ij->nij", demag_factors(mesh.sizes), np.eye(3))
    return blocks.transpose(0, 2, 1, 3).reshape(3 * n, 3 * n)


def _system_matrix(operator, chi):
    chi3 = np.repeat(np.broadcast_to(np.asarray(chi, float), (operator.shape[0] // 3,)), 3)
    return np.eye(operator.shape[0]) - chi3[:, None] * operator, chi3


def solve_linear(mesh: CellMesh, operator: np.ndarray, chi, h_applied) -> np.ndarray:
    """Solve for magnetization given the applied field at every cell.

    ``h_applied`` is (N, 3) or (N, 3, k) for k right-hand sides; returns the
    matching magnetization array and the worst relative residual.
    """
    n = len(mesh)
    h = np.asarray(h_applied, dtype=float)
    multi = h.ndim == 3
    rhs_field = h.reshape(3 * n, -1)
    a, chi3 = _system_matrix(operator, chi)
    rhs = chi3[:, None] * rhs_field
    if not np.any(rhs):
        return np.zeros_like(h), 0.0
    try:
        sol = np.linalg.solve(a, rhs)
    except np.linalg.LinAlgError as exc:
        cond = float(np.linalg.cond(a))
        raise NumericalFailure(f"singular moment-method system (cond ~ {cond:.3e})", condition=cond) from exc
    res = np.linalg.norm(a @ sol - rhs, axis=0) / np.maximum(np.linalg.norm(rhs, axis=0), np.finfo(float).tiny)
    worst = float(np.max(res))
    if not np.isfinite(worst) or worst > RESIDUAL_TOL:
        cond = float(np.linalg.cond(a))
        raise NumericalFailure(f"moment-method residual {worst:.3e} above tolerance (cond ~ {cond:.3e})", condition=cond)
    out = sol.reshape(n, 3, -1)
    return (out if multi else out[:, :, 0]), worst


def solve_magnetization(
    mesh: CellMesh,
    dipole: PointDipole,
    temp: float,
    mat: ThermoMagneticMaterial,
    operator: np.ndarray | None = None,
) -> MagnetizationSolution:
    chi = susceptibility(mat, temp)
    if chi < 0:
        raise InvalidInputError("negative susceptibility")
    if operator is None:
        operator = assemble_system(mesh)
    m, res = solve_linear(mesh, operator, chi, applied_field(dipole, mesh.centers))
    return MagnetizationSolution(m, res)


def dipole_pair_force(m1, r1, m2, r2) -> np.ndarray:
    """Force (N) on dipole ``m2`` at ``r2`` exerted by dipole ``m1`` at ``r1``; broadcasts over leading axes."""
    m1, m2 = np.asarray(m1, float), np.asarray(m2, float)
    r = np.asarray(r2, float) - np.asarray(r1, float)
    d2 = np.sum(r * r, axis=-1)[..., None]
    d = np.sqrt(d2)
    m1r = np.sum(m1 * r, axis=-1)[..., None]
    m2r = np.sum(m2 * r, axis=-1)[..., None]
    m1m2 = np.sum(m1 * m2, axis=-1)[..., None]
    return 3.0 * MU0 / (4.0 * math.pi * d**5) * (m1r * m2 + m2r * m1 + m1m2 * r - 5.0 * m1r * m2r * r / d2)


def cell_moments(mesh: CellMesh, solution: MagnetizationSolution) -> np.ndarray:
    return solution.magnetization * mesh.volumes[:, None]


def force_on_magnet(mesh: CellMesh, solution: MagnetizationSolution, dipole: PointDipole) -> np.ndarray:
    f = dipole_pair_force(cell_moments(mesh, solution), mesh.centers, dipole.moment, dipole.position)
    return f.sum(axis=0)


def forces_on_cells(mesh: CellMesh, solution: MagnetizationSolution, dipole: PointDipole) -> np.ndarray:
    """Per-cell forces exerted by the magnet (the reaction partners of ``force_on_magnet``)."""
    return dipole_pair_force(dipole.moment, dipole.position, cell_moments(mesh, solution), mesh.centers)


def axial_forces_along_axis(mesh: CellMesh, operator: np.ndarray, magnet: MagnetSpec, z_positions, chi: float) -> np.ndarray:
    """z-force on the magnet for each on-axis position, sharing one factorization."""
    z = np.asarray(z_positions, dtype=float)
    if chi == 0.0:
        return np.zeros_like(z)
    mz = magnet.dipole_moment
    h = np.empty((len(mesh), 3, z.size))
    for k, zk in enumerate(z):
        h[:, :, k] = applied_field(PointDipole((0, 0, zk), (0, 0, mz)), mesh.centers)
    mag, _ = solve_linear(mesh, operator, chi, h)
    moments = mag * mesh.volumes[:, None, None]
    out = np.empty_like(z)
    for k, zk in enumerate(z):
        f = dipole_pair_force(moments[:, :, k], mesh.centers, np.array([0.0, 0.0, mz]), np.array([0.0, 0.0, zk]))
        out[k] = f[:, 2].sum()
    return out
