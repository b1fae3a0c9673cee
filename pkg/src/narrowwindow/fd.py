"""Brute-force finite-difference oracle for the window ground state.

Five-point Laplacian on the truncated rectangle ``[0, X] x [-d2, d1]`` with
Dirichlet walls, the Dirichlet cut ``y = 0, |x| >= a`` and an even reflection
at ``x = 0`` (the ground state is x-even).  In the half-strip case the
Neumann window is imposed by a ghost-point reflection across ``y = 0``.
Nodes at the window edge ``(a, 0)`` carry the Dirichlet value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .base import GeometryEstimator
from .exceptions import BracketEmptyError, ConvergenceError, GeometryError
from .geometry import Geometry, eigen_bracket

__all__ = [
    "GridSpec",
    "FDResult",
    "discrete_strip_threshold",
    "fd_laplacian",
    "fd_eigenvalue",
    "fd_ground_state",
    "fd_solve",
    "FD_ORDER",
    "FiniteDifferenceSolver",
]

#: Convergence order in h of the eigenvalue: the r**(1/2) singularity at the
#: window edge degrades the five-point scheme to first order.
FD_ORDER = 1.0

_ALIGN_TOL = 1e-9


def _steps(length: float, h: float, name: str) -> int:
    k = length / h
    n = int(round(k))
    if abs(k - n) > _ALIGN_TOL * max(1.0, k):
        raise GeometryError(f"{name}={length} is not a multiple of h={h}")
    return n


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid of step ``h`` on ``[0, x_extent]`` across the strip."""

    h: float
    x_extent: float
    geometry: Geometry

    def __post_init__(self):
        g = self.geometry
        if not self.h > 0:
            raise GeometryError(f"h must be positive, got {self.h}")
        if self.x_extent < 4.0 * g.d * (1.0 - _ALIGN_TOL):
            raise GeometryError(f"x_extent={self.x_extent} must be at least 4*d={4 * g.d}")
        _steps(g.d1, self.h, "d1")
        _steps(g.d2, self.h, "d2")
        _steps(g.a, self.h, "a")
        _steps(self.x_extent, self.h, "x_extent")

    def refined(self) -> "GridSpec":
        return GridSpec(self.h / 2.0, self.x_extent, self.geometry)

    @property
    def nx(self) -> int:
        return _steps(self.x_extent, self.h, "x_extent")

    @property
    def ny(self) -> int:
        return _steps(self.geometry.D, self.h, "D")


@dataclass(frozen=True)
class FDResult:
    energy: float
    coarse: float
    fine: float
    h: float
    x_extent: float
    order: float = FD_ORDER

    def to_dict(self) -> dict:
        return {"E": self.energy, "h": self.h, "X": self.x_extent}


def discrete_strip_threshold(d: float, h: float) -> float:
    """Lowest transverse eigenvalue of the discrete Dirichlet strip of width ``d``."""
    return (4.0 / h**2) * math.sin(math.pi * h / (2.0 * d)) ** 2


def fd_laplacian(spec: GridSpec) -> sp.csr_matrix:
    """Symmetrised discrete operator on the unknown nodes.

    Reflected (ghost) neighbours double a coupling; the resulting matrix is
    ``W^-1 S`` with ``S`` symmetric and ``W`` the diagonal of reflection
    weights, returned here as ``W^-1/2 S W^-1/2``.
    """
    g = spec.geometry
    h = spec.h
    nx = spec.nx
    ny = spec.ny
    j_cut = _steps(g.d2, h, "d2")
    i_edge = _steps(g.a, h, "a")
    half = g.half_strip

    # columns i = 0..nx-1 (x = X is Dirichlet), rows j = 0..ny-1 (or 1..ny-1)
    j_first = 0 if half else 1
    ii, jj = np.meshgrid(np.arange(nx), np.arange(j_first, ny), indexing="ij")
    unknown = ~((jj == j_cut) & (ii >= i_edge))
    index = -np.ones(ii.shape, dtype=np.int64)
    index[unknown] = np.arange(int(unknown.sum()))
    n = int(unknown.sum())

    iu = ii[unknown]
    ju = jj[unknown]
    ku = index[unknown]

    def lookup(i, j):
        ok = (i >= 0) & (i < nx) & (j >= j_first) & (j < ny)
        out = np.full(i.shape, -1, dtype=np.int64)
        out[ok] = index[i[ok], j[ok] - j_first]
        return out

    rows = [ku]
    cols = [ku]
    vals = [np.full(n, 4.0 / h**2)]
    for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        ti = iu + di
        tj = ju + dj
        if di == -1:
            ti = np.abs(ti)  # even reflection at x = 0
        if half and dj == -1:
            tj = np.abs(tj)  # Neumann window by ghost reflection at y = 0
        k = lookup(ti, tj)
        keep = k >= 0
        rows.append(ku[keep])
        cols.append(k[keep])
        vals.append(np.full(int(keep.sum()), -1.0 / h**2))
    A = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )
    weight = np.where(iu == 0, 0.5, 1.0)
    if half:
        weight = weight * np.where(ju == 0, 0.5, 1.0)
    root = np.sqrt(weight)
    return (sp.diags(root) @ A @ sp.diags(1.0 / root)).tocsc()


def fd_eigenvalue(spec: GridSpec, shift: float | None = None) -> float:
    """Lowest eigenvalue on one grid, by shift-invert Lanczos below the spectrum."""
    g = spec.geometry
    if g.a < 0.2 * g.d * (1.0 - _ALIGN_TOL):
        raise GeometryError(f"finite differences cannot resolve a={g.a} < 0.2*d")
    A = fd_laplacian(spec)
    if shift is None:
        shift = eigen_bracket(g).e_min
    try:
        vals = spla.eigsh(A, k=1, sigma=shift, which="LM", return_eigenvectors=False,
                          tol=1e-12, maxiter=10_000)
    except spla.ArpackNoConvergence as exc:
        raise ConvergenceError(f"shift-invert iteration did not converge on h={spec.h}") from exc
    value = float(vals[0])
    limit = discrete_strip_threshold(g.d, spec.h)
    if not value < limit:
        raise BracketEmptyError(
            f"discrete eigenvalue {value} is not below the discrete threshold {limit}"
        )
    return value


def fd_solve(spec: GridSpec) -> FDResult:
    """Eigenvalues on ``h`` and ``h/2`` with Richardson extrapolation."""
    coarse = fd_eigenvalue(spec)
    fine = fd_eigenvalue(spec.refined())
    factor = 2.0**FD_ORDER - 1.0
    energy = fine + (fine - coarse) / factor
    return FDResult(energy, coarse, fine, spec.h, spec.x_extent)


def fd_ground_state(spec: GridSpec) -> float:
    return fd_solve(spec).energy


class FiniteDifferenceSolver(GeometryEstimator):
    """Estimator wrapper; ``predict`` returns extrapolated FD energies."""

    def __init__(self, h=1 / 160, x_extent=6.0):
        self.h = h
        self.x_extent = x_extent

    def _solve_one(self, geometry):
        return fd_solve(GridSpec(self.h, self.x_extent, geometry))

    def _result_value(self, result):
        return result.energy
