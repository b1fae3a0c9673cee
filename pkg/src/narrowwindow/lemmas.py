"""One-dimensional variational oracles for the transverse inequalities.

Quadratic forms ``int w phi'^2 + int q(t) phi^2`` are discretised with
piecewise-linear elements (consistent mass), which converges at second order
when the breakpoints of ``q`` sit on grid nodes.  Dirichlet values are fixed
nodes; integral constraints ``<phi, c> = target`` are eliminated by an
orthonormal null-space basis of the discrete constraint rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla
from scipy.optimize import brentq

from .exceptions import (
    ConstraintDegeneracyError,
    ConvergenceError,
    GeometryError,
    IndefiniteFormError,
    ValidityError,
)
from .modes import mode_norm_on_subinterval, outer_mode

__all__ = [
    "Grid1D",
    "Boundary",
    "QuadraticFormSpec",
    "FormMinimum",
    "solve_on_grid",
    "min_quadratic_form",
    "lemma1_instance",
    "lemma2_instance",
    "lemma3_spec",
    "lemma3_gap",
    "Lemma3Route",
    "lemma3_route",
    "window_threshold_a0",
    "lemma4_spec",
    "lemma4_constant",
    "c0_closed_form",
]

_REL_ACCEPT = 0.01
_N_LIMIT = 1 << 13
XI1 = 8.0 / (3.0 * math.pi)


@dataclass(frozen=True)
class Grid1D:
    """``n`` uniform cells on ``interval``."""

    n: int
    interval: tuple[float, float]

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 64:
            raise GeometryError(f"grid needs at least 64 cells, got {self.n}")
        t0, t1 = self.interval
        if not t1 > t0:
            raise GeometryError(f"empty interval {self.interval}")

    @property
    def h(self) -> float:
        return (self.interval[1] - self.interval[0]) / self.n

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.interval[0], self.interval[1], self.n + 1)

    def refined(self) -> "Grid1D":
        return Grid1D(2 * self.n, self.interval)

    def aligned(self, t: float) -> bool:
        k = (t - self.interval[0]) / self.h
        return abs(k - round(k)) < 1e-9 * max(1.0, k)


@dataclass(frozen=True)
class Boundary:
    """Endpoint condition: ``value`` is ``None`` for a free end."""

    value: float | None = None

    @classmethod
    def free(cls):
        return cls(None)

    @classmethod
    def dirichlet(cls, value=0.0):
        return cls(float(value))


@dataclass(frozen=True)
class QuadraticFormSpec:
    """``int phi'^2 + sum_k q_k int_{I_k} phi^2`` with boundary and integral constraints.

    ``mass`` lists ``(t_start, t_end, q)`` segments.  With ``rayleigh`` the
    form is divided by ``int phi^2`` over the whole interval; the problem must
    then be homogeneous (zero Dirichlet values and targets).
    """

    mass: tuple = ()
    left: Boundary = Boundary()
    right: Boundary = Boundary()
    constraints: tuple = ()
    rayleigh: bool = False
    derivative_weight: float = 1.0

    def __post_init__(self):
        for seg in self.mass:
            if len(seg) != 3 or not all(math.isfinite(float(v)) for v in seg):
                raise GeometryError(f"bad mass segment {seg!r}")
        if self.rayleigh:
            values = [self.left.value, self.right.value] + [t for _, t in self.constraints]
            if any(v not in (None, 0.0) for v in values):
                raise GeometryError("a Rayleigh quotient needs homogeneous constraints")


@dataclass
class FormMinimum:
    value: float
    t: np.ndarray
    phi: np.ndarray
    n: int
    history: list = field(default_factory=list)


def _element_matrices(spec: QuadraticFormSpec, grid: Grid1D):
    h = grid.h
    t = grid.nodes
    mid = 0.5 * (t[:-1] + t[1:])
    q = np.zeros(grid.n)
    for lo, hi, val in spec.mass:
        q[(mid > lo) & (mid < hi)] += val
    n = grid.n + 1
    K = np.zeros((n, n))
    M = np.zeros((n, n))
    Q = np.zeros((n, n))
    idx = np.arange(grid.n)
    k_loc = spec.derivative_weight / h * np.array([[1.0, -1.0], [-1.0, 1.0]])
    m_loc = h / 6.0 * np.array([[2.0, 1.0], [1.0, 2.0]])
    for i in range(2):
        for j in range(2):
            np.add.at(K, (idx + i, idx + j), k_loc[i, j])
            np.add.at(M, (idx + i, idx + j), m_loc[i, j])
            np.add.at(Q, (idx + i, idx + j), q * m_loc[i, j])
    return t, K + Q, M


def solve_on_grid(spec: QuadraticFormSpec, grid: Grid1D) -> FormMinimum:
    """Minimum of the discretised form on one grid."""
    t, A, M = _element_matrices(spec, grid)
    n = t.size
    fixed = {}
    if spec.left.value is not None:
        fixed[0] = spec.left.value
    if spec.right.value is not None:
        fixed[n - 1] = spec.right.value
    free = np.array([i for i in range(n) if i not in fixed])
    x_fixed = np.zeros(n)
    for i, v in fixed.items():
        x_fixed[i] = v

    rows, targets = [], []
    for weight, target in spec.constraints:
        row = M @ np.asarray(weight(t), dtype=float)
        targets.append(target - row @ x_fixed)
        rows.append(row[free])
    if rows:
        C = np.array(rows)
        q_full, r = sla.qr(C.T, mode="full")
        diag = np.abs(np.diag(r[: len(rows), : len(rows)]))
        if diag.min() <= 1e-12 * max(diag.max(), 1e-300):
            raise ConstraintDegeneracyError("integral constraints are linearly dependent on the grid")
        k = len(rows)
        Z = q_full[:, k:]
        # particular solution of C x = targets, minimum norm
        x_p = q_full[:, :k] @ sla.solve_triangular(r[:k, :k].T, np.array(targets), lower=True)
    else:
        Z = np.eye(free.size)
        x_p = np.zeros(free.size)

    Aff = A[np.ix_(free, free)]
    if spec.rayleigh:
        Mff = M[np.ix_(free, free)]
        red_a = Z.T @ Aff @ Z
        red_m = Z.T @ Mff @ Z
        w, v = sla.eigh(red_a, red_m, subset_by_index=[0, 0])
        x = np.zeros(n)
        x[free] = Z @ v[:, 0]
        x /= math.sqrt(x @ M @ x)
        return FormMinimum(float(w[0]), t, x, grid.n)

    base = x_fixed.copy()
    base[free] += x_p
    rhs = -(Z.T @ (A[free, :] @ base))
    red = Z.T @ Aff @ Z
    try:
        factor = sla.cho_factor(red)
    except sla.LinAlgError:
        raise IndefiniteFormError("quadratic form is not positive on the constraint set") from None
    y = sla.cho_solve(factor, rhs)
    x = base.copy()
    x[free] += Z @ y
    return FormMinimum(float(x @ A @ x), t, x, grid.n)


def min_quadratic_form(spec: QuadraticFormSpec, grid: Grid1D, n_limit: int = _N_LIMIT) -> FormMinimum:
    """Minimum on ``grid`` and refinements until two levels agree to 1%."""
    prev = solve_on_grid(spec, grid)
    history = [(grid.n, prev.value)]
    g = grid
    while g.n * 2 <= n_limit:
        g = g.refined()
        cur = solve_on_grid(spec, g)
        history.append((g.n, cur.value))
        if abs(cur.value - prev.value) <= _REL_ACCEPT * abs(cur.value):
            cur.history = history
            return cur
        prev = cur
    raise ConvergenceError(f"form minimum not stable to 1% up to {g.n} cells: {history}")


# instances -------------------------------------------------------------

def lemma1_instance(m: float, alpha: float = 1.0, n: int = 256) -> tuple[QuadraticFormSpec, Grid1D, float]:
    """``int_0^T (phi'^2 + m^2 phi^2)`` with ``phi(0) = alpha``, ``T = 12/m``.

    Returns the form, the grid and the exact truncated minimum
    ``m alpha^2 tanh(m T)``.
    """
    if not m > 0:
        raise GeometryError("m must be positive")
    T = 12.0 / m
    spec = QuadraticFormSpec(mass=((0.0, T, m * m),), left=Boundary.dirichlet(alpha))
    return spec, Grid1D(n, (0.0, T)), m * alpha**2 * math.tanh(m * T)


def lemma2_instance(b: float, n: int = 256) -> tuple[QuadraticFormSpec, Grid1D, float]:
    spec = QuadraticFormSpec(left=Boundary.dirichlet(0.0), right=Boundary.dirichlet(0.0),
                             rayleigh=True)
    return spec, Grid1D(n, (-b, b)), (math.pi / (2.0 * b)) ** 2


def _chi1(d):
    k = math.pi / d
    amp = math.sqrt(2.0 / d)
    return lambda t: amp * np.sin(k * np.asarray(t))


def lemma3_spec(d: float, orthogonal: bool = True) -> QuadraticFormSpec:
    constraints = ((_chi1(d), 0.0),) if orthogonal else ()
    return QuadraticFormSpec(right=Boundary.dirichlet(0.0), constraints=constraints, rayleigh=True)


def lemma3_gap(d: float, grid: Grid1D | None = None, orthogonal: bool = True):
    """Constrained minimum of ``int phi'^2 / ||phi||^2`` on ``[0, d]``.

    Free at 0, ``phi(d) = 0`` and ``<phi, chi_1> = 0``.  Returns
    ``(minimum, epsilon2, minimiser)`` with ``epsilon2 = minimum/(pi/d)^2 - 1``.
    """
    if not d > 0:
        raise GeometryError("d must be positive")
    grid = grid or Grid1D(256, (0.0, d))
    res = min_quadratic_form(lemma3_spec(d, orthogonal), grid)
    eps2 = res.value / (math.pi / d) ** 2 - 1.0
    if orthogonal and not eps2 > 0:
        raise ValidityError(f"constrained minimum {res.value} does not exceed (pi/d)^2")
    return res.value, eps2, res


@dataclass(frozen=True)
class Lemma3Route:
    """Explicit estimate through the even extension ``Phi`` on ``[-d, d]``.

    ``gamma_max`` bounds the ``g_1`` coefficient of a unit ``Phi`` whose
    overlap with ``|g_2|`` is below ``overlap_bound``; then
    ``||Phi'||^2 >= (pi/2d)^2 (9 - 8 gamma_max^2)``.
    """

    d: float
    eps1: float
    overlap_bound: float
    gamma_max: float
    derivative_bound: float
    eps2: float
    eps1_max: float
    seven_quarters_reached: bool


def _gamma_max(e: float) -> float:
    # largest |gamma| with xi1 |gamma| - sqrt(1 - xi1^2) sqrt(1 - gamma^2) <= e
    return XI1 * e + math.sqrt(1.0 - XI1**2) * math.sqrt(max(1.0 - e * e, 0.0))


def lemma3_route(d: float, eps1: float | None = None) -> Lemma3Route:
    """Route estimate with the overlap hypothesis ``|(xi, Phi)| < sqrt(2) eps1``.

    The estimate beats ``(pi/d)^2`` while ``gamma_max^2 < 5/8``, which fixes
    ``eps1_max``; the default ``eps1`` is half of it.
    """
    if not d > 0:
        raise GeometryError("d must be positive")
    theta = math.acos(XI1)
    e_max = math.cos(theta + math.acos(math.sqrt(5.0 / 8.0)))
    eps1_max = e_max / math.sqrt(2.0)
    if eps1 is None:
        eps1 = 0.5 * eps1_max
    if not 0 < eps1 < eps1_max:
        raise ValidityError(f"eps1 must lie in (0, {eps1_max}), got {eps1}")
    e = math.sqrt(2.0) * eps1
    gamma = _gamma_max(e)
    bound = (math.pi / (2.0 * d)) ** 2 * (9.0 - 8.0 * gamma**2)
    return Lemma3Route(
        d=d,
        eps1=eps1,
        overlap_bound=e,
        gamma_max=gamma,
        derivative_bound=bound,
        eps2=bound / (math.pi / d) ** 2 - 1.0,
        eps1_max=eps1_max,
        seven_quarters_reached=bound >= 7.0 * math.pi**2 / (4.0 * d * d),
    )


def window_threshold_a0(d: float, eps1: float) -> float:
    """Largest ``a`` with ``2 ||chi_1||_{[0,a]} < eps1``."""
    mode = outer_mode(1, d)

    def f(a):
        return 2.0 * math.sqrt(mode_norm_on_subinterval(mode, 0.0, a)) - eps1

    if f(d) < 0:
        return d
    return brentq(f, 1e-12 * d, d, xtol=1e-15 * d, rtol=1e-13)


def c0_closed_form(m: float) -> float:
    mu = m / math.sqrt(3.0)
    return mu * math.tanh(mu)


def lemma4_spec(m: float, d: float, a: float, beta: float = 1.0) -> QuadraticFormSpec:
    return QuadraticFormSpec(
        mass=((0.0, a, (m / a) ** 2), (0.0, d, -((math.pi / d) ** 2))),
        left=Boundary.dirichlet(beta),
        right=Boundary.dirichlet(0.0),
        constraints=((_chi1(d), 0.0),),
    )


def lemma4_constant(m: float, d: float, a: float, grid: Grid1D | None = None,
                    beta: float = 1.0, eps1: float | None = None, check: bool = True):
    """``(a * min M(phi) / beta^2, c0)`` for the combined bound.

    ``check`` enforces ``a < min(a0, m d / (pi sqrt 3))`` with ``a0`` from
    :func:`window_threshold_a0` at the route's ``eps1``.
    """
    if not (m > 0 and d > 0 and 0 < a < d):
        raise GeometryError("need m > 0, d > 0 and 0 < a < d")
    if check:
        route = lemma3_route(d, eps1)
        limit = min(window_threshold_a0(d, route.eps1), m * d / (math.pi * math.sqrt(3.0)))
        if not a < limit:
            raise ValidityError(f"a={a} violates the restriction a < {limit}")
    if grid is None:
        cells = max(64, int(round(d / a)) * 32)
        grid = Grid1D(cells, (0.0, d))
    if not grid.aligned(a):
        raise GeometryError(f"grid does not have a node at a={a}")
    res = min_quadratic_form(lemma4_spec(m, d, a, beta), grid)
    return a * res.value / beta**2, c0_closed_form(m)
