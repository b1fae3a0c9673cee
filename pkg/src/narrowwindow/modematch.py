"""Ground state below threshold by transverse mode matching at ``x = a``.

Inside the window region the x-even field is expanded in the window-region
transverse modes with ``cosh`` (or ``cos`` for propagating modes) profiles
normalised to one at ``x = a``; outside, in the strips' Dirichlet modes with
``exp(-kappa_n (x - a))`` profiles.  Continuity is projected onto the inner
basis and the normal derivative onto the outer basis, which gives the real
symmetric secular matrix

    M(s) = O diag(t(s)) O^T + diag(kappa(s)),

with ``O`` the outer/inner overlap matrix and ``s = (pi/d)**2 - E`` the gap.
Every eigenvalue of ``M`` increases strictly with ``s``, so the ground state
is the largest ``s`` at which the lowest eigenvalue of ``M`` changes sign.
All energies are handled through ``s`` to avoid cancellation against the
threshold when the gap is tiny.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
import scipy.linalg as sla

from . import modes as _modes
from .base import GeometryEstimator
from ._validation import check_positive
from .exceptions import (
    ConvergenceError,
    EnergyOutOfBracketError,
    FactorizationError,
    GeometryError,
    TruncationError,
)
from .geometry import Geometry, eigen_bracket, threshold

logger = logging.getLogger(__name__)

__all__ = [
    "SecularSystem",
    "EigenResult",
    "assemble_secular",
    "smallest_singular_value",
    "solve_ground_state",
    "solve_fixed_truncation",
    "level_size",
    "matching_residuals",
    "ModeMatchingSolver",
]

#: Leading and subleading truncation exponents in the mode count.  The window
#: edge carries an r**(1/2) singularity; the gap then converges like
#: N**-1.5 with an N**-2 correction.
RICHARDSON_ORDERS = (1.5, 2.0)

PRECISION_FLOOR = 1e-13
_POLE_DISTANCE = 1e-12
_POLE_SHIFT = 1e-13
_SCAN_POINTS = 33
_MAX_RATIO_DENOMINATOR = 64


@dataclass(frozen=True)
class ModeBasis:
    geometry: Geometry
    outer: tuple
    inner: tuple
    overlap: np.ndarray
    outer_rates: np.ndarray
    inner_rates: np.ndarray

    @property
    def size(self) -> int:
        return len(self.outer)


def _select_outer(g: Geometry, n_outer: int):
    if g.half_strip:
        return [_modes.outer_mode(n, g.d1) for n in range(1, n_outer + 1)]
    # the n_outer lowest transverse levels of the two strips, upper strip first on ties
    n1 = np.arange(1, n_outer + 1)
    candidates = [(float((n * math.pi / g.d1) ** 2), 0, int(n)) for n in n1]
    candidates += [(float((n * math.pi / g.d2) ** 2), 1, int(n)) for n in n1]
    candidates.sort()
    return [_modes.outer_mode(n, g.d2 if lower else g.d1, lower=bool(lower))
            for _, lower, n in candidates[:n_outer]]


def _select_inner(g: Geometry, n_inner: int):
    if g.half_strip:
        return [_modes.inner_neumann_dirichlet_mode(m, g.d1) for m in range(1, n_inner + 1)]
    return [_modes.inner_full_dirichlet_mode(m, g.d1, g.d2) for m in range(1, n_inner + 1)]


@lru_cache(maxsize=16)
def mode_basis(g: Geometry, n_inner: int, n_outer: int) -> ModeBasis:
    outer = tuple(_select_outer(g, n_outer))
    inner = tuple(_select_inner(g, n_inner))
    O = _modes.overlap_matrix(outer, inner)
    O.setflags(write=False)
    return ModeBasis(
        geometry=g,
        outer=outer,
        inner=inner,
        overlap=O,
        outer_rates=np.array([m.rate for m in outer]),
        inner_rates=np.array([m.rate for m in inner]),
    )


def _offsets(rates: np.ndarray, d: float) -> np.ndarray:
    # rate - (pi/d)**2 without cancellation for modes sitting exactly at threshold
    return rates - (math.pi / d) ** 2


@dataclass
class _Profiles:
    s: float
    kappa: np.ndarray
    dkappa: np.ndarray
    t: np.ndarray
    dt: np.ndarray
    nu: np.ndarray
    propagating: np.ndarray


def _profiles(basis: ModeBasis, s: float) -> _Profiles:
    """Decay exponents and window log-derivatives at gap ``s`` with s-derivatives."""
    g = basis.geometry
    a = g.a
    kap2 = _offsets(basis.outer_rates, g.d) + s
    if np.any(kap2 <= 0):
        raise EnergyOutOfBracketError(f"gap {s} puts an outer mode at or above threshold")
    nu2 = _offsets(basis.inner_rates, g.d) + s
    propagating = nu2 < 0
    if np.any(propagating):
        k = np.sqrt(-nu2[propagating])
        phase = k * a
        near_pole = np.abs(np.mod(phase - 0.5 * math.pi, math.pi)) < _POLE_DISTANCE
        near_pole |= np.abs(np.mod(phase - 0.5 * math.pi, math.pi) - math.pi) < _POLE_DISTANCE
        if np.any(near_pole):
            return _profiles(basis, s + _POLE_SHIFT)
    kappa = np.sqrt(kap2)
    dkappa = 0.5 / kappa
    t = np.empty_like(nu2)
    dt = np.empty_like(nu2)
    nu = np.sqrt(np.abs(nu2))

    ev = nu2 > 0
    x = nu[ev] * a
    th = np.tanh(x)
    t[ev] = nu[ev] * th
    dt[ev] = (th + x * (1.0 - th * th)) / (2.0 * nu[ev])

    zero = nu2 == 0
    t[zero] = 0.0
    dt[zero] = a

    k = nu[propagating]
    tn = np.tan(k * a)
    t[propagating] = -k * tn
    dt[propagating] = (tn + k * a * (1.0 + tn * tn)) / (2.0 * k)
    return _Profiles(s, kappa, dkappa, t, dt, nu, propagating)


@dataclass(frozen=True)
class SecularSystem:
    """Truncated matching system at one energy.

    ``matrix`` is the symmetric ``n_outer x n_outer`` matrix ``M`` (form
    ``"symmetric"``) or the ``n_outer x n_inner`` matrix with entries
    ``O[n, m] * (t[m] + kappa[n])`` (form ``"outer"``, both matching
    conditions projected onto the outer basis).
    """

    energy: float
    gap: float
    n_inner: int
    n_outer: int
    matrix: np.ndarray
    overlap: np.ndarray
    log_derivatives: np.ndarray
    inner_rates: np.ndarray
    outer_rates: np.ndarray
    propagating: np.ndarray
    form: str = "symmetric"


def _symmetric_matrix(O: np.ndarray, prof: _Profiles) -> np.ndarray:
    M = (O * prof.t) @ O.T
    M = 0.5 * (M + M.T)
    M[np.diag_indices_from(M)] += prof.kappa
    return M


def _assemble_at_gap(g, s, n_inner, n_outer, form="symmetric") -> SecularSystem:
    if int(n_inner) != n_inner or n_inner < 1:
        raise TruncationError(f"n_inner must be >= 1, got {n_inner}")
    if int(n_outer) != n_outer or n_outer < n_inner:
        raise TruncationError(f"n_outer must be >= n_inner, got {n_outer} < {n_inner}")
    basis = mode_basis(g, int(n_inner), int(n_outer))
    prof = _profiles(basis, s)
    O = basis.overlap
    if form == "symmetric":
        matrix = _symmetric_matrix(O, prof)
    elif form == "outer":
        matrix = O * (prof.t[None, :] + prof.kappa[:, None])
    else:
        raise ValueError(f"unknown secular form {form!r}")
    return SecularSystem(
        energy=threshold(g) - prof.s,
        gap=prof.s,
        n_inner=int(n_inner),
        n_outer=int(n_outer),
        matrix=matrix,
        overlap=O,
        log_derivatives=prof.t,
        inner_rates=prof.nu,
        outer_rates=prof.kappa,
        propagating=prof.propagating,
        form=form,
    )


def assemble_secular(g: Geometry, E: float, n_inner: int, n_outer: int | None = None,
                     form: str = "symmetric") -> SecularSystem:
    """Secular system at energy ``E`` with the given mode counts."""
    window = eigen_bracket(g)
    if not window.e_min <= E < threshold(g):
        raise EnergyOutOfBracketError(
            f"E={E} outside [{window.e_min}, {threshold(g)})"
        )
    if n_outer is None:
        n_outer = n_inner
    return _assemble_at_gap(g, threshold(g) - E, n_inner, n_outer, form)


def smallest_singular_value(S) -> float:
    """Smallest singular value of the secular matrix over its largest row norm.

    Accepts a :class:`SecularSystem` or a bare matrix.
    """
    A = S.matrix if isinstance(S, SecularSystem) else np.asarray(S, dtype=float)
    energy = S.energy if isinstance(S, SecularSystem) else None
    try:
        sv = sla.svdvals(A, check_finite=True)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise FactorizationError(f"SVD failed at E={energy}: {exc}", energy=energy) from exc
    scale = np.max(np.linalg.norm(A, axis=1))
    if scale == 0:
        return 0.0
    return float(sv[-1] / scale)


@dataclass
class EigenResult:
    """Ground state found by :func:`solve_ground_state`.

    ``energy``/``gap`` are the values extrapolated in the mode count (or the
    finest raw root when extrapolation is off); ``raw_gap`` is the exact root
    of the finest truncated system, at which ``residual`` and the coefficient
    vectors are evaluated.
    """

    geometry: Geometry
    status: str
    energy: float
    gap: float
    raw_gap: float
    residual: float
    truncation_error: float
    n_modes: int
    kernel_vector: np.ndarray = field(repr=False)
    outer_coefficients: np.ndarray = field(repr=False)
    levels: list = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    @property
    def raw_energy(self) -> float:
        return threshold(self.geometry) - self.raw_gap

    def to_dict(self) -> dict:
        return {
            "E": self.energy,
            "gap": self.gap,
            "residual": self.residual,
            "n_modes": self.n_modes,
        }


class _LevelSolver:
    """Root of the lowest eigenvalue of ``M(s)`` for one truncation level."""

    def __init__(self, g: Geometry, size: int):
        self.g = g
        self.size = size
        self.basis = mode_basis(g, size, size)
        self.evaluations = 0

    def lowest(self, s: float):
        prof = _profiles(self.basis, s)
        M = _symmetric_matrix(self.basis.overlap, prof)
        try:
            w, v = sla.eigh(M, subset_by_index=[0, 0], check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise FactorizationError(
                f"eigensolver failed at E={threshold(self.g) - s}: {exc}",
                energy=threshold(self.g) - s,
            ) from exc
        self.evaluations += 1
        v = v[:, 0]
        b = self.basis.overlap.T @ v
        slope = float(np.dot(prof.dt, b * b) + np.dot(prof.dkappa, v * v))
        scale = float(np.max(np.abs(M).sum(axis=1)))
        return float(w[0]), slope, v, scale

    def root(self, tau_lo, tau_hi, tau0=None, max_iter=100):
        """Safeguarded Newton in ``tau = log s``; ``None`` bounds are unknown."""
        tau = tau0 if tau0 is not None else 0.5 * (tau_lo + tau_hi)
        lo, hi = None, None
        for _ in range(max_iter):
            s = math.exp(tau)
            f, df, v, scale = self.lowest(s)
            if f < 0:
                lo = tau
            else:
                hi = tau
            if abs(f) <= 64 * np.finfo(float).eps * scale:
                return s, v
            step = -f / (s * df)
            new = tau + max(-1.0, min(1.0, step))
            if lo is not None and hi is not None:
                if not lo < new < hi:
                    new = 0.5 * (lo + hi)
                if hi - lo < 1e-14:
                    return s, v
            new = min(max(new, tau_lo), tau_hi)
            if abs(new - tau) < 1e-14 * max(1.0, abs(tau)):
                return s, v
            tau = new
        raise ConvergenceError(f"root refinement did not converge at N={self.size}")


def _width_ratio(g: Geometry):
    """Narrow-to-wide width ratio as a small fraction, or ``None`` if irrational-looking."""
    small = min(g.d1, g.d2)
    ratio = Fraction(small / g.d).limit_denominator(_MAX_RATIO_DENOMINATOR)
    if abs(float(ratio) - small / g.d) <= 1e-12 * (small / g.d):
        return ratio
    return None


def _aligned_start(g: Geometry, n_start: int) -> int:
    if g.half_strip:
        return n_start
    ratio = _width_ratio(g)
    if ratio is None:
        return n_start
    q = ratio.denominator
    return q * max(1, -(-n_start // q))


def level_size(g: Geometry, n: int) -> int:
    """System size at level ``n`` (modes of the wider strip).

    Two-strip systems add ``n * d_narrow / d`` modes of the narrower strip, so
    the outer and inner wavenumber cut-offs coincide; mode matching converges
    erratically when the counts are not kept in the ratio of the widths.
    """
    if g.half_strip:
        return n
    return n + int(round(n * min(g.d1, g.d2) / g.d))


def _richardson(values, order):
    out = [math.nan]
    factor = 2.0**order - 1.0
    for prev, cur in zip(values[:-1], values[1:]):
        out.append(cur + (cur - prev) / factor)
    return out


def _extrapolated(raw):
    r1 = _richardson(raw, RICHARDSON_ORDERS[0])
    r2 = [math.nan] + _richardson(r1[1:], RICHARDSON_ORDERS[1])
    return r2


def solve_ground_state(g: Geometry, tol: float = 1e-6, n_max: int = 2048,
                       n_start: int = 16, extrapolate: bool = True) -> EigenResult:
    """Ground-state eigenvalue of the coupled strips (or the half-strip).

    The first level scans ``tau = log(gap)`` on a coarse grid to bracket the
    largest sign change of the lowest secular eigenvalue and refines it by
    Newton steps with the Hellmann-Feynman slope.  The mode count ``n`` of the
    wider strip doubles from ``n_start`` (see :func:`level_size` for the
    two-strip split) until successive estimates differ by less than
    ``tol * gap``; ``n_max`` caps ``n``.
    With ``extrapolate`` the estimates are twice Richardson-extrapolated in N.
    """
    check_positive("tol", tol)
    if not 1e-14 < tol < 1e-1:
        raise GeometryError(f"tol must lie in (1e-14, 1e-1), got {tol}")
    check_positive("n_max", n_max, integer=True)
    check_positive("n_start", n_start, integer=True)
    if n_start > n_max:
        raise GeometryError(f"n_start={n_start} exceeds n_max={n_max}")

    tau_floor, tau_top = _tau_range(g)
    s_floor = math.exp(tau_floor)
    s_top = math.exp(tau_top)

    n = _aligned_start(g, n_start)
    raw, sizes, vectors = [], [], []
    solver = None
    while n <= n_max:
        size = level_size(g, n)
        solver = _LevelSolver(g, size)
        if not raw:
            found = _scan_root(g, solver, tau_floor, tau_top)
            if found is None:
                logger.info("no eigenvalue resolved above the precision floor for %s", g)
                return _unresolved(g, "no_eigenvalue", size)
            s, v = found
        else:
            guess = raw[-1]
            if len(raw) >= 2:
                guess = raw[-1] + (raw[-1] - raw[-2]) / 2.0 ** RICHARDSON_ORDERS[0]
            guess = min(max(guess, s_floor), s_top)
            s, v = solver.root(tau_floor, tau_top, math.log(guess))
        raw.append(s)
        sizes.append(size)
        vectors.append(v)
        logger.debug("N=%d gap=%.16g (%d evaluations)", size, s, solver.evaluations)

        estimates = _extrapolated(raw) if extrapolate else list(raw)
        if len(estimates) >= 2 and math.isfinite(estimates[-2]):
            err = abs(estimates[-1] - estimates[-2])
            if err < tol * abs(estimates[-1]):
                return _finish(g, solver, raw, sizes, v, estimates[-1], err)
        n *= 2

    raise ConvergenceError(
        f"mode-count doubling reached n_max={n_max} without |dE| < {tol}*gap for {g}"
    )


def _tau_range(g: Geometry) -> tuple[float, float]:
    thr = threshold(g)
    window = eigen_bracket(g)
    return math.log(thr - window.e_max), math.log((thr - window.e_min) * (1.0 - 1e-9))


def _scan_root(g, solver, tau_floor, tau_top):
    """Coarse scan of ``tau`` for the largest sign change, then Newton refinement."""
    taus = np.linspace(tau_floor, tau_top, _SCAN_POINTS)
    fs = [solver.lowest(math.exp(tau))[0] for tau in taus]
    crossings = [i for i in range(len(taus) - 1) if fs[i] < 0 <= fs[i + 1]]
    if not crossings:
        if fs[0] >= 0:
            return None
        raise ConvergenceError(f"no sign change of the secular eigenvalue for {g}")
    i = crossings[-1]
    return solver.root(taus[i], taus[i + 1], 0.5 * (taus[i] + taus[i + 1]))


def solve_fixed_truncation(g: Geometry, n: int) -> EigenResult:
    """Root of the secular system at one truncation, without extrapolation.

    ``n`` counts modes of the wider strip as in :func:`level_size`.  The
    returned ``truncation_error`` is NaN.
    """
    check_positive("n", n, integer=True)
    solver = _LevelSolver(g, level_size(g, n))
    found = _scan_root(g, solver, *_tau_range(g))
    if found is None:
        return _unresolved(g, "no_eigenvalue", solver.size)
    s, v = found
    return _finish(g, solver, [s], [solver.size], v, s, math.nan)


def _unresolved(g, status, size):
    empty = np.zeros(0)
    return EigenResult(g, status, math.nan, math.nan, math.nan, math.nan, math.nan,
                       size, empty, empty, [])


def _finish(g, solver, raw, sizes, v, gap, err):
    thr = threshold(g)
    s_raw = raw[-1]
    system = _assemble_at_gap(g, s_raw, solver.size, solver.size)
    residual = smallest_singular_value(system)
    b = solver.basis.overlap.T @ v
    status = "converged"
    if gap < PRECISION_FLOOR * thr:
        status = "precision_floor"
    return EigenResult(
        geometry=g,
        status=status,
        energy=thr - gap,
        gap=gap,
        raw_gap=s_raw,
        residual=residual,
        truncation_error=err,
        n_modes=solver.size,
        kernel_vector=b,
        outer_coefficients=v,
        levels=list(zip(sizes, raw)),
    )


def matching_residuals(result: EigenResult) -> tuple[float, float]:
    """Relative L2 mismatch of ``psi`` and ``psi_x`` across ``x = a``.

    Both are normalised by ``||psi(a, .)||`` of the outer expansion.
    """
    g = result.geometry
    size = result.n_modes
    basis = mode_basis(g, size, size)
    prof = _profiles(basis, result.raw_gap)
    c = result.outer_coefficients
    b = basis.overlap.T @ c
    trace = float(np.dot(c, c))
    value_mismatch = math.sqrt(max(trace - float(np.dot(b, b)), 0.0))
    inner_slope = prof.t * b
    projected = basis.overlap @ inner_slope
    slope_mismatch = math.sqrt(
        max(float(np.dot(inner_slope, inner_slope)) - float(np.dot(projected, projected)), 0.0)
    )
    norm = math.sqrt(trace)
    return value_mismatch / norm, slope_mismatch / norm


class ModeMatchingSolver(GeometryEstimator):
    """Estimator front end of :func:`solve_ground_state`.

    ``fit(X)`` solves every geometry row ``(d1, d2, a)``; ``predict`` returns
    ground-state energies, :meth:`predict_gap` the gaps below threshold.
    """

    def __init__(self, tol=1e-6, n_max=2048, n_start=16, extrapolate=True):
        self.tol = tol
        self.n_max = n_max
        self.n_start = n_start
        self.extrapolate = extrapolate

    def _solve_one(self, geometry):
        return solve_ground_state(geometry, tol=self.tol, n_max=self.n_max,
                                  n_start=self.n_start, extrapolate=self.extrapolate)

    def _result_value(self, result):
        return result.energy

    def predict_gap(self, X) -> np.ndarray:
        return np.asarray([r.gap for r in self._results_for(X)], dtype=float)
