"""Window-width sweeps, power-law fits of the gap and the two-sided check."""

from __future__ import annotations

import csv
import io
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_increasing
from .exceptions import GeometryError, GridMismatchError
from .geometry import Geometry
from .modematch import solve_ground_state

__all__ = [
    "THREADS_ENV",
    "CSV_HEADER",
    "default_a_grid",
    "SweepRow",
    "SweepResult",
    "PowerLawFit",
    "sweep",
    "write_sweep_csv",
    "read_sweep_csv",
    "SandwichRow",
    "SandwichReport",
    "sandwich_report",
]

logger = logging.getLogger(__name__)

THREADS_ENV = "NARROWWINDOW_THREADS"
CSV_HEADER = ("a", "E", "gap", "n_modes", "residual")


def default_a_grid(a0: float = 0.02, count: int = 7) -> np.ndarray:
    """Geometric grid ``a0 * sqrt(2)**k``."""
    return a0 * np.sqrt(2.0) ** np.arange(count)


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise GeometryError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if n < 0:
        raise GeometryError(f"{THREADS_ENV} must be >= 0, got {n}")
    return n or (os.cpu_count() or 1)


@dataclass(frozen=True)
class SweepRow:
    a: float
    E: float
    gap: float
    n_modes: int
    residual: float
    status: str = "converged"

    @property
    def usable(self) -> bool:
        return self.status == "converged" and self.gap > 0


class PowerLawFit(RegressorMixin, BaseEstimator):
    """Least-squares fit of ``log gap = log coefficient + slope * log a``.

    With ``window="lower_half"`` only points with ``log a`` at or below the
    midpoint of the log range enter the fit; ``window="all"`` uses every
    point.
    """

    def __init__(self, window="lower_half"):
        self.window = window

    def _select(self, a):
        if self.window == "all":
            return np.ones(a.shape, dtype=bool)
        if self.window != "lower_half":
            raise GeometryError(f"unknown fit window {self.window!r}")
        la = np.log(a)
        mid = 0.5 * (la.min() + la.max())
        return la <= mid + 1e-12 * max(1.0, abs(mid))

    def fit(self, a, gap):
        a = check_increasing("a", a)
        gap = np.asarray(gap, dtype=float)
        if gap.shape != a.shape:
            raise GeometryError("a and gap must have the same length")
        if np.any(~(gap > 0)):
            raise GeometryError("gaps must be positive to fit a power law")
        mask = self._select(a)
        if mask.sum() < 2:
            raise GeometryError("the fit window holds fewer than two points")
        x, y = np.log(a[mask]), np.log(gap[mask])
        slope, intercept = np.polyfit(x, y, 1)
        self.slope_ = float(slope)
        self.coefficient_ = float(math.exp(intercept))
        self.window_ = (float(a[mask][0]), float(a[mask][-1]))
        self.residuals_ = y - (intercept + slope * x)
        self.max_residual_ = float(np.max(np.abs(self.residuals_)))
        self.n_points_ = int(mask.sum())
        return self

    def predict(self, a):
        check_is_fitted(self, "slope_")
        return self.coefficient_ * np.asarray(a, dtype=float) ** self.slope_


@dataclass
class SweepResult:
    geometry: Geometry | None
    rows: list
    fit_slope: float = math.nan
    fit_coefficient: float = math.nan
    fit_window: tuple = (math.nan, math.nan)
    fit_max_residual: float = math.nan
    notes: list = field(default_factory=list)

    @property
    def conclusive(self) -> bool:
        return math.isfinite(self.fit_slope)

    def a_values(self) -> np.ndarray:
        return np.array([r.a for r in self.rows])

    def gaps(self) -> np.ndarray:
        return np.array([r.gap for r in self.rows])


def fit_rows(result: SweepResult, window: str = "lower_half") -> SweepResult:
    """Fill the fit fields of ``result`` from its usable rows."""
    usable = [r for r in result.rows if r.usable]
    if len(usable) < 2:
        result.notes.append("fewer than two usable rows; fit inconclusive")
        return result
    a = np.array([r.a for r in usable])
    gap = np.array([r.gap for r in usable])
    try:
        model = PowerLawFit(window).fit(a, gap)
    except GeometryError as exc:
        result.notes.append(f"fit inconclusive: {exc}")
        return result
    result.fit_slope = model.slope_
    result.fit_coefficient = model.coefficient_
    result.fit_window = model.window_
    result.fit_max_residual = model.max_residual_
    return result


def _solve_row(g: Geometry, a: float, tol: float, n_max: int) -> SweepRow:
    res = solve_ground_state(g.with_window(float(a)), tol=tol, n_max=n_max)
    return SweepRow(float(a), float(res.energy), float(res.gap), int(res.n_modes),
                    float(res.residual), res.status)


def sweep(g_base: Geometry, a_values, tol: float = 1e-6, n_max: int = 4096,
          threads: int | None = None) -> SweepResult:
    """Solve for every ``a`` (strip widths from ``g_base``) and fit the gap law.

    Solves run on a thread pool (``threads``, else the environment variable
    ``NARROWWINDOW_THREADS``, 0 meaning one per CPU); rows come back in
    ``a`` order whatever the completion order.
    """
    a = check_increasing("a_values", a_values)
    limit = math.pi * g_base.d / 8.0
    if not (a[0] > 0 and a[-1] < limit):
        raise GeometryError(f"window half-widths must lie in (0, pi*d/8 = {limit})")
    workers = thread_count() if threads is None else max(1, int(threads))
    workers = min(workers, a.size)
    if workers == 1:
        rows = [_solve_row(g_base, x, tol, n_max) for x in a]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda x: _solve_row(g_base, x, tol, n_max), a))
    return fit_rows(SweepResult(g_base, rows))


def write_sweep_csv(result_or_rows, stream=None, metadata: dict | None = None) -> str:
    """CSV with header ``a,E,gap,n_modes,residual`` and round-trip floats."""
    rows = result_or_rows.rows if isinstance(result_or_rows, SweepResult) else result_or_rows
    buf = io.StringIO()
    if metadata:
        for key in sorted(metadata):
            buf.write(f"# {key}={metadata[key]}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        writer.writerow([repr(float(r.a)), repr(float(r.E)), repr(float(r.gap)),
                         str(int(r.n_modes)), repr(float(r.residual))])
    text = buf.getvalue()
    if stream is not None:
        stream.write(text)
    return text


def read_sweep_csv(stream) -> list[SweepRow]:
    lines = [ln for ln in stream.read().splitlines() if ln and not ln.startswith("#")]
    reader = csv.reader(lines)
    try:
        header = tuple(next(reader))
    except StopIteration:
        raise GeometryError("empty sweep CSV") from None
    if header != CSV_HEADER:
        raise GeometryError(f"unexpected CSV header {header}, expected {CSV_HEADER}")
    rows = []
    for rec in reader:
        if len(rec) != len(CSV_HEADER):
            raise GeometryError(f"malformed CSV row {rec}")
        a, E, gap, n_modes, residual = rec
        gap_v = float(gap)
        status = "converged" if gap_v > 0 else "no_eigenvalue"
        rows.append(SweepRow(float(a), float(E), gap_v, int(n_modes), float(residual), status))
    return rows


@dataclass(frozen=True)
class SandwichRow:
    a: float
    gap: float
    variational: float
    chain: float
    in_scope: bool
    variational_ok: bool
    chain_ok: bool

    @property
    def passed(self) -> bool:
        return (not self.in_scope) or (self.variational_ok and self.chain_ok)

    def to_dict(self) -> dict:
        return {
            "a": self.a, "gap": self.gap, "trial_bound": self.variational,
            "c1_a4": self.chain, "in_scope": self.in_scope,
            "gap_ge_trial": self.variational_ok, "gap_le_c1_a4": self.chain_ok,
        }


@dataclass
class SandwichReport:
    rows: list
    status: str
    fit_slope: float
    fit_coefficient: float
    c1: float
    a_star: float
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "fit_slope": self.fit_slope,
            "fit_coefficient": self.fit_coefficient,
            "c1": self.c1,
            "a_star": self.a_star,
            "rows": [r.to_dict() for r in self.rows],
            "notes": list(self.notes),
        }


def sandwich_report(s: SweepResult, upper, c1: float, a_star: float) -> SandwichReport:
    """Row-wise ``|trial bound| <= gap <= c1 a^4`` for rows with ``a <= a_star``.

    ``upper`` is a sequence of ``(a, value)`` pairs (trial quotients, which
    are negative) on the same grid as the sweep.  The report is
    ``inconclusive`` when no usable row is in scope or the fit is empty.
    """
    upper = [(float(a), float(v)) for a, v in upper]
    if len(upper) != len(s.rows) or not all(
        math.isclose(u[0], r.a, rel_tol=1e-12) for u, r in zip(upper, s.rows)
    ):
        raise GridMismatchError("trial-bound grid does not match the sweep grid")
    rows = []
    for r, (_, value) in zip(s.rows, upper):
        chain = c1 * r.a**4
        in_scope = r.a <= a_star and r.usable
        rows.append(SandwichRow(
            a=r.a, gap=r.gap, variational=value, chain=chain, in_scope=in_scope,
            variational_ok=bool(r.gap >= abs(value)), chain_ok=bool(r.gap <= chain),
        ))
    notes = list(s.notes)
    if not any(r.in_scope for r in rows) or not s.conclusive:
        status = "inconclusive"
        notes.append("no usable rows in scope or empty fit window")
    elif all(r.passed for r in rows):
        status = "pass"
    else:
        status = "fail"
    return SandwichReport(rows, status, s.fit_slope, s.fit_coefficient, c1, a_star, notes)
