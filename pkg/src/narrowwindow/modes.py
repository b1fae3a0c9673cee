"""Transverse eigenmodes of the outer strips and of the window region.

Every mode is stored as ``amp * sin(k*y + phase)`` on an interval, so all
overlaps reduce to one product-to-sum closed form.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import GeometryError, IncompatibleIntervalError

__all__ = [
    "ModeFamily",
    "TransverseMode",
    "outer_mode",
    "inner_neumann_dirichlet_mode",
    "inner_full_dirichlet_mode",
    "overlap",
    "overlap_matrix",
    "mode_norm_on_subinterval",
]

_INTERVAL_SLACK = 1e-12
_GAUSS_POINTS = 24


class ModeFamily(enum.Enum):
    OUTER_DIRICHLET = "outer_dirichlet"
    INNER_NEUMANN_DIRICHLET = "inner_neumann_dirichlet"
    INNER_FULL_DIRICHLET = "inner_full_dirichlet"


@dataclass(frozen=True)
class TransverseMode:
    """One transverse eigenfunction on ``[offset, offset + width]``.

    ``mirrored`` only applies to outer Dirichlet modes and measures ``y`` from
    the upper end, which is how the lower strip ``[-d2, 0]`` is parametrised.
    """

    index: int
    family: ModeFamily
    width: float
    offset: float = 0.0
    mirrored: bool = False

    def __post_init__(self):
        if int(self.index) != self.index or self.index < 1:
            raise GeometryError(f"mode index must be an integer >= 1, got {self.index}")
        if not self.width > 0:
            raise GeometryError(f"mode interval width must be positive, got {self.width}")
        if self.mirrored and self.family is not ModeFamily.OUTER_DIRICHLET:
            raise GeometryError("only outer Dirichlet modes can be mirrored")

    @property
    def interval(self) -> tuple[float, float]:
        return self.offset, self.offset + self.width

    @property
    def wavenumber(self) -> float:
        if self.family is ModeFamily.INNER_NEUMANN_DIRICHLET:
            return (self.index - 0.5) * math.pi / self.width
        return self.index * math.pi / self.width

    @property
    def rate(self) -> float:
        """Transverse eigenvalue."""
        return self.wavenumber**2

    @property
    def amplitude(self) -> float:
        return math.sqrt(2.0 / self.width)

    def sine_form(self) -> tuple[float, float, float]:
        """``(amp, k, phase)`` with ``mode(y) = amp * sin(k*y + phase)``."""
        k = self.wavenumber
        lo, hi = self.interval
        if self.family is ModeFamily.INNER_NEUMANN_DIRICHLET:
            return self.amplitude, k, -k * lo + 0.5 * math.pi
        if self.mirrored:
            return self.amplitude, -k, k * hi
        return self.amplitude, k, -k * lo

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        amp, k, phase = self.sine_form()
        lo, hi = self.interval
        inside = (y >= lo - _INTERVAL_SLACK) & (y <= hi + _INTERVAL_SLACK)
        return np.where(inside, amp * np.sin(k * y + phase), 0.0)


def outer_mode(n: int, width: float, lower: bool = False) -> TransverseMode:
    """Dirichlet mode of the upper strip ``[0, width]`` or lower strip ``[-width, 0]``."""
    if lower:
        return TransverseMode(n, ModeFamily.OUTER_DIRICHLET, width, -width, mirrored=True)
    return TransverseMode(n, ModeFamily.OUTER_DIRICHLET, width)


def inner_neumann_dirichlet_mode(m: int, width: float) -> TransverseMode:
    return TransverseMode(m, ModeFamily.INNER_NEUMANN_DIRICHLET, width)


def inner_full_dirichlet_mode(m: int, d1: float, d2: float) -> TransverseMode:
    return TransverseMode(m, ModeFamily.INNER_FULL_DIRICHLET, d1 + d2, -d2)


def _cos_integral(omega, phase, lo, hi):
    """``int_lo^hi cos(omega*y + phase) dy``, analytic through ``omega = 0``."""
    length = hi - lo
    mid = 0.5 * (lo + hi)
    return length * np.cos(omega * mid + phase) * np.sinc(omega * length / (2.0 * np.pi))


def _sine_arrays(modes):
    forms = np.array([m.sine_form() for m in modes], dtype=float).reshape(-1, 3)
    bounds = np.array([m.interval for m in modes], dtype=float).reshape(-1, 2)
    return forms[:, 0], forms[:, 1], forms[:, 2], bounds[:, 0], bounds[:, 1]


def overlap_matrix(outer, inner) -> np.ndarray:
    """Matrix of ``int chi_n(y) phi_m(y) dy`` over each outer mode's interval.

    Rows follow ``outer``, columns ``inner``.  Each outer interval must lie in
    every inner interval (the outer trace is zero-extended across the cut).
    """
    amp1, k1, p1, lo1, hi1 = _sine_arrays(outer)
    amp2, k2, p2, lo2, hi2 = _sine_arrays(inner)
    bad = (lo1[:, None] < lo2[None, :] - _INTERVAL_SLACK) | (
        hi1[:, None] > hi2[None, :] + _INTERVAL_SLACK
    )
    if np.any(bad):
        raise IncompatibleIntervalError(
            "outer mode interval is not contained in the inner cross-section"
        )
    lo = lo1[:, None]
    hi = hi1[:, None]
    diff = _cos_integral(k1[:, None] - k2[None, :], p1[:, None] - p2[None, :], lo, hi)
    summ = _cos_integral(k1[:, None] + k2[None, :], p1[:, None] + p2[None, :], lo, hi)
    return 0.5 * amp1[:, None] * amp2[None, :] * (diff - summ)


def overlap(outer: TransverseMode, inner: TransverseMode) -> float:
    """Closed-form overlap of two transverse modes (see :func:`overlap_matrix`)."""
    return float(overlap_matrix([outer], [inner])[0, 0])


def mode_norm_on_subinterval(mode: TransverseMode, t0: float, t1: float) -> float:
    """``int_t0^t1 mode(y)**2 dy`` for a subinterval of the mode's support."""
    lo, hi = mode.interval
    if not (lo - _INTERVAL_SLACK <= t0 < t1 <= hi + _INTERVAL_SLACK):
        raise GeometryError(f"[{t0}, {t1}] is not a subinterval of [{lo}, {hi}]")
    amp, k, phase = mode.sine_form()
    if abs(k) * (t1 - t0) < 1.0:
        # short interval: the closed form cancels, Gauss-Legendre is exact to rounding
        nodes, weights = np.polynomial.legendre.leggauss(_GAUSS_POINTS)
        y = 0.5 * (t1 - t0) * nodes + 0.5 * (t0 + t1)
        return float(0.5 * (t1 - t0) * np.dot(weights, (amp * np.sin(k * y + phase)) ** 2))
    partial = _cos_integral(2.0 * k, 2.0 * phase, t0, t1)
    return float(0.5 * amp**2 * ((t1 - t0) - partial))
