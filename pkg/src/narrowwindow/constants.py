"""Explicit constants of the lower bound ``E - (pi/d)^2 >= -c1 a^4``."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import exp1

from ._validation import check_positive
from .lemmas import c0_closed_form, lemma3_route, window_threshold_a0

__all__ = [
    "gamma_constant",
    "tail_sum",
    "tail_bound",
    "ConstantChain",
    "build_chain",
    "c1_from_c0",
]


def gamma_constant(d: float) -> float:
    """``C = (16/d) (2 pi^2 / 3 d^2 + E1(2 pi / d))``, uniform in ``a``."""
    check_positive("d", d)
    return (16.0 / d) * (2.0 * math.pi**2 / (3.0 * d * d) + float(exp1(2.0 * math.pi / d)))


def tail_sum(a: float, d: float) -> float:
    """``sum_{n >= [1/a] + 1} exp(-2 pi a n / d) / n`` summed to rounding."""
    check_positive("a", a)
    check_positive("d", d)
    start = math.floor(1.0 / a + 1e-9) + 1
    rate = 2.0 * math.pi * a / d
    # terms below 1e-18 of the first one are dropped
    count = int(math.ceil(42.0 / rate)) + 1
    n = np.arange(start, start + count, dtype=float)
    return float(np.sum(np.exp(-rate * n) / n))


def tail_bound(a: float, d: float) -> float:
    """Integral bound of :func:`tail_sum` valid for every ``a``.

    The sum is a right Darboux sum of ``int exp(-2 pi u / d) / u du`` from
    ``a [1/a]``; this equals ``E1(2 pi / d)`` only when ``1/a`` is an integer.
    """
    lower = a * math.floor(1.0 / a + 1e-9)
    return float(exp1(2.0 * math.pi * lower / d))


def c1_from_c0(c0: float, d: float) -> float:
    return 2.0 * (4.0 * math.pi**2 / (c0 * d**3)) ** 2


@dataclass(frozen=True)
class ConstantChain:
    """Terminal constants of the lower-bound argument.

    ``thresholds`` collects the explicit smallness conditions on ``a`` that
    the argument states; ``a_valid`` is their minimum.  Nothing beyond those
    recorded conditions is claimed.
    """

    d: float
    a_max: float
    C: float
    a_star: float
    delta: float
    m: float
    c0: float
    c1: float
    thresholds: dict
    a_valid: float

    def to_dict(self) -> dict:
        return asdict(self)


def build_chain(d: float, a_max: float) -> ConstantChain:
    """``delta = min(1, 2 pi / (d C a_max^2))``, ``m = (pi/8) sqrt(delta)``, then ``c0, c1``."""
    check_positive("d", d)
    check_positive("a_max", a_max)
    C = gamma_constant(d)
    a_star = math.sqrt(2.0 * math.pi / (d * C))
    delta = min(1.0, 2.0 * math.pi / (d * C * a_max**2))
    m = (math.pi / 8.0) * math.sqrt(delta)
    c0 = c0_closed_form(m)
    route = lemma3_route(d)
    thresholds = {
        "c0_over_2a": c0 * d / (2.0 * math.pi),
        "lemma4_a0": window_threshold_a0(d, route.eps1),
        "lemma4_m": m * d / (math.pi * math.sqrt(3.0)),
        "G1_positivity": d * math.sqrt(math.pi / (32.0 * (math.pi + 2.0))),
    }
    return ConstantChain(
        d=d,
        a_max=a_max,
        C=C,
        a_star=a_star,
        delta=delta,
        m=m,
        c0=c0,
        c1=c1_from_c0(c0, d),
        thresholds=thresholds,
        a_valid=min(thresholds.values()),
    )
