"""Closed-form trial-function upper bound on the eigenvalue gap.

The trial function is ``psi = F + G`` on the upper strip ``[0, d]`` with

    F(x, y) = f1(x) chi_1(y),   f1 = alpha for |x| <= a, alpha exp(-kappa (|x| - a)) outside,
    G(x, y) = eta cos(pi x / 2a) R(y) on |x| <= a,

where ``R`` decays like ``exp(-pi y / 2a)`` up to ``d/2`` and is linear to zero
after that.  In the two-strip (nonsymmetric) variant the window profile also
continues into the lower strip, ``G = eta cos(pi x / 2a) R_2(-y)``.

``psi`` is continuous, vanishes on the Dirichlet parts of the boundary and
lies in the form domain, so the exact Rayleigh quotient of
``L(psi) = ||grad psi||^2 - (pi/d)^2 ||psi||^2`` bounds ``E - (pi/d)^2`` from
above.  Every ingredient is evaluated in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh
from scipy.optimize import minimize_scalar

from .base import GeometryEstimator
from .exceptions import ConvergenceError, GeometryError, ValidityError
from .geometry import Geometry

__all__ = [
    "TrialParams",
    "TrialTerms",
    "TrialBound",
    "profile_norms",
    "chi1_overlap",
    "trial_terms",
    "rayleigh_quotient",
    "optimize_trial",
    "paper_chain_value",
    "corrected_chain_value",
    "TrialFunctionBound",
]

_MAX_ITER = 200
_VARIANTS = ("auto", "symmetric", "nonsymmetric")


@dataclass(frozen=True)
class TrialParams:
    kappa: float
    eta: float
    alpha: float = 1.0

    def __post_init__(self):
        if not self.kappa > 0:
            raise GeometryError(f"kappa must be positive, got {self.kappa}")
        if not math.isfinite(self.eta):
            raise GeometryError("eta must be finite")


@dataclass(frozen=True)
class TrialTerms:
    """Quadratic-form ingredients of one trial function.

    Norms are squared L2 norms over the whole (upper or coupled) strip.
    ``lower_*`` entries vanish in the symmetric variant.
    """

    fx2: float
    gx2: float
    gy2: float
    g2: float
    fg: float
    g_window: float
    coupling: float
    f2: float
    lower_gx2: float = 0.0
    lower_gy2: float = 0.0
    lower_g2: float = 0.0
    transverse: float = math.pi

    @property
    def psi2(self) -> float:
        return self.f2 + 2.0 * self.fg + self.g2 + self.lower_g2

    @property
    def functional(self) -> float:
        """``L(psi) = ||psi_x||^2 + ||psi_y||^2 - (pi/d)^2 ||psi||^2``."""
        k2 = self.transverse**2
        upper = self.fx2 + self.gx2 + self.gy2 - k2 * self.g2 + self.coupling
        lower = self.lower_gx2 + self.lower_gy2 - k2 * self.lower_g2
        return upper + lower

    @property
    def quotient(self) -> float:
        return self.functional / self.psi2

    def to_dict(self) -> dict:
        return {
            "Fx2": self.fx2, "Gx2": self.gx2, "Gy2": self.gy2, "G2": self.g2,
            "FG": self.fg, "G_window": self.g_window, "psi2": self.psi2,
            "L": self.functional,
        }


@dataclass(frozen=True)
class TrialBound:
    geometry: Geometry
    variant: str
    params: TrialParams
    value: float
    terms: TrialTerms
    iterations: int
    paper_chain_value: float
    corrected_chain_value: float
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "a": self.geometry.a,
            "value": self.value,
            "kappa": self.params.kappa,
            "eta": self.params.eta,
            "paper_chain_value": self.paper_chain_value,
            "corrected_chain_value": self.corrected_chain_value,
        }


def profile_norms(width: float, a: float) -> tuple[float, float]:
    """``(||R||^2, ||R'||^2)`` on ``[0, width]``."""
    e = math.exp(-math.pi * width / (2.0 * a))
    r2 = a / math.pi + (width / 6.0 - a / math.pi) * e
    dr2 = math.pi / (4.0 * a) + (2.0 / width - math.pi / (4.0 * a)) * e
    return r2, dr2


def profile(width: float, a: float, y):
    """The window profile ``R`` on ``[0, width]``."""
    y = np.asarray(y, dtype=float)
    head = np.exp(-math.pi * y / (2.0 * a))
    tail = 2.0 * (1.0 - y / width) * math.exp(-math.pi * width / (4.0 * a))
    return np.where(y <= 0.5 * width, head, tail)


def chi1_overlap(d: float, a: float) -> float:
    """``<chi_1, R>`` on ``[0, d]`` in closed form."""
    b = math.pi / (2.0 * a)
    k = math.pi / d
    head = (k - b * math.exp(-b * 0.5 * d)) / (b * b + k * k)
    tail = 2.0 * d / math.pi**2 * math.exp(-math.pi * d / (4.0 * a))
    return math.sqrt(2.0 / d) * (head + tail)


def _resolve_variant(g: Geometry, variant: str) -> str:
    if variant not in _VARIANTS:
        raise GeometryError(f"variant must be one of {_VARIANTS}, got {variant!r}")
    if variant == "auto":
        return "symmetric" if g.half_strip or g.symmetric else "nonsymmetric"
    if variant == "nonsymmetric" and g.half_strip:
        raise GeometryError("the nonsymmetric trial function needs a lower strip (d2 > 0)")
    return variant


def _check_validity(g: Geometry):
    if not g.a < math.pi * g.d / 8.0:
        raise ValidityError(f"trial bound needs a < pi*d/8 = {math.pi * g.d / 8.0}, got a={g.a}")


def trial_terms(g: Geometry, p: TrialParams, variant: str = "auto") -> TrialTerms:
    """All terms of ``L(psi)`` and ``||psi||^2`` for the trial function ``p``.

    The wider strip carries ``F``; the symmetric variant lives on the
    half-strip of width ``d`` (the y-even part of equal strips).
    """
    variant = _resolve_variant(g, variant)
    _check_validity(g)
    d, a = g.d, g.a
    alpha, eta, kappa = p.alpha, p.eta, p.kappa
    r2, dr2 = profile_norms(d, a)
    g_window = 4.0 * a * eta / math.pi
    coupling = -2.0 * alpha * (math.pi / d) * math.sqrt(2.0 / d) * g_window
    terms = dict(
        fx2=alpha**2 * kappa,
        gx2=eta**2 * (math.pi**2 / (4.0 * a)) * r2,
        gy2=eta**2 * a * dr2,
        g2=eta**2 * a * r2,
        fg=alpha * eta * (4.0 * a / math.pi) * chi1_overlap(d, a),
        g_window=g_window,
        coupling=coupling,
        f2=alpha**2 * (2.0 * a + 1.0 / kappa),
        transverse=math.pi / d,
    )
    if variant == "nonsymmetric":
        narrow = min(g.d1, g.d2)
        s2, ds2 = profile_norms(narrow, a)
        terms.update(
            lower_gx2=eta**2 * (math.pi**2 / (4.0 * a)) * s2,
            lower_gy2=eta**2 * a * ds2,
            lower_g2=eta**2 * a * s2,
        )
    return TrialTerms(**terms)


def rayleigh_quotient(g: Geometry, p: TrialParams, variant: str = "auto") -> float:
    return trial_terms(g, p, variant).quotient


def _best_eta(g: Geometry, kappa: float, variant: str) -> tuple[float, float]:
    """Minimise the quotient over ``eta`` at ``alpha = 1``: a 2x2 pencil."""
    ones = trial_terms(g, TrialParams(kappa, 1.0), variant)
    zero = trial_terms(g, TrialParams(kappa, 0.0), variant)
    # quadratic forms in (alpha, eta)
    cross_l = 0.5 * ones.coupling
    cross_n = ones.fg
    Lm = np.array([[zero.functional, cross_l],
                   [cross_l, ones.functional - zero.functional - ones.coupling]])
    Nm = np.array([[zero.psi2, cross_n],
                   [cross_n, ones.psi2 - zero.psi2 - 2.0 * ones.fg]])
    w, v = eigh(Lm, Nm)
    vec = v[:, 0]
    if vec[0] == 0:
        raise ConvergenceError("trial minimiser has no F component")
    return float(w[0]), float(vec[1] / vec[0])


def kappa_guess(g: Geometry) -> float:
    """Starting point ``2**6 a**2 / (pi d**3)`` for the kappa search."""
    return 2.0**6 * g.a**2 / (math.pi * g.d**3)


def paper_chain_value(g: Geometry) -> float:
    """Closed-form chain value ``-2**12 a**4 / (pi**2 d**6)``."""
    return -(2.0**12) * g.a**4 / (math.pi**2 * g.d**6)


def corrected_chain_value(g: Geometry, variant: str = "auto") -> float:
    """Leading term of the same inequality chain, minimised consistently.

    The eta minimisation leaves ``kappa**2 - 2**6 a**2 kappa / (pi d**3)``
    (``2**5`` when the window profile also fills the lower strip).
    """
    variant = _resolve_variant(g, variant)
    power = 10 if variant == "symmetric" else 8
    return -(2.0**power) * g.a**4 / (math.pi**2 * g.d**6)


def optimize_trial(g: Geometry, variant: str = "auto") -> TrialBound:
    """Optimised trial quotient: exact in eta, golden-section in log kappa."""
    variant = _resolve_variant(g, variant)
    _check_validity(g)
    start = math.log(kappa_guess(g))

    def objective(t):
        return _best_eta(g, math.exp(t), variant)[0]

    res = minimize_scalar(objective, bracket=(start - 1.0, start), method="golden",
                          options={"maxiter": _MAX_ITER, "xtol": 1e-10})
    if not res.success or res.nit >= _MAX_ITER:
        raise ConvergenceError(f"kappa search did not converge in {_MAX_ITER} iterations")
    kappa = math.exp(res.x)
    value, eta = _best_eta(g, kappa, variant)
    params = TrialParams(kappa, eta)
    return TrialBound(
        geometry=g,
        variant=variant,
        params=params,
        value=value,
        terms=trial_terms(g, params, variant),
        iterations=int(res.nit),
        paper_chain_value=paper_chain_value(g),
        corrected_chain_value=corrected_chain_value(g, variant),
    )


class TrialFunctionBound(GeometryEstimator):
    """Estimator front end of :func:`optimize_trial`; ``predict`` gives the bound."""

    def __init__(self, variant="auto"):
        self.variant = variant

    def _solve_one(self, geometry):
        return optimize_trial(geometry, self.variant)

    def _result_value(self, result):
        return result.value
