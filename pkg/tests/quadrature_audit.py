"""Direct 2-D quadrature of the trial Rayleigh numerator, independent of the closed forms."""

import math

import numpy as np
from scipy.integrate import dblquad, quad

from narrowwindow.varbound import TrialParams, profile

OPTS = dict(epsabs=1e-14, epsrel=1e-12)


def numerator_by_quadrature(g, p, lower=False):
    """||grad psi||^2 - (pi/d)^2 ||psi||^2 and ||psi||^2 by direct quadrature."""
    d, a = g.d, g.a
    k = math.pi / d
    al, eta, kap = p.alpha, p.eta, p.kappa
    c1 = math.sqrt(2 / d)

    def chi(y):
        return c1 * math.sin(k * y)

    def dchi(y):
        return c1 * k * math.cos(k * y)

    R = lambda y: float(profile(d, a, y))

    def dR(y):
        if y <= d / 2:
            return -math.pi / (2 * a) * math.exp(-math.pi * y / (2 * a))
        return -2 / d * math.exp(-math.pi * d / (4 * a))

    def window(y, x, which):
        c, s = math.cos(math.pi * x / (2 * a)), math.sin(math.pi * x / (2 * a))
        psi = al * chi(y) + eta * c * R(y)
        px = -eta * math.pi / (2 * a) * s * R(y)
        py = al * dchi(y) + eta * c * dR(y)
        return px * px + py * py - k * k * psi * psi if which == "L" else psi * psi

    total = {}
    for which in ("L", "N"):
        acc = 0.0
        for y0, y1 in ((0, d / 2), (d / 2, d)):
            acc += dblquad(lambda y, x: window(y, x, which), 0, a, y0, y1, **OPTS)[0]
        # tail: psi = alpha exp(-kappa (x - a)) chi(y), separable
        ex2 = quad(lambda x: math.exp(-2 * kap * (x - a)), a, np.inf, **OPTS)[0]
        if which == "L":
            ychi = quad(lambda y: dchi(y) ** 2 - k * k * chi(y) ** 2, 0, d, **OPTS)[0]
            acc += al**2 * (kap**2 * ex2 + ex2 * ychi)
        else:
            acc += al**2 * ex2 * quad(lambda y: chi(y) ** 2, 0, d, **OPTS)[0]
        if lower:
            d2 = min(g.d1, g.d2)
            R2 = lambda t: float(profile(d2, a, t))

            def dR2(t):
                if t <= d2 / 2:
                    return -math.pi / (2 * a) * math.exp(-math.pi * t / (2 * a))
                return -2 / d2 * math.exp(-math.pi * d2 / (4 * a))

            def low(t, x):
                c, s = math.cos(math.pi * x / (2 * a)), math.sin(math.pi * x / (2 * a))
                psi = eta * c * R2(t)
                if which == "N":
                    return psi * psi
                return (eta * math.pi / (2 * a) * s * R2(t)) ** 2 + (eta * c * dR2(t)) ** 2 - k * k * psi * psi

            for t0, t1 in ((0, d2 / 2), (d2 / 2, d2)):
                acc += dblquad(low, 0, a, t0, t1, **OPTS)[0]
        total[which] = 2 * acc  # x-even
    return total["L"], total["N"]


def random_params(seed, n=5):
    rng = np.random.default_rng(seed)
    return [TrialParams(float(k), float(e)) for k, e in
            zip(rng.uniform(0.01, 2.0, n), rng.uniform(-1.0, 1.0, n))]
