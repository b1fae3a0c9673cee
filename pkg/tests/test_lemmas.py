import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from narrowwindow.exceptions import (
    ConstraintDegeneracyError,
    ConvergenceError,
    GeometryError,
    IndefiniteFormError,
    ValidityError,
)
from narrowwindow.lemmas import (
    XI1,
    Boundary,
    Grid1D,
    QuadraticFormSpec,
    c0_closed_form,
    lemma1_instance,
    lemma2_instance,
    lemma3_gap,
    lemma3_route,
    lemma4_constant,
    min_quadratic_form,
    solve_on_grid,
    window_threshold_a0,
)


@pytest.mark.parametrize("m,alpha", [(1.0, 1.0), (2.5, 0.7), (0.3, -1.2)])
def test_lemma1_exponential_minimum(m, alpha):
    spec, grid, exact = lemma1_instance(m, alpha)
    res = min_quadratic_form(spec, grid)
    assert res.value == pytest.approx(exact, rel=1e-2)
    assert solve_on_grid(spec, Grid1D(4096, grid.interval)).value == pytest.approx(exact, rel=1e-5)
    # minimiser is the decaying exponential
    assert res.phi[0] == pytest.approx(alpha)
    mid = res.phi.size // 4
    assert res.phi[mid] == pytest.approx(alpha * math.exp(-m * res.t[mid]), abs=1e-3 * abs(alpha))


def test_second_order_convergence():
    spec, grid, exact = lemma1_instance(1.0)
    errs = [solve_on_grid(spec, Grid1D(n, grid.interval)).value - exact for n in (256, 512, 1024)]
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.02)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.02)


@pytest.mark.parametrize("b", [0.5, 1.0, 3.0])
def test_lemma2_dirichlet_interval(b):
    spec, grid, exact = lemma2_instance(b)
    assert min_quadratic_form(spec, grid).value == pytest.approx(exact, rel=1e-2)
    assert solve_on_grid(spec, Grid1D(2048, grid.interval)).value == pytest.approx(exact, rel=1e-6)


def test_lemma2_value_for_half_width():
    spec, grid, _ = lemma2_instance(0.5)
    assert solve_on_grid(spec, Grid1D(2048, grid.interval)).value == pytest.approx(math.pi**2, rel=1e-6)


def test_lemma3_constrained_gap():
    value, eps2, res = lemma3_gap(1.0, Grid1D(1024, (0.0, 1.0)))
    assert value == pytest.approx(16.953, rel=1e-3)
    assert eps2 == pytest.approx(0.7177, abs=2e-3)
    chi = math.sqrt(2) * np.sin(math.pi * res.t)
    assert abs(trapezoid(chi * res.phi, res.t)) < 1e-4
    # constraint active on the discrete inner product
    from narrowwindow.lemmas import _element_matrices, lemma3_spec
    _, _, M = _element_matrices(lemma3_spec(1.0), Grid1D(res.n, (0.0, 1.0)))
    assert abs(chi @ M @ res.phi) < 1e-8


def test_lemma3_scales_with_width():
    v1, e1, _ = lemma3_gap(1.0)
    v2, e2, _ = lemma3_gap(2.0)
    assert v2 == pytest.approx(v1 / 4, rel=1e-9)
    assert e1 == pytest.approx(e2, abs=1e-9)


def test_neumann_dirichlet_without_constraint():
    value, eps2, _ = lemma3_gap(1.0, Grid1D(1024, (0.0, 1.0)), orthogonal=False)
    assert value == pytest.approx((math.pi / 2) ** 2, rel=1e-5)
    assert eps2 < 0


def test_free_free_trivial_minimum():
    spec = QuadraticFormSpec(rayleigh=True)
    assert solve_on_grid(spec, Grid1D(64, (0.0, 1.0))).value == pytest.approx(0.0, abs=1e-10)


def test_gamma_max_by_enumeration():
    route = lemma3_route(1.0)
    g = np.linspace(-1, 1, 2_000_001)
    feasible = XI1 * np.abs(g) - math.sqrt(1 - XI1**2) * np.sqrt(1 - g * g) <= route.overlap_bound
    assert np.abs(g[feasible]).max() == pytest.approx(route.gamma_max, abs=1e-5)


def test_lemma3_route_values():
    r = lemma3_route(1.0)
    assert r.eps1_max == pytest.approx(0.24559, abs=1e-5)
    assert r.eps1 == pytest.approx(0.12279, abs=1e-5)
    assert r.gamma_max == pytest.approx(0.668, abs=1e-3)
    assert r.derivative_bound == pytest.approx(13.397, abs=1e-3)
    assert r.eps2 == pytest.approx(0.357, abs=1e-3)
    assert not r.seven_quarters_reached
    # the route is a lower estimate of the sharp constrained minimum
    assert r.derivative_bound <= lemma3_gap(1.0)[0]
    # as eps1 -> 0, gamma_max tends to sqrt(1 - xi1^2), not above 1/2
    assert lemma3_route(1.0, 1e-9).gamma_max == pytest.approx(math.sqrt(1 - XI1**2), rel=1e-6)
    with pytest.raises(ValidityError):
        lemma3_route(1.0, 0.3)


def test_route_on_random_even_functions():
    # discrete check: gamma_max bounds the g1 coefficient of any unit Phi
    # whose overlap with |g2| stays below the route's bound
    d = 1.0
    r = lemma3_route(d)
    t = np.linspace(-d, d, 4001)
    w = np.full(t.size, t[1] - t[0])
    w[[0, -1]] *= 0.5
    g1 = np.cos(math.pi * t / (2 * d)) / math.sqrt(d)
    g2 = np.sin(math.pi * t / d) / math.sqrt(d)
    xi = np.abs(g2)
    assert (w * xi * g1).sum() == pytest.approx(XI1, rel=1e-6)
    assert (w * xi * xi).sum() == pytest.approx(1.0, rel=1e-6)
    perp = xi - XI1 * g1
    perp /= math.sqrt((w * perp * perp).sum())
    rng = np.random.default_rng(3)
    hits = 0
    for _ in range(500):
        c = rng.normal(size=6) * np.array([1, 0.3, 0.3, 0.2, 0.2, 0.1])
        phi = sum(ck * np.cos((2 * k + 1) * math.pi * t / (2 * d)) for k, ck in enumerate(c))
        phi += rng.normal() * perp
        phi /= math.sqrt((w * phi * phi).sum())
        if abs((w * xi * phi).sum()) < r.overlap_bound:
            hits += 1
            assert abs((w * g1 * phi).sum()) <= r.gamma_max + 1e-9
    assert hits > 20


def test_window_threshold():
    a0 = window_threshold_a0(1.0, lemma3_route(1.0).eps1)
    assert a0 == pytest.approx(0.0834, abs=1e-4)
    # 2 ||chi_1||_{[0, a0]} equals eps1
    norm2 = a0 - math.sin(2 * math.pi * a0) / (2 * math.pi)
    assert 2 * math.sqrt(norm2) == pytest.approx(lemma3_route(1.0).eps1, rel=1e-10)


def test_lemma4_constant_dominates_closed_form():
    m = math.pi / 8
    value, c0 = lemma4_constant(m, 1.0, 0.05)
    assert c0 == pytest.approx(0.050541134217386305, rel=1e-14)
    assert value == pytest.approx(0.2105, abs=2e-3)
    assert value >= c0
    value2, _ = lemma4_constant(m, 1.0, 0.02)
    assert value2 == pytest.approx(0.1724, abs=2e-3)
    assert value2 >= c0


def test_lemma4_beta_scaling():
    m = math.pi / 8
    v1, _ = lemma4_constant(m, 1.0, 0.05, beta=1.0)
    v2, _ = lemma4_constant(m, 1.0, 0.05, beta=2.0)
    assert v1 == pytest.approx(v2, rel=1e-9)
    spec_v = [lemma4_constant(m, 1.0, 0.05, beta=b)[0] * b * b for b in (1.0, 2.0)]
    assert spec_v[1] == pytest.approx(4 * spec_v[0], rel=1e-9)


def test_lemma4_grows_with_m():
    vals = [lemma4_constant(m, 1.0, 0.02, check=False)[0] for m in (0.5, 2.0, 8.0)]
    assert vals[0] < vals[1] < vals[2]
    c0 = [c0_closed_form(m) for m in (0.5, 2.0, 8.0)]
    assert all(v >= c for v, c in zip(vals, c0))


def test_lemma4_restriction_and_alignment():
    with pytest.raises(ValidityError):
        lemma4_constant(math.pi / 8, 1.0, 0.2)
    with pytest.raises(GeometryError):
        lemma4_constant(math.pi / 8, 1.0, 0.05, grid=Grid1D(97, (0.0, 1.0)))


def test_degenerate_constraints():
    chi = lambda t: np.sin(math.pi * np.asarray(t))
    spec = QuadraticFormSpec(right=Boundary.dirichlet(0.0),
                             constraints=((chi, 0.0), (chi, 0.0)), rayleigh=True)
    with pytest.raises(ConstraintDegeneracyError):
        solve_on_grid(spec, Grid1D(64, (0.0, 1.0)))


def test_indefinite_form():
    spec = QuadraticFormSpec(mass=((0.0, 1.0, -100.0),), left=Boundary.dirichlet(1.0),
                             right=Boundary.dirichlet(0.0))
    with pytest.raises(IndefiniteFormError):
        solve_on_grid(spec, Grid1D(64, (0.0, 1.0)))


def test_refinement_limit():
    spec, grid, _ = lemma1_instance(1.0)
    with pytest.raises(ConvergenceError):
        min_quadratic_form(spec, Grid1D(64, grid.interval), n_limit=64)


def test_grid_and_spec_validation():
    with pytest.raises(GeometryError):
        Grid1D(32, (0.0, 1.0))
    with pytest.raises(GeometryError):
        Grid1D(64, (1.0, 1.0))
    with pytest.raises(GeometryError):
        QuadraticFormSpec(left=Boundary.dirichlet(1.0), rayleigh=True)
    with pytest.raises(GeometryError):
        QuadraticFormSpec(mass=((0.0, 1.0),))


def test_second_order_for_lemma2_and_lemma4():
    spec, grid, exact = lemma2_instance(0.5)
    errs = [solve_on_grid(spec, Grid1D(n, grid.interval)).value - exact for n in (128, 256, 512)]
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.02)
    from narrowwindow.lemmas import lemma4_spec
    spec4 = lemma4_spec(math.pi / 8, 1.0, 0.05)
    v = [solve_on_grid(spec4, Grid1D(n, (0.0, 1.0))).value for n in (320, 640, 1280, 2560)]
    ratios = [(v[i] - v[i + 1]) / (v[i + 1] - v[i + 2]) for i in range(2)]
    assert ratios[-1] == pytest.approx(4.0, rel=0.05)
