import math

import numpy as np
import pytest
import sympy as sp

from perelman_nspace import geometry as geo
from perelman_nspace.errors import ConfigurationError, TimeRangeError, UnsupportedRepresentationError
from perelman_nspace.geometry import FlowSolution, Grid, ScalarField


def field(flow, values, tau=1.0):
    return ScalarField(values, tau, flow)


def test_torus_metric_static(torus):
    for tau in (0.1, 0.7, 2.0):
        assert np.array_equal(geo.metric_at(torus, tau).values, np.eye(1))


@pytest.mark.parametrize("n,a0,tau,a", [(2, 0.0, 1.0, 2.0), (3, 1.0, 0.5, 3.0)])
def test_sphere_scale(n, a0, tau, a):
    flow = FlowSolution.round_sphere(n=n, a0=a0, T=2.0, tau_min=0.1)
    assert float(flow.scale(tau)) == pytest.approx(a, abs=1e-15)
    assert np.allclose(geo.metric_at(flow, tau).values, a * np.eye(n))


def _round_metric_scalar_curvature(n, a):
    # oracle: curvature of a * g_round written in angular coordinates
    th = sp.symbols(f"t0:{n}")
    diag = [a]
    for i in range(1, n):
        diag.append(a * sp.prod([sp.sin(th[j]) ** 2 for j in range(i)]))
    g = sp.diag(*diag)
    ginv = g.inv()

    def gamma(k, i, j):
        return sum(ginv[k, l] * (sp.diff(g[l, i], th[j]) + sp.diff(g[l, j], th[i]) - sp.diff(g[i, j], th[l]))
                   for l in range(n)) / 2

    G = [[[sp.simplify(gamma(k, i, j)) for j in range(n)] for i in range(n)] for k in range(n)]

    def ricci(i, j):
        return sum(
            sp.diff(G[k][i][j], th[k]) - sp.diff(G[k][i][k], th[j])
            + sum(G[k][k][l] * G[l][i][j] - G[k][j][l] * G[l][i][k] for l in range(n))
            for k in range(n)
        )

    R = sum(ginv[i, j] * ricci(i, j) for i in range(n) for j in range(n))
    point = {t: 0.7 + 0.1 * k for k, t in enumerate(th)}
    return float(sp.N(R.subs(point)))


# n=2: n(n-1)/a with a=2 is 1 (tau R = 1 on the soliton)
@pytest.mark.parametrize("n,a0,tau,R", [(2, 0.0, 1.0, 1.0), (3, 1.0, 0.5, 2.0)])
def test_sphere_scalar_curvature(n, a0, tau, R):
    flow = FlowSolution.round_sphere(n=n, a0=a0, T=2.0, tau_min=0.1)
    oracle = _round_metric_scalar_curvature(n, float(flow.scale(tau)))
    assert oracle == pytest.approx(R, abs=1e-12)
    assert float(geo.scalar_curvature(flow, tau).values) == pytest.approx(R, abs=1e-14)
    assert np.allclose(geo.ricci_at(flow, tau).values, (n - 1) * np.eye(n))


def test_torus_scalar_curvature_zero(torus):
    assert float(geo.scalar_curvature(torus, 1.0).values) == 0.0


def test_laplacian_eigenfunction(torus):
    x = torus.grid.coordinates()[0]
    assert np.max(np.abs(geo.laplacian(field(torus, np.cos(x))).values + np.cos(x))) < 1e-12


def test_constant_field_derivatives_vanish(torus, sphere):
    for flow in (torus, sphere):
        f = field(flow, np.asarray(3.0))
        assert float(geo.laplacian(f).values) == 0.0
        assert float(geo.gradient_sq(f).values) == 0.0
        assert not np.any(geo.hessian(f).values)


def test_laplacian_2d_against_finite_differences():
    flow = FlowSolution.flat_torus(n=2, T=2.0, points_per_dim=32, tau_min=0.1)
    x, y = flow.grid.coordinates()
    lap = geo.laplacian(field(flow, np.cos(x) + np.sin(2 * y))).values
    assert np.max(np.abs(lap - (-np.cos(x) - 4 * np.sin(2 * y)))) < 1e-11

    def fn(px, py):
        return math.cos(px) + math.sin(2 * py)

    rng = np.random.default_rng(3)
    h = 1e-3
    for i, j in rng.integers(0, 32, size=(3, 2)):
        px, py = x[i, j], y[i, j]
        fd = (fn(px + h, py) + fn(px - h, py) + fn(px, py + h) + fn(px, py - h) - 4 * fn(px, py)) / h**2
        assert lap[i, j] == pytest.approx(fd, abs=1e-5)


def test_product_rule():
    flow = FlowSolution.flat_torus(n=2, T=2.0, points_per_dim=96, tau_min=0.1)
    x, y = flow.grid.coordinates()
    u = np.exp(0.3 * np.cos(x)) * (2 + np.sin(y))
    w = 1.0 / (2.0 + np.cos(x + y))
    lap = lambda v: geo.laplacian(field(flow, v)).values  # noqa: E731
    grads = lambda v: geo.gradient(field(flow, v))  # noqa: E731
    cross = sum(a * b for a, b in zip(grads(u), grads(w)))
    assert np.max(np.abs(lap(u * w) - (u * lap(w) + w * lap(u) + 2 * cross))) < 1e-10


def test_hessian_trace_is_laplacian():
    flow = FlowSolution.flat_torus(n=2, T=2.0, points_per_dim=32, tau_min=0.1)
    x, y = flow.grid.coordinates()
    f = field(flow, np.cos(x) * np.sin(y) + np.cos(3 * y))
    H = geo.hessian(f).values
    assert np.max(np.abs(H - np.swapaxes(H, -1, -2))) == 0.0
    assert np.max(np.abs(np.trace(H, axis1=-2, axis2=-1) - geo.laplacian(f).values)) < 1e-11


def test_single_mode_exact():
    flow = FlowSolution.flat_torus(n=1, T=2.0, points_per_dim=16, tau_min=0.1)
    x = flow.grid.coordinates()[0]
    f = field(flow, np.sin(3 * x))
    assert np.max(np.abs(geo.laplacian(f).values + 9 * np.sin(3 * x))) < 1e-12
    assert np.max(np.abs(geo.gradient_sq(f).values - 9 * np.cos(3 * x) ** 2)) < 1e-12


def test_integrate(torus, sphere):
    assert geo.integrate(field(torus, np.asarray(1.0))) == pytest.approx(2 * math.pi, abs=1e-14)
    assert geo.integrate(field(torus, np.ones(64))) == pytest.approx(2 * math.pi, abs=1e-13)
    x = torus.grid.coordinates()[0]
    assert abs(geo.integrate(field(torus, np.cos(x)))) < 1e-14
    assert geo.integrate(field(sphere, np.asarray(1.0), 1.0)) == pytest.approx(8 * math.pi, rel=1e-15)


def test_sphere_fields_are_constant_only(sphere):
    with pytest.raises(ConfigurationError):
        ScalarField(np.ones(3), 1.0, sphere)
    with pytest.raises(UnsupportedRepresentationError):
        geo._spectral(sphere)


def test_validate_backward_flow(torus):
    taus = np.linspace(0.1, 2.0, 7)
    assert geo.validate_backward_flow(torus, taus) <= 1e-12
    for n, a0 in ((2, 0.0), (2, 3.0), (3, 1.0), (4, 0.5)):
        flow = FlowSolution.round_sphere(n=n, a0=a0, T=2.0, tau_min=0.1)
        assert geo.validate_backward_flow(flow, taus, tol=1e-8) <= 1e-8


@pytest.mark.parametrize("n,a", [(2, 1.5), (3, 4.0)])
def test_tampered_static_sphere(n, a):
    flow = FlowSolution(geo.ROUND_SPHERE, n, 2.0, tau_min=0.1, sphere_a0=a, sphere_rate=0.0)
    assert geo.validate_backward_flow(flow, [0.5, 1.0]) == pytest.approx(2 * (n - 1) / a, rel=1e-12)
    with pytest.raises(ConfigurationError):
        geo.validate_backward_flow(flow, [0.5], tol=1e-8)


def test_time_range(torus):
    with pytest.raises(TimeRangeError):
        geo.scalar_curvature(torus, 2.5)
    with pytest.raises(TimeRangeError):
        geo.metric_at(torus, 0.01)


def test_bad_construction():
    with pytest.raises(ConfigurationError):
        FlowSolution.round_sphere(n=1)
    with pytest.raises(ConfigurationError):
        FlowSolution.flat_torus(T=-1.0)
    with pytest.raises(ConfigurationError):
        Grid(1, 3)
