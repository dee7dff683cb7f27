import math

import numpy as np
import pytest
from scipy.integrate import quad

from perelman_nspace.asymptotics import central_derivative
from perelman_nspace.entropy import entropy_derivative, entropy_sample, entropy_W
from perelman_nspace.geometry import FlowSolution
from perelman_nspace.potential import PotentialSolution

SQRT_PI = math.sqrt(math.pi)


@pytest.mark.parametrize("lam", [0.3, 1.0, 1.7])
def test_torus_constant_closed_form(torus, const0, lam):
    assert entropy_W(torus, const0, lam) == pytest.approx(SQRT_PI * (-0.5 * math.log(lam) - 1), abs=1e-10)
    assert entropy_derivative(torus, const0, lam) == pytest.approx(-SQRT_PI / (2 * lam), abs=1e-8)


def test_torus_constant_at_one(torus, const0):
    assert entropy_W(torus, const0, 1.0) == pytest.approx(-1.7724539, abs=1e-7)
    assert entropy_derivative(torus, const0, 1.0) == pytest.approx(-0.8862269, abs=1e-7)
    fd = central_derivative(lambda x: entropy_W(torus, const0, x), 1.0, 1e-4)
    assert abs(fd - (-SQRT_PI / 2)) < 1e-6


@pytest.mark.parametrize("c,expected", [(1.0 - math.log(2.0), 0.0), (-math.log(2.0), -2.0)])
def test_sphere_closed_form(sphere, c, expected):
    # f constant on the soliton: W = 2 (f - 1) e^{-f}
    sol = PotentialSolution.constant(c)
    for lam in np.linspace(0.15, 1.9, 10):
        assert entropy_W(sphere, sol, lam) == pytest.approx(expected, abs=1e-10)
        assert abs(entropy_derivative(sphere, sol, lam)) <= 1e-10


def test_spectral_against_quadrature(spectral):
    # oracle: adaptive quadrature of the integrand built from u directly
    flow = FlowSolution.flat_torus(n=1, T=2.0, points_per_dim=128, tau_min=0.1)
    lam = 1.0
    eps, e = 0.5, math.exp(-lam)

    def integrand(x):
        u = 1 + eps * e * math.cos(x)
        ux = -eps * e * math.sin(x)
        f = -math.log(u) - 0.5 * math.log(lam)
        return (lam * (ux / u) ** 2 + f - 1) * (4 * math.pi * lam) ** -0.5 * math.exp(-f)

    ref, _ = quad(integrand, 0, 2 * math.pi, epsabs=1e-13, epsrel=1e-13, limit=200)
    assert entropy_W(flow, spectral, lam) == pytest.approx(ref, abs=1e-12)


def test_spectral_derivative_sign_and_fd(torus256, spectral):
    dW = entropy_derivative(torus256, spectral, 1.0)
    fd = central_derivative(lambda x: entropy_W(torus256, spectral, x), 1.0, 1e-4)
    assert dW <= 0
    assert abs(dW - fd) <= 1e-6


def test_grid_refinement(spectral):
    vals = []
    for ppd in (64, 128, 256):
        flow = FlowSolution.flat_torus(n=1, T=2.0, points_per_dim=ppd, tau_min=0.1)
        vals.append((entropy_W(flow, spectral, 0.7), entropy_derivative(flow, spectral, 0.7)))
    for a, b in zip(vals, vals[1:]):
        assert abs(a[0] - b[0]) <= 1e-10
        assert abs(a[1] - b[1]) <= 1e-10


@pytest.mark.parametrize("lam", [0.5, 1.0, 1.5])
def test_expanded_norm_agrees(torus256, spectral, lam):
    s = entropy_sample(torus256, spectral, lam)
    assert s.dW == pytest.approx(-s.integrand_norm, abs=1e-10)


def test_sign_on_general_sphere():
    flow = FlowSolution.round_sphere(n=3, a0=1.0, T=2.0, tau_min=0.1)
    sol = PotentialSolution.constant(0.2)
    for lam in (0.3, 1.0, 1.8):
        dW = entropy_derivative(flow, sol, lam)
        assert dW < 0
        fd = central_derivative(lambda x: entropy_W(flow, sol, x), lam, 1e-4)
        assert abs(dW - fd) <= 1e-6
