import math

import numpy as np
import pytest

from perelman_nspace import geometry as geo
from perelman_nspace.errors import ConfigurationError, PositivityError, TimeRangeError
from perelman_nspace.potential import (
    Mode,
    PotentialSolution,
    bachcho_residual,
    df_dtau,
    f_at,
    f_from_u,
    jet,
    u_from_f,
)


def test_constant_torus_values(torus, const0):
    assert np.all(f_at(const0, torus, 1.0).values == 0.0)
    assert np.all(df_dtau(const0, torus, 1.0).values == -0.5)


def test_soliton_is_one_and_static(sphere, soliton):
    for tau in (0.2, 1.0, 1.9):
        assert float(f_at(soliton, sphere, tau).values) == pytest.approx(1.0, abs=1e-15)
        assert abs(float(df_dtau(soliton, sphere, tau).values)) < 1e-15


def test_spectral_value_at_origin(torus256, spectral):
    f = f_at(spectral, torus256, 1.0).values
    # oracle: evaluate u first, then f = -ln u - (n/2) ln tau
    u0 = 1.0 + 0.5 * math.exp(-1.0) * math.cos(0.0)
    assert f[0] == pytest.approx(-math.log(u0) - 0.5 * math.log(1.0), abs=1e-15)


def test_u_f_roundtrip(torus256, spectral):
    rng = np.random.default_rng(7)
    for tau in rng.uniform(0.1, 2.0, 5):
        f = f_at(spectral, torus256, tau).values
        assert np.max(np.abs(f_from_u(u_from_f(f, tau, 1), tau, 1) - f)) < 1e-14


def test_spectral_u_solves_heat_equation(torus256, spectral):
    # R = 0 on the torus, so u = tau^{-n/2} e^{-f} solves u_tau = Lap u
    tau, h = 0.8, 1e-4

    def u(t):
        return u_from_f(f_at(spectral, torus256, t).values, t, 1)

    du = (u(tau + h) - u(tau - h)) / (2 * h)
    lap = geo.laplacian(geo.ScalarField(u(tau), tau, torus256)).values
    assert np.max(np.abs(du - lap)) < 1e-8


def test_jet_matches_spectral_derivatives(torus256, spectral):
    j = jet(spectral, torus256, 0.6)
    f = geo.ScalarField(j.f, 0.6, torus256)
    assert np.max(np.abs(geo.laplacian(f).values - j.lap_f)) < 1e-11
    assert np.max(np.abs(geo.gradient_sq(f).values - j.grad_f_sq)) < 1e-12
    h = 1e-4
    fp, fm = (jet(spectral, torus256, 0.6 + s).f for s in (h, -h))
    assert np.max(np.abs((fp - 2 * j.f + fm) / h**2 - j.f_tautau)) < 1e-6


@pytest.mark.parametrize("case", ["torus_const", "soliton", "spectral", "sphere_general"])
def test_residual_small_at_random_times(case, torus, torus256, sphere, const0, soliton, spectral):
    flow, sol = {
        "torus_const": (torus, const0),
        "soliton": (sphere, soliton),
        "spectral": (torus256, spectral),
        "sphere_general": (geo.FlowSolution.round_sphere(n=3, a0=1.0, tau_min=0.1), PotentialSolution.constant(0.4)),
    }[case]
    taus = np.random.default_rng(11).uniform(flow.tau_min, flow.T, 20)
    assert bachcho_residual(sol, flow, taus) <= 1e-9


def test_residual_of_zero_potential(torus):
    # f = 0 is not a solution: the residual is |0 - (0 - 0 + 0 - 1/2)|
    f = geo.ScalarField(np.zeros(64), 1.0, torus)
    rhs = geo.laplacian(f).values - geo.gradient_sq(f).values + geo.scalar_curvature(torus, 1.0).values - 0.5
    assert np.max(np.abs(0.0 - rhs)) == 0.5


def test_tampered_decay_residual(torus256, tampered):
    assert bachcho_residual(tampered, torus256, [0.5, 1.0]) > 1e-3


def test_positivity_and_compatibility(sphere, spectral):
    with pytest.raises(PositivityError):
        PotentialSolution.torus_spectral(1.0, [Mode(0.6, (1,)), Mode(0.5, (2,))])
    with pytest.raises(ConfigurationError):
        jet(spectral, sphere, 1.0)


def test_time_range(torus, const0):
    with pytest.raises(TimeRangeError):
        f_at(const0, torus, 3.0)
