"""Exact solutions f(tau, x) of the backward potential equation

    d/dtau f = Laplacian f - |grad f|^2 + R - n / (2 tau)

obtained from positive solutions u of the conjugate heat equation through
u = tau^{-n/2} e^{-f}.

Note that f is the primary object here: a different normalisation of u
(e.g. tau^{-(n-1)/2} e^{-f}) only shifts f by a multiple of ln tau and is
never used by this package.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import geometry as geo
from .errors import ConfigurationError, PositivityError

CONSTANT_IN_SPACE = "constant_in_space"
TORUS_SPECTRAL = "torus_spectral"


@dataclass(frozen=True)
class Mode:
    amplitude: float
    wavevector: tuple

    def __post_init__(self):
        object.__setattr__(self, "wavevector", tuple(int(k) for k in self.wavevector))


@dataclass(frozen=True)
class PotentialSolution:
    """Closed-form potential.

    ``constant_in_space`` uses ``c``; ``torus_spectral`` uses
    u = A + sum_j eps_j cos(k_j . x) exp(-decay_scale |k_j|^2 tau).
    ``decay_scale`` must be 1 for an actual solution; other values exist for
    negative controls.
    """

    kind: str
    c: float = 0.0
    A: float = 1.0
    modes: tuple = ()
    decay_scale: float = 1.0

    def __post_init__(self):
        if self.kind not in (CONSTANT_IN_SPACE, TORUS_SPECTRAL):
            raise ConfigurationError(f"unknown potential kind {self.kind!r}")
        modes = tuple(m if isinstance(m, Mode) else Mode(*m) for m in self.modes)
        object.__setattr__(self, "modes", modes)
        if self.kind == TORUS_SPECTRAL:
            if not modes:
                raise ConfigurationError("torus_spectral needs at least one mode")
            # sufficient for u > 0 at every (tau, x) since the modes decay
            if not self.A > sum(abs(m.amplitude) for m in modes):
                raise PositivityError("need A > sum |eps_j| for a positive solution")
            if self.decay_scale <= 0:
                raise ConfigurationError("decay_scale must be positive")

    @classmethod
    def constant(cls, c=0.0):
        return cls(CONSTANT_IN_SPACE, c=c)

    @classmethod
    def torus_spectral(cls, A, modes, decay_scale=1.0):
        return cls(TORUS_SPECTRAL, A=A, modes=tuple(modes), decay_scale=decay_scale)

    @property
    def spatially_constant(self):
        return self.kind == CONSTANT_IN_SPACE


@dataclass(frozen=True, eq=False)
class PotentialJet:
    """f and the derivatives the N-space formulas need, at (tau, x).

    All arrays broadcast against each other; ``grad_f`` is a list of n arrays.
    """

    tau: np.ndarray
    f: np.ndarray
    f_tau: np.ndarray
    f_tautau: np.ndarray
    grad_f: list
    grad_f_sq: np.ndarray
    lap_f: np.ndarray


def check_compatible(sol, flow):
    if sol.kind == TORUS_SPECTRAL:
        if flow.kind != geo.FLAT_TORUS:
            raise ConfigurationError("torus_spectral potentials need a flat_torus flow")
        for m in sol.modes:
            if len(m.wavevector) != flow.n:
                raise ConfigurationError(f"mode {m} does not match dimension {flow.n}")


def _mode_tables(sol, flow):
    grid = flow.grid
    x = grid.coordinates()
    out = []
    for m in sol.modes:
        kappa = [2.0 * math.pi * k / p for k, p in zip(m.wavevector, grid.periods)]
        phase = sum(kx * xi for kx, xi in zip(kappa, x))
        out.append((m.amplitude, kappa, sum(k * k for k in kappa), np.cos(phase), np.sin(phase)))
    return out


def jet(sol, flow, tau):
    """Evaluate f and its derivatives.

    ``tau`` may be a scalar or an array whose trailing axes match the grid,
    so that a level set tau = phi(x) can be evaluated pointwise.
    """
    check_compatible(sol, flow)
    flow.check_tau(tau)
    tau = np.asarray(tau, dtype=float)
    n = flow.n
    zeros = np.zeros(())
    if sol.kind == CONSTANT_IN_SPACE:
        if flow.homogeneous:
            a = flow.scale(tau)
            rate = flow.sphere_rate
            f = 0.5 * n * np.log(a / tau) + sol.c
            f_tau = 0.5 * n * (rate / a - 1.0 / tau)
            f_tautau = 0.5 * n * (1.0 / tau**2 - (rate / a) ** 2)
        else:
            f = sol.c - 0.5 * n * np.log(tau)
            f_tau = -0.5 * n / tau
            f_tautau = 0.5 * n / tau**2
        return PotentialJet(tau, f, f_tau, f_tautau, [zeros] * n, zeros, zeros)

    u = sol.A
    u_tau = u_tautau = lap_u = 0.0
    grad_u = [0.0] * n
    for eps, kappa, k2, cos_, sin_ in _mode_tables(sol, flow):
        d = sol.decay_scale * k2
        term = eps * np.exp(-d * tau)
        u = u + term * cos_
        u_tau = u_tau - d * term * cos_
        u_tautau = u_tautau + d * d * term * cos_
        lap_u = lap_u - k2 * term * cos_
        grad_u = [g - kx * term * sin_ for g, kx in zip(grad_u, kappa)]
    if np.any(u <= 0):
        raise PositivityError("u <= 0 encountered")
    log_dtau = u_tau / u
    grad_f = [-g / u for g in grad_u]
    grad_f_sq = sum(g * g for g in grad_f)
    f = -np.log(u) - 0.5 * n * np.log(tau)
    f_tau = -log_dtau - 0.5 * n / tau
    f_tautau = -u_tautau / u + log_dtau**2 + 0.5 * n / tau**2
    lap_f = -lap_u / u + grad_f_sq
    return PotentialJet(tau, f, f_tau, f_tautau, grad_f, grad_f_sq, lap_f)


def _as_field(values, flow, tau):
    values = np.asarray(values, dtype=float)
    if values.ndim and values.shape != flow.field_shape:
        values = np.broadcast_to(values, flow.field_shape).copy()
    return geo.ScalarField(values, tau, flow)


def f_at(sol, flow, tau):
    return _as_field(jet(sol, flow, float(tau)).f, flow, float(tau))


def df_dtau(sol, flow, tau):
    return _as_field(jet(sol, flow, float(tau)).f_tau, flow, float(tau))


def u_from_f(f, tau, n):
    return tau ** (-0.5 * n) * np.exp(-np.asarray(f))


def f_from_u(u, tau, n):
    return -np.log(np.asarray(u)) - 0.5 * n * np.log(tau)


def bachcho_residual(sol, flow, tau_samples):
    """Sup over samples of |d/dtau f - (Lap f - |grad f|^2 + R - n/(2 tau))|.

    Spatial derivatives are spectral on the grid, so this is independent of
    the analytic chain rule used in :func:`jet`.
    """
    worst = 0.0
    for tau in np.atleast_1d(np.asarray(tau_samples, dtype=float)):
        tau = float(tau)
        f = f_at(sol, flow, tau)
        rhs = (
            geo.laplacian(f).values
            - geo.gradient_sq(f).values
            + geo.scalar_curvature(flow, tau).values
            - 0.5 * flow.n / tau
        )
        worst = max(worst, float(np.max(np.abs(df_dtau(sol, flow, tau).values - rhs))))
    return worst
