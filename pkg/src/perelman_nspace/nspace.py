"""Pointwise quantities on Perelman's N-space.

The N-space is (0, sqrt(2NT)) x S^N x M with metric
r^2 g_{S^N} + v dr^2 + g, where tau = r^2/(2N) and v = 1 + 2 tau R / N.
Every quantity used here is rotation invariant, so it is handled as a
function of (tau, x).  With m = N + n + 1,

    h = r^{2-m} e^{-f},    b = h^{1/(2-m)} = r e^{f/(m-2)}.

Powers of r with exponents of order N are never formed; they are either
cancelled algebraically or carried as logarithms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import geometry as geo
from .errors import ConfigurationError
from .potential import jet


@dataclass(frozen=True)
class NSpaceContext:
    N: int
    n: int
    lam: float
    lambda0: float = None

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 8:
            raise ConfigurationError(f"N must be an integer >= 8, got {self.N}")
        object.__setattr__(self, "N", int(self.N))
        if self.lam <= 0:
            raise ConfigurationError("lambda must be positive")
        if self.lambda0 is None:
            object.__setattr__(self, "lambda0", 0.5 * self.lam)
        if not 0 < self.lambda0 < self.lam:
            raise ConfigurationError(f"need 0 < lambda0 < lambda, got {self.lambda0}")

    @classmethod
    def for_flow(cls, flow, N, lam, lambda0_fraction=0.5):
        if not flow.tau_min < lam < flow.T:
            raise ConfigurationError(f"lambda={lam} outside ({flow.tau_min}, {flow.T})")
        return cls(N, flow.n, lam, lambda0_fraction * lam)

    @property
    def m(self):
        return self.N + self.n + 1

    @property
    def s(self):
        return math.sqrt(2.0 * self.N * self.lam)

    @property
    def s_bar(self):
        return math.sqrt(2.0 * self.N * self.lambda0)

    @property
    def log_prefactor(self):
        """ln(c_N |S^N|) = ln((4 pi)^{-n/2} (2N)^{n/2+1} / 4)."""
        n = self.n
        return -0.5 * n * math.log(4.0 * math.pi) + (0.5 * n + 1) * math.log(2.0 * self.N) - math.log(4.0)


def v_coeff(flow, sol, tau, N):
    """Radial metric coefficient v = 1 + 2 tau R / N."""
    flow.check_tau(tau)
    return geo.ScalarField(1.0 + 2.0 * tau * flow.scalar_curvature_value(tau) / N, tau, flow)


def grad_b_sq_minus_one(flow, j, N):
    """|grad b|^2 - 1 from a potential jet, free of cancellation at large N.

    |grad b|^2 = e^{2f/(m-2)} (1 + 2 tau f_tau/(m-2))^2 / v
                 + 2 N tau e^{2f/(m-2)} |grad f|^2 / (m-2)^2
    """
    n = flow.n
    m2 = N + n - 1
    tau = j.tau
    q = 2.0 * tau * j.f_tau / m2
    vm1 = 2.0 * tau * flow.scalar_curvature_value(tau) / N
    radial = (np.expm1(2.0 * j.f / m2 + 2.0 * np.log1p(q)) - vm1) / (1.0 + vm1)
    spatial = 2.0 * N * tau * np.exp(2.0 * j.f / m2) * j.grad_f_sq / m2**2
    return radial + spatial


def _field(values, flow, tau):
    values = np.asarray(values, dtype=float)
    if values.ndim and values.shape != flow.field_shape:
        values = np.broadcast_to(values, flow.field_shape).copy()
    return geo.ScalarField(values, tau, flow)


def grad_b_sq_exact(flow, sol, tau, N):
    return _field(1.0 + grad_b_sq_minus_one(flow, jet(sol, flow, tau), N), flow, tau)


def grad_b_sq_leading(flow, sol, tau):
    """L = tau (2 Lap f - |grad f|^2 + R) + f - n, the limit of (N/2)(|grad b|^2 - 1)."""
    j = jet(sol, flow, tau)
    R = flow.scalar_curvature_value(tau)
    return _field(tau * (2.0 * j.lap_f - j.grad_f_sq + R) + j.f - flow.n, flow, tau)


@dataclass(frozen=True, eq=False)
class HatJet:
    """Derivatives of a rotation-invariant h(tau, x) at fixed tau.

    ``grad_R_dot_grad_h`` is <grad R, grad h>; zero whenever R is
    spatially constant.
    """

    dtau: np.ndarray
    dtau2: np.ndarray
    lap: np.ndarray
    grad_R_dot_grad_h: np.ndarray = 0.0


def hat_laplacian_scalar(h, flow, tau, N):
    """N-space Laplacian of a rotation-invariant function given its jet."""
    R = flow.scalar_curvature_value(tau)
    R_tau = flow.scalar_curvature_dtau(tau)
    v = 1.0 + 2.0 * tau * R / N
    B = 1.0 + (1.0 + 2.0 * tau * R) / N - 2.0 * (tau * R + tau**2 * R_tau) / (N**2 * v)
    return (B * h.dtau + (2.0 * tau / N) * h.dtau2) / v + h.lap + h.grad_R_dot_grad_h / (N * v)


def scaled_h_jet(flow, j, N):
    """Jet of h = r^{2-m} e^{-f} multiplied by r^{m-2} (a constant at fixed tau)."""
    p = 0.5 * (N + flow.n - 1)
    tau = j.tau
    e = np.exp(-j.f)
    q = p / tau + j.f_tau
    return HatJet(
        dtau=-e * q,
        dtau2=e * (q * q + p / tau**2 - j.f_tautau),
        lap=e * (j.grad_f_sq - j.lap_f),
        # R is spatially constant for both shipped flows
        grad_R_dot_grad_h=np.zeros(()),
    )


def _scaled_hat_laplacian_from_jet(flow, j, N):
    # Same value as hat_laplacian_scalar(scaled_h_jet(...)) with the O(N)
    # terms B*dtau and (2 tau/N)*dtau2 combined before evaluation.
    n = flow.n
    tau = j.tau
    p = 0.5 * (N + n - 1)
    R = flow.scalar_curvature_value(tau)
    R_tau = flow.scalar_curvature_dtau(tau)
    v = 1.0 + 2.0 * tau * R / N
    q = p / tau + j.f_tau
    # (2 tau q / N) - B, all O(1/N)
    gap = (n - 2.0 + 2.0 * tau * j.f_tau - 2.0 * tau * R) / N + 2.0 * (tau * R + tau**2 * R_tau) / (
        N**2 * v
    )
    radial = q * gap + (2.0 * tau / N) * (p / tau**2 - j.f_tautau)
    return np.exp(-j.f) * (radial / v + j.grad_f_sq - j.lap_f)


def scaled_hat_laplacian_h(flow, sol, tau, N):
    """r^{m-2} times the N-space Laplacian of h = r^{2-m} e^{-f}."""
    return _field(_scaled_hat_laplacian_from_jet(flow, jet(sol, flow, tau), N), flow, tau)


def hat_laplacian_b2_residual(flow, sol, tau, N):
    """sup |Lap b^2 - 2m |grad b|^2| using

    Lap b^2 = 2m |grad b|^2 + 2/(2-m) b^m r^{2-m} (r^{m-2} Lap h),
    b^m r^{2-m} = 2 N tau e^{m f/(m-2)}.
    """
    j = jet(sol, flow, tau)
    m = N + flow.n + 1
    scaled = _scaled_hat_laplacian_from_jet(flow, j, N)
    factor = 2.0 * N * tau * np.exp(m * j.f / (m - 2))
    return float(np.max(np.abs(2.0 / (2.0 - m) * factor * scaled)))


def b_from_h_check(flow, sol, tau, N):
    """max relative gap between r e^{f/(m-2)} and h^{1/(2-m)} (both via logs)."""
    j = jet(sol, flow, tau)
    m = N + flow.n + 1
    log_r = 0.5 * math.log(2.0 * N * tau)
    log_b = log_r + j.f / (m - 2)
    log_h = (2 - m) * log_r - j.f
    return float(np.max(np.abs(np.expm1(log_h / (2 - m) - log_b))))
