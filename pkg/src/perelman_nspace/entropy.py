"""Perelman's W-entropy along the flow and its derivative."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import geometry as geo
from .potential import f_at


@dataclass(frozen=True)
class EntropySample:
    lam: float
    W: float
    dW: float
    integrand_norm: float


def _weight(f, lam, n):
    return f.with_values((4.0 * math.pi * lam) ** (-0.5 * n) * np.exp(-f.values))


def entropy_W(flow, sol, lam):
    """Integral of (lam(|grad f|^2 + R) + f - n) (4 pi lam)^{-n/2} e^{-f} over (M, g(lam))."""
    flow.check_tau(lam)
    n = flow.n
    f = f_at(sol, flow, lam)
    grad2 = geo.gradient_sq(f).values
    R = geo.scalar_curvature(flow, lam).values
    w = _weight(f, lam, n).values
    return geo.integrate(f.with_values((lam * (grad2 + R) + f.values - n) * w), lam)


def _soliton_tensor(flow, f, lam):
    """Ric + Hess f - g/(2 lam) in the reference frame, and the scale a(lam)."""
    n = flow.n
    a = float(flow.scale(lam))
    S = geo.ricci_at(flow, lam).values + geo.hessian(f).values - (a / (2.0 * lam)) * np.eye(n)
    return S, a


def entropy_derivative(flow, sol, lam):
    """-Integral of 2 lam |Ric + Hess f - g/(2 lam)|^2 (4 pi lam)^{-n/2} e^{-f}."""
    flow.check_tau(lam)
    f = f_at(sol, flow, lam)
    S, a = _soliton_tensor(flow, f, lam)
    # g = a * identity in the reference frame, so |S|_g^2 = sum S_ij^2 / a^2
    norm2 = np.einsum("...ij,...ij->...", S, S) / a**2
    w = _weight(f, lam, flow.n).values
    return -geo.integrate(f.with_values(2.0 * lam * norm2 * w), lam)


def _integrand_norm_expanded(flow, sol, lam):
    # |Ric + Hess f|^2 - (R + Lap f)/lam + n/(4 lam^2); avoids forming S
    n = flow.n
    f = f_at(sol, flow, lam)
    a = float(flow.scale(lam))
    P = geo.ricci_at(flow, lam).values + geo.hessian(f).values
    trace = np.trace(P, axis1=-2, axis2=-1) / a
    norm2 = np.einsum("...ij,...ij->...", P, P) / a**2 - trace / lam + n / (4.0 * lam**2)
    w = _weight(f, lam, n).values
    return geo.integrate(f.with_values(2.0 * lam * norm2 * w), lam)


def entropy_sample(flow, sol, lam):
    return EntropySample(
        lam=float(lam),
        W=entropy_W(flow, sol, lam),
        dW=entropy_derivative(flow, sol, lam),
        integrand_norm=_integrand_norm_expanded(flow, sol, lam),
    )
