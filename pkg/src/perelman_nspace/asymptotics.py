"""Rate fits, Richardson extrapolation and centered differences.

An order claim Q_N = Q_inf + O(N^-p) is checked numerically by fitting
ln|Q_N - Q_inf| against ln N over the upper half of a geometric N-ladder.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .errors import DegenerateFitError

EPS = np.finfo(float).eps


@dataclass(frozen=True)
class ConvergenceFit:
    limit: float
    constant: float
    rate: float
    residual: float
    ladder: tuple

    def __post_init__(self):
        Ns = [N for N, _ in self.ladder]
        if len(Ns) < 4 or any(b <= a for a, b in zip(Ns, Ns[1:])):
            raise ValueError("ladder must be strictly increasing with at least 4 rungs")
        if not math.isfinite(self.rate):
            raise ValueError("fitted rate is not finite")

    def within(self, window):
        lo, hi = window
        return lo <= self.rate <= hi


def richardson(q_n, q_2n, p):
    """Eliminate a C/N^p term from values at N and 2N."""
    if p <= 0:
        raise ValueError("assumed rate must be positive")
    r = 2.0**p
    return (r * q_2n - q_n) / (r - 1.0)


def _top_half(ladder):
    return ladder[len(ladder) // 2 :] if len(ladder) >= 8 else ladder[-max(3, (len(ladder) + 1) // 2) :]


def _three_point(ladder):
    """Rate and limit from the top three rungs of a doubling ladder."""
    (n1, q1), (n2, q2), (n3, q3) = ladder[-3:]
    d1, d2 = q1 - q2, q2 - q3
    if d1 == 0 or d2 == 0 or d1 * d2 < 0:
        return 1.0, richardson(q2, q3, 1.0)
    p = math.log(abs(d1 / d2)) / math.log(n2 / n1)
    p = p if p > 0 else 1.0
    return p, q3 - d2 / ((n3 / n2) ** p - 1.0)


def fit_rate(ladder, reference=None, floor=None):
    """Fit Q_N = limit + constant * N^-rate over the top half of ``ladder``.

    With a ``reference`` the limit is fixed and the fit is linear least
    squares in (ln N, ln|Q_N - reference|).  Without one, the limit is first
    estimated by Richardson extrapolation from the top rungs and then
    refined jointly with (constant, rate) by nonlinear least squares.

    Raises DegenerateFitError when the deviations used sit at round-off
    level (``floor`` defaults to 100 eps max(|limit|, 1)), meaning the
    quantity has already converged.
    """
    ladder = tuple((int(N), float(q)) for N, q in ladder)
    if len(ladder) < 4:
        raise ValueError("need at least 4 rungs")
    if any(b[0] <= a[0] for a, b in zip(ladder, ladder[1:])):
        raise ValueError("ladder must be strictly increasing in N")
    top = _top_half(ladder)
    Ns = np.array([N for N, _ in top], dtype=float)
    Qs = np.array([q for _, q in top])

    if reference is not None:
        limit = float(reference)
    else:
        _, limit = _three_point(ladder)
    thresh = floor if floor is not None else 1e2 * EPS * max(abs(limit), 1.0)
    dev = np.abs(Qs - limit)
    if np.any(dev <= thresh):
        raise DegenerateFitError(
            f"deviation {dev.min():.3e} at round-off level (threshold {thresh:.3e})"
        )

    x = np.log(Ns)
    slope, intercept = np.polyfit(x, np.log(dev), 1)
    rate = -slope
    constant = float(np.sign(np.mean(Qs - limit)) * math.exp(intercept))

    if reference is None and len(top) >= 4:
        # joint fit in scaled variables; starts from the Richardson estimate
        scale = max(np.max(dev), EPS)
        N0 = Ns[0]

        def resid(p):
            lim, c, r = p
            return (lim + c * (Ns / N0) ** (-r) - Qs) / scale

        start = [limit, constant * N0 ** (-rate), rate]
        sol = least_squares(resid, start, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15)
        lim, c, r = sol.x
        if np.isfinite(r) and r > 0 and c != 0:
            limit, rate, constant = float(lim), float(r), float(c * N0**r)
            dev = np.abs(Qs - limit)
            if np.any(dev <= thresh):
                raise DegenerateFitError("refined limit reproduces a rung to round-off")

    pred = math.log(abs(constant)) - rate * x
    rms = float(np.sqrt(np.mean((np.log(dev) - pred) ** 2)))
    return ConvergenceFit(float(limit), constant, float(rate), rms, ladder)


def central_derivative(fn, x, h_rel=1e-3, domain=None):
    """Centered difference with step h_rel*|x| and one Richardson refinement."""
    h = h_rel * (abs(x) if x != 0 else 1.0)
    if domain is not None:
        lo, hi = domain
        if x - h < lo or x + h > hi:
            raise ValueError(f"x +- h = [{x - h}, {x + h}] leaves the domain [{lo}, {hi}]")
    d_h = (fn(x + h) - fn(x - h)) / (2.0 * h)
    d_h2 = (fn(x + h / 2) - fn(x - h / 2)) / h
    return (4.0 * d_h2 - d_h) / 3.0
