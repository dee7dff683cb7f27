"""Level sets of b and the Colding-type functionals A_N, V_N, W_N.

On {b = s}, s = sqrt(2 N lam), the level set is the graph tau = phi(x) with

    phi e^{2 f(phi, x)/(m-2)} = lam.

Pulling the N-space metric back along (theta, x) -> (sqrt(2 N phi), theta, x)
gives the area element

    (2 N phi)^{N/2} sqrt(1 + (N v / (2 phi)) |grad phi|^2) dnu dnu_{S^N},

the square root being the determinant of g + v (N/(2 phi)) dphi (x) dphi.
Integrating out S^N and using (phi/lam)^{N/2} = exp(-N f/(m-2)) turns
c_N s^{1-m} dA into (N/2)(4 pi lam)^{-n/2} exp(-N f/(m-2)) sqrt(...) dnu,
which never overflows.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import geometry as geo
from .asymptotics import central_derivative
from .errors import ConfigurationError, LevelSetError, QuadratureError, TruncationError
from .nspace import NSpaceContext, grad_b_sq_minus_one
from .potential import check_compatible, jet

NEWTON_RTOL = 1e-13
NEWTON_MAXITER = 50
XI_CUTOFF = -40.0
TAIL_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class LevelSet:
    lam: float
    phi: geo.ScalarField
    grad_phi_sq: geo.ScalarField
    area_correction: geo.ScalarField
    newton_iters: int
    residual: float


@dataclass(frozen=True)
class ColdingSample:
    N: int
    lam: float
    A_N: float
    rawA_N: float
    V_N: float
    W_N: float
    tail_bound: float
    level_set_residual: float


def _check_monotone(flow, sol, N):
    """tau -> tau e^{2f/(m-2)} must increase on [tau_min, T] at every grid point."""
    taus = np.linspace(flow.tau_min, flow.T, 33).reshape((-1,) + (1,) * len(flow.field_shape))
    j = jet(sol, flow, taus)
    slope = 1.0 + 2.0 * taus * j.f_tau / (N + flow.n - 1)
    slope = np.broadcast_to(slope, np.broadcast_shapes(slope.shape, (33,) + flow.field_shape))
    if np.any(slope <= 0):
        idx = int(np.argmin(slope))
        raise LevelSetError(
            f"level-set map is not monotone in tau for N={N}; increase N",
            worst_index=idx,
            worst_value=float(slope.flat[idx]),
        )


def _solve_phi(flow, sol, N, lams):
    """Newton solve of ln tau + 2 f(tau, x)/(m-2) = ln lam, pointwise.

    ``lams`` has shape (k,); the result has shape (k,) + field_shape.
    Returns (phi, iterations, max relative residual).
    """
    k = 2.0 / (N + flow.n - 1)
    lams = np.asarray(lams, dtype=float).reshape((-1,) + (1,) * len(flow.field_shape))
    shape = np.broadcast_shapes(lams.shape, (1,) + flow.field_shape)
    log_lam = np.log(lams)
    tau = np.broadcast_to(lams, shape).copy()
    lo, hi = flow.tau_min, flow.T
    for it in range(1, NEWTON_MAXITER + 1):
        j = jet(sol, flow, tau)
        F = np.log(tau) + k * j.f - log_lam
        dF = 1.0 / tau + k * j.f_tau
        if np.any(dF <= 0):
            idx = int(np.argmin(dF))
            raise LevelSetError("level-set map lost monotonicity", idx, float(dF.flat[idx]))
        step = F / dF
        tau = np.clip(tau - step, lo, hi)
        if np.all(np.abs(step) <= NEWTON_RTOL * tau):
            break
    else:
        err = np.abs(step) / tau
        idx = int(np.argmax(err))
        raise LevelSetError(f"Newton did not converge in {NEWTON_MAXITER} iterations", idx, float(err.flat[idx]))
    j = jet(sol, flow, tau)
    resid = np.abs(np.expm1(np.log(tau) + k * j.f - log_lam))
    if np.any(resid > 1e-12):
        idx = int(np.argmax(resid))
        raise LevelSetError("level-set residual above 1e-12", idx, float(resid.flat[idx]))
    return tau, it, float(np.max(resid)), j


def _grad_sq_spectral(flow, phi):
    """|grad phi|^2 for a stack of fields (leading axis), spectral on the torus."""
    if flow.homogeneous:
        return np.zeros(phi.shape)
    grid = flow.grid
    axes = tuple(range(1, phi.ndim))
    spec = np.fft.fftn(phi, axes=axes)
    out = np.zeros(phi.shape)
    for kk in grid.first_derivative_wavenumbers():
        d = np.fft.ifftn(1j * kk[None] * spec, axes=axes).real
        out += d * d
    return out


def _measure(flow, integrand, phi):
    """Integrate a stack of fields over M, each with the volume form of g(phi)."""
    if flow.homogeneous:
        return integrand * flow.volume(phi)
    axes = tuple(range(1, integrand.ndim))
    return np.sum(integrand, axis=axes) * flow.grid.cell_volume


def _area_terms(flow, sol, N, lams):
    """(A_N, rawA_N, residual, phi, grad_phi_sq, correction) for each lam."""
    lams = np.asarray(lams, dtype=float).ravel()
    n = flow.n
    m2 = N + n - 1
    phi, iters, resid, j = _solve_phi(flow, sol, N, lams)
    gphi2 = _grad_sq_spectral(flow, phi)
    v = 1.0 + 2.0 * phi * flow.scalar_curvature_value(phi) / N
    corr = np.sqrt(1.0 + N * v * gphi2 / (2.0 * phi))
    gm1 = grad_b_sq_minus_one(flow, j, N)
    gb = np.sqrt(1.0 + gm1)
    # (phi/lam)^{N/2} from the level-set equation itself
    weight = np.exp(-N * j.f / m2) * corr
    pref = 0.5 * N * (4.0 * math.pi * lams) ** (-0.5 * n)
    A = pref * _measure(flow, weight * gm1 * gb, phi)
    raw = pref * _measure(flow, weight * gb**3, phi)
    return A, raw, resid, iters, phi, gphi2, corr


def _require(flow, sol, ctx):
    check_compatible(sol, flow)
    if ctx.n != flow.n:
        raise ConfigurationError("context dimension does not match flow")
    flow.check_tau(ctx.lam)
    _check_monotone(flow, sol, ctx.N)


def level_set_solve(flow, sol, ctx):
    _require(flow, sol, ctx)
    _, _, resid, iters, phi, gphi2, corr = _area_terms(flow, sol, ctx.N, [ctx.lam])
    tau_phi = float(phi[0]) if flow.homogeneous else ctx.lam
    return LevelSet(
        lam=ctx.lam,
        phi=geo.ScalarField(phi[0], tau_phi, flow),
        grad_phi_sq=geo.ScalarField(gphi2[0], tau_phi, flow),
        area_correction=geo.ScalarField(corr[0], tau_phi, flow),
        newton_iters=iters,
        residual=resid,
    )


def area_A_N(flow, sol, ctx):
    _require(flow, sol, ctx)
    return float(_area_terms(flow, sol, ctx.N, [ctx.lam])[0][0])


def raw_area(flow, sol, ctx):
    _require(flow, sol, ctx)
    return float(_area_terms(flow, sol, ctx.N, [ctx.lam])[1][0])


def area_A_N_literal(flow, sol, ctx):
    """A_N and rawA_N straight from the definition, for moderate N only.

    Uses c_N with |S^N| from the Gamma function, s^{m-1}, (2 N phi)^{N/2}
    and the determinant of the pulled-back metric, all in plain floating
    point.  Overflows beyond N of roughly 150.
    """
    _require(flow, sol, ctx)
    N, n, m = ctx.N, flow.n, ctx.m
    s = ctx.s
    sphere_N = 2.0 * math.pi ** ((N + 1) / 2) / math.gamma((N + 1) / 2)
    c_N = (4.0 * math.pi) ** (-n / 2) * (2.0 * N) ** (n / 2 + 1) / (4.0 * sphere_N)
    phi, _, _, j = _solve_phi(flow, sol, N, [ctx.lam])
    phi, jf = phi[0], j
    R = flow.scalar_curvature_value(phi)
    v = 1.0 + R * (2.0 * N * phi) / N**2
    e2 = np.exp(2.0 * jf.f[0] / (m - 2)) if np.ndim(jf.f) else np.exp(2.0 * jf.f / (m - 2))
    f_tau = jf.f_tau[0] if np.ndim(jf.f_tau) else jf.f_tau
    gf2 = jf.grad_f_sq[0] if np.ndim(jf.grad_f_sq) else jf.grad_f_sq
    r2 = 2.0 * N * phi
    gb2 = e2 / v * (1.0 + 2.0 * phi * f_tau / (m - 2)) ** 2 + r2 * e2 * gf2 / (m - 2) ** 2
    gb = np.sqrt(gb2)
    if flow.homogeneous:
        sqrt_det = flow.scale(phi) ** (n / 2)
        dnu_total = geo.unit_sphere_volume(n)
        pulled = 1.0
    else:
        grads = geo.gradient(geo.ScalarField(phi, ctx.lam, flow))
        G = np.stack(grads, axis=-1)
        metric = np.eye(n) + (v * N / (2.0 * phi))[..., None, None] * G[..., :, None] * G[..., None, :]
        pulled = np.sqrt(np.linalg.det(metric))
        sqrt_det = 1.0
        dnu_total = None
    area_el = r2 ** (N / 2) * pulled * sqrt_det

    def integral(w):
        if flow.homogeneous:
            return float(w * area_el * dnu_total)
        return float(np.sum(w * area_el)) * flow.grid.cell_volume

    scale = c_N * sphere_N / s ** (m - 1)
    return scale * integral((gb2 - 1.0) * gb), scale * integral(gb**3)


def _gauss_legendre(a, b, q):
    x, w = np.polynomial.legendre.leggauss(q)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def _panels(xi_min):
    edges = [e for e in (-32.0, -24.0, -17.0, -11.0, -6.5, -3.0, -1.0) if e > xi_min]
    return list(zip([xi_min] + edges, edges + [0.0]))


def volume_V_N(flow, sol, ctx, strict=True, q=16, max_rounds=8):
    """Truncated volume and the bound on the discarded tail.

    With w = s e^{xi/N} the coarea reduction reads
    V_N = (1/N) int_{xi_min}^0 e^{m xi/N} A_N(lam e^{2 xi/N}) dxi.
    Panels are accepted when a q-point Gauss-Legendre rule agrees with the
    composite rule on its two halves.
    """
    _require(flow, sol, ctx)
    N, m, lam = ctx.N, ctx.m, ctx.lam
    xi_min = max(XI_CUTOFF, 0.5 * N * math.log(ctx.lambda0 / lam))
    lam_cut = lam * math.exp(2.0 * xi_min / N)
    if lam_cut <= flow.tau_min:
        raise ConfigurationError(
            f"truncation time {lam_cut:.4g} falls below tau_min={flow.tau_min}; raise N or lambda"
        )

    pending = _panels(xi_min)
    accepted = 0.0
    sup_A = 0.0
    for _ in range(max_rounds):
        nodes, weights, owner = [], [], []
        for idx, (a, b) in enumerate(pending):
            mid = 0.5 * (a + b)
            for lo, hi, tag in ((a, b, 0), (a, mid, 1), (mid, b, 1)):
                x, w = _gauss_legendre(lo, hi, q)
                nodes.append(x)
                weights.append(w)
                owner.append(np.full(q, 2 * idx + tag))
        nodes = np.concatenate(nodes)
        weights = np.concatenate(weights)
        owner = np.concatenate(owner)
        A_nodes = _area_terms(flow, sol, N, lam * np.exp(2.0 * nodes / N))[0]
        sup_A = max(sup_A, float(np.max(np.abs(A_nodes))))
        vals = weights * np.exp(m * nodes / N) * A_nodes
        sums = np.bincount(owner, weights=vals, minlength=2 * len(pending))
        coarse, fine = sums[0::2], sums[1::2]
        diff = np.abs(coarse - fine)
        ok = diff <= 1e-13 * np.maximum(1.0, np.abs(fine))
        accepted += float(np.sum(fine[ok]))
        retry = []
        for (a, b), good in zip(pending, ok):
            if not good:
                mid = 0.5 * (a + b)
                retry += [(a, mid), (mid, b)]
        pending = retry
        if not pending:
            break
    else:
        leftover = float(np.sum(diff[~ok]))
        if leftover > 1e-11:
            raise QuadratureError(f"panel disagreement {leftover:.3e} after {max_rounds} rounds")
        accepted += float(np.sum(fine[~ok]))

    V = accepted / N
    tail = sup_A * math.exp(xi_min * (N + 1) / N)
    if strict:
        A_here = abs(area_A_N(flow, sol, ctx))
        if tail > TAIL_RTOL * (1.0 + A_here):
            raise TruncationError(
                f"tail bound {tail:.3e} exceeds {TAIL_RTOL:g} (1 + |A_N|) at N={N}; "
                "raise N or lower lambda0"
            )
    return V, tail


def monotonic_W_N(flow, sol, ctx, strict=True):
    A = area_A_N(flow, sol, ctx)
    V, _ = volume_V_N(flow, sol, ctx, strict=strict)
    return 2.0 * (ctx.m - 1) * V - A


def colding_sample(flow, sol, ctx, strict=True):
    _require(flow, sol, ctx)
    A, raw, resid, *_ = _area_terms(flow, sol, ctx.N, [ctx.lam])
    V, tail = volume_V_N(flow, sol, ctx, strict=strict)
    A, raw = float(A[0]), float(raw[0])
    return ColdingSample(
        N=ctx.N,
        lam=ctx.lam,
        A_N=A,
        rawA_N=raw,
        V_N=V,
        W_N=2.0 * (ctx.m - 1) * V - A,
        tail_bound=tail,
        level_set_residual=resid,
    )


def dWN_dlambda(flow, sol, N, lam, h_rel=1e-3, lambda0_fraction=0.5, strict=True):
    """Centered difference of W_N in lambda with one Richardson refinement."""

    def W(x):
        return monotonic_W_N(flow, sol, NSpaceContext.for_flow(flow, N, x, lambda0_fraction), strict)

    return central_derivative(W, lam, h_rel, domain=(flow.tau_min, flow.T))
