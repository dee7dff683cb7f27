"""Pass/fail criteria evaluated by ``verify`` against a configured experiment."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import colding, entropy, nspace
from .asymptotics import central_derivative, fit_rate
from .errors import DegenerateFitError
from .geometry import validate_backward_flow
from .potential import bachcho_residual


@dataclass(frozen=True)
class CriterionResult:
    name: str
    passed: bool
    detail: str

    def line(self):
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"

    def as_dict(self):
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


def _rate_check(name, ladder, reference, window, floor=None):
    lo, hi = window
    try:
        fit = fit_rate(ladder, reference, floor=floor)
    except DegenerateFitError:
        return CriterionResult(name, True, "deviations at round-off level (converged)")
    ok = lo <= fit.rate <= hi
    return CriterionResult(name, ok, f"rate {fit.rate:.4f} in [{lo:g}, {hi:g}]" if ok
                           else f"rate {fit.rate:.4f} outside [{lo:g}, {hi:g}]")


def relative_variation(values):
    values = np.abs(np.asarray(values, dtype=float))
    top = float(np.max(values))
    return 0.0 if top == 0 else (top - float(np.min(values))) / top


def _variation_check(name, scaled, limit, zero_floor):
    if max(abs(x) for x in scaled) <= zero_floor:
        return CriterionResult(name, True, f"identically zero to round-off (max {max(scaled):.2e})")
    var = relative_variation(scaled)
    return CriterionResult(name, var < limit, f"N*sup variation {var:.3%} (limit {limit:.0%})")


def monotonicity_bound(ladder, dW, floor):
    """K/N envelope with K twice the top-rung deviation, floored at ``floor``."""
    N_top, d_top = ladder[-1]
    K = 2.0 * N_top * abs(d_top - dW)
    return {N: max(K / N, floor) for N, _ in ladder}


def evaluate(cfg, report):
    """All config-driven criteria, in a fixed order."""
    flow, sol, tol = cfg.flow, cfg.potential, cfg.tolerances
    out = []
    lams = cfg.lambda_grid

    res = validate_backward_flow(flow, lams)
    out.append(CriterionResult("flow_residual", res <= tol["flow_residual"], f"{res:.2e} <= {tol['flow_residual']:g}"))
    res = bachcho_residual(sol, flow, lams)
    out.append(CriterionResult("potential_residual", res <= tol["potential_residual"],
                               f"{res:.2e} <= {tol['potential_residual']:g}"))

    for lam in lams:
        dW = entropy.entropy_derivative(flow, sol, lam)
        h = tol["entropy_fd_step"]
        fd = central_derivative(lambda x: entropy.entropy_W(flow, sol, x), lam, h)
        gap = abs(dW - fd)
        out.append(CriterionResult(f"entropy_fd[lambda={lam:g}]", gap <= tol["entropy_fd"],
                                   f"|dW - FD| = {gap:.2e} <= {tol['entropy_fd']:g}"))
        out.append(CriterionResult(f"entropy_sign[lambda={lam:g}]", dW <= 0.0, f"dW = {dW:.6g}"))

    out.append(CriterionResult("cells", not report.errors,
                               "all cells computed" if not report.errors else f"{len(report.errors)} failed cells"))

    rows = report.rows
    worst = max((r["level_set_residual"] for r in rows), default=0.0)
    out.append(CriterionResult("level_set_residual", worst <= tol["level_set_residual"], f"max {worst:.2e}"))
    bad = [r for r in rows if r["N"] >= tol["tail_min_N"] and r["tail_bound"] >= tol["tail_rtol"] * (1 + abs(r["A_N"]))]
    out.append(CriterionResult("tail_bound", not bad, f"{len(bad)} cells with N >= {tol['tail_min_N']} above bound"))

    floor = tol["derivative_floor"]
    zf = tol["zero_floor"]
    for lam in lams:
        sel = sorted((r for r in rows if r["lambda"] == lam), key=lambda r: r["N"])
        if len(sel) < 4:
            out.append(CriterionResult(f"ladder[lambda={lam:g}]", False, "fewer than 4 rungs computed"))
            continue
        W, dW = sel[0]["W"], sel[0]["dW"]
        n = flow.n
        tag = f"[lambda={lam:g}]"
        out.append(_rate_check("area_rate" + tag, [(r["N"], r["A_N"]) for r in sel], W, cfg.window("area_rate")))
        out.append(_rate_check("volume_gap_rate" + tag,
                               [(r["N"], r["V_N"] - r["A_N"] / (r["N"] + n + 1)) for r in sel], 0.0,
                               cfg.window("volume_gap_rate")))
        out.append(_rate_check("monotonic_rate" + tag, [(r["N"], r["W_N"]) for r in sel], W,
                               cfg.window("monotonic_rate")))
        out.append(_rate_check("derivative_rate" + tag, [(r["N"], r["dWN"]) for r in sel], dW,
                               cfg.window("derivative_rate"), floor=floor))
        env = monotonicity_bound([(r["N"], r["dWN"]) for r in sel], dW, floor)
        worst = max(r["dWN"] - env[r["N"]] for r in sel)
        out.append(CriterionResult("monotonicity" + tag, worst <= 0.0 and dW <= 0.0,
                                   f"max(dWN - eps_N) = {worst:.2e}"))

        Ns = [r["N"] for r in sel]
        phi_dev = []
        for N in Ns:
            ls = colding.level_set_solve(flow, sol, nspace.NSpaceContext.for_flow(flow, N, lam, cfg.lambda0_fraction))
            phi_dev.append((N, float(np.max(np.abs(ls.phi.values - lam)))))
        out.append(_rate_check("level_set_rate" + tag, phi_dev, 0.0, cfg.window("level_set_rate")))

        lead = []
        for N in Ns:
            exact = nspace.grad_b_sq_exact(flow, sol, lam, N).values
            L = nspace.grad_b_sq_leading(flow, sol, lam).values
            lead.append((N, float(np.max(np.abs(0.5 * N * (exact - 1.0) - L)))))
        out.append(_rate_check("leading_gradient_rate" + tag, lead, 0.0, cfg.window("leading_gradient_rate")))

        top = Ns[-3:]
        scaled = [N * float(np.max(np.abs(nspace.scaled_hat_laplacian_h(flow, sol, lam, N).values))) for N in top]
        out.append(_variation_check("hat_laplacian_h" + tag, scaled, tol["hat_laplacian_variation"], zf))
        b2 = [N * nspace.hat_laplacian_b2_residual(flow, sol, lam, N) for N in top]
        out.append(_variation_check("hat_laplacian_b2" + tag, b2, tol["b2_residual_variation"], zf))

    lam = lams[0]
    worst = 0.0
    for N in tol["reduction_N"]:
        ctx = nspace.NSpaceContext.for_flow(flow, N, lam, cfg.lambda0_fraction)
        lit_A, lit_raw = colding.area_A_N_literal(flow, sol, ctx)
        A, raw = colding.area_A_N(flow, sol, ctx), colding.raw_area(flow, sol, ctx)
        for got, ref in ((A, lit_A), (raw, lit_raw)):
            worst = max(worst, abs(got - ref) / max(abs(ref), 1e-300) if ref != 0 else abs(got))
    out.append(CriterionResult("reduction", worst <= tol["reduction_rtol"],
                               f"max relative gap {worst:.2e} <= {tol['reduction_rtol']:g}"))
    return out

