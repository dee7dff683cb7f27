"""Experiment orchestration over the (N, lambda) grid and report output."""
from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import colding, entropy, nspace
from .asymptotics import fit_rate
from .errors import DegenerateFitError, NSpaceError
from .potential import bachcho_residual

log = logging.getLogger(__name__)

CSV_COLUMNS = (
    "N", "lambda", "A_N", "rawA_N", "V_N", "W_N", "W", "dW", "dWN",
    "level_set_residual", "bachcho_residual", "tail_bound",
)

SWEEP_QUANTITIES = (
    "A_N", "rawA_N", "V_N", "W_N", "dWN", "volume_gap", "phi_deviation",
    "scaled_hat_laplacian", "b2_residual", "leading_gradient_error",
)


@dataclass
class Report:
    name: str
    rows: list = field(default_factory=list)
    errors: list = field(default_factory=list)
    fits: dict = field(default_factory=dict)
    criteria: list = field(default_factory=list)

    @property
    def failed_criteria(self):
        return [c for c in self.criteria if not c.passed]


def _pmap(fn, items, threads):
    # results come back in input order whatever the scheduling
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _lambda_data(cfg, lam):
    flow, sol = cfg.flow, cfg.potential
    return {
        "W": entropy.entropy_W(flow, sol, lam),
        "dW": entropy.entropy_derivative(flow, sol, lam),
        "bachcho_residual": bachcho_residual(sol, flow, [lam]),
    }


def compute_cell(cfg, N, lam, lam_data):
    flow, sol = cfg.flow, cfg.potential
    ctx = nspace.NSpaceContext.for_flow(flow, N, lam, cfg.lambda0_fraction)
    sample = colding.colding_sample(flow, sol, ctx)
    dWN = colding.dWN_dlambda(flow, sol, N, lam, cfg.derivative_h_rel, cfg.lambda0_fraction)
    return {
        "N": N,
        "lambda": lam,
        "A_N": sample.A_N,
        "rawA_N": sample.rawA_N,
        "V_N": sample.V_N,
        "W_N": sample.W_N,
        "W": lam_data["W"],
        "dW": lam_data["dW"],
        "dWN": dWN,
        "level_set_residual": sample.level_set_residual,
        "bachcho_residual": lam_data["bachcho_residual"],
        "tail_bound": sample.tail_bound,
    }


def _fit_dict(ladder, reference, floor=None):
    if len(ladder) < 4:
        return {"status": "too_short"}
    try:
        fit = fit_rate(ladder, reference, floor=floor)
    except DegenerateFitError:
        return {"status": "degenerate"}
    return {
        "status": "ok",
        "limit": fit.limit,
        "constant": fit.constant,
        "rate": fit.rate,
        "residual": fit.residual,
    }


def ladder_fits(cfg, rows):
    """Rate fits per lambda for the main order claims."""
    fits = {}
    floor = cfg.tolerances["derivative_floor"]
    for lam in cfg.lambda_grid:
        sel = sorted((r for r in rows if r["lambda"] == lam), key=lambda r: r["N"])
        if not sel:
            continue
        W, dW = sel[0]["W"], sel[0]["dW"]
        m = [r["N"] + cfg.flow.n + 1 for r in sel]
        fits[repr(lam)] = {
            "A_N": _fit_dict([(r["N"], r["A_N"]) for r in sel], W),
            "W_N": _fit_dict([(r["N"], r["W_N"]) for r in sel], W),
            "volume_gap": _fit_dict([(r["N"], r["V_N"] - r["A_N"] / mm) for r, mm in zip(sel, m)], 0.0),
            "mV_minus_A": _fit_dict([(r["N"], mm * r["V_N"] - r["A_N"]) for r, mm in zip(sel, m)], 0.0),
            "dWN": _fit_dict([(r["N"], r["dWN"]) for r in sel], dW, floor=floor),
        }
    return fits


def run(cfg, threads=1):
    """Compute every (N, lambda) cell and the ladder fits.

    Solver failures abort only the affected cell and are listed in
    ``report.errors``.
    """
    report = Report(cfg.name)
    lam_data = {}
    for lam in cfg.lambda_grid:
        lam_data[lam] = _lambda_data(cfg, lam)
    cells = [(N, lam) for lam in cfg.lambda_grid for N in cfg.N_ladder]

    def work(cell):
        N, lam = cell
        try:
            return compute_cell(cfg, N, lam, lam_data[lam]), None
        except NSpaceError as exc:
            log.warning("cell N=%d lambda=%g failed: %s", N, lam, exc)
            return None, {"N": N, "lambda": lam, "error": type(exc).__name__, "message": str(exc)}

    for row, err in _pmap(work, cells, threads):
        if row is not None:
            report.rows.append(row)
        else:
            report.errors.append(err)
    report.fits = ladder_fits(cfg, report.rows)
    return report


def sweep(cfg, quantity, threads=1):
    """Rows of (N, lambda, value, reference) for one quantity."""
    if quantity not in SWEEP_QUANTITIES:
        raise ValueError(f"unknown quantity {quantity!r}; choose from {', '.join(SWEEP_QUANTITIES)}")
    flow, sol = cfg.flow, cfg.potential

    def one(cell):
        N, lam = cell
        ctx = nspace.NSpaceContext.for_flow(flow, N, lam, cfg.lambda0_fraction)
        ref = 0.0
        if quantity in ("A_N", "W_N"):
            ref = entropy.entropy_W(flow, sol, lam)
            val = colding.area_A_N(flow, sol, ctx) if quantity == "A_N" else colding.monotonic_W_N(flow, sol, ctx)
        elif quantity == "rawA_N":
            val, ref = colding.raw_area(flow, sol, ctx), float("nan")
        elif quantity == "V_N":
            val, ref = colding.volume_V_N(flow, sol, ctx)[0], float("nan")
        elif quantity == "dWN":
            ref = entropy.entropy_derivative(flow, sol, lam)
            val = colding.dWN_dlambda(flow, sol, N, lam, cfg.derivative_h_rel, cfg.lambda0_fraction)
        elif quantity == "volume_gap":
            s = colding.colding_sample(flow, sol, ctx)
            val = s.V_N - s.A_N / ctx.m
        elif quantity == "phi_deviation":
            ls = colding.level_set_solve(flow, sol, ctx)
            val = float(np.max(np.abs(ls.phi.values - lam)))
        elif quantity == "scaled_hat_laplacian":
            val = float(np.max(np.abs(nspace.scaled_hat_laplacian_h(flow, sol, lam, N).values)))
        elif quantity == "b2_residual":
            val = nspace.hat_laplacian_b2_residual(flow, sol, lam, N)
        else:
            exact = nspace.grad_b_sq_exact(flow, sol, lam, N).values
            lead = nspace.grad_b_sq_leading(flow, sol, lam).values
            val = float(np.max(np.abs(0.5 * N * (exact - 1.0) - lead)))
        return {"N": N, "lambda": lam, "value": val, "reference": ref}

    cells = [(N, lam) for lam in cfg.lambda_grid for N in cfg.N_ladder]
    return _pmap(one, cells, threads)


def _fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def rows_to_csv(rows, columns):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    return buf.getvalue()


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if np.isfinite(x) else repr(x)
    if isinstance(x, np.integer):
        return int(x)
    return x


def summary_dict(report):
    return _jsonable({
        "name": report.name,
        "columns": list(CSV_COLUMNS),
        "n_rows": len(report.rows),
        "errors": report.errors,
        "fits": report.fits,
        "criteria": [c.as_dict() for c in report.criteria],
        "passed": not report.failed_criteria and not report.errors,
    })


def write_report(report, cfg, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / cfg.csv_name
    summary_path = out / cfg.summary_name
    csv_path.write_text(rows_to_csv(report.rows, CSV_COLUMNS))
    summary_path.write_text(json.dumps(summary_dict(report), indent=2, sort_keys=True) + "\n")
    return csv_path, summary_path
