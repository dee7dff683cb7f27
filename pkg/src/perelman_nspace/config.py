"""Experiment configuration: a single JSON file.

Example::

    {
      "name": "torus_spectral",
      "flow": {"kind": "flat_torus", "n": 1, "T": 2.0, "tau_min": 0.1,
               "points_per_dim": 256},
      "potential": {"kind": "torus_spectral", "A": 1.0,
                    "modes": [{"amplitude": 0.5, "wavevector": [1]}]},
      "N_ladder": [128, 256, 512, 1024, 2048, 4096, 8192, 16384],
      "lambda_grid": [0.5, 1.0, 1.5],
      "lambda0_fraction": 0.5,
      "tolerances": {"area_rate": [0.9, 1.1]},
      "output": {"csv": "report.csv", "summary": "summary.json"}
    }

Rate windows are ``[lo, hi]`` pairs; ``null`` leaves a side open.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigurationError, NSpaceError
from .geometry import FLAT_TORUS, FlowSolution, Grid
from .potential import CONSTANT_IN_SPACE, TORUS_SPECTRAL, Mode, PotentialSolution

DEFAULT_TOLERANCES = {
    "area_rate": [0.9, 1.1],
    "volume_gap_rate": [1.7, 2.3],
    "monotonic_rate": [0.8, 1.2],
    "level_set_rate": [0.9, 1.1],
    "derivative_rate": [0.8, None],
    "leading_gradient_rate": [0.9, None],
    "hat_laplacian_variation": 0.25,
    "b2_residual_variation": 0.30,
    "level_set_residual": 1e-12,
    "potential_residual": 1e-9,
    "flow_residual": 1e-8,
    "tail_rtol": 1e-12,
    "tail_min_N": 256,
    "entropy_fd": 1e-6,
    "entropy_fd_step": 1e-4,
    "reduction_rtol": 1e-10,
    "reduction_N": [8, 16, 32, 64, 100],
    "derivative_floor": 1e-10,
    "zero_floor": 1e-8,
}

RATE_KEYS = ("area_rate", "volume_gap_rate", "monotonic_rate", "level_set_rate",
             "derivative_rate", "leading_gradient_rate")


def _err(path, msg):
    return ConfigurationError(f"field '{path}': {msg}")


def _num(d, key, path, default=None, positive=False):
    if key not in d:
        if default is None:
            raise _err(f"{path}.{key}", "required")
        return default
    val = d[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
        raise _err(f"{path}.{key}", f"expected a finite number, got {val!r}")
    if positive and val <= 0:
        raise _err(f"{path}.{key}", f"must be positive, got {val}")
    return float(val)


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    flow: FlowSolution
    potential: PotentialSolution
    N_ladder: tuple
    lambda_grid: tuple
    lambda0_fraction: float = 0.5
    derivative_h_rel: float = 1e-3
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    csv_name: str = "report.csv"
    summary_name: str = "summary.json"

    def window(self, key):
        lo, hi = self.tolerances[key]
        return (-math.inf if lo is None else lo, math.inf if hi is None else hi)


def _parse_flow(d):
    if not isinstance(d, dict):
        raise _err("flow", "expected an object")
    kind = d.get("kind")
    n = d.get("n")
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise _err("flow.n", f"expected a positive integer, got {n!r}")
    T = _num(d, "T", "flow", positive=True)
    tau_min = _num(d, "tau_min", "flow", default=0.05 * T, positive=True)
    try:
        if kind == FLAT_TORUS:
            ppd = d.get("points_per_dim", 64)
            if not isinstance(ppd, int):
                raise _err("flow.points_per_dim", f"expected an integer, got {ppd!r}")
            grid = Grid(n, ppd, tuple(d["periods"]) if "periods" in d else None)
            return FlowSolution(kind, n, T, tau_min=tau_min, grid=grid)
        return FlowSolution(kind, n, T, tau_min=tau_min, sphere_a0=_num(d, "sphere_a0", "flow", default=0.0))
    except ConfigurationError as exc:
        if str(exc).startswith("field"):
            raise
        raise _err("flow", str(exc)) from None


def _parse_potential(d):
    if not isinstance(d, dict):
        raise _err("potential", "expected an object")
    kind = d.get("kind")
    try:
        if kind == CONSTANT_IN_SPACE:
            return PotentialSolution.constant(_num(d, "c", "potential", default=0.0))
        if kind == TORUS_SPECTRAL:
            modes = d.get("modes")
            if not isinstance(modes, list) or not modes:
                raise _err("potential.modes", "expected a non-empty list")
            parsed = []
            for i, m in enumerate(modes):
                try:
                    parsed.append(Mode(float(m["amplitude"]), tuple(m["wavevector"])))
                except (KeyError, TypeError, ValueError):
                    raise _err(f"potential.modes[{i}]", "needs 'amplitude' and integer 'wavevector'") from None
            return PotentialSolution.torus_spectral(
                _num(d, "A", "potential", positive=True), parsed,
                decay_scale=_num(d, "decay_scale", "potential", default=1.0, positive=True),
            )
    except NSpaceError as exc:
        if str(exc).startswith("field"):
            raise
        raise _err("potential", str(exc)) from None
    raise _err("potential.kind", f"unknown kind {kind!r}")


def config_from_dict(d):
    if not isinstance(d, dict):
        raise ConfigurationError("config must be a JSON object")
    flow = _parse_flow(d.get("flow"))
    pot = _parse_potential(d.get("potential"))
    if pot.kind == TORUS_SPECTRAL and flow.kind != FLAT_TORUS:
        raise _err("potential.kind", "torus_spectral needs a flat_torus flow")

    ladder = d.get("N_ladder")
    if not isinstance(ladder, list) or not ladder:
        raise _err("N_ladder", "must be a non-empty list of integers")
    if any(not isinstance(N, int) or isinstance(N, bool) or N < 8 for N in ladder):
        raise _err("N_ladder", "entries must be integers >= 8")
    if any(b <= a for a, b in zip(ladder, ladder[1:])):
        raise _err("N_ladder", "must be strictly increasing")
    ratios = {b / a for a, b in zip(ladder, ladder[1:])}
    if len(ladder) > 1 and max(ratios) - min(ratios) > 1e-12:
        raise _err("N_ladder", "must be geometric (constant ratio)")

    lams = d.get("lambda_grid")
    if not isinstance(lams, list) or not lams:
        raise _err("lambda_grid", "must be a non-empty list")
    for i, lam in enumerate(lams):
        if isinstance(lam, bool) or not isinstance(lam, (int, float)):
            raise _err(f"lambda_grid[{i}]", f"expected a number, got {lam!r}")
        if not flow.tau_min < lam < flow.T:
            raise _err(f"lambda_grid[{i}]", f"{lam} outside ({flow.tau_min}, {flow.T})")

    frac = _num(d, "lambda0_fraction", "config", default=0.5)
    if not 0 < frac < 1:
        raise _err("lambda0_fraction", f"must lie in (0, 1), got {frac}")
    h_rel = _num(d, "derivative_h_rel", "config", default=1e-3, positive=True)
    if h_rel >= 0.1:
        raise _err("derivative_h_rel", "must be < 0.1")

    tol = dict(DEFAULT_TOLERANCES)
    user_tol = d.get("tolerances", {})
    if not isinstance(user_tol, dict):
        raise _err("tolerances", "expected an object")
    for key, val in user_tol.items():
        if key not in DEFAULT_TOLERANCES:
            raise _err(f"tolerances.{key}", "unknown tolerance")
        if key in RATE_KEYS:
            if not (isinstance(val, list) and len(val) == 2):
                raise _err(f"tolerances.{key}", "expected [lo, hi]")
            lo, hi = val
            if lo is not None and hi is not None and lo > hi:
                raise _err(f"tolerances.{key}", "lo > hi")
        tol[key] = val

    out = d.get("output", {})
    name = d.get("name", "experiment")
    if not isinstance(name, str) or not name:
        raise _err("name", "expected a non-empty string")
    return ExperimentConfig(
        name=name,
        flow=flow,
        potential=pot,
        N_ladder=tuple(ladder),
        lambda_grid=tuple(float(x) for x in lams),
        lambda0_fraction=frac,
        derivative_h_rel=h_rel,
        tolerances=tol,
        csv_name=out.get("csv", "report.csv"),
        summary_name=out.get("summary", "summary.json"),
    )


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON ({exc})") from None
    return config_from_dict(data)


def shipped_config_path(name):
    """Path of a config shipped with the package (e.g. ``torus_constant.json``)."""
    return Path(__file__).parent / "configs" / name
