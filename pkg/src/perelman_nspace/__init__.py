"""Perelman's N-space over model backward Ricci flows, Colding-type
functionals on level sets of b, and their convergence to the W-entropy."""

from .asymptotics import ConvergenceFit, central_derivative, fit_rate, richardson
from .colding import (
    ColdingSample,
    LevelSet,
    area_A_N,
    area_A_N_literal,
    colding_sample,
    dWN_dlambda,
    level_set_solve,
    monotonic_W_N,
    raw_area,
    volume_V_N,
)
from .entropy import EntropySample, entropy_derivative, entropy_sample, entropy_W
from .geometry import FlowSolution, Grid, ScalarField, TensorField
from .nspace import NSpaceContext
from .potential import PotentialSolution

__all__ = [
    "ColdingSample", "ConvergenceFit", "EntropySample", "FlowSolution", "Grid", "LevelSet",
    "NSpaceContext", "PotentialSolution", "ScalarField", "TensorField", "area_A_N",
    "area_A_N_literal", "central_derivative", "colding_sample", "dWN_dlambda",
    "entropy_W", "entropy_derivative", "entropy_sample", "fit_rate", "level_set_solve",
    "monotonic_W_N", "raw_area", "richardson", "volume_V_N",
]
