"""Density estimation and minimax lower bounds on the hyperbolic half-plane."""

from .errors import HypKDEError, PositivityViolation
from .geometry import HPoint, MobiusMap, TangentVector, build_mesh, exp_map, hyperbolic_distance
from .helgason import SpectralGrid, hf_forward, hf_inverse, plancherel_norm
from .kde import KdeConfig, estimate, schedule, scheduled_config
from .measures import BitVector, Grid, GridDensity, SampleSet, base_density, boundary_density, sample
from .risk import RiskRecord, fit_rate, l2_risk, rate_sweep, sandwich_experiment

__version__ = "0.1.0"

__all__ = [
    "BitVector", "Grid", "GridDensity", "HPoint", "HypKDEError", "KdeConfig", "MobiusMap",
    "PositivityViolation", "RiskRecord", "SampleSet", "SpectralGrid", "TangentVector",
    "base_density", "boundary_density", "build_mesh", "estimate", "exp_map", "fit_rate",
    "hf_forward", "hf_inverse", "hyperbolic_distance", "l2_risk", "plancherel_norm",
    "rate_sweep", "sample", "sandwich_experiment", "schedule", "scheduled_config",
]
