"""Beta process Poisson NMF with SSMF and collapsed Gibbs inference."""

from .errors import BpnmfError, ContractViolation, FormatError, ValidationError
from .gibbs import GibbsConfig, PosteriorSample, run_gibbs
from .mask import DEFAULT_KERNEL, accumulate_phi_stats, log_odds_active, sweep_column, sweep_mask
from .model import (
    FitReport,
    GlobalDraw,
    Hyperparams,
    SuffStats,
    VariationalParams,
    surrogate_loglik,
    validate_model,
)
from .rng import RngStream
from .ssmf import SsmfConfig, run_ssmf
from .synthetic import SyntheticConfig, generate, recovery_score

__all__ = [
    "BpnmfError", "ContractViolation", "FormatError", "ValidationError",
    "GibbsConfig", "PosteriorSample", "run_gibbs",
    "DEFAULT_KERNEL", "accumulate_phi_stats", "log_odds_active", "sweep_column", "sweep_mask",
    "FitReport", "GlobalDraw", "Hyperparams", "SuffStats", "VariationalParams",
    "surrogate_loglik", "validate_model",
    "RngStream", "SsmfConfig", "run_ssmf",
    "SyntheticConfig", "generate", "recovery_score",
]
