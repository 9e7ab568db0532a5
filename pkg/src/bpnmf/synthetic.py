"""Synthetic data with known ground truth.

Per-entry hyperparameters are drawn first, then the latent variables,
then the counts::

    A_fl, B_fl ~ Gamma(1, 1)    C_lt, D_lt ~ Gamma(5, 5)    pi_l ~ Beta(0.05, 0.95)
    W_fl ~ Gamma(A_fl, B_fl)    H_lt ~ Gamma(C_lt, D_lt)    S_lt ~ Bernoulli(pi_l)
    X_ft ~ Poisson(sum_l W_fl H_lt S_lt)

All Gamma distributions are shape/rate.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import xlogy

from .errors import ValidationError
from .model import DEFAULT_PI_THRESHOLD, active_components, as_counts
from .rng import RngStream, draw_bernoulli, draw_beta, draw_gamma, draw_poisson

# stream ids for the independent parts of the generator
_PI, _W, _H, _S, _X = range(5)


@dataclass(frozen=True)
class SyntheticConfig:
    """Generator settings.  Defaults are the desk-scale protocol.

    ``beta_pi`` with a zero first entry is the degenerate point mass at
    ``pi = 0`` (an empty mask).
    """

    F: int = 30
    T: int = 300
    L: int = 50
    gammaW_hyper: tuple = (1.0, 1.0)
    gammaH_hyper: tuple = (5.0, 5.0)
    beta_pi: tuple = (0.05, 0.95)
    seed: int = 0

    def __post_init__(self):
        for name in ("F", "T", "L"):
            if int(getattr(self, name)) < 1:
                raise ValidationError("invalid-config", f"{name} must be >= 1")
        for name in ("gammaW_hyper", "gammaH_hyper"):
            pair = tuple(float(v) for v in getattr(self, name))
            if len(pair) != 2 or min(pair) <= 0:
                raise ValidationError("invalid-config", f"{name} must be two positive numbers")
            object.__setattr__(self, name, pair)
        bp = tuple(float(v) for v in self.beta_pi)
        if len(bp) != 2 or bp[0] < 0 or bp[1] <= 0:
            raise ValidationError("invalid-config", "beta_pi must be (alpha >= 0, beta > 0)")
        object.__setattr__(self, "beta_pi", bp)

    @classmethod
    def full_scale(cls, seed: int = 0) -> "SyntheticConfig":
        return cls(F=75, T=1000, L=100, seed=seed)

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class GroundTruth:
    W: np.ndarray
    H: np.ndarray
    S: np.ndarray
    pi: np.ndarray

    @property
    def rates(self) -> np.ndarray:
        return self.W @ (self.H * self.S)


def generate(cfg: SyntheticConfig):
    """Sample ``(X, truth)`` from the generative protocol."""
    F, T, L = cfg.F, cfg.T, cfg.L
    stream = lambda sid: RngStream(cfg.seed, sid)  # noqa: E731

    a_pi, b_pi = cfg.beta_pi
    if a_pi == 0:
        pi = np.zeros(L)
    else:
        pi = draw_beta(stream(_PI), a_pi, b_pi, size=L)

    r = stream(_W)
    A = draw_gamma(r, *cfg.gammaW_hyper, size=(F, L))
    B = draw_gamma(r, *cfg.gammaW_hyper, size=(F, L))
    W = draw_gamma(r, A, B)

    r = stream(_H)
    C = draw_gamma(r, *cfg.gammaH_hyper, size=(L, T))
    D = draw_gamma(r, *cfg.gammaH_hyper, size=(L, T))
    H = draw_gamma(r, C, D)

    S = draw_bernoulli(stream(_S), np.broadcast_to(pi[:, None], (L, T)))
    X = draw_poisson(stream(_X), W @ (H * S))
    return X, GroundTruth(W=W, H=H, S=S, pi=pi)


def poisson_deviance(x, rates) -> float:
    """Mean Poisson deviance ``2 [x log(x / rate) - (x - rate)]`` over cells."""
    x = np.asarray(x, dtype=np.float64)
    rates = np.asarray(rates, dtype=np.float64)
    with np.errstate(divide="ignore"):
        d = 2.0 * (xlogy(x, x) - xlogy(x, rates) - (x - rates))
    return float(np.mean(d))


@dataclass(frozen=True)
class RecoveryReport:
    active_true: int
    active_fit: int
    frobenius_rel_error: float
    deviance_fit: float
    deviance_true: float


def recovery_score(truth: GroundTruth, W_fit, HS_fit, x, pi_fit=None,
                   tau: float = DEFAULT_PI_THRESHOLD) -> RecoveryReport:
    """Compare fitted posterior means with the generating state.

    ``HS_fit`` is the fitted activation matrix ``H * S`` (K x T).
    """
    x = as_counts(x)
    W_fit = np.asarray(W_fit, dtype=np.float64)
    HS_fit = np.asarray(HS_fit, dtype=np.float64)
    if W_fit.shape[0] != truth.W.shape[0] or HS_fit.shape[1] != truth.H.shape[1] \
            or W_fit.shape[1] != HS_fit.shape[0]:
        raise ValidationError("dimension-mismatch", "fitted factors do not match the ground truth")
    lam_true = truth.rates
    lam_fit = W_fit @ HS_fit
    return RecoveryReport(
        active_true=len(active_components(truth.pi, tau)) if np.any(truth.pi) else 0,
        active_fit=len(active_components(pi_fit, tau)) if pi_fit is not None else HS_fit.shape[0],
        frobenius_rel_error=float(np.linalg.norm(lam_true - lam_fit) / np.linalg.norm(lam_true)),
        deviance_fit=poisson_deviance(x, lam_fit),
        deviance_true=poisson_deviance(x, lam_true),
    )
