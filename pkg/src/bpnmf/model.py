"""Domain types for truncated beta process Poisson NMF.

The generative model is::

    W_fk ~ Gamma(a, b)           H_kt ~ Gamma(c, d)
    pi_k ~ Beta(a0/K, b0(K-1)/K) S_kt ~ Bernoulli(pi_k)
    X_ft ~ Poisson(sum_k W_fk H_kt S_kt)

Count matrices and masks are plain numpy arrays checked by
:func:`as_counts` and :func:`as_mask`; the remaining state lives in frozen
dataclasses whose arrays are marked read-only after validation.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np
from scipy.special import gammaln, xlogy

from .errors import ValidationError

DEFAULT_PI_THRESHOLD = 0.05


def _frozen(arr, dtype=np.float64):
    out = np.array(arr, dtype=dtype, copy=True, order="C")
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Hyperparams:
    """Prior hyperparameters and truncation level.

    ``(a, b)`` and ``(c, d)`` are shape/rate pairs for W and H; ``a0`` and
    ``b0`` set the beta process mass.  Defaults are the values used for
    both the synthetic and audio experiments.
    """

    a: float = 0.5
    b: float = 0.5
    c: float = 5.0
    d: float = 5.0
    a0: float = 1.0
    b0: float = 1.0
    K: int = 100

    def __post_init__(self):
        for name in ("a", "b", "c", "d", "a0", "b0"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val > 0):
                raise ValidationError("nonpositive-hyperparameter", f"{name}={val!r} must be > 0")
        if int(self.K) != self.K or self.K < 1:
            raise ValidationError("nonpositive-hyperparameter", f"K={self.K!r} must be a positive integer")
        if self.K < 2:
            raise ValidationError(
                "truncation-too-small", "K=1 gives a Beta prior with zero second parameter"
            )
        object.__setattr__(self, "K", int(self.K))

    @property
    def pi_alpha(self) -> float:
        return self.a0 / self.K

    @property
    def pi_beta(self) -> float:
        return self.b0 * (self.K - 1) / self.K

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


def as_counts(x) -> np.ndarray:
    """Return ``x`` as a C-contiguous int64 count matrix or raise."""
    arr = np.asarray(x)
    if arr.ndim != 2 or 0 in arr.shape:
        raise ValidationError("dimension-mismatch", f"count matrix must be 2-D and non-empty, got shape {arr.shape}")
    if arr.dtype.kind == "f":
        if not np.all(np.isfinite(arr)) or np.any(arr != np.round(arr)):
            raise ValidationError("invalid-counts", "counts must be integers")
    elif arr.dtype.kind not in "iub":
        raise ValidationError("invalid-counts", f"unsupported dtype {arr.dtype}")
    if np.any(arr < 0):
        raise ValidationError("invalid-counts", "counts must be non-negative")
    return np.ascontiguousarray(arr, dtype=np.int64)


def as_mask(s) -> np.ndarray:
    arr = np.asarray(s)
    if arr.ndim != 2:
        raise ValidationError("dimension-mismatch", "mask must be 2-D")
    if not np.all((arr == 0) | (arr == 1)):
        raise ValidationError("invalid-mask", "mask entries must be 0 or 1")
    return np.ascontiguousarray(arr, dtype=np.int8)


@dataclass(frozen=True)
class GlobalDraw:
    """One joint sample of the global variables (W, H, pi)."""

    W: np.ndarray
    H: np.ndarray
    pi: np.ndarray

    def __post_init__(self):
        W, H, pi = _frozen(self.W), _frozen(self.H), _frozen(self.pi)
        if W.ndim != 2 or H.ndim != 2 or pi.ndim != 1:
            raise ValidationError("dimension-mismatch", "W, H must be 2-D and pi 1-D")
        if W.shape[1] != H.shape[0] or pi.shape[0] != W.shape[1]:
            raise ValidationError("dimension-mismatch", f"W{W.shape}, H{H.shape}, pi{pi.shape} disagree on K")
        if not (np.all(W > 0) and np.all(H > 0) and np.all(np.isfinite(W)) and np.all(np.isfinite(H))):
            raise ValidationError("nonpositive-parameter", "W and H entries must be finite and > 0")
        if not np.all((pi > 0) & (pi < 1)):
            raise ValidationError("nonpositive-parameter", "pi entries must lie in (0, 1)")
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "pi", pi)

    @property
    def K(self) -> int:
        return self.pi.shape[0]


@dataclass(frozen=True)
class VariationalParams:
    """Parameters of q: Gamma(shape, rate) for each W and H entry, Beta for pi."""

    nuW: np.ndarray
    rhoW: np.ndarray
    nuH: np.ndarray
    rhoH: np.ndarray
    alphaPi: np.ndarray
    betaPi: np.ndarray

    ARRAYS = ("nuW", "rhoW", "nuH", "rhoH", "alphaPi", "betaPi")

    def __post_init__(self):
        for name in self.ARRAYS:
            arr = _frozen(getattr(self, name))
            if not (np.all(np.isfinite(arr)) and np.all(arr > 0)):
                raise ValidationError("nonpositive-parameter", f"{name} must be finite and > 0")
            object.__setattr__(self, name, arr)
        F, K = self.nuW.shape
        T = self.nuH.shape[1]
        expect = {"rhoW": (F, K), "nuH": (K, T), "rhoH": (K, T), "alphaPi": (K,), "betaPi": (K,)}
        for name, shape in expect.items():
            if getattr(self, name).shape != shape:
                raise ValidationError("dimension-mismatch", f"{name} has shape {getattr(self, name).shape}, expected {shape}")

    @property
    def shape(self):
        F, K = self.nuW.shape
        return F, K, self.nuH.shape[1]

    def mean_W(self):
        return self.nuW / self.rhoW

    def mean_H(self):
        return self.nuH / self.rhoH

    def mean_pi(self):
        return self.alphaPi / (self.alphaPi + self.betaPi)

    def as_dict(self):
        return {name: getattr(self, name) for name in self.ARRAYS}


@dataclass(frozen=True)
class SuffStats:
    """Expected-contribution statistics standing in for the F x T x K tensor Z.

    ``expZ_rowsum[f, k] = sum_t X_ft phi_ftk`` and
    ``expZ_colsum[k, t] = sum_f X_ft phi_ftk``.  ``n_inconsistent`` counts
    cells with a positive count but zero rate; they contribute nothing.
    """

    expZ_rowsum: np.ndarray
    expZ_colsum: np.ndarray
    HS_rowsum: np.ndarray
    W_colsum: np.ndarray
    S_count: np.ndarray
    n_inconsistent: int = 0

    def __post_init__(self):
        for f_ in fields(self):
            if f_.name == "n_inconsistent":
                continue
            dtype = np.int64 if f_.name == "S_count" else np.float64
            arr = _frozen(getattr(self, f_.name), dtype)
            if np.any(arr < 0):
                raise ValidationError("negative-statistic", f"{f_.name} has negative entries")
            object.__setattr__(self, f_.name, arr)


def validate_model(h: Hyperparams, x) -> np.ndarray:
    """Check hyperparameters against a count matrix and return the counts.

    Raises :class:`ValidationError` with code ``all-zero-data``,
    ``truncation-too-small``, ``nonpositive-hyperparameter`` or
    ``dimension-mismatch``.
    """
    if not isinstance(h, Hyperparams):
        raise ValidationError("invalid-input", "expected Hyperparams")
    if h.K < 2:
        raise ValidationError("truncation-too-small", "K must be at least 2")
    x = as_counts(x)
    if not np.any(x > 0):
        raise ValidationError("all-zero-data", "count matrix has no positive entry")
    return x


def check_dims(x: np.ndarray, g: GlobalDraw, s: np.ndarray | None = None):
    F, T = x.shape
    if g.W.shape[0] != F or g.H.shape[1] != T:
        raise ValidationError("dimension-mismatch", f"X{x.shape} vs W{g.W.shape}, H{g.H.shape}")
    if s is not None and s.shape != g.H.shape:
        raise ValidationError("dimension-mismatch", f"S{s.shape} vs H{g.H.shape}")


def poisson_rates(W, H, S) -> np.ndarray:
    return np.asarray(W) @ (np.asarray(H) * np.asarray(S))


def surrogate_loglik(x, g: GlobalDraw, s) -> float:
    """Poisson log-likelihood of ``x`` under rates ``W (H * S)``.

    Returns ``-inf`` when a positive count meets a zero rate; callers treat
    that value as the inconsistency sentinel.
    """
    x = as_counts(x)
    s = as_mask(s)
    check_dims(x, g, s)
    rate = poisson_rates(g.W, g.H, s)
    return float(np.sum(xlogy(x, rate) - rate - gammaln(x + 1.0)))


def active_components(pi_mean, tau: float = DEFAULT_PI_THRESHOLD) -> np.ndarray:
    """Indices of components whose inclusion probability exceeds ``tau``."""
    if not 0 < tau < 1:
        raise ValidationError("invalid-threshold", "tau must lie in (0, 1)")
    return np.flatnonzero(np.asarray(pi_mean) > tau)


@dataclass
class FitReport:
    """Per-iteration trace and summary of a fit."""

    algorithm: str
    trace: list = field(default_factory=list)
    active_count: int = 0
    n_inconsistent: int = 0
    kernel: str = ""
    mask: np.ndarray | None = None

    TRACE_COLUMNS = ("iteration", "step_size", "loglik", "active", "wall_time")
