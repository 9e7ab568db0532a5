"""Collapsed Gibbs sampling of the binary mask and responsibility statistics.

With the auxiliary counts Z marginalized, the conditional odds of
``S_kt = 1`` against ``S_kt = 0`` are, in log form::

    log pi_k - log(1 - pi_k)
      + sum_f [ X_ft * (log(R_ft + W_fk H_kt) - log R_ft) - W_fk H_kt ]

where ``R_ft = sum_{l != k} W_fl H_lt S_lt`` is the rate without
component ``k``.  A positive count facing ``R_ft = 0`` forces the
component on.  Both inference engines use the sweep defined here.

The inner loop runs in a compiled kernel when available; set
``BPNMF_PURE_PYTHON=1`` to force the numpy fallback.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from . import _sweep_py
from .errors import ValidationError
from .model import GlobalDraw, SuffStats, as_counts, as_mask, check_dims
from .rng import ORDER_STREAM, RngStream

try:
    from . import _sweep as _sweep_compiled
except ImportError:  # pragma: no cover - depends on the build
    _sweep_compiled = None

KERNELS = {"python": _sweep_py.sweep_columns}
if _sweep_compiled is not None:
    KERNELS["compiled"] = _sweep_compiled.sweep_columns

if os.environ.get("BPNMF_PURE_PYTHON", "") not in ("", "0") or "compiled" not in KERNELS:
    DEFAULT_KERNEL = "python"
else:
    DEFAULT_KERNEL = "compiled"

DEFAULT_SWEEPS = 2


def get_kernel(name: str | None = None):
    name = name or DEFAULT_KERNEL
    try:
        return KERNELS[name]
    except KeyError:
        raise ValidationError("unknown-kernel", f"kernel {name!r} not available; have {sorted(KERNELS)}") from None


def logit(p):
    p = np.asarray(p, dtype=np.float64)
    with np.errstate(divide="ignore"):
        return np.log(p) - np.log1p(-p)


@dataclass
class ColumnContext:
    """Working state for resampling one mask column ``s_t``.

    ``s_col`` is owned by the context and mutated by :func:`sweep_column`.
    """

    t: int
    x_col: np.ndarray
    W: np.ndarray
    h_col: np.ndarray
    s_col: np.ndarray
    pi: np.ndarray

    @classmethod
    def from_state(cls, x, g: GlobalDraw, s, t: int) -> "ColumnContext":
        return cls(t=t, x_col=np.asarray(x)[:, t].astype(np.int64), W=g.W,
                   h_col=g.H[:, t].copy(), s_col=np.asarray(s)[:, t].astype(np.int8), pi=g.pi)

    @property
    def rate(self) -> np.ndarray:
        return self.W @ (self.h_col * self.s_col)

    def residual(self, k: int) -> np.ndarray:
        """Rate of the column with component ``k`` removed, recomputed from scratch."""
        mask = self.s_col.astype(bool).copy()
        mask[k] = False
        if not mask.any():
            return np.zeros(self.W.shape[0])
        return self.W[:, mask] @ self.h_col[mask]


def log_odds_active(ctx: ColumnContext, k: int) -> float:
    """Log of P1/P2 for ``S_kt`` given the rest of the column.

    Returns ``+inf`` when some positive count has zero residual rate and
    ``-inf`` when ``pi_k`` is 0; the former wins when both occur.
    """
    resid = ctx.residual(k)
    wh = ctx.W[:, k] * ctx.h_col[k]
    x = ctx.x_col
    pos = x > 0
    if np.any(pos & (resid <= 0)):
        return np.inf
    gain = np.sum(x[pos] * np.log1p(wh[pos] / resid[pos]))
    return float(logit(ctx.pi[k]) + gain - wh.sum())


def prob_active(ctx: ColumnContext, k: int) -> float:
    return float(expit(log_odds_active(ctx, k)))


def sweep_order(K: int, n_sweeps: int, randomize: bool = False, rng: RngStream | None = None) -> np.ndarray:
    if not randomize:
        return np.tile(np.arange(K, dtype=np.int64), (n_sweeps, 1))
    if rng is None:
        raise ValidationError("invalid-input", "randomized sweep order needs an RngStream")
    return np.stack([rng.generator.permutation(K) for _ in range(n_sweeps)]).astype(np.int64)


def column_uniforms(seed: int, block: int, T: int, n: int) -> np.ndarray:
    """Uniforms for every column; column ``t`` draws from stream ``t``."""
    U = np.empty((T, n))
    for t in range(T):
        U[t] = RngStream(seed, t, block).uniform(n)
    return U


def sweep_column(ctx: ColumnContext, r: RngStream, n_sweeps: int = DEFAULT_SWEEPS,
                 kernel: str | None = None) -> np.ndarray:
    """Run ``n_sweeps`` ascending passes over the components of one column.

    Consumes ``n_sweeps * K`` uniforms from ``r`` and returns the updated
    column (also stored back into ``ctx.s_col``).
    """
    if n_sweeps < 1:
        raise ValidationError("invalid-input", "n_sweeps must be >= 1")
    K = ctx.W.shape[1]
    X = ctx.x_col.reshape(-1, 1).astype(np.int64)
    H = np.ascontiguousarray(ctx.h_col.reshape(-1, 1), dtype=np.float64)
    S = np.ascontiguousarray(ctx.s_col.reshape(-1, 1), dtype=np.int8)
    U = r.uniform(n_sweeps * K).reshape(1, -1)
    order = sweep_order(K, n_sweeps)
    Wt = np.ascontiguousarray(ctx.W.T)
    get_kernel(kernel)(X, Wt, H, S, logit(ctx.pi), U, order, 0, 1)
    ctx.s_col = S[:, 0].copy()
    return ctx.s_col


def sweep_mask(x, g: GlobalDraw, s, seed: int, block: int, n_sweeps: int = DEFAULT_SWEEPS,
               randomize_order: bool = False, threads: int = 1, kernel: str | None = None) -> np.ndarray:
    """Resample every column of the mask and return the new mask.

    Column ``t`` uses stream ``RngStream(seed, t, block)``, so the result
    does not depend on ``threads``.
    """
    x = as_counts(x)
    s = as_mask(s)
    check_dims(x, g, s)
    if n_sweeps < 1:
        raise ValidationError("invalid-input", "n_sweeps must be >= 1")
    F, T = x.shape
    K = g.K
    U = column_uniforms(seed, block, T, n_sweeps * K)
    order = sweep_order(K, n_sweeps, randomize_order, RngStream(seed, ORDER_STREAM, block))
    Wt = np.ascontiguousarray(g.W.T)
    H = np.ascontiguousarray(g.H)
    lp = logit(g.pi)
    out = s.copy()
    fn = get_kernel(kernel)

    threads = max(1, min(int(threads), T))
    if threads == 1:
        fn(x, Wt, H, out, lp, U, order, 0, T)
    else:
        bounds = np.linspace(0, T, threads + 1).astype(int)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(fn, x, Wt, H, out, lp, U, order, int(a), int(b))
                       for a, b in zip(bounds[:-1], bounds[1:])]
            for fut in futures:
                fut.result()
    return out


def responsibilities(w_row, h_col, s_col) -> np.ndarray:
    """phi_ft: the share of X_ft attributed to each component (zeros if all masked)."""
    contrib = np.asarray(w_row, dtype=np.float64) * np.asarray(h_col) * np.asarray(s_col)
    total = contrib.sum()
    if total <= 0:
        return np.zeros_like(contrib)
    return contrib / total


def accumulate_phi_stats(x, g: GlobalDraw, s) -> SuffStats:
    """Sufficient statistics of E[Z | X, W, H, S] without forming Z.

    Uses ``sum_t X_ft phi_ftk = W_fk * sum_t (X_ft / rate_ft) H_kt S_kt``
    and the analogous column identity.
    """
    x = as_counts(x)
    s = as_mask(s)
    check_dims(x, g, s)
    HS = g.H * s
    rate = g.W @ HS
    pos = x > 0
    ok = pos & (rate > 0)
    ratio = np.zeros_like(rate)
    ratio[ok] = x[ok] / rate[ok]
    return SuffStats(
        expZ_rowsum=g.W * (ratio @ HS.T),
        expZ_colsum=HS * (g.W.T @ ratio),
        HS_rowsum=HS.sum(axis=1),
        W_colsum=g.W.sum(axis=0),
        S_count=s.sum(axis=1, dtype=np.int64),
        n_inconsistent=int(np.count_nonzero(pos & ~ok)),
    )
