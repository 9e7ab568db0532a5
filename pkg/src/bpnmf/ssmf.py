"""Stochastic structured mean-field inference (the SSMF-A variant).

Each iteration samples (W, H, pi) from q, resamples the mask with the
collapsed Gibbs sweep, and moves every variational parameter toward its
conjugate target by a convex step of size ``i ** -kappa``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, ValidationError
from .mask import DEFAULT_SWEEPS, accumulate_phi_stats, get_kernel, sweep_mask
from .model import (
    DEFAULT_PI_THRESHOLD,
    FitReport,
    GlobalDraw,
    Hyperparams,
    SuffStats,
    VariationalParams,
    active_components,
    as_mask,
    surrogate_loglik,
    validate_model,
)
from .rng import GLOBAL_STREAM, INIT_STREAM, RngStream, draw_beta, draw_gamma
from . import mask as _mask


@dataclass(frozen=True)
class SsmfConfig:
    max_iters: int = 300
    step_exponent: float = 0.5
    inner_sweeps: int = DEFAULT_SWEEPS
    seed: int = 0
    pi_threshold: float = DEFAULT_PI_THRESHOLD
    checkpoint_every: int = 0
    randomize_order: bool = False
    threads: int = 1
    kernel: str | None = None
    final_sweeps: int = 10

    def __post_init__(self):
        if self.max_iters < 0:
            raise ValidationError("invalid-config", "max_iters must be >= 0")
        if not 0 < self.step_exponent <= 1:
            raise ValidationError("invalid-config", "step_exponent must lie in (0, 1]")
        if self.inner_sweeps < 1 or self.final_sweeps < 1:
            raise ValidationError("invalid-config", "sweep counts must be >= 1")
        if not 0 < self.pi_threshold < 1:
            raise ValidationError("invalid-config", "pi_threshold must lie in (0, 1)")
        if self.checkpoint_every < 0 or self.threads < 1:
            raise ValidationError("invalid-config", "checkpoint_every >= 0 and threads >= 1 required")


def step_size(i: int, kappa: float = 0.5) -> float:
    if i < 1:
        raise ValidationError("invalid-input", "iteration index starts at 1")
    return float(i) ** -kappa


def init_params(h: Hyperparams, F: int, T: int, seed: int) -> VariationalParams:
    """Near-prior start: Gamma shapes and rates jittered by Uniform(0.9, 1.1)."""
    r = RngStream(seed, INIT_STREAM)
    jitter = lambda shape: r.generator.uniform(0.9, 1.1, size=shape)  # noqa: E731
    K = h.K
    return VariationalParams(
        nuW=h.a * jitter((F, K)),
        rhoW=h.b * jitter((F, K)),
        nuH=h.c * jitter((K, T)),
        rhoH=h.d * jitter((K, T)),
        alphaPi=np.full(K, h.pi_alpha),
        betaPi=np.full(K, h.pi_beta),
    )


def draw_globals(q: VariationalParams, r: RngStream) -> GlobalDraw:
    return GlobalDraw(
        W=draw_gamma(r, q.nuW, q.rhoW),
        H=draw_gamma(r, q.nuH, q.rhoH),
        pi=draw_beta(r, q.alphaPi, q.betaPi),
    )


def conjugate_targets(stats: SuffStats, s, h: Hyperparams) -> dict:
    """Targets of the six updates: the complete-conditional parameters."""
    s = as_mask(s)
    F = stats.expZ_rowsum.shape[0]
    T = s.shape[1]
    return {
        "nuW": h.a + stats.expZ_rowsum,
        "rhoW": np.broadcast_to(h.b + stats.HS_rowsum, (F, h.K)),
        "nuH": h.c + stats.expZ_colsum,
        "rhoH": h.d + s * stats.W_colsum[:, None],
        "alphaPi": h.pi_alpha + stats.S_count,
        "betaPi": h.pi_beta + T - stats.S_count,
    }


def ssmf_update(q: VariationalParams, stats: SuffStats, s, g: GlobalDraw,
                h: Hyperparams, eta: float) -> VariationalParams:
    """Convex step ``(1 - eta) * old + eta * target`` on all six arrays.

    ``g`` is the draw that produced ``stats`` (its column sums are already
    folded into them); it is accepted for the dimension check.
    """
    if not 0 < eta <= 1:
        raise ValidationError("invalid-input", "step size must lie in (0, 1]")
    if g.W.shape != q.nuW.shape or g.H.shape != q.nuH.shape:
        raise ValidationError("dimension-mismatch", "draw and variational parameters disagree")
    targets = conjugate_targets(stats, s, h)
    new = {name: (1.0 - eta) * old + eta * targets[name] for name, old in q.as_dict().items()}
    try:
        return VariationalParams(**new)
    except ValidationError as exc:
        raise ContractViolation("positivity-lost", str(exc)) from exc


def mask_at_means(x, q: VariationalParams, seed: int, sweeps: int = 10, threads: int = 1,
                  kernel: str | None = None) -> np.ndarray:
    """Mask sampled with the globals fixed at their posterior means."""
    g = GlobalDraw(W=q.mean_W(), H=q.mean_H(), pi=np.clip(q.mean_pi(), 1e-300, 1 - 1e-16))
    s0 = np.ones(g.H.shape, dtype=np.int8)
    return sweep_mask(x, g, s0, seed, block=0, n_sweeps=sweeps, threads=threads, kernel=kernel)


def run_ssmf(x, h: Hyperparams, cfg: SsmfConfig, init: VariationalParams | None = None,
             on_checkpoint=None):
    """Fit q by SSMF-A.

    Returns ``(q, report)``.  ``report.mask`` holds a mask resampled at
    the posterior means after the last iteration (``None`` if
    ``max_iters`` is 0).  ``on_checkpoint(iteration, q)`` is called every
    ``cfg.checkpoint_every`` iterations when given.
    """
    x = validate_model(h, x)
    F, T = x.shape
    get_kernel(cfg.kernel)
    q = init if init is not None else init_params(h, F, T, cfg.seed)
    report = FitReport(algorithm="ssmf", kernel=cfg.kernel or _mask.DEFAULT_KERNEL)
    s = np.zeros((h.K, T), dtype=np.int8)
    t0 = time.perf_counter()

    for i in range(1, cfg.max_iters + 1):
        g = draw_globals(q, RngStream(cfg.seed, GLOBAL_STREAM, i))
        s = sweep_mask(x, g, s, cfg.seed, i, cfg.inner_sweeps, cfg.randomize_order,
                       cfg.threads, cfg.kernel)
        stats = accumulate_phi_stats(x, g, s)
        eta = step_size(i, cfg.step_exponent)
        q = ssmf_update(q, stats, s, g, h, eta)
        report.n_inconsistent += stats.n_inconsistent
        active = len(active_components(q.mean_pi(), cfg.pi_threshold))
        report.trace.append((i, eta, surrogate_loglik(x, g, s), active,
                             time.perf_counter() - t0))
        if on_checkpoint is not None and cfg.checkpoint_every and i % cfg.checkpoint_every == 0:
            on_checkpoint(i, q)

    report.active_count = len(active_components(q.mean_pi(), cfg.pi_threshold))
    if cfg.max_iters > 0:
        # block 0 is never used by the loop, which starts at 1
        report.mask = mask_at_means(x, q, cfg.seed, cfg.final_sweeps, cfg.threads, cfg.kernel)
    return q, report
