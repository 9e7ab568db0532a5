"""Systematic-scan Gibbs sampler sharing the collapsed mask sweep.

One iteration resamples S (and recomputes the responsibilities from it),
then W, then H given the freshly drawn W, then pi.  Its conditional
parameters coincide with the SSMF targets at step size 1.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .mask import DEFAULT_SWEEPS, accumulate_phi_stats, get_kernel, sweep_mask
from .model import (
    DEFAULT_PI_THRESHOLD,
    FitReport,
    GlobalDraw,
    Hyperparams,
    SuffStats,
    active_components,
    as_mask,
    surrogate_loglik,
    validate_model,
)
from .rng import GLOBAL_STREAM, INIT_STREAM, RngStream, draw_bernoulli, draw_beta, draw_gamma
from . import mask as _mask


@dataclass(frozen=True)
class GibbsConfig:
    burn_in: int = 200
    post_burn_samples: int = 1
    inner_sweeps: int = DEFAULT_SWEEPS
    seed: int = 0
    pi_threshold: float = DEFAULT_PI_THRESHOLD
    checkpoint_every: int = 0
    randomize_order: bool = False
    threads: int = 1
    kernel: str | None = None
    init_mask_prob: float = 0.5

    def __post_init__(self):
        if self.burn_in < 0 or self.post_burn_samples < 1:
            raise ValidationError("invalid-config", "burn_in >= 0 and post_burn_samples >= 1 required")
        if self.inner_sweeps < 1 or self.threads < 1 or self.checkpoint_every < 0:
            raise ValidationError("invalid-config", "inner_sweeps, threads >= 1 and checkpoint_every >= 0 required")
        if not 0 < self.pi_threshold < 1:
            raise ValidationError("invalid-config", "pi_threshold must lie in (0, 1)")
        if not 0 <= self.init_mask_prob <= 1:
            raise ValidationError("invalid-config", "init_mask_prob must lie in [0, 1]")


@dataclass(frozen=True)
class PosteriorSample:
    iteration: int
    W: np.ndarray
    H: np.ndarray
    S: np.ndarray
    pi: np.ndarray

    @property
    def activations(self) -> np.ndarray:
        return self.H * self.S


def gibbs_conditionals(stats: SuffStats, s, h: Hyperparams, W_new=None) -> dict:
    """Complete-conditional parameters, keyed like the variational arrays.

    The H rate uses the column sums of ``W_new`` (the W drawn earlier in
    the same iteration); when omitted, ``stats.W_colsum`` is used.
    """
    s = as_mask(s)
    K, T = s.shape
    F = stats.expZ_rowsum.shape[0]
    wsum = stats.W_colsum if W_new is None else np.asarray(W_new).sum(axis=0)
    n_on = stats.S_count
    return {
        "nuW": h.a + stats.expZ_rowsum,
        "rhoW": np.broadcast_to(h.b + stats.HS_rowsum, (F, K)),
        "nuH": h.c + stats.expZ_colsum,
        "rhoH": h.d + s * wsum[:, None],
        "alphaPi": h.pi_alpha + n_on,
        "betaPi": h.pi_beta + T - n_on,
    }


def gibbs_sample_globals(stats: SuffStats, s, g_prev: GlobalDraw, h: Hyperparams,
                         r: RngStream) -> GlobalDraw:
    """Draw W, then H given the new W, then pi.

    ``stats`` must come from ``accumulate_phi_stats(x, g_prev, s)``.
    """
    s = as_mask(s)
    if s.shape != g_prev.H.shape:
        raise ValidationError("dimension-mismatch", "mask and previous draw disagree")
    p = gibbs_conditionals(stats, s, h)
    W = draw_gamma(r, p["nuW"], p["rhoW"])
    p = gibbs_conditionals(stats, s, h, W_new=W)
    H = draw_gamma(r, p["nuH"], p["rhoH"])
    pi = draw_beta(r, p["alphaPi"], p["betaPi"])
    return GlobalDraw(W=W, H=H, pi=pi)


def init_state(h: Hyperparams, F: int, T: int, seed: int, mask_prob: float = 0.5):
    """Globals from the prior; mask entries on independently with ``mask_prob``."""
    r = RngStream(seed, INIT_STREAM)
    K = h.K
    g = GlobalDraw(
        W=draw_gamma(r, h.a, h.b, size=(F, K)),
        H=draw_gamma(r, h.c, h.d, size=(K, T)),
        pi=draw_beta(r, h.pi_alpha, h.pi_beta, size=K),
    )
    s = draw_bernoulli(r, mask_prob, size=(K, T))
    return g, s


def run_gibbs(x, h: Hyperparams, cfg: GibbsConfig, init=None, on_checkpoint=None):
    """Run ``burn_in + post_burn_samples`` Gibbs iterations.

    Returns ``(samples, report)``; ``samples`` holds the states after each
    post-burn-in iteration, the last of which is the one used downstream.
    Trace row 0 is the initial state.
    """
    x = validate_model(h, x)
    F, T = x.shape
    get_kernel(cfg.kernel)
    g, s = init if init is not None else init_state(h, F, T, cfg.seed, cfg.init_mask_prob)
    s = as_mask(s)
    report = FitReport(algorithm="gibbs", kernel=cfg.kernel or _mask.DEFAULT_KERNEL)
    t0 = time.perf_counter()
    report.trace.append((0, 1.0, surrogate_loglik(x, g, s),
                         len(active_components(g.pi, cfg.pi_threshold)), 0.0))
    samples = []
    n_iter = cfg.burn_in + cfg.post_burn_samples

    for i in range(1, n_iter + 1):
        s = sweep_mask(x, g, s, cfg.seed, i, cfg.inner_sweeps, cfg.randomize_order,
                       cfg.threads, cfg.kernel)
        stats = accumulate_phi_stats(x, g, s)
        report.n_inconsistent += stats.n_inconsistent
        g = gibbs_sample_globals(stats, s, g, h, RngStream(cfg.seed, GLOBAL_STREAM, i))
        active = len(active_components(g.pi, cfg.pi_threshold))
        report.trace.append((i, 1.0, surrogate_loglik(x, g, s), active, time.perf_counter() - t0))
        if i > cfg.burn_in:
            samples.append(PosteriorSample(iteration=i, W=g.W, H=g.H, S=s.copy(), pi=g.pi))
        if on_checkpoint is not None and cfg.checkpoint_every and i % cfg.checkpoint_every == 0:
            on_checkpoint(i, g, s)

    report.active_count = len(active_components(samples[-1].pi, cfg.pi_threshold))
    report.mask = samples[-1].S
    return samples, report
