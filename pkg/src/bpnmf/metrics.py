"""SDR / SIR / SAR from a zero-delay orthogonal decomposition.

The estimate of source ``j`` is split into

* ``s_target`` - its projection onto the true source ``j``,
* ``e_interf`` - the rest of its projection onto the span of all sources,
* ``e_artif``  - the residual, orthogonal to every source.

This is the time-invariant, zero-delay special case of the bss_eval
decomposition: no distortion filters are allowed, so scores are lower
than (and not directly comparable to) the filter-allowing toolkit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

DB_CAP = 120.0

NOTE = ("zero-delay projection variant of bss_eval (no distortion filters); "
        "absolute values are not comparable to the 512-tap toolkit")


def _as_sources(true_sources) -> np.ndarray:
    S = np.atleast_2d(np.asarray(true_sources, dtype=np.float64))
    if S.ndim != 2:
        raise ValidationError("dimension-mismatch", "sources must be a list of 1-D signals")
    return S


def decompose(estimate, true_sources, target_index: int):
    """Return ``(s_target, e_interf, e_artif)``; they sum to ``estimate``."""
    est = np.asarray(estimate, dtype=np.float64)
    S = _as_sources(true_sources)
    if est.ndim != 1 or S.shape[1] != est.shape[0]:
        raise ValidationError("dimension-mismatch", "estimate and sources must have equal length")
    if not 0 <= target_index < S.shape[0]:
        raise ValidationError("invalid-input", "target_index out of range")
    G = S @ S.T
    if np.linalg.matrix_rank(G) < S.shape[0]:
        raise ValidationError("degenerate-sources", "true sources are linearly dependent")
    target = S[target_index]
    s_target = (target @ est) / (target @ target) * target
    coef = np.linalg.solve(G, S @ est)
    proj = coef @ S
    e_interf = proj - s_target
    e_artif = est - proj
    return s_target, e_interf, e_artif


def _ratio_db(num: float, den: float, cap: float) -> float:
    if num == 0:
        return -cap
    if den == 0:
        return cap
    return float(np.clip(10.0 * np.log10(num / den), -cap, cap))


def sdr_sir_sar(decomposition, cap: float = DB_CAP):
    s_target, e_interf, e_artif = decomposition
    t = float(np.dot(s_target, s_target))
    i = float(np.dot(e_interf, e_interf))
    a = float(np.dot(e_artif, e_artif))
    noise = e_interf + e_artif
    sdr = _ratio_db(t, float(np.dot(noise, noise)), cap)
    sir = _ratio_db(t, i, cap)
    ti = s_target + e_interf
    sar = _ratio_db(float(np.dot(ti, ti)), a, cap)
    return sdr, sir, sar


def _stderr(v: np.ndarray) -> float:
    return float(np.std(v, ddof=1) / np.sqrt(len(v))) if len(v) > 1 else 0.0


@dataclass(frozen=True)
class EvalResult:
    sdr: np.ndarray
    sir: np.ndarray
    sar: np.ndarray

    def mean(self):
        return float(self.sdr.mean()), float(self.sir.mean()), float(self.sar.mean())

    def stderr(self):
        return _stderr(self.sdr), _stderr(self.sir), _stderr(self.sar)

    def rows(self, names=None):
        """Table rows: one per source, then ``mean`` and ``stderr``."""
        names = names or [f"source{j}" for j in range(len(self.sdr))]
        rows = [(n, float(a), float(b), float(c)) for n, a, b, c in zip(names, self.sdr, self.sir, self.sar)]
        rows.append(("mean", *self.mean()))
        rows.append(("stderr", *self.stderr()))
        return rows


def evaluate(estimates, references, cap: float = DB_CAP) -> EvalResult:
    """Score estimate ``j`` against reference ``j`` for every source."""
    S = _as_sources(references)
    E = _as_sources(estimates)
    if E.shape != S.shape:
        raise ValidationError("dimension-mismatch", f"estimates {E.shape} vs references {S.shape}")
    scores = np.array([sdr_sir_sar(decompose(E[j], S, j), cap) for j in range(S.shape[0])])
    return EvalResult(sdr=scores[:, 0], sir=scores[:, 1], sar=scores[:, 2])
