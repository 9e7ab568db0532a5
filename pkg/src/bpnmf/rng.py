"""Seeded, splittable random streams and the model's variate generators.

Every stream is a counter-based Philox generator keyed by ``(seed,
stream_id)``.  A third coordinate, ``block``, selects a disjoint region of
the counter space so that iteration ``i`` of a sampler can open its own
sub-stream without consuming draws from any other iteration.  Streams
with different keys never share state, so columns of the mask can be
sampled in any order or on any number of threads with identical results.

Gamma variates use the **shape-rate** convention throughout: a
``Gamma(shape, rate)`` draw has mean ``shape / rate``.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit

from .errors import ValidationError

_U64 = (1 << 64) - 1

TINY = np.finfo(np.float64).tiny
EPS = np.finfo(np.float64).eps

# reserved stream ids; data columns use stream_id = t
GLOBAL_STREAM = _U64
INIT_STREAM = _U64 - 1
ORDER_STREAM = _U64 - 2


class RngStream:
    """Independent, reproducible stream of random variates.

    Parameters
    ----------
    seed : int
        64-bit unsigned seed.
    stream_id : int
        64-bit unsigned stream identifier.
    block : int
        Counter block; distinct blocks of the same stream do not overlap
        for any practical number of draws (2**192 per block).
    """

    __slots__ = ("seed", "stream_id", "block", "generator")

    def __init__(self, seed: int, stream_id: int = 0, block: int = 0):
        for name, val in (("seed", seed), ("stream_id", stream_id), ("block", block)):
            if not 0 <= int(val) <= _U64:
                raise ValidationError("invalid-seed", f"{name} must be a 64-bit unsigned integer")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self.block = int(block)
        key = self.seed | (self.stream_id << 64)
        bitgen = np.random.Philox(key=key, counter=[0, 0, 0, self.block])
        self.generator = np.random.Generator(bitgen)

    def substream(self, block: int) -> "RngStream":
        return RngStream(self.seed, self.stream_id, block)

    def uniform(self, size=None):
        return self.generator.random(size)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id}, block={self.block})"


def _check_positive(name, value):
    arr = np.asarray(value, dtype=np.float64)
    if not np.all(arr > 0):
        raise ValidationError("nonpositive-parameter", f"{name} must be strictly positive")
    return arr


def draw_gamma(r: RngStream, shape, rate, size=None):
    """Gamma(shape, rate) variates with mean ``shape / rate``.

    Results are clamped below at the smallest positive normal double so
    that downstream logarithms stay finite.
    """
    shape = _check_positive("shape", shape)
    rate = _check_positive("rate", rate)
    out = r.generator.standard_gamma(shape, size=size) / rate
    return np.maximum(out, TINY) if np.ndim(out) else max(float(out), TINY)


def log_gamma_variate(r: RngStream, shape, size=None):
    """Logarithm of a unit-rate Gamma(shape) variate.

    Uses ``G(a) = G(a + 1) * U**(1/a)`` so that very small shapes do not
    underflow before the log is taken.
    """
    shape = _check_positive("shape", shape)
    g = r.generator.standard_gamma(shape + 1.0, size=size)
    u = r.generator.random(size=np.shape(g) if size is None else size)
    return np.log(g) + np.log(u) / shape


def draw_beta(r: RngStream, alpha, beta, size=None):
    """Beta(alpha, beta) variates, strictly inside (0, 1).

    Built from the log-ratio of two Gamma variates so that shapes such as
    ``a0 / K = 0.002`` do not underflow inside the sampler.  Results are
    clamped to ``[eps, 1 - eps]``, machine epsilon from either endpoint.
    """
    alpha = _check_positive("alpha", alpha)
    beta = _check_positive("beta", beta)
    if size is None:
        size = np.broadcast(alpha, beta).shape or None
    la = log_gamma_variate(r, alpha, size=size)
    lb = log_gamma_variate(r, beta, size=size)
    out = np.clip(expit(la - lb), EPS, 1.0 - EPS)
    return out if np.ndim(out) else float(out)


def draw_bernoulli(r: RngStream, p, size=None):
    p_arr = np.asarray(p, dtype=np.float64)
    if not np.all((p_arr >= 0) & (p_arr <= 1)):
        raise ValidationError("out-of-range-probability", "p must lie in [0, 1]")
    if size is None:
        size = p_arr.shape or None
    out = (r.generator.random(size) < p_arr).astype(np.int8)
    return out if np.ndim(out) else int(out)


def draw_poisson(r: RngStream, rate, size=None):
    rate_arr = np.asarray(rate, dtype=np.float64)
    if not np.all(rate_arr >= 0):
        raise ValidationError("negative-rate", "Poisson rate must be non-negative")
    out = np.asarray(r.generator.poisson(rate_arr, size=size), dtype=np.int64)
    return out if np.ndim(out) else int(out)
