"""Brute-force reference computations, independent of the package internals."""

import itertools
from math import factorial, lgamma

import numpy as np
from scipy.special import betaln, roots_genlaguerre
from scipy.stats import poisson


def mask_conditional_bruteforce(x_col, W, h_col, s_col, pi, k):
    """P(S_kt = 1 | rest) from full Poisson pmfs of the whole column."""
    s1 = np.array(s_col, dtype=float)
    s0 = s1.copy()
    s1[k], s0[k] = 1.0, 0.0
    lam1 = W @ (h_col * s1)
    lam0 = W @ (h_col * s0)
    p1 = pi[k] * np.prod(poisson.pmf(x_col, lam1))
    p0 = (1 - pi[k]) * np.prod(poisson.pmf(x_col, lam0))
    return p1 / (p1 + p0)


def _compositions(n, parts):
    """All ways to write n as an ordered sum of ``parts`` non-negative integers."""
    if parts == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in _compositions(n - first, parts - 1):
            yield (first,) + rest


def _component_integral(a, b, c, d, s_k, z_k, n_nodes):
    """Integral over (W_{.k}, H_{k.}) of the prior times the Poisson terms for Z.

    W_fk is integrated analytically; each H_kt by generalized Gauss-Laguerre
    quadrature against its Gamma(c + m_kt, d) kernel.
    z_k has shape (F, T).
    """
    F, T = z_k.shape
    zf = z_k.sum(axis=1)
    m = z_k.sum(axis=0)
    nodes, weights = [], []
    log_const = 0.0
    for t in range(T):
        x, w = roots_genlaguerre(n_nodes, c - 1 + m[t])
        nodes.append(x / d)
        weights.append(w)
        # Gamma(c, d) normalizer times the change of variables x = d H
        log_const += c * np.log(d) - lgamma(c) - (c + m[t]) * np.log(d)
    for f in range(F):
        log_const += a * np.log(b) - lgamma(a) + lgamma(a + zf[f])
    total = 0.0
    for idx in itertools.product(range(n_nodes), repeat=T):
        hs = sum(nodes[t][idx[t]] * s_k[t] for t in range(T))
        val = np.prod([weights[t][idx[t]] for t in range(T)])
        val *= np.prod([(b + hs) ** -(a + zf[f]) for f in range(F)])
        total += val
    return np.exp(log_const) * total


def enumerate_mask_posterior(X, a, b, c, d, a0, b0, K, n_nodes=60):
    """Exact p(S | X) over all 2**(K*T) masks, globals integrated out.

    The Poisson sum is expanded over the auxiliary counts Z.
    """
    X = np.asarray(X, dtype=int)
    F, T = X.shape
    al, be = a0 / K, b0 * (K - 1) / K
    states, post = [], []
    for bits in itertools.product((0, 1), repeat=K * T):
        S = np.array(bits).reshape(K, T)
        n = S.sum(axis=1)
        log_prior = sum(betaln(al + n[k], be + T - n[k]) - betaln(al, be) for k in range(K))
        # enumerate every split of each X_ft among the components on at t
        cells = [(f, t) for f in range(F) for t in range(T)]
        options = []
        for f, t in cells:
            on = np.flatnonzero(S[:, t])
            if X[f, t] > 0 and len(on) == 0:
                options = None
                break
            splits = []
            for comp in _compositions(X[f, t], max(len(on), 1)):
                z = np.zeros(K, dtype=int)
                if len(on):
                    z[on] = comp
                splits.append(z)
            options.append(splits)
        like = 0.0
        if options is not None:
            for choice in itertools.product(*options):
                Z = np.zeros((F, T, K), dtype=int)
                for (f, t), z in zip(cells, choice):
                    Z[f, t] = z
                term = 1.0 / np.prod([factorial(v) for v in Z.ravel()])
                for k in range(K):
                    term *= _component_integral(a, b, c, d, S[k], Z[:, :, k], n_nodes)
                like += term
        states.append(S)
        post.append(np.exp(log_prior) * like)
    post = np.array(post)
    return states, post / post.sum()
