# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled collapsed-Gibbs sweep over mask columns.

Same contract as ``bpnmf._sweep_py.sweep_columns``; see there.
"""

import numpy as np

from libc.math cimport exp, log1p, INFINITY
from libc.stdint cimport int64_t, int8_t


cdef inline double _prob_on(double lo) noexcept nogil:
    cdef double e
    if lo >= 0:
        return 1.0 / (1.0 + exp(-lo))
    e = exp(lo)
    return e / (1.0 + e)


def sweep_columns(const int64_t[:, ::1] X, const double[:, ::1] Wt,
                  const double[:, ::1] H, int8_t[:, ::1] S,
                  const double[::1] logit_pi, const double[:, ::1] U,
                  const int64_t[:, ::1] order, Py_ssize_t start, Py_ssize_t stop):
    cdef Py_ssize_t F = X.shape[0]
    cdef Py_ssize_t K = Wt.shape[0]
    cdef Py_ssize_t n_sweeps = order.shape[0]
    cdef double[::1] rate = np.empty(F)
    cdef double[::1] resid = np.empty(F)
    cdef int64_t[::1] xcol = np.empty(F, dtype=np.int64)
    cdef Py_ssize_t t, sw, j, k, f, n_active, n_other
    cdef int on, new, forced
    cdef double h, wh, r, lo
    cdef int64_t xf

    with nogil:
        for t in range(start, stop):
            # X is row-major, so copy the column once instead of striding
            for f in range(F):
                xcol[f] = X[f, t]
            for sw in range(n_sweeps):
                # rebuild the rate from scratch once per sweep to bound drift
                for f in range(F):
                    rate[f] = 0.0
                n_active = 0
                for k in range(K):
                    if S[k, t]:
                        n_active += 1
                        h = H[k, t]
                        for f in range(F):
                            rate[f] += Wt[k, f] * h

                for j in range(K):
                    k = order[sw, j]
                    h = H[k, t]
                    on = S[k, t]
                    n_other = n_active - on
                    lo = logit_pi[k]
                    forced = 0
                    for f in range(F):
                        wh = Wt[k, f] * h
                        if n_other == 0:
                            r = 0.0
                        else:
                            r = rate[f] - wh if on else rate[f]
                            if r < 0.0:
                                r = 0.0
                        resid[f] = r
                        lo -= wh
                        xf = xcol[f]
                        if xf > 0:
                            if r > 0.0:
                                lo += xf * log1p(wh / r)
                            else:
                                forced = 1
                    if forced:
                        new = 1
                    else:
                        new = U[t, sw * K + j] < _prob_on(lo)
                    if new:
                        for f in range(F):
                            rate[f] = resid[f] + Wt[k, f] * h
                    else:
                        for f in range(F):
                            rate[f] = resid[f]
                    n_active = n_other + new
                    S[k, t] = new
