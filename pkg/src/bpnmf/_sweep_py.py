"""Pure-Python (numpy) mask sweep, used when the compiled kernel is absent.

Columns are conditionally independent given the globals, so instead of
looping over ``t`` this version resamples component ``k`` for every column
in ``[start, stop)`` at once.  Within a column the components are still
visited strictly in ``order``, which is what makes it equivalent to the
per-column compiled loop.
"""

import numpy as np
from scipy.special import expit


def sweep_columns(X, Wt, H, S, logit_pi, U, order, start, stop):
    """Resample ``S[:, start:stop]`` in place.

    Parameters
    ----------
    X : int64 array, shape (F, T)
    Wt : float64 array, shape (K, F)
        Transposed dictionary, ``Wt[k] = W[:, k]``.
    H : float64 array, shape (K, T)
    S : int8 array, shape (K, T)
        Mask, overwritten for the selected columns.
    logit_pi : float64 array, shape (K,)
        ``log(pi) - log(1 - pi)``.
    U : float64 array, shape (T, n_sweeps * K)
        Uniforms; column ``t`` consumes ``U[t, sweep * K + j]`` when it
        visits the ``j``-th component of a sweep.
    order : int64 array, shape (n_sweeps, K)
        Component visiting order for each sweep.
    """
    if stop <= start:
        return
    K = Wt.shape[0]
    cols = slice(start, stop)
    x = X[:, cols]
    h_all = H[:, cols]
    s = S[:, cols].astype(bool)
    positive = x > 0
    xf = x.astype(np.float64)

    for sw in range(order.shape[0]):
        h_s = np.where(s, h_all, 0.0)
        rate = Wt.T @ h_s
        n_active = s.sum(axis=0)
        for j, k in enumerate(order[sw]):
            wh = np.outer(Wt[k], h_all[k])
            on = s[k]
            n_other = n_active - on
            resid = np.where(on, rate - wh, rate)
            np.maximum(resid, 0.0, out=resid)
            resid[:, n_other == 0] = 0.0

            with np.errstate(divide="ignore", invalid="ignore"):
                gain = np.where(positive & (resid > 0), xf * np.log1p(wh / resid), 0.0)
            forced = np.any(positive & (resid == 0.0), axis=0)
            lo = logit_pi[k] + gain.sum(axis=0) - wh.sum(axis=0)
            new = forced | (U[cols, sw * K + j] < expit(lo))

            rate = np.where(new, resid + wh, resid)
            n_active = n_other + new
            s[k] = new

    S[:, cols] = s
