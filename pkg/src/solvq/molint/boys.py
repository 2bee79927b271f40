"""Boys function F_n(T) = int_0^1 t^(2n) exp(-T t^2) dt, vectorized over T."""

import numpy as np
from scipy.special import erf

_SERIES_MAX_T = 30.0
_SERIES_TERMS = 160


def boys(n_max: int, t) -> np.ndarray:
    """Return ``F_0 .. F_{n_max}`` evaluated at ``t``; result has shape ``t.shape + (n_max + 1,)``.

    Small arguments use the convergent series for the highest order followed by
    downward recursion; large arguments start from the erf closed form for F_0 and
    recurse upward, which is stable there.
    """
    t = np.asarray(t, dtype=float)
    out = np.empty(t.shape + (n_max + 1,))
    small = t < _SERIES_MAX_T
    if np.any(small):
        ts = t[small]
        # F_n(T) = exp(-T) * sum_k (2T)^k / ((2n+1)(2n+3)...(2n+2k+1))
        term = np.full(ts.shape, 1.0 / (2 * n_max + 1))
        total = term.copy()
        for k in range(1, _SERIES_TERMS):
            term = term * (2.0 * ts) / (2 * n_max + 2 * k + 1)
            total += term
            if np.all(term < 1e-17 * total):
                break
        ex = np.exp(-ts)
        fs = np.empty(ts.shape + (n_max + 1,))
        fs[..., n_max] = ex * total
        for n in range(n_max, 0, -1):
            fs[..., n - 1] = (2.0 * ts * fs[..., n] + ex) / (2 * n - 1)
        out[small] = fs
    large = ~small
    if np.any(large):
        tl = t[large]
        ex = np.exp(-tl)
        fl = np.empty(tl.shape + (n_max + 1,))
        fl[..., 0] = 0.5 * np.sqrt(np.pi / tl) * erf(np.sqrt(tl))
        for n in range(n_max):
            fl[..., n + 1] = ((2 * n + 1) * fl[..., n] - ex) / (2.0 * tl)
        out[large] = fl
    return out
