"""Exact proximal operator of 1D anisotropic total variation."""

import numpy as np


def tv_variation(x) -> float:
    """``sum_j |x[j+1] - x[j]|``."""
    return float(np.sum(np.abs(np.diff(x))))


def tv1d_denoise(y, lam: float) -> np.ndarray:
    """Solve ``argmin_x 0.5 * ||x - y||^2 + lam * sum_j |x[j+1] - x[j]|``.

    Uses Condat's direct (taut-string-like) algorithm, which is exact and
    runs in linear time in practice.

    Parameters
    ----------
    y : array_like, shape (n,)
        Signal to denoise.
    lam : float
        Non-negative regularisation weight.

    Returns
    -------
    x : ndarray, shape (n,)
    """
    y = np.asarray(y, dtype=np.float64)
    n = y.shape[0]
    if lam < 0:
        raise ValueError("lam must be non-negative")
    if n == 0 or lam == 0:
        return y.copy()
    # plain Python floats and lists are much faster than numpy scalars here
    inp = y.tolist()
    out = [0.0] * n
    last = n - 1
    k = k0 = kplus = kminus = 0
    umin, umax = lam, -lam
    vmin, vmax = inp[0] - lam, inp[0] + lam
    twolam = 2.0 * lam
    while True:
        while k == last:
            if umin < 0.0:
                while k0 <= kminus:
                    out[k0] = vmin
                    k0 += 1
                kminus = k = k0
                vmin = inp[k0]
                umin = lam
                umax = vmin + umin - vmax
            elif umax > 0.0:
                while k0 <= kplus:
                    out[k0] = vmax
                    k0 += 1
                kplus = k = k0
                vmax = inp[k0]
                umax = -lam
                umin = vmax + umax - vmin
            else:
                vmin += umin / (k - k0 + 1)
                while k0 <= k:
                    out[k0] = vmin
                    k0 += 1
                return np.array(out)
        umin += inp[k + 1] - vmin
        if umin < -lam:
            while k0 <= kminus:
                out[k0] = vmin
                k0 += 1
            kplus = kminus = k = k0
            vmin = inp[k0]
            vmax = vmin + twolam
            umin, umax = lam, -lam
            continue
        umax += inp[k + 1] - vmax
        if umax > lam:
            while k0 <= kplus:
                out[k0] = vmax
                k0 += 1
            kplus = kminus = k = k0
            vmax = inp[k0]
            vmin = vmax - twolam
            umin, umax = lam, -lam
            continue
        k += 1
        if umin >= lam:
            kminus = k
            vmin += (umin - lam) / (kminus - k0 + 1)
            umin = lam
        if umax <= -lam:
            kplus = k
            vmax += (umax + lam) / (kplus - k0 + 1)
            umax = -lam


def prox_tv_nonneg(v, lam: float) -> np.ndarray:
    """Prox of ``lam * TV + indicator(x >= 0)``.

    For 1D TV the prox of the sum factors as clipping the TV prox, since
    clipping at zero never increases the variation of a sequence.
    """
    return np.maximum(tv1d_denoise(v, lam), 0.0)
