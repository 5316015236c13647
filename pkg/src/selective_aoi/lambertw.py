"""Principal branch of the Lambert W function on [0, inf)."""

from __future__ import annotations

import numpy as np

MAX_ITER = 50
RESIDUAL_TOL = 1e-12


def lambert_w0(y):
    """Solve ``w * exp(w) = y`` for ``w >= 0`` by Halley iteration.

    Accepts a scalar or an array. Starts from ``log1p(y)``; iterates until
    ``|w e^w - y| <= 1e-12 * max(1, y)`` for every entry, or the update stalls
    at machine precision.
    """
    y_arr = np.asarray(y, dtype=np.float64)
    if np.any(np.isnan(y_arr)):
        raise ValueError("lambert_w0 argument is NaN")
    if np.any(y_arr < 0.0):
        raise ValueError("lambert_w0 is only defined here for y >= 0")
    if np.any(np.isinf(y_arr)):
        raise ValueError("lambert_w0 argument must be finite")

    w = np.log1p(y_arr)
    scale = np.maximum(1.0, y_arr)
    for _ in range(MAX_ITER):
        emw = np.exp(-w)
        # g = (w e^w - y) e^-w, which stays finite for y near the float limit.
        g = w - y_arr * emw
        if np.all(np.abs(g) <= RESIDUAL_TOL * scale * emw):
            break
        wp1 = w + 1.0
        # Halley step for f = w e^w - y, with numerator and denominator scaled by e^-w.
        step = g / (wp1 - 0.5 * (w + 2.0) * g / wp1)
        w_new = np.maximum(w - step, 0.0)
        if np.all(w_new == w):
            break
        w = w_new
    w = np.where(y_arr == 0.0, 0.0, w)
    if np.ndim(y) == 0:
        return float(w)
    return w


def lambert_w0_exp(log_y):
    """W(exp(log_y)) without forming exp(log_y), for arguments that would overflow."""
    t = np.asarray(log_y, dtype=np.float64)
    small = t <= 700.0
    w = np.empty_like(t)
    if np.any(small):
        w[small] = lambert_w0(np.exp(t[small]))
    big = ~small
    if np.any(big):
        tb = t[big]
        # Newton on w + log(w) = t, which is smooth and concave for w > 0.
        wb = tb - np.log(tb)
        for _ in range(MAX_ITER):
            step = (wb + np.log(wb) - tb) / (1.0 + 1.0 / wb)
            wb = wb - step
            if np.all(np.abs(step) <= 4e-16 * wb):
                break
        w[big] = wb
    if np.ndim(log_y) == 0:
        return float(w)
    return w
