"""Vectorized grid-then-golden-section search on per-row intervals.

All optimizers in the package share this routine: each row of the problem is
an independent 1-D search over [lo_i, hi_i].  A coarse uniform grid locates the
best cell (the objectives are not assumed unimodal), optional zoom passes
re-grid around it, and golden-section steps sharpen the result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class SearchResult:
    x: np.ndarray
    value: np.ndarray
    at_lo: np.ndarray
    at_hi: np.ndarray
    rising_at_hi: np.ndarray  # objective still improving at the right edge


def _best(vals, sign, last=False):
    v = np.where(np.isnan(vals), -np.inf, sign * vals)
    if last:
        return v.shape[1] - 1 - np.argmax(v[:, ::-1], axis=1)
    return np.argmax(v, axis=1)


def grid_search(f, lo, hi, *, maximize: bool, n_grid: int = 256, n_golden: int = 40,
                zoom: int = 0, zoom_points: int = 64, tol_x: float = 0.0,
                prefer_last: bool = False) -> SearchResult:
    """Optimize ``f`` independently on each row interval [lo_i, hi_i].

    ``f`` receives an array of shape (n, m) of abscissae and must return values
    of the same shape; row i only ever sees points inside [lo_i, hi_i].
    """
    lo = np.atleast_1d(np.asarray(lo, float))
    hi = np.atleast_1d(np.asarray(hi, float))
    n = lo.size
    sign = 1.0 if maximize else -1.0
    rows = np.arange(n)

    theta = np.linspace(0.0, 1.0, n_grid)
    X = lo[:, None] + (hi - lo)[:, None] * theta
    X[:, -1] = hi
    V = f(X)
    k = _best(V, sign, prefer_last)
    best_x = X[rows, k]
    best_v = V[rows, k]
    at_lo = k == 0
    at_hi = k == n_grid - 1
    with np.errstate(invalid="ignore"):
        rising = sign * (V[:, -1] - V[:, -2]) > 0

    a = X[rows, np.maximum(k - 1, 0)]
    b = X[rows, np.minimum(k + 1, n_grid - 1)]
    for _ in range(zoom):
        za = X[rows, np.maximum(k - 2, 0)]
        zb = X[rows, np.minimum(k + 2, X.shape[1] - 1)]
        th = np.linspace(0.0, 1.0, zoom_points)
        X = za[:, None] + (zb - za)[:, None] * th
        V = f(X)
        k = _best(V, sign, prefer_last)
        cand_x = X[rows, k]
        cand_v = V[rows, k]
        better = sign * cand_v > sign * best_v
        best_x = np.where(better, cand_x, best_x)
        best_v = np.where(better, cand_v, best_v)
        a = X[rows, np.maximum(k - 1, 0)]
        b = X[rows, np.minimum(k + 1, zoom_points - 1)]

    c = b - INVPHI * (b - a)
    d = a + INVPHI * (b - a)
    fc = f(c[:, None])[:, 0]
    fd = f(d[:, None])[:, 0]
    for _ in range(n_golden):
        if tol_x > 0 and np.all(b - a <= tol_x * (1.0 + np.abs(a))):
            break
        left = sign * fc >= sign * fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        d_new = np.where(left, c, a + INVPHI * (b - a))
        c_new = np.where(left, b - INVPHI * (b - a), d)
        fd_new = np.where(left, fc, np.nan)
        fc_new = np.where(left, np.nan, fd)
        need = np.where(left, c_new, d_new)
        fn = f(need[:, None])[:, 0]
        fc = np.where(left, fn, fc_new)
        fd = np.where(left, fd_new, fn)
        c, d = c_new, d_new
        for cx, cv in ((c, fc), (d, fd)):
            better = sign * cv > sign * best_v
            best_x = np.where(better, cx, best_x)
            best_v = np.where(better, cv, best_v)
    return SearchResult(best_x, best_v, at_lo, at_hi, rising)
