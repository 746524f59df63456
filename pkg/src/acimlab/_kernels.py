"""Compiled stepping kernels for orbit and skew-product simulation.

Systems built from the standard branch and probability forms are encoded
into plain float arrays so the hot loops can run compiled.  The float
expressions mirror the pure-Python evaluation order exactly, which keeps
replayed orbits bit-identical across the two paths.

Map encoding, shape (K, 2, 3) with one row per branch:
    [0, exponent, 2^exponent]   slowly expanding branch x(1 + 2^a x^a)
    [1, slope, intercept]       affine branch
Probability encoding, shape (K, P, 5) per piece: [lo, hi, c0, c1, exponent];
pieces are sorted, cover [0, 1], and rows are padded by replicating the
last piece.
"""
from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _branch_value(kind: float, a: float, b: float, x: float) -> float:
    if kind == 0.0:
        v = x * (1.0 + b * x ** a)
    else:
        v = a * x + b
    if v > 1.0:
        return 1.0
    if v < 0.0:
        return 0.0
    return v


@njit(cache=True, inline="always")
def _branch_deriv(kind: float, a: float, b: float, x: float) -> float:
    if kind == 0.0:
        return 1.0 + (1.0 + a) * b * x ** a
    return a


@njit(cache=True, inline="always")
def _map_value(mp: np.ndarray, k: int, x: float) -> float:
    row = 0 if x < 0.5 else 1
    return _branch_value(mp[k, row, 0], mp[k, row, 1], mp[k, row, 2], x)


@njit(cache=True, inline="always")
def _map_deriv(mp: np.ndarray, k: int, x: float) -> float:
    row = 0 if x < 0.5 else 1
    return _branch_deriv(mp[k, row, 0], mp[k, row, 1], mp[k, row, 2], x)


@njit(cache=True, inline="always")
def _prob_value(pp: np.ndarray, k: int, x: float) -> float:
    last = pp.shape[1] - 1
    idx = last
    for i in range(pp.shape[1]):
        if x < pp[k, i, 1]:
            idx = i
            break
    c0 = pp[k, idx, 2]
    c1 = pp[k, idx, 3]
    if c1 == 0.0:
        return c0
    return c0 + c1 * x ** pp[k, idx, 4]


@njit(cache=True, nogil=True)
def orbit_kernel(x0: float, uniforms: np.ndarray, mp: np.ndarray, pp: np.ndarray,
                 states: np.ndarray, symbols: np.ndarray) -> None:
    K = mp.shape[0]
    x = x0
    states[0] = x
    for t in range(uniforms.shape[0]):
        u = uniforms[t]
        acc = 0.0
        k = K - 1
        for j in range(K):
            acc += _prob_value(pp, j, x)
            if u < acc:
                k = j
                break
        symbols[t] = k + 1
        x = _map_value(mp, k, x)
        states[t + 1] = x


@njit(cache=True, nogil=True)
def replay_kernel(x0: float, symbols: np.ndarray, mp: np.ndarray,
                  states: np.ndarray) -> None:
    x = x0
    states[0] = x
    for t in range(symbols.shape[0]):
        x = _map_value(mp, symbols[t] - 1, x)
        states[t + 1] = x


@njit(cache=True, nogil=True)
def skew_kernel(x0: float, w0: float, steps: int, mp: np.ndarray, pp: np.ndarray,
                xs: np.ndarray, ws: np.ndarray, symbols: np.ndarray) -> float:
    """Deterministic skew-product trajectory; returns the sum of the log
    horizontal derivatives along the orbit."""
    x = x0
    w = w0
    xs[0] = x
    ws[0] = w
    log_sum = 0.0
    for t in range(steps):
        p1 = _prob_value(pp, 0, x)
        if w < p1:
            k = 0
            w = w / p1
        else:
            k = 1
            w = (w - p1) / _prob_value(pp, 1, x)
        if w > 1.0:
            w = 1.0
        symbols[t] = k + 1
        log_sum += np.log(_map_deriv(mp, k, x))
        x = _map_value(mp, k, x)
        xs[t + 1] = x
        ws[t + 1] = w
    return log_sum
