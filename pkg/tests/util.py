"""Shared test helpers: finite-difference oracles."""

import numpy as np


def fd_param_grad(p_value: np.ndarray, idx: int, loss_fn, h: float = 1e-5) -> float:
    """Central finite difference of loss_fn() w.r.t. one flat entry of
    p_value, restoring the original value afterwards."""
    flat = p_value.reshape(-1)
    orig = flat[idx]
    flat[idx] = orig + h
    lp = loss_fn()
    flat[idx] = orig - h
    lm = loss_fn()
    flat[idx] = orig
    return (lp - lm) / (2 * h)


def fd_input_grad(f, x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central finite difference of a scalar-per-row function over (n, d)."""
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    for j in range(x.shape[1]):
        e = np.zeros_like(x)
        e[:, j] = h
        out[:, j] = (f(x + e) - f(x - e)) / (2 * h)
    return out


def max_rel_err(a: np.ndarray, b: np.ndarray, floor: float = 1e-8) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    scale = np.maximum(np.abs(b), floor)
    return float(np.max(np.abs(a - b) / scale))
