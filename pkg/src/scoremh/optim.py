"""Adam optimizer and gradient clipping."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tensor
from .errors import ArgumentError, TrainingError

# Element-wise clamp thresholds; score/log-density blocks tolerate larger
# magnitudes than raw parameter gradients.
DEFAULT_TERM_CLIP = 100.0
DEFAULT_PARAM_CLIP = 10.0


def clip_gradients(g: np.ndarray, c: float) -> np.ndarray:
    """Element-wise clamp of g into [-c, c]."""
    if c <= 0:
        raise ArgumentError(f"clip threshold must be positive, got {c}")
    return np.clip(g, -c, c)


@dataclass
class AdamState:
    """Per-parameter first/second moment accumulators."""

    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(
    params: list[tuple[str, Tensor]],
    grads: dict[str, np.ndarray],
    state: AdamState,
) -> AdamState:
    """One Adam update, in place on the parameter tensors."""
    state.step += 1
    t = state.step
    bc1 = 1.0 - state.beta1**t
    bc2 = 1.0 - state.beta2**t
    for name, p in params:
        g = grads.get(name)
        if g is None:
            continue
        if not np.all(np.isfinite(g)):
            raise TrainingError(f"non-finite gradient for parameter {name!r}")
        m = state.m.get(name)
        if m is None:
            m = np.zeros_like(p.value)
            state.m[name] = m
            state.v[name] = np.zeros_like(p.value)
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p.value -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return state
