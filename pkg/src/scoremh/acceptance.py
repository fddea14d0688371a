"""Acceptance functions for Metropolis-Hastings: the exact density ratio,
a learned network trained by score balance matching, and Taylor-expansion
approximations that need only the score.

Gradient layout convention: every `grad_log_accept(first, second)` returns an
(n, 2d) array whose columns [0, d) differentiate in the first argument and
[d, 2d) in the second, matching the network input concat order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import autodiff as ad
from .datasets import AnalyticTarget
from .errors import ArgumentError, SupportError, TrainingError
from .nets import AcceptanceNet
from .optim import (
    DEFAULT_PARAM_CLIP,
    DEFAULT_TERM_CLIP,
    AdamState,
    adam_step,
    clip_gradients,
)
from .proposals import ProposalKernel
from .scorematch import ScoreModel


def _pair(xp, x):
    xp = np.atleast_2d(np.asarray(xp, dtype=np.float64))
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if xp.shape != x.shape:
        raise ArgumentError(f"pair shapes differ: {xp.shape} vs {x.shape}")
    return xp, x


@dataclass
class ExactAcceptance:
    """min{1, p(x') q(x|x') / (p(x) q(x'|x))}, computed in log space."""

    target: AnalyticTarget
    kernel: ProposalKernel

    def log_ratio(self, xp, x) -> np.ndarray:
        xp, x = _pair(xp, x)
        ok = self.target.in_support(x)
        if not np.all(ok):
            raise SupportError("current state outside target support")
        if not np.all(self.target.in_support(xp)):
            raise SupportError("proposed state outside target support")
        return (
            self.target.logpdf(xp)
            - self.target.logpdf(x)
            + self.kernel.log_q(x, xp)
            - self.kernel.log_q(xp, x)
        )

    def accept_prob(self, xp, x) -> np.ndarray:
        return np.exp(np.minimum(0.0, self.log_ratio(xp, x)))

    def safe_accept_prob(self, xp, x) -> np.ndarray:
        """Driver-facing variant: out-of-support proposals get probability 0
        (an out-of-support current state still raises)."""
        xp, x = _pair(xp, x)
        if not np.all(self.target.in_support(x)):
            raise SupportError("current state outside target support")
        ok = self.target.in_support(xp)
        out = np.zeros(len(xp))
        if np.any(ok):
            out[ok] = np.exp(
                np.minimum(
                    0.0,
                    self.target.logpdf(xp[ok])
                    - self.target.logpdf(x[ok])
                    + self.kernel.log_q(x[ok], xp[ok])
                    - self.kernel.log_q(xp[ok], x[ok]),
                )
            )
        return out

    def grad_log_accept(self, first, second) -> np.ndarray:
        """Gradient of log min{1, r}; zero on the branch where r >= 1."""
        first, second = _pair(first, second)
        g = self.kernel.grad_log_q_pair(second, first)
        dfirst = self.target.score(first) + g.rev_dxp - g.fwd_dxp
        dsecond = -self.target.score(second) + g.rev_dx - g.fwd_dx
        mask = (self.log_ratio(first, second) < 0.0)[:, None]
        return mask * np.concatenate([dfirst, dsecond], axis=1)

    __call__ = accept_prob


def exact_acceptance(target: AnalyticTarget, kernel: ProposalKernel, xp, x) -> np.ndarray:
    return ExactAcceptance(target, kernel).accept_prob(xp, x)


@dataclass
class LearnedAcceptance:
    """Network acceptance used directly (no min clamp): training targets the
    balance condition itself, so the raw network value is the probability."""

    net: AcceptanceNet
    kernel: Optional[ProposalKernel] = None

    def accept_prob(self, xp, x) -> np.ndarray:
        return self.net.prob(xp, x)

    def grad_log_accept(self, first, second) -> np.ndarray:
        return self.net.value_log_accept_grad(first, second)

    __call__ = accept_prob


@dataclass
class ScaledAcceptance:
    """a / M wrapper; keeps the balance condition while shrinking rates."""

    base: object
    factor: float

    def accept_prob(self, xp, x) -> np.ndarray:
        return self.base.accept_prob(xp, x) / self.factor

    def safe_accept_prob(self, xp, x) -> np.ndarray:
        inner = getattr(self.base, "safe_accept_prob", self.base.accept_prob)
        return inner(xp, x) / self.factor

    def grad_log_accept(self, first, second) -> np.ndarray:
        # log(a / M) differs from log a by a constant
        return self.base.grad_log_accept(first, second)

    __call__ = accept_prob


TAYLOR_VARIANTS = ("taylor1", "taylor1_avg", "taylor2", "taylor2_avg")


def taylor_log_ratio(
    score: ScoreModel,
    kernel: ProposalKernel,
    xp,
    x,
    variant: str = "taylor1_avg",
    hessian_mode: str = "fd",
) -> np.ndarray:
    """Log acceptance ratio from a Taylor expansion of the log-density
    difference, plus the exact proposal correction."""
    if variant not in TAYLOR_VARIANTS:
        raise ArgumentError(f"unknown Taylor variant {variant!r}")
    xp, x = _pair(xp, x)
    tau = xp - x
    s_x = score(x)
    if variant == "taylor1":
        dlp = np.sum(s_x * tau, axis=1)
    elif variant == "taylor1_avg":
        dlp = 0.5 * np.sum((s_x + score(xp)) * tau, axis=1)
    else:
        hess_x = _hessian(score, x, hessian_mode)
        if variant == "taylor2":
            dlp = np.sum(s_x * tau, axis=1) + 0.5 * np.einsum("ni,nij,nj->n", tau, hess_x, tau)
        else:
            hess_xp = _hessian(score, xp, hessian_mode)
            dlp = 0.5 * np.sum((s_x + score(xp)) * tau, axis=1) + 0.25 * np.einsum(
                "ni,nij,nj->n", tau, hess_x - hess_xp, tau
            )
    return dlp + kernel.log_q(x, xp) - kernel.log_q(xp, x)


def _hessian(score: ScoreModel, x: np.ndarray, mode: str) -> np.ndarray:
    if mode == "autodiff":
        return score.jacobian(x)
    if mode != "fd":
        raise ArgumentError(f"unknown hessian mode {mode!r}")
    h = 1e-4
    n, d = x.shape
    out = np.empty((n, d, d))
    for j in range(d):
        e = np.zeros((n, d))
        e[:, j] = h
        out[:, :, j] = (score(x + e) - score(x - e)) / (2 * h)
    return out


@dataclass
class TaylorAcceptance:
    """min{1, exp(taylor log-ratio)} acceptance built from a score model."""

    score: ScoreModel
    kernel: ProposalKernel
    variant: str = "taylor1_avg"
    hessian_mode: str = "fd"

    def log_ratio(self, xp, x) -> np.ndarray:
        return taylor_log_ratio(self.score, self.kernel, xp, x, self.variant, self.hessian_mode)

    def accept_prob(self, xp, x) -> np.ndarray:
        return np.exp(np.minimum(0.0, self.log_ratio(xp, x)))

    __call__ = accept_prob


# ---------------------------------------------------------------------------
# score balance matching


@dataclass
class SBMConfig:
    """Acceptance-network training configuration."""

    lam: float = 2.0
    epochs: int = 1000
    lr: float = 5e-4
    batch_size: int = 128
    hidden: int = 256
    n_blocks: int = 3
    alpha_start: float = 0.1
    alpha_end: float = 1.0
    clip: float = DEFAULT_TERM_CLIP
    param_clip: float = DEFAULT_PARAM_CLIP
    seed: int = 0
    pairing: str = "elementwise"  # or "cartesian"

    def __post_init__(self):
        if self.lam < 0:
            raise ArgumentError("entropy weight must be >= 0")
        if not (0.0 <= self.alpha_start <= self.alpha_end <= 1.0):
            raise ArgumentError("alpha schedule must be non-decreasing within [0, 1]")
        if self.pairing not in ("elementwise", "cartesian"):
            raise ArgumentError(f"unknown pairing {self.pairing!r}")

    def alphas(self) -> np.ndarray:
        if self.epochs <= 1:
            return np.full(max(self.epochs, 1), self.alpha_end)
        return np.linspace(self.alpha_start, self.alpha_end, self.epochs)


def sbm_residual(model, score: ScoreModel, kernel: ProposalKernel, x, xp) -> np.ndarray:
    """Balance residual at pairs (x, x'), shape (n, 2d) in (x, x') block order.

    Zero exactly when log a(x',x) - log a(x,x') matches the log target-and-
    proposal ratio up to a constant; `model` is anything exposing
    grad_log_accept."""
    xp, x = _pair(xp, x)
    d = x.shape[1]
    g1 = model.grad_log_accept(xp, x)  # d/d(x', x)
    g2 = model.grad_log_accept(x, xp)  # d/d(x, x')
    qg = kernel.grad_log_q_pair(x, xp)
    s_x, s_xp = score(x), score(xp)
    res_x = g1[:, d:] - g2[:, :d] + s_x - qg.rev_dx + qg.fwd_dx
    res_xp = g1[:, :d] - g2[:, d:] - s_xp - qg.rev_dxp + qg.fwd_dxp
    return np.concatenate([res_x, res_xp], axis=1)


def _sbm_loss_graph(
    net: AcceptanceNet,
    score: ScoreModel,
    kernel: ProposalKernel,
    x: np.ndarray,
    xp: np.ndarray,
    lam: float,
    clip_c: float,
):
    """Graph-valued empirical loss: mean clipped-residual norm^2 plus the
    lam-weighted negative entropy of a(x', x)."""
    d = x.shape[1]
    u1, log_a1, g1 = net.log_accept_with_grad(xp, x)
    _, _, g2 = net.log_accept_with_grad(x, xp)
    g1 = ad.clip(g1, -clip_c, clip_c)
    g2 = ad.clip(g2, -clip_c, clip_c)
    qg = kernel.grad_log_q_pair(x, xp)
    s_x = clip_gradients(score(x), clip_c)
    s_xp = clip_gradients(score(xp), clip_c)
    qg = [clip_gradients(b, clip_c) for b in qg]
    const_x = ad.constant(s_x - qg[0] + qg[2])       # -rev_dx + fwd_dx
    const_xp = ad.constant(-s_xp - qg[1] + qg[3])    # -rev_dxp + fwd_dxp
    res_x = ad.narrow(g1, 1, d, d) - ad.narrow(g2, 1, 0, d) + const_x
    res_xp = ad.narrow(g1, 1, 0, d) - ad.narrow(g2, 1, d, d) + const_xp
    balance = ad.tmean(ad.tsum(ad.square(res_x), axis=1) + ad.tsum(ad.square(res_xp), axis=1))
    if lam == 0.0:
        return balance, log_a1
    # h(a) = a log a + (1-a) log(1-a), built from the logit so both log terms
    # stay finite at extreme probabilities
    h = ad.sigmoid(u1) * log_a1 + ad.sigmoid(-u1) * ad.logsigmoid(-u1)
    return balance + lam * ad.tmean(h), log_a1


def sbm_loss(
    net: AcceptanceNet,
    score: ScoreModel,
    kernel: ProposalKernel,
    batch_x,
    batch_xp,
    lam: float = 0.0,
    clip_c: float = DEFAULT_TERM_CLIP,
) -> float:
    xp, x = _pair(batch_xp, batch_x)
    loss, _ = _sbm_loss_graph(net, score, kernel, x, xp, lam, clip_c)
    return loss.item()


def entropy_term(a) -> np.ndarray:
    """a log a + (1-a) log(1-a), elementwise, with 0 log 0 = 0."""
    a = np.asarray(a, dtype=np.float64)
    out = np.zeros_like(a)
    nz = (a > 0) & (a < 1)
    out[nz] = a[nz] * np.log(a[nz]) + (1 - a[nz]) * np.log1p(-a[nz])
    return out


@dataclass
class AcceptanceTrainResult:
    model: LearnedAcceptance
    net: AcceptanceNet
    losses: list[float] = field(default_factory=list)
    mean_acceptance: list[float] = field(default_factory=list)


def train_acceptance(
    dataset,
    score: ScoreModel,
    kernel: ProposalKernel,
    cfg: SBMConfig,
) -> AcceptanceTrainResult:
    """Fit an acceptance network by minimizing the balance loss.

    Per epoch: draw a batch x~, sample v' ~ q(.|x~) and mix x' = alpha v' +
    (1 - alpha) x~ with the epoch's alpha, then take one Adam step on the
    clipped loss over the pairs (x~, x'). Pairing each proposal with the
    point that generated it mirrors the ideal objective's expectation over
    x ~ p, x' ~ q(.|x); the "cartesian" mode instead crosses an independent
    data batch with the whole proposal batch."""
    pts = dataset.points
    rng = np.random.default_rng(cfg.seed)
    net = AcceptanceNet(dataset.dim, cfg.hidden, cfg.n_blocks, seed=cfg.seed)
    params = net.parameters()
    state = AdamState(lr=cfg.lr)
    alphas = cfg.alphas()
    result = AcceptanceTrainResult(model=LearnedAcceptance(net, kernel), net=net)
    batch = min(cfg.batch_size, len(pts))
    for epoch in range(cfg.epochs):
        bt = pts[rng.choice(len(pts), size=batch, replace=False)]
        v = kernel.propose(bt, rng)
        a_mix = alphas[epoch]
        bxp = a_mix * v + (1.0 - a_mix) * bt
        if cfg.pairing == "cartesian":
            bx = pts[rng.choice(len(pts), size=batch, replace=False)]
            x_in = np.repeat(bx, len(bxp), axis=0)
            xp_in = np.tile(bxp, (len(bx), 1))
        else:
            x_in, xp_in = bt, bxp
        loss, log_a1 = _sbm_loss_graph(net, score, kernel, x_in, xp_in, cfg.lam, cfg.clip)
        if not np.isfinite(loss.value):
            raise TrainingError(f"acceptance loss diverged at epoch {epoch}")
        ad.zero_grad(p for _, p in params)
        ad.backward(loss)
        grads = {
            name: clip_gradients(p.grad, cfg.param_clip)
            for name, p in params
            if p.grad is not None
        }
        adam_step(params, grads, state)
        result.losses.append(loss.item())
        result.mean_acceptance.append(float(np.exp(log_a1.value).mean()))
    return result


def mean_grid_acceptance(
    model,
    x_fixed,
    bounds: tuple[tuple[float, float], tuple[float, float]] = ((-1.5, 2.25), (-1.0, 1.5)),
    grid: int = 40,
) -> float:
    """Mean acceptance a(x', x_fixed) over a uniform rectangular grid of x'."""
    (x_lo, x_hi), (y_lo, y_hi) = bounds
    gx, gy = np.meshgrid(np.linspace(x_lo, x_hi, grid), np.linspace(y_lo, y_hi, grid))
    xs = np.column_stack([gx.ravel(), gy.ravel()])
    x0 = np.broadcast_to(np.asarray(x_fixed, dtype=np.float64), xs.shape)
    return float(model.accept_prob(xs, x0).mean())
