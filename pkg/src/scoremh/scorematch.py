"""Score-matching objectives and the score-model training loop."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from . import autodiff as ad
from .datasets import AnalyticTarget, PointCloud
from .errors import ArgumentError, DimensionError, TrainingError
from .nets import ScoreNet
from .optim import DEFAULT_PARAM_CLIP, AdamState, adam_step, clip_gradients

MAX_EXACT_TRACE_DIM = 10


@dataclass
class ScoreModel:
    """Callable x -> estimated score, backed by a trained net or an analytic
    target's exact score."""

    backend: Union[ScoreNet, AnalyticTarget]
    dim: int

    def __call__(self, x) -> np.ndarray:
        if isinstance(self.backend, ScoreNet):
            return self.backend.value(x)
        return self.backend.score(x)

    def jacobian(self, x) -> np.ndarray:
        """(n, d, d) input Jacobian of the score."""
        if isinstance(self.backend, ScoreNet):
            return self.backend.value_jacobian(x)
        h = 1e-5
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        n, d = x.shape
        out = np.empty((n, d, d))
        for j in range(d):
            e = np.zeros((n, d))
            e[:, j] = h
            out[:, :, j] = (self.backend.score(x + e) - self.backend.score(x - e)) / (2 * h)
        return out

    @property
    def is_network(self) -> bool:
        return isinstance(self.backend, ScoreNet)


def analytic_score(target: AnalyticTarget) -> ScoreModel:
    return ScoreModel(backend=target, dim=target.dim)


@dataclass
class SMConfig:
    """Training configuration for a ScoreNet."""

    method: str = "sliced"  # hyvarinen | sliced | denoising
    epochs: int = 2000
    lr: float = 1e-3
    batch_size: int = 128
    hidden: int = 64
    dsm_sigma: Optional[float] = None  # default 0.1 * per-dim data std
    ssm_projections: int = 1
    seed: int = 0
    holdout_frac: float = 0.1
    param_clip: float = DEFAULT_PARAM_CLIP

    def __post_init__(self):
        if self.method not in ("hyvarinen", "sliced", "denoising"):
            raise ArgumentError(f"unknown score-matching method {self.method!r}")
        if self.method == "sliced" and self.ssm_projections < 1:
            raise ArgumentError("sliced score matching needs at least one projection")
        if self.method == "denoising" and self.dsm_sigma is not None and self.dsm_sigma <= 0:
            raise ArgumentError("denoising noise level must be positive")


# ---------------------------------------------------------------------------
# losses (graph-valued; call .item() for the float)


def hyvarinen_loss(net: ScoreNet, batch: np.ndarray) -> ad.Tensor:
    """Mean of 0.5 ||s(x)||^2 + tr(ds/dx), trace via one JVP per coordinate."""
    batch = np.atleast_2d(np.asarray(batch, dtype=np.float64))
    n, d = batch.shape
    if d > MAX_EXACT_TRACE_DIM:
        raise DimensionError(
            f"exact Jacobian trace limited to d <= {MAX_EXACT_TRACE_DIM}; use the sliced loss"
        )
    x = ad.constant(batch)
    out = net.forward(x)
    loss = 0.5 * ad.tsum(ad.square(out), axis=1)
    for j in range(d):
        v = np.zeros((n, d))
        v[:, j] = 1.0
        _, jv = net.jvp(x, v)
        mask = np.zeros((1, d))
        mask[0, j] = 1.0
        loss = loss + ad.tsum(jv * ad.constant(mask), axis=1)
    return ad.tmean(loss)


def sliced_loss(net: ScoreNet, batch: np.ndarray, m: int = 1, seed: int = 0) -> ad.Tensor:
    """Mean over batch and m Gaussian directions of
    0.5 ||s(x)||^2 + v^T (ds/dx) v."""
    batch = np.atleast_2d(np.asarray(batch, dtype=np.float64))
    n, d = batch.shape
    rng = np.random.default_rng(seed)
    x = ad.constant(batch)
    out = net.forward(x)
    base = 0.5 * ad.tsum(ad.square(out), axis=1)
    quad = None
    for _ in range(m):
        v = rng.standard_normal((n, d))
        _, jv = net.jvp(x, v)
        term = ad.tsum(jv * ad.constant(v), axis=1)
        quad = term if quad is None else quad + term
    return ad.tmean(base + quad * (1.0 / m))


def denoising_loss(net: ScoreNet, batch: np.ndarray, sigma, seed: int = 0) -> ad.Tensor:
    """Regression of s(x + sigma * eps) onto the conditional score
    (x - x~) / sigma^2."""
    batch = np.atleast_2d(np.asarray(batch, dtype=np.float64))
    sigma = np.asarray(sigma, dtype=np.float64)
    if np.any(sigma <= 0):
        raise ArgumentError("denoising noise level must be positive")
    rng = np.random.default_rng(seed)
    noise = sigma * rng.standard_normal(batch.shape)
    noisy = batch + noise
    target = -noise / sigma**2  # = (x - x~) / sigma^2
    out = net.forward(ad.constant(noisy))
    diff = out - ad.constant(target)
    return ad.tmean(ad.tsum(ad.square(diff), axis=1))


def _loss_for(net: ScoreNet, batch: np.ndarray, cfg: SMConfig, sigma, step_seed: int) -> ad.Tensor:
    if cfg.method == "hyvarinen":
        return hyvarinen_loss(net, batch)
    if cfg.method == "sliced":
        return sliced_loss(net, batch, m=cfg.ssm_projections, seed=step_seed)
    return denoising_loss(net, batch, sigma, seed=step_seed)


@dataclass
class ScoreTrainResult:
    model: ScoreModel
    net: ScoreNet
    losses: list[float] = field(default_factory=list)
    holdout_losses: list[float] = field(default_factory=list)


def train_score(dataset: PointCloud, cfg: SMConfig) -> ScoreTrainResult:
    """Train a ScoreNet on the dataset with Adam; one random minibatch per
    epoch, deterministic per seed."""
    rng = np.random.default_rng(cfg.seed)
    pts = dataset.points
    n = len(pts)
    n_hold = int(round(cfg.holdout_frac * n))
    perm = rng.permutation(n)
    hold, train = pts[perm[:n_hold]], pts[perm[n_hold:]]
    if len(train) == 0:
        raise ArgumentError("dataset too small for the requested holdout split")

    net = ScoreNet(dataset.dim, cfg.hidden, seed=cfg.seed)
    state = AdamState(lr=cfg.lr)
    sigma = cfg.dsm_sigma
    if cfg.method == "denoising" and sigma is None:
        sigma = 0.1 * pts.std(axis=0)

    losses: list[float] = []
    params = net.parameters()
    batch = min(cfg.batch_size, len(train))
    for epoch in range(cfg.epochs):
        idx = rng.choice(len(train), size=batch, replace=False)
        loss = _loss_for(net, train[idx], cfg, sigma, step_seed=cfg.seed * 1_000_003 + epoch)
        if not np.isfinite(loss.value):
            raise TrainingError(f"score-matching loss diverged at epoch {epoch}")
        ad.zero_grad(p for _, p in params)
        ad.backward(loss)
        grads = {
            name: clip_gradients(p.grad, cfg.param_clip)
            for name, p in params
            if p.grad is not None
        }
        adam_step(params, grads, state)
        losses.append(loss.item())

    result = ScoreTrainResult(model=ScoreModel(net, dataset.dim), net=net, losses=losses)
    if len(hold) and cfg.epochs:
        final = _loss_for(net, hold, cfg, sigma, step_seed=cfg.seed)
        result.holdout_losses.append(final.item())
    return result


def write_loss_csv(path, losses) -> None:
    with open(path, "w") as fh:
        fh.write("epoch,loss\n")
        for i, v in enumerate(losses):
            fh.write(f"{i},{v!r}\n")
