"""Sample-quality metrics: exact-assignment Wasserstein distances, MMD with
a Gaussian kernel, mixture-weight estimation, and KS statistics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from .datasets import PointCloud
from .errors import ArgumentError, DimensionError


def _points(cloud) -> np.ndarray:
    if isinstance(cloud, PointCloud):
        return cloud.points
    x = np.asarray(cloud, dtype=np.float64)
    return x[:, None] if x.ndim == 1 else x


def _subsample(x: np.ndarray, n_eval: Optional[int], rng: np.random.Generator) -> np.ndarray:
    if n_eval is None or n_eval >= len(x):
        return x
    return x[rng.choice(len(x), size=n_eval, replace=False)]


def wasserstein(
    p_cloud,
    q_cloud,
    order: int = 1,
    n_eval: Optional[int] = 1000,
    seed: int = 0,
    squared: bool = False,
) -> float:
    """Order-1/2 transport distance between equal-size subsamples via the
    exact assignment problem; `squared` reports the order-2 cost without the
    final root (an alternative W2 reporting convention)."""
    x, y = _points(p_cloud), _points(q_cloud)
    if len(x) == 0 or len(y) == 0:
        raise ArgumentError("empty point cloud")
    if x.shape[1] != y.shape[1]:
        raise DimensionError(f"cloud dims differ: {x.shape[1]} vs {y.shape[1]}")
    if order not in (1, 2):
        raise ArgumentError("order must be 1 or 2")
    rng = np.random.default_rng(seed)
    n = min(len(x), len(y), n_eval or min(len(x), len(y)))
    xs = _subsample(x, n, rng)
    ys = _subsample(y, n, rng)
    cost = cdist(xs, ys, metric="euclidean")
    if order == 2:
        cost = cost**2
    rows, cols = linear_sum_assignment(cost)
    total = float(cost[rows, cols].sum()) / n
    if order == 1:
        return total
    return total if squared else float(np.sqrt(total))


def mmd(
    p_cloud,
    q_cloud,
    bandwidth: Union[str, float] = "auto",
    n_eval: Optional[int] = 1000,
    seed: int = 0,
) -> float:
    """Unbiased U-statistic estimate of squared MMD with the Gaussian kernel
    k(x, y) = exp(-||x - y||^2 / (2 h^2)); negative estimates clamp to 0.

    bandwidth "auto" uses the median pairwise distance of the pooled
    subsample."""
    x, y = _points(p_cloud), _points(q_cloud)
    if len(x) < 2 or len(y) < 2:
        raise ArgumentError("mmd needs at least two points per cloud")
    if x.shape[1] != y.shape[1]:
        raise DimensionError(f"cloud dims differ: {x.shape[1]} vs {y.shape[1]}")
    rng = np.random.default_rng(seed)
    xs = _subsample(x, n_eval, rng)
    ys = _subsample(y, n_eval, rng)
    if bandwidth == "auto":
        pooled = np.vstack([xs, ys])
        d = cdist(pooled, pooled)
        h = float(np.median(d[np.triu_indices(len(pooled), k=1)]))
        if h == 0.0:
            h = 1.0
    else:
        h = float(bandwidth)
        if h <= 0:
            raise ArgumentError("bandwidth must be positive")
    inv = 1.0 / (2.0 * h * h)
    kxx = np.exp(-inv * cdist(xs, xs, metric="sqeuclidean"))
    kyy = np.exp(-inv * cdist(ys, ys, metric="sqeuclidean"))
    kxy = np.exp(-inv * cdist(xs, ys, metric="sqeuclidean"))
    m, n = len(xs), len(ys)
    est = (
        (kxx.sum() - np.trace(kxx)) / (m * (m - 1))
        + (kyy.sum() - np.trace(kyy)) / (n * (n - 1))
        - 2.0 * kxy.mean()
    )
    return max(0.0, float(est))


def median_bandwidth(p_cloud, q_cloud, n_eval: Optional[int] = 1000, seed: int = 0) -> float:
    rng = np.random.default_rng(seed)
    pooled = np.vstack([_subsample(_points(p_cloud), n_eval, rng),
                        _subsample(_points(q_cloud), n_eval, rng)])
    d = cdist(pooled, pooled)
    return float(np.median(d[np.triu_indices(len(pooled), k=1)]))


def mixture_weights(cloud, modes) -> np.ndarray:
    """Fraction of points nearest each mode center; ties go to the lowest
    mode index."""
    x = _points(cloud)
    centers = np.atleast_2d(np.asarray(modes, dtype=np.float64))
    if centers.shape[1] != x.shape[1]:
        raise DimensionError("mode centers must match cloud dimension")
    d = cdist(x, centers)
    counts = np.bincount(np.argmin(d, axis=1), minlength=len(centers))
    return counts / len(x)


def ks_statistic(cloud_1d, cdf) -> float:
    """sup_x |empirical cdf - cdf(x)| for a 1-d sample."""
    x = _points(cloud_1d)
    if x.shape[1] != 1:
        raise DimensionError("ks_statistic expects 1-d samples")
    if len(x) == 0:
        raise ArgumentError("empty sample")
    xs = np.sort(x[:, 0])
    f = np.asarray(cdf(xs), dtype=np.float64)
    n = len(xs)
    grid = np.arange(1, n + 1) / n
    return float(np.max(np.maximum(grid - f, f - (grid - 1.0 / n))))


def ks_pvalue(stat: float, n: int, terms: int = 100) -> float:
    """Asymptotic Kolmogorov distribution tail: P(D_n > stat)."""
    lam = (np.sqrt(n) + 0.12 + 0.11 / np.sqrt(n)) * stat
    ks = np.arange(1, terms + 1)
    s = 2.0 * np.sum((-1.0) ** (ks - 1) * np.exp(-2.0 * (ks * lam) ** 2))
    return float(min(1.0, max(0.0, s)))


@dataclass
class MetricsReport:
    w1: float
    w2: float
    mmd: float
    n_eval: int
    seed: int
    bandwidth: float

    def csv_row(self, dataset: str, method: str) -> str:
        return (
            f"{dataset},{method},{self.w1!r},{self.w2!r},{self.mmd!r},"
            f"{self.n_eval},{self.seed},{self.bandwidth!r}"
        )

    CSV_HEADER = "dataset,method,W1,W2,MMD,n_eval,seed,bandwidth"


def evaluate_clouds(
    samples,
    reference,
    n_eval: int = 1000,
    seed: int = 0,
    bandwidth: Union[str, float] = "auto",
    w2_squared: bool = False,
) -> MetricsReport:
    h = median_bandwidth(samples, reference, n_eval, seed) if bandwidth == "auto" else float(bandwidth)
    return MetricsReport(
        w1=wasserstein(samples, reference, order=1, n_eval=n_eval, seed=seed),
        w2=wasserstein(samples, reference, order=2, n_eval=n_eval, seed=seed, squared=w2_squared),
        mmd=mmd(samples, reference, bandwidth=h, n_eval=n_eval, seed=seed),
        n_eval=min(n_eval, len(_points(samples)), len(_points(reference))),
        seed=seed,
        bandwidth=h,
    )
