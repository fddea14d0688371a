"""Synthetic datasets, analytic target densities, and point-cloud CSV I/O."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import ArgumentError, CsvParseError, DimensionError, SupportError


@dataclass
class PointCloud:
    """N x d collection of samples, the common currency of the package."""

    points: np.ndarray
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        if self.points.ndim == 1:
            self.points = self.points[:, None]
        if self.points.ndim != 2 or len(self.points) < 1:
            raise ArgumentError(f"point cloud needs shape (n, d), got {self.points.shape}")
        if not np.all(np.isfinite(self.points)):
            raise ArgumentError("point cloud contains non-finite coordinates")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if len(self.labels) != len(self.points):
                raise DimensionError("labels length does not match points")

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return len(self.points)


# ---------------------------------------------------------------------------
# generators


def make_moons(n: int, noise: float = 0.1, seed: int = 0) -> PointCloud:
    """Two interlocking crescents: upper unit half-circle plus a shifted
    lower half-circle, with isotropic Gaussian noise."""
    if n < 1:
        raise ArgumentError("make_moons needs n >= 1")
    if noise < 0:
        raise ArgumentError("noise must be >= 0")
    rng = np.random.default_rng(seed)
    n_out = n // 2
    n_in = n - n_out
    t_out = np.linspace(0.0, np.pi, n_out)
    t_in = np.linspace(0.0, np.pi, n_in)
    outer = np.column_stack([np.cos(t_out), np.sin(t_out)])
    inner = np.column_stack([1.0 - np.cos(t_in), 1.0 - np.sin(t_in) - 0.5])
    pts = np.vstack([outer, inner])
    labels = np.concatenate([np.zeros(n_out, dtype=np.int64), np.ones(n_in, dtype=np.int64)])
    perm = rng.permutation(n)
    pts = pts[perm] + noise * rng.standard_normal((n, 2))
    return PointCloud(pts, labels[perm])


def make_pinwheel(
    n: int,
    num_classes: int = 5,
    radial_std: float = 0.5,
    tangential_std: float = 0.05,
    rate: float = 0.25,
    seed: int = 0,
) -> PointCloud:
    """Spiral arms: class angles 2*pi*k/K, radii N(1, radial_std^2), arm twist
    rate*r, and one shared tangential jitter added to both coordinates."""
    if n < 1:
        raise ArgumentError("make_pinwheel needs n >= 1")
    if num_classes < 1:
        raise ArgumentError("num_classes must be >= 1")
    rng = np.random.default_rng(seed)
    y = rng.integers(0, num_classes, size=n)
    theta = 2.0 * np.pi * y / num_classes
    r = 1.0 + radial_std * rng.standard_normal(n)
    delta = tangential_std * rng.standard_normal(n)
    phi = theta + rate * r
    pts = np.column_stack([r * np.cos(phi) + delta, r * np.sin(phi) + delta])
    return PointCloud(pts, y)


def make_s_curve(n: int, noise: float = 0.1, seed: int = 0) -> PointCloud:
    """3D 'S' manifold: (sin t, y, sign(t)(cos t - 1)), t in [-3pi/2, 3pi/2]."""
    if n < 1:
        raise ArgumentError("make_s_curve needs n >= 1")
    rng = np.random.default_rng(seed)
    t = 3.0 * np.pi * (rng.random(n) - 0.5)
    y = 2.0 * rng.random(n)
    pts = np.column_stack([np.sin(t), y, np.sign(t) * (np.cos(t) - 1.0)])
    pts += noise * rng.standard_normal((n, 3))
    return PointCloud(pts)


def make_swiss_roll(n: int, noise: float = 0.5, seed: int = 0) -> PointCloud:
    """3D spiral sheet: (t cos t, y, t sin t), t in [1.5pi, 4.5pi], y in [0, 21]."""
    if n < 1:
        raise ArgumentError("make_swiss_roll needs n >= 1")
    rng = np.random.default_rng(seed)
    t = 1.5 * np.pi * (1.0 + 2.0 * rng.random(n))
    y = 21.0 * rng.random(n)
    pts = np.column_stack([t * np.cos(t), y, t * np.sin(t)])
    pts += noise * rng.standard_normal((n, 3))
    return PointCloud(pts)


# ---------------------------------------------------------------------------
# analytic targets


def _as_points(x, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0:
        x = x[None, None]
    elif x.ndim == 1:
        x = x[:, None] if dim == 1 else x[None, :]
    if x.shape[1] != dim:
        raise DimensionError(f"expected points of dimension {dim}, got shape {x.shape}")
    return x


@dataclass
class Gaussian:
    """Multivariate normal with full log-density and score."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        self.mean = np.atleast_1d(np.asarray(self.mean, dtype=np.float64))
        self.cov = np.atleast_2d(np.asarray(self.cov, dtype=np.float64))
        if self.cov.shape != (self.dim, self.dim):
            raise DimensionError("covariance shape does not match mean")
        if not np.allclose(self.cov, self.cov.T):
            raise ArgumentError("covariance must be symmetric")
        self._chol = np.linalg.cholesky(self.cov)  # raises if not PD
        self._prec = np.linalg.inv(self.cov)
        self._log_norm = -0.5 * (
            self.dim * np.log(2.0 * np.pi) + 2.0 * np.sum(np.log(np.diag(self._chol)))
        )

    @property
    def dim(self) -> int:
        return len(self.mean)

    def in_support(self, x) -> np.ndarray:
        return np.ones(len(_as_points(x, self.dim)), dtype=bool)

    def logpdf(self, x) -> np.ndarray:
        x = _as_points(x, self.dim)
        d = x - self.mean
        return self._log_norm - 0.5 * np.einsum("ni,ij,nj->n", d, self._prec, d)

    def score(self, x) -> np.ndarray:
        x = _as_points(x, self.dim)
        return -(x - self.mean) @ self._prec

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        z = rng.standard_normal((n, self.dim))
        return self.mean + z @ self._chol.T


@dataclass
class GaussianMixture:
    """Weighted mixture of Gaussians; weights positive and summing to one."""

    components: list[Gaussian]
    weights: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if len(self.weights) != len(self.components):
            raise DimensionError("one weight per component required")
        if np.any(self.weights <= 0) or not np.isclose(self.weights.sum(), 1.0):
            raise ArgumentError("mixture weights must be positive and sum to 1")
        dims = {c.dim for c in self.components}
        if len(dims) != 1:
            raise DimensionError("mixture components must share dimension")

    @property
    def dim(self) -> int:
        return self.components[0].dim

    def in_support(self, x) -> np.ndarray:
        return np.ones(len(_as_points(x, self.dim)), dtype=bool)

    def _component_logpdfs(self, x) -> np.ndarray:
        return np.stack([c.logpdf(x) for c in self.components], axis=1)

    def logpdf(self, x) -> np.ndarray:
        lp = self._component_logpdfs(x) + np.log(self.weights)
        m = lp.max(axis=1, keepdims=True)
        return (m + np.log(np.exp(lp - m).sum(axis=1, keepdims=True)))[:, 0]

    def score(self, x) -> np.ndarray:
        x = _as_points(x, self.dim)
        lp = self._component_logpdfs(x) + np.log(self.weights)
        m = lp.max(axis=1, keepdims=True)
        w = np.exp(lp - m)
        w /= w.sum(axis=1, keepdims=True)  # posterior responsibilities
        out = np.zeros_like(x)
        for k, c in enumerate(self.components):
            out += w[:, k : k + 1] * c.score(x)
        return out

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        # One uniform per point decides the component (inverse transform on a
        # single stream keeps runs reproducible), then d normals.
        u = rng.random(n)
        ks = np.searchsorted(np.cumsum(self.weights), u)
        z = rng.standard_normal((n, self.dim))
        out = np.empty((n, self.dim))
        for k, c in enumerate(self.components):
            mask = ks == k
            out[mask] = c.mean + z[mask] @ c._chol.T
        return out


@dataclass
class Gev:
    """Generalized extreme value distribution (1D): shape xi, location mu,
    scale sigma. xi = 0 is the Gumbel branch."""

    xi: float
    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if self.sigma <= 0:
            raise ArgumentError("GEV scale sigma must be positive")

    dim = 1

    def in_support(self, x) -> np.ndarray:
        x = _as_points(x, 1)[:, 0]
        if self.xi == 0.0:
            return np.ones(len(x), dtype=bool)
        return 1.0 + self.xi * (x - self.mu) / self.sigma > 0.0

    def _check(self, x) -> np.ndarray:
        z = _as_points(x, 1)[:, 0]
        ok = self.in_support(z)
        if not np.all(ok):
            bad = z[~ok][0]
            raise SupportError(f"x={bad} outside GEV support (xi={self.xi}, mu={self.mu}, sigma={self.sigma})")
        return z

    def logpdf(self, x) -> np.ndarray:
        z = self._check(x)
        if self.xi == 0.0:
            w = (z - self.mu) / self.sigma
            return -np.log(self.sigma) - w - np.exp(-w)
        t = 1.0 + self.xi * (z - self.mu) / self.sigma
        return -np.log(self.sigma) - (1.0 + 1.0 / self.xi) * np.log(t) - t ** (-1.0 / self.xi)

    def score(self, x) -> np.ndarray:
        z = self._check(x)
        if self.xi == 0.0:
            w = (z - self.mu) / self.sigma
            s = (np.exp(-w) - 1.0) / self.sigma
        else:
            t = 1.0 + self.xi * (z - self.mu) / self.sigma
            s = (t ** (-1.0 / self.xi - 1.0) - (self.xi + 1.0) / t) / self.sigma
        return s[:, None]

    def cdf(self, x) -> np.ndarray:
        z = self._check(x)
        if self.xi == 0.0:
            return np.exp(-np.exp(-(z - self.mu) / self.sigma))
        t = 1.0 + self.xi * (z - self.mu) / self.sigma
        return np.exp(-(t ** (-1.0 / self.xi)))

    def quantile(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=np.float64)
        if np.any(u <= 0) or np.any(u >= 1):
            raise ArgumentError("quantile needs u in (0, 1)")
        if self.xi == 0.0:
            return self.mu - self.sigma * np.log(-np.log(u))
        return self.mu + self.sigma * ((-np.log(u)) ** (-self.xi) - 1.0) / self.xi

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self.quantile(rng.random(n))[:, None]


AnalyticTarget = Union[Gaussian, GaussianMixture, Gev]


def two_gaussian_mixture(pi: float = 0.8, separation: float = 5.0, dim: int = 2) -> GaussianMixture:
    """pi * N(+c, I) + (1 - pi) * N(-c, I) with c = separation * ones."""
    c = separation * np.ones(dim)
    eye = np.eye(dim)
    return GaussianMixture([Gaussian(c, eye), Gaussian(-c, eye)], np.array([pi, 1.0 - pi]))


def target_logpdf(target: AnalyticTarget, x) -> np.ndarray:
    return target.logpdf(x)


def target_score(target: AnalyticTarget, x) -> np.ndarray:
    return target.score(x)


def sample_target(target: AnalyticTarget, n: int, seed: int = 0) -> PointCloud:
    if n < 1:
        raise ArgumentError("sample_target needs n >= 1")
    return PointCloud(target.sample(n, np.random.default_rng(seed)))


# ---------------------------------------------------------------------------
# CSV I/O

_FLOAT_FMT = "%.17g"  # enough digits to round-trip float64 exactly


def write_csv(path, cloud: PointCloud) -> None:
    cols = [f"x{i}" for i in range(cloud.dim)]
    if cloud.labels is not None:
        cols.append("label")
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for i in range(len(cloud)):
            row = [_FLOAT_FMT % v for v in cloud.points[i]]
            if cloud.labels is not None:
                row.append(str(int(cloud.labels[i])))
            fh.write(",".join(row) + "\n")


def read_csv(path) -> PointCloud:
    with open(path) as fh:
        header = fh.readline().strip()
        if not header:
            raise CsvParseError(f"{path}: empty file")
        cols = header.split(",")
        has_label = cols[-1] == "label"
        dim = len(cols) - (1 if has_label else 0)
        expect = [f"x{i}" for i in range(dim)] + (["label"] if has_label else [])
        if cols != expect:
            raise CsvParseError(f"{path}: line 1: bad header {header!r}")
        pts, labels = [], []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != len(cols):
                raise CsvParseError(
                    f"{path}: line {lineno}: expected {len(cols)} columns, got {len(parts)}"
                )
            try:
                pts.append([float(v) for v in parts[:dim]])
                if has_label:
                    labels.append(int(parts[dim]))
            except ValueError as e:
                raise CsvParseError(f"{path}: line {lineno}: {e}") from None
    if not pts:
        raise CsvParseError(f"{path}: no data rows")
    return PointCloud(np.array(pts), np.array(labels) if has_label else None)
