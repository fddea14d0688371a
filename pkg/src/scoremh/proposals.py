"""Proposal kernels: random walk, Langevin (MALA), and preconditioned
Crank-Nicolson. Each kernel is a Gaussian x' = mean(x) + scale * z, which
keeps sampling, log-density evaluation, and the closed-form gradient blocks
in one place."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import ArgumentError, DimensionError

LOG_2PI = np.log(2.0 * np.pi)


class QPairGrads(NamedTuple):
    """Gradient blocks of the two proposal log-densities for a pair (x, x').

    rev_* differentiates log q(x | x') (the reverse move), fwd_* differentiates
    log q(x' | x); *_dx is the block with respect to x, *_dxp with respect
    to x'. Each block has shape (n, d).
    """

    rev_dx: np.ndarray
    rev_dxp: np.ndarray
    fwd_dx: np.ndarray
    fwd_dxp: np.ndarray


def _pair(x, xp, dim):
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    xp = np.atleast_2d(np.asarray(xp, dtype=np.float64))
    if x.shape != xp.shape or x.shape[1] != dim:
        raise DimensionError(f"expected matching (n, {dim}) pairs, got {x.shape} and {xp.shape}")
    return x, xp


class _GaussianKernel:
    """Shared machinery: x' ~ N(mean(x), scale^2 I)."""

    dim: int

    def proposal_mean(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def noise_scale(self) -> float:
        raise NotImplementedError

    def propose(self, x, rng: np.random.Generator) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        return self.proposal_mean(x) + self.noise_scale * rng.standard_normal(x.shape)

    def log_q(self, x_to, x_from) -> np.ndarray:
        """log q(x_to | x_from), exact normalized Gaussian log-density."""
        x_to, x_from = _pair(x_to, x_from, self.dim)
        s2 = self.noise_scale**2
        r = x_to - self.proposal_mean(x_from)
        d = x_to.shape[1]
        return -0.5 * np.sum(r * r, axis=1) / s2 - 0.5 * d * np.log(s2) - 0.5 * d * LOG_2PI


@dataclass(frozen=True)
class RandomWalk(_GaussianKernel):
    """q(x' | x) = N(x, sigma^2 I)."""

    sigma: float
    dim: int = 2

    def __post_init__(self):
        if self.sigma <= 0:
            raise ArgumentError("random walk sigma must be positive")

    @property
    def noise_scale(self) -> float:
        return self.sigma

    def proposal_mean(self, x):
        return x

    def grad_log_q_pair(self, x, xp) -> QPairGrads:
        x, xp = _pair(x, xp, self.dim)
        d = (x - xp) / self.sigma**2
        # symmetric kernel: log q(x | x') == log q(x' | x), so the two
        # directions share gradient blocks
        return QPairGrads(rev_dx=-d, rev_dxp=d, fwd_dx=-d, fwd_dxp=d)


@dataclass(frozen=True)
class Mala(_GaussianKernel):
    """q(x' | x) = N(x + (eps^2 / 2) s(x), eps^2 I) for a score model s.

    Gradient blocks treat the drift's score factor as locally constant by
    default (the score Jacobian is a log-density Hessian, dropped as in the
    averaging argument for Taylor acceptance); set exact_drift_grad=True to
    include the Jacobian terms via the score model's `jacobian`.
    """

    eps: float
    score: Callable[[np.ndarray], np.ndarray]
    dim: int = 2
    exact_drift_grad: bool = False

    def __post_init__(self):
        if self.eps <= 0:
            raise ArgumentError("MALA eps must be positive")

    @property
    def noise_scale(self) -> float:
        return self.eps

    def proposal_mean(self, x):
        return x + 0.5 * self.eps**2 * np.asarray(self.score(x), dtype=np.float64)

    def grad_log_q_pair(self, x, xp) -> QPairGrads:
        x, xp = _pair(x, xp, self.dim)
        e2 = self.eps**2
        r_rev = (x - self.proposal_mean(xp)) / e2   # residual of log q(x | x')
        r_fwd = (xp - self.proposal_mean(x)) / e2   # residual of log q(x' | x)
        rev_dx, rev_dxp = -r_rev, r_rev
        fwd_dx, fwd_dxp = r_fwd, -r_fwd
        if self.exact_drift_grad:
            jac_x = self._jacobian(x)
            jac_xp = self._jacobian(xp)
            # d mean(z) / dz = I + (eps^2/2) J_s(z); the extra term contracts
            # the residual with the score Jacobian.
            rev_dxp = rev_dxp + 0.5 * e2 * np.einsum("nij,ni->nj", jac_xp, r_rev)
            fwd_dx = fwd_dx + 0.5 * e2 * np.einsum("nij,ni->nj", jac_x, r_fwd)
        return QPairGrads(rev_dx, rev_dxp, fwd_dx, fwd_dxp)

    def _jacobian(self, x) -> np.ndarray:
        jac = getattr(self.score, "jacobian", None)
        if jac is not None:
            return jac(x)
        # central differences on the score itself
        h = 1e-5
        n, d = x.shape
        out = np.empty((n, d, d))
        for j in range(d):
            e = np.zeros((n, d))
            e[:, j] = h
            out[:, :, j] = (self.score(x + e) - self.score(x - e)) / (2 * h)
        return out


@dataclass(frozen=True)
class Pcn(_GaussianKernel):
    """x' = sqrt(1 - beta^2) x + beta xi with xi ~ N(0, I), used here as a
    generic MH proposal with the full acceptance correction."""

    beta: float
    dim: int = 2

    def __post_init__(self):
        if not 0.0 < self.beta <= 1.0:
            raise ArgumentError("pCN beta must lie in (0, 1]")

    @property
    def rho(self) -> float:
        return np.sqrt(1.0 - self.beta**2)

    @property
    def noise_scale(self) -> float:
        return self.beta

    def proposal_mean(self, x):
        return self.rho * x

    def grad_log_q_pair(self, x, xp) -> QPairGrads:
        x, xp = _pair(x, xp, self.dim)
        b2 = self.beta**2
        r_rev = (x - self.rho * xp) / b2
        r_fwd = (xp - self.rho * x) / b2
        return QPairGrads(
            rev_dx=-r_rev,
            rev_dxp=self.rho * r_rev,
            fwd_dx=self.rho * r_fwd,
            fwd_dxp=-r_fwd,
        )


ProposalKernel = RandomWalk | Mala | Pcn


def propose(kernel: ProposalKernel, x, rng: np.random.Generator) -> np.ndarray:
    return kernel.propose(x, rng)


def log_q(kernel: ProposalKernel, x_to, x_from) -> np.ndarray:
    return kernel.log_q(x_to, x_from)


def grad_log_q_pair(kernel: ProposalKernel, x, xp) -> QPairGrads:
    return kernel.grad_log_q_pair(x, xp)
