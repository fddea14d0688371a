"""Chain drivers: unadjusted Langevin, Metropolis-Hastings with pluggable
acceptance, multi-chain running, and the annealed noise-schedule driver.

Chains advance in lockstep (vectorized over chains) but each chain owns an
independent RNG stream spawned from the run seed, so adding or removing
chains never changes another chain's trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .datasets import PointCloud
from .errors import ArgumentError, DimensionError
from .proposals import Mala, ProposalKernel


@dataclass
class ChainState:
    """Single-chain bookkeeping for the step-level API."""

    x: np.ndarray
    rng: np.random.Generator
    t: int = 0
    accepted: int = 0
    rejected: int = 0


def ula_step(score, x, eps: float, rng: np.random.Generator) -> np.ndarray:
    """x + (eps^2 / 2) s(x) + eps z; the unadjusted move that MALA proposes."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if eps == 0.0:
        return x
    return x + 0.5 * eps**2 * np.asarray(score(x)) + eps * rng.standard_normal(x.shape)


def _accept_fn(acceptance) -> Callable:
    return getattr(acceptance, "safe_accept_prob", None) or acceptance.accept_prob


def mh_step(kernel: ProposalKernel, acceptance, state: ChainState) -> ChainState:
    """One propose/accept step on a single chain, in place."""
    x = np.atleast_2d(state.x)
    xp = kernel.propose(x, state.rng)
    a = float(_accept_fn(acceptance)(xp, x)[0])
    u = state.rng.random()
    if u <= a:
        state.x = xp[0]
        state.accepted += 1
    else:
        state.rejected += 1
    state.t += 1
    return state


@dataclass
class ChainDiagnostics:
    n_chains: int
    n_steps: int
    burn_in: int
    thin: int
    seed: int
    acceptance_rates: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def acceptance_rate(self) -> float:
        return float(self.acceptance_rates.mean()) if len(self.acceptance_rates) else 1.0


def _init_positions(init, dim, n_chains, gens, init_scale):
    if isinstance(init, PointCloud):
        if init.dim != dim:
            raise DimensionError(f"init cloud dim {init.dim} != chain dim {dim}")
        reps = int(np.ceil(n_chains / len(init)))
        return np.tile(init.points, (reps, 1))[:n_chains].copy()
    if init == "gaussian":
        return np.stack([init_scale * g.standard_normal(dim) for g in gens])
    raise ArgumentError(f"unknown init {init!r}")


def run_chains(
    driver: str,
    *,
    dim: int,
    n_chains: int,
    n_steps: int,
    kernel: Optional[ProposalKernel] = None,
    acceptance=None,
    score=None,
    eps: Optional[float] = None,
    burn_in: Optional[int] = None,
    thin: int = 1,
    init: Union[str, PointCloud] = "gaussian",
    init_scale: float = 1.0,
    seed: int = 0,
) -> tuple[PointCloud, ChainDiagnostics]:
    """Run `n_chains` independent chains for `n_steps` and pool the
    post-burn-in, thinned states (ordered by chain, then step).

    driver "ula" needs (score, eps); driver "mh" needs (kernel, acceptance).
    burn_in defaults to 20% of n_steps.
    """
    if driver not in ("ula", "mh"):
        raise ArgumentError(f"unknown driver {driver!r}")
    if driver == "ula" and (score is None or eps is None):
        raise ArgumentError("ula driver needs a score model and step size")
    if driver == "mh" and (kernel is None or acceptance is None):
        raise ArgumentError("mh driver needs a kernel and an acceptance model")
    if n_chains < 1 or n_steps < 1:
        raise ArgumentError("need n_chains >= 1 and n_steps >= 1")
    if burn_in is None:
        burn_in = n_steps // 5
    if burn_in >= n_steps:
        raise ArgumentError(f"burn_in {burn_in} must be < n_steps {n_steps}")
    if thin < 1:
        raise ArgumentError("thin must be >= 1")

    gens = [np.random.default_rng(c) for c in np.random.SeedSequence(seed).spawn(n_chains)]
    x = _init_positions(init, dim, n_chains, gens, init_scale)
    noise = np.stack([g.standard_normal((n_steps, dim)) for g in gens])
    if driver == "mh":
        unif = np.stack([g.random(n_steps) for g in gens])
    states = np.empty((n_chains, n_steps, dim))
    accepted = np.zeros(n_chains, dtype=np.int64)

    accept_prob = _accept_fn(acceptance) if driver == "mh" else None
    for t in range(n_steps):
        if driver == "ula":
            x = x + 0.5 * eps**2 * np.asarray(score(x)) + eps * noise[:, t, :]
        else:
            xp = kernel.proposal_mean(x) + kernel.noise_scale * noise[:, t, :]
            a = accept_prob(xp, x)
            acc = unif[:, t] <= a
            x = np.where(acc[:, None], xp, x)
            accepted += acc
        states[:, t, :] = x

    kept = states[:, burn_in::thin, :].reshape(-1, dim)
    diag = ChainDiagnostics(
        n_chains=n_chains,
        n_steps=n_steps,
        burn_in=burn_in,
        thin=thin,
        seed=seed,
        acceptance_rates=(accepted / n_steps) if driver == "mh" else np.ones(n_chains),
    )
    return PointCloud(kept), diag


def write_trace_csv(path, states: np.ndarray, accepted: Optional[np.ndarray] = None) -> None:
    """states: (n_chains, n_steps, d); accepted: (n_chains, n_steps) flags."""
    n_chains, n_steps, d = states.shape
    cols = ["chain", "step"] + [f"x{i}" for i in range(d)] + ["accepted"]
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for c in range(n_chains):
            for t in range(n_steps):
                row = [str(c), str(t)]
                row += ["%.17g" % v for v in states[c, t]]
                row.append(str(int(accepted[c, t])) if accepted is not None else "1")
                fh.write(",".join(row) + "\n")


@dataclass
class NoiseSchedule:
    """Decreasing noise levels with tau-controlled per-level step sizes
    eps_i = tau * sigma_i^2, plus extra steps at the smallest level."""

    sigmas: Sequence[float]
    steps_per_level: int
    tau: float
    extra_steps: int = 0

    def __post_init__(self):
        self.sigmas = np.asarray(self.sigmas, dtype=np.float64)
        if len(self.sigmas) < 1 or np.any(self.sigmas <= 0):
            raise ArgumentError("need at least one positive noise level")
        if np.any(np.diff(self.sigmas) >= 0):
            raise ArgumentError("noise levels must be strictly decreasing")
        if self.steps_per_level < 1:
            raise ArgumentError("steps_per_level must be >= 1")
        if self.tau < 0:
            raise ArgumentError("tau must be >= 0")

    def step_size(self, level: int) -> float:
        return self.tau * float(self.sigmas[level]) ** 2

    @staticmethod
    def geometric(sigma_max: float, sigma_min: float, n_levels: int, steps_per_level: int,
                  tau: float, extra_steps: int = 0) -> "NoiseSchedule":
        sig = np.geomspace(sigma_max, sigma_min, n_levels)
        return NoiseSchedule(sig, steps_per_level, tau, extra_steps)


def annealed_run(
    schedule: NoiseSchedule,
    scores: Sequence,
    method: str = "ula",
    acceptance_factory: Optional[Callable] = None,
    *,
    dim: int,
    n_chains: int,
    init: Union[str, PointCloud] = "gaussian",
    init_scale: float = 1.0,
    seed: int = 0,
) -> PointCloud:
    """Anneal chains from the largest to the smallest noise level, using the
    level's score model and step size; returns the final particle positions.

    method "mala" wraps each level's Langevin proposal in an accept step; the
    acceptance model per level comes from acceptance_factory(level, kernel,
    score) and defaults to the averaged first-order Taylor ratio.
    """
    if method not in ("ula", "mala"):
        raise ArgumentError(f"unknown annealing method {method!r}")
    if len(scores) != len(schedule.sigmas):
        raise ArgumentError(
            f"need one score model per level: {len(scores)} models, {len(schedule.sigmas)} levels"
        )
    gens = [np.random.default_rng(c) for c in np.random.SeedSequence(seed).spawn(n_chains)]
    x = _init_positions(init, dim, n_chains, gens, init_scale)

    for level, score in enumerate(scores):
        eps = schedule.step_size(level)
        steps = schedule.steps_per_level
        if level == len(scores) - 1:
            steps += schedule.extra_steps
        noise = np.stack([g.standard_normal((steps, dim)) for g in gens])
        if method == "ula":
            for t in range(steps):
                if eps > 0:
                    x = x + 0.5 * eps**2 * np.asarray(score(x)) + eps * noise[:, t, :]
        else:
            if eps <= 0:
                continue
            kernel = Mala(eps, score=score, dim=dim)
            if acceptance_factory is None:
                from .acceptance import TaylorAcceptance

                accept = TaylorAcceptance(score, kernel, variant="taylor1_avg")
            else:
                accept = acceptance_factory(level, kernel, score)
            accept_prob = _accept_fn(accept)
            unif = np.stack([g.random(steps) for g in gens])
            for t in range(steps):
                xp = kernel.proposal_mean(x) + eps * noise[:, t, :]
                acc = unif[:, t] <= accept_prob(xp, x)
                x = np.where(acc[:, None], xp, x)
    return PointCloud(x)
