"""Score-driven MCMC with learned Metropolis-Hastings acceptance functions."""

from .acceptance import (
    ExactAcceptance,
    LearnedAcceptance,
    SBMConfig,
    ScaledAcceptance,
    TaylorAcceptance,
    exact_acceptance,
    sbm_loss,
    sbm_residual,
    taylor_log_ratio,
    train_acceptance,
)
from .datasets import (
    Gaussian,
    GaussianMixture,
    Gev,
    PointCloud,
    make_moons,
    make_pinwheel,
    make_s_curve,
    make_swiss_roll,
    read_csv,
    sample_target,
    two_gaussian_mixture,
    write_csv,
)
from .metrics import ks_statistic, mixture_weights, mmd, wasserstein
from .proposals import Mala, Pcn, RandomWalk
from .sampler import NoiseSchedule, annealed_run, mh_step, run_chains, ula_step
from .scorematch import (
    SMConfig,
    ScoreModel,
    analytic_score,
    denoising_loss,
    hyvarinen_loss,
    sliced_loss,
    train_score,
)

__version__ = "0.1.0"
