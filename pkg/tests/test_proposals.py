"""Proposal kernels: densities, gradients, and sampling distributions."""

import numpy as np
import pytest
from scipy.stats import chi2

from scoremh.datasets import Gaussian
from scoremh.errors import ArgumentError
from scoremh.proposals import Mala, Pcn, RandomWalk
from scoremh.scorematch import analytic_score

STD_NORMAL = Gaussian(np.zeros(2), np.eye(2))
SCORE = analytic_score(STD_NORMAL)


def _fd_blocks(kernel, x, xp, h=1e-6):
    out = {}
    for which in ("rev", "fwd"):
        if which == "rev":
            f = lambda a, b: kernel.log_q(a, b)  # log q(x | x')
            args = lambda xx, xxp: (xx, xxp)
        else:
            f = lambda a, b: kernel.log_q(b, a)  # log q(x' | x)
            args = lambda xx, xxp: (xx, xxp)
        for wrt in ("x", "xp"):
            g = np.zeros_like(x)
            for j in range(x.shape[1]):
                e = np.zeros_like(x)
                e[:, j] = h
                if wrt == "x":
                    g[:, j] = (f(*args(x + e, xp)) - f(*args(x - e, xp))) / (2 * h)
                else:
                    g[:, j] = (f(*args(x, xp + e)) - f(*args(x, xp - e))) / (2 * h)
            out[(which, wrt)] = g
    return out


@pytest.mark.parametrize(
    "kernel",
    [
        RandomWalk(0.7, dim=2),
        Pcn(0.5, dim=2),
        Mala(0.4, score=SCORE, dim=2),
        Mala(0.4, score=SCORE, dim=2, exact_drift_grad=True),
    ],
    ids=["rw", "pcn", "mala-stopgrad", "mala-exact"],
)
def test_grad_blocks_match_fd(kernel):
    rng = np.random.default_rng(0)
    x = rng.standard_normal((6, 2))
    xp = rng.standard_normal((6, 2))
    blocks = kernel.grad_log_q_pair(x, xp)
    if isinstance(kernel, Mala) and not kernel.exact_drift_grad:
        # stop-gradient convention: compare against its own closed form with
        # the score factor frozen, i.e. an equivalent fixed-drift Gaussian
        drift_x = kernel.proposal_mean(x)
        drift_xp = kernel.proposal_mean(xp)
        e2 = kernel.eps**2
        fd = {
            ("rev", "x"): -(x - drift_xp) / e2,
            ("rev", "xp"): (x - drift_xp) / e2,
            ("fwd", "xp"): -(xp - drift_x) / e2,
            ("fwd", "x"): (xp - drift_x) / e2,
        }
    else:
        fd = _fd_blocks(kernel, x, xp)
    assert np.allclose(blocks.rev_dx, fd[("rev", "x")], atol=1e-5)
    assert np.allclose(blocks.rev_dxp, fd[("rev", "xp")], atol=1e-5)
    assert np.allclose(blocks.fwd_dx, fd[("fwd", "x")], atol=1e-5)
    assert np.allclose(blocks.fwd_dxp, fd[("fwd", "xp")], atol=1e-5)


def test_rw_log_density_closed_form():
    k = RandomWalk(0.5, dim=3)
    x = np.zeros((1, 3))
    val = k.log_q(x, x)
    assert np.allclose(val, -1.5 * np.log(2 * np.pi * 0.25))
    xp = np.array([[1.0, 0.0, 0.0]])
    assert np.allclose(k.log_q(xp, x), val - 1.0 / (2 * 0.25))


def test_rw_grad_example():
    k = RandomWalk(1.0, dim=2)
    blocks = k.grad_log_q_pair(np.array([[0.0, 0.0]]), np.array([[1.0, 0.0]]))
    assert np.allclose(blocks.fwd_dxp, [[-1.0, 0.0]])  # d log q(x'|x) / d x'


def test_rw_symmetric_pcn_not():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((5, 2))
    xp = rng.standard_normal((5, 2))
    rw = RandomWalk(0.8, dim=2)
    assert np.array_equal(rw.log_q(xp, x), rw.log_q(x, xp))
    pcn = Pcn(0.5, dim=2)
    assert not np.allclose(pcn.log_q(xp, x), pcn.log_q(x, xp))


def test_pcn_beta_one_is_state_independent():
    k = Pcn(1.0, dim=2)
    rng = np.random.default_rng(2)
    x = rng.standard_normal((4, 2))
    xp = rng.standard_normal((4, 2))
    assert np.allclose(k.log_q(xp, x), k.log_q(xp, 5 * x + 1))
    draws = k.propose(np.full((5000, 2), 100.0), np.random.default_rng(3))
    assert np.abs(draws.mean(0)).max() < 0.06  # independent of the huge state


def test_pcn_gradient_zero_at_proposal_mean():
    k = Pcn(0.6, dim=2)
    x = np.array([[1.0, -2.0]])
    xp = k.rho * x
    blocks = k.grad_log_q_pair(x, xp)
    # d log q(x' | x) / d x' at x' = rho x vanishes
    assert np.allclose(blocks.fwd_dxp, 0.0, atol=1e-12)


def test_mala_drift_and_rw_limit():
    k = Mala(0.3, score=SCORE, dim=2)
    x = np.array([[2.0, 0.0]])
    assert np.allclose(k.proposal_mean(x), x + 0.5 * 0.09 * SCORE(x))
    # zero score: mala proposals are rw proposals with sigma = eps
    class Zero:
        dim = 2
        def __call__(self, v):
            return np.zeros_like(np.atleast_2d(v))
    kz = Mala(0.25, score=Zero(), dim=2)
    rng = np.random.default_rng(4)
    draws = kz.propose(np.zeros((100000, 2)), rng)
    assert np.abs(draws.mean(0)).max() < 3 * 0.25 / np.sqrt(100000)
    assert np.abs(draws.std(0) - 0.25).max() < 0.003


def test_mala_asymmetric_log_q():
    k = Mala(0.5, score=SCORE, dim=2)
    x = np.array([[1.5, 0.0]])
    xp = np.array([[0.2, 0.1]])
    assert not np.allclose(k.log_q(xp, x), k.log_q(x, xp))


def test_rw_proposal_mean_clt():
    k = RandomWalk(0.1, dim=2)
    draws = k.propose(np.zeros((100000, 2)), np.random.default_rng(5))
    assert np.abs(draws.mean(0)).max() < 3 * 0.1 / np.sqrt(100000)


def test_log_q_normalizes_on_grid():
    # exp(log q) integrates to 1 over a fine 1-d grid for each kernel
    grid = np.linspace(-12, 12, 6001)[:, None]
    dx = grid[1, 0] - grid[0, 0]
    score1 = analytic_score(Gaussian(np.zeros(1), np.eye(1)))
    for k in (RandomWalk(0.8, dim=1), Pcn(0.4, dim=1), Mala(0.7, score=score1, dim=1)):
        from_x = np.full((len(grid), 1), 0.3)
        mass = np.exp(k.log_q(grid, from_x)).sum() * dx
        assert abs(mass - 1.0) < 1e-4, type(k).__name__


@pytest.mark.parametrize(
    "kernel",
    [RandomWalk(0.7, dim=1), Pcn(0.3, dim=1), Mala(0.5, score=analytic_score(Gaussian(np.zeros(1), np.eye(1))), dim=1)],
    ids=["rw", "pcn", "mala"],
)
def test_propose_respects_log_q_chi2(kernel):
    # goodness of fit of 1e5 draws against the stated conditional Gaussian
    rng = np.random.default_rng(6)
    x0 = np.full((100000, 1), 0.4)
    draws = kernel.propose(x0, rng)[:, 0]
    mean = kernel.proposal_mean(x0[:1])[0, 0]
    scale = kernel.noise_scale
    z = (draws - mean) / scale
    edges = np.linspace(-4, 4, 41)
    counts, _ = np.histogram(z, edges)
    from scipy.stats import norm
    probs = np.diff(norm.cdf(edges))
    probs = probs / probs.sum()
    expected = probs * len(z)
    mask = expected > 5
    stat = float(np.sum((counts[mask] - expected[mask]) ** 2 / expected[mask]))
    pval = float(chi2.sf(stat, mask.sum() - 1))
    assert pval > 0.001


def test_parameter_validation():
    with pytest.raises(ArgumentError):
        RandomWalk(0.0, dim=1)
    with pytest.raises(ArgumentError):
        Pcn(1.5, dim=1)
    with pytest.raises(ArgumentError):
        Mala(-0.1, score=SCORE, dim=2)
