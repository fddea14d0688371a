"""Network architectures: forward oracles, input gradients, double backward."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scoremh import autodiff as ad
from scoremh.errors import DimensionError
from scoremh.nets import PROB_FLOOR, AcceptanceNet, ScoreNet

from util import fd_param_grad, max_rel_err


def _zero(net):
    for _, p in net.parameters():
        p.value[...] = 0.0
    return net


def test_scorenet_zero_weights_gives_zero_vector():
    net = _zero(ScoreNet(3, 8, seed=0))
    x = np.random.default_rng(0).standard_normal((5, 3))
    assert np.array_equal(net.value(x), np.zeros((5, 3)))


def test_acceptance_zero_weights_gives_half():
    net = _zero(AcceptanceNet(2, 8, n_blocks=3, seed=0))
    x = np.random.default_rng(0).standard_normal((4, 2))
    assert np.allclose(net.prob(x, -x), 0.5)


def test_scorenet_matches_hand_rolled_forward():
    # independent scalar oracle: explicit layer-by-layer computation on d=1
    net = ScoreNet(1, 4, seed=3)
    x = np.array([[0.7]])
    h = x
    for i in range(3):
        w = getattr(net, f"w{i}").value
        b = getattr(net, f"b{i}").value
        h = np.log1p(np.exp(h @ w + b))  # softplus
    expect = h @ net.w3.value + net.b3.value
    assert np.allclose(net.value(x), expect, atol=1e-12)


def test_forward_graph_and_numpy_paths_identical():
    net = ScoreNet(2, 16, seed=1)
    x = np.random.default_rng(2).standard_normal((6, 2))
    assert np.array_equal(net.forward(x).value, net.value(x))


def test_scorenet_jvp_matches_fd():
    rng = np.random.default_rng(4)
    net = ScoreNet(2, 16, seed=4)
    x = rng.standard_normal((5, 2))
    v = rng.standard_normal((5, 2))
    _, jvp = net.jvp(x, v)
    h = 1e-5
    fd = (net.value(x + h * v) - net.value(x - h * v)) / (2 * h)
    assert max_rel_err(jvp.value, fd, floor=1e-4) < 1e-4


def test_acceptance_input_gradient_matches_fd():
    rng = np.random.default_rng(5)
    net = AcceptanceNet(2, 12, n_blocks=2, seed=5)
    xp = rng.standard_normal((4, 2))
    x = rng.standard_normal((4, 2))
    _, _, grad = net.log_accept_with_grad(xp, x)
    h = 1e-5
    fd = np.zeros((4, 4))
    for j in range(2):
        e = np.zeros((4, 2))
        e[:, j] = h
        fd[:, j] = (np.log(net.prob(xp + e, x)) - np.log(net.prob(xp - e, x))) / (2 * h)
        fd[:, 2 + j] = (np.log(net.prob(xp, x + e)) - np.log(net.prob(xp, x - e))) / (2 * h)
    assert max_rel_err(grad.value, fd, floor=1e-4) < 1e-4


def test_zero_weight_acceptance_has_zero_input_gradient():
    net = _zero(AcceptanceNet(2, 8, n_blocks=2, seed=0))
    x = np.random.default_rng(1).standard_normal((3, 2))
    assert np.array_equal(net.value_log_accept_grad(x, -x), np.zeros((3, 4)))


def test_graph_and_numpy_gradient_twins_agree():
    rng = np.random.default_rng(6)
    net = AcceptanceNet(3, 10, n_blocks=3, seed=6)
    xp = rng.standard_normal((5, 3))
    x = rng.standard_normal((5, 3))
    _, _, g = net.log_accept_with_grad(xp, x)
    assert np.allclose(g.value, net.value_log_accept_grad(xp, x), rtol=0, atol=1e-14)


def test_double_backward_matches_fd_over_parameters():
    # parameter gradient of || d log a / d input ||^2 via the materialized graph
    rng = np.random.default_rng(7)
    net = AcceptanceNet(2, 8, n_blocks=2, seed=7)
    xp = rng.standard_normal((4, 2))
    x = rng.standard_normal((4, 2))

    def loss_fn():
        g = net.value_log_accept_grad(xp, x)
        return float(np.sum(g * g))

    _, _, g = net.log_accept_with_grad(xp, x)
    loss = ad.tsum(ad.square(g))
    ad.backward(loss)
    for name, p in net.parameters():
        idx = int(np.argmax(np.abs(p.grad)))
        fd = fd_param_grad(p.value, idx, loss_fn)
        assert abs(p.grad.reshape(-1)[idx] - fd) < 1e-3 * max(abs(fd), 1e-6), name


def test_scorenet_double_backward_through_jvp():
    rng = np.random.default_rng(8)
    net = ScoreNet(2, 8, seed=8)
    x = rng.standard_normal((4, 2))
    v = rng.standard_normal((4, 2))

    def loss_fn():
        out = net.value(x)
        t = net.value_jvp(x, v)
        return float(0.5 * np.sum(out * out) + np.sum(t * v))

    out, jvp = net.jvp(x, v)
    loss = 0.5 * ad.tsum(ad.square(out)) + ad.tsum(jvp * ad.constant(v))
    ad.backward(loss)
    for name, p in net.parameters():
        idx = int(np.argmax(np.abs(p.grad)))
        fd = fd_param_grad(p.value, idx, loss_fn)
        assert abs(p.grad.reshape(-1)[idx] - fd) < 1e-3 * max(abs(fd), 1e-6), name


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.floats(-100.0, 100.0), st.floats(-100.0, 100.0))
def test_acceptance_output_strictly_inside_unit_interval(seed, a, b):
    net = AcceptanceNet(2, 8, n_blocks=2, seed=seed % 50)
    p = net.prob(np.array([[a, b]]), np.array([[b, a]]))
    assert PROB_FLOOR <= p[0] <= 1.0 - PROB_FLOOR


def test_input_gradients_finite_on_huge_inputs():
    net = ScoreNet(2, 8, seed=9)
    x = np.array([[1e6, -1e6], [0.0, 1e6]])
    v = np.ones((2, 2))
    assert np.all(np.isfinite(net.value(x)))
    assert np.all(np.isfinite(net.value_jvp(x, v)))
    anet = AcceptanceNet(2, 8, n_blocks=2, seed=9)
    assert np.all(np.isfinite(anet.value_log_accept_grad(x, x)))


def test_dimension_errors():
    net = ScoreNet(2, 8, seed=0)
    with pytest.raises(DimensionError):
        net.value(np.ones((3, 5)))
    anet = AcceptanceNet(2, 8, n_blocks=1, seed=0)
    with pytest.raises(DimensionError):
        anet.prob(np.ones((3, 3)), np.ones((3, 3)))


def test_jacobian_columns_match_jvps():
    net = ScoreNet(2, 8, seed=10)
    x = np.random.default_rng(3).standard_normal((3, 2))
    jac = net.value_jacobian(x)
    for j in range(2):
        v = np.zeros((3, 2))
        v[:, j] = 1.0
        assert np.allclose(jac[:, :, j], net.value_jvp(x, v))


def test_deterministic_initialization():
    a = ScoreNet(2, 16, seed=11)
    b = ScoreNet(2, 16, seed=11)
    for (_, pa), (_, pb) in zip(a.parameters(), b.parameters()):
        assert np.array_equal(pa.value, pb.value)
