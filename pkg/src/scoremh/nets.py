"""Feed-forward networks for score estimation and acceptance probabilities.

Both nets expose two evaluation paths: a graph path (autodiff Tensors, used
in training, including explicit input-gradient sweeps that remain
differentiable with respect to parameters) and a plain numpy path for cheap
evaluation inside samplers.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit as _sigmoid

from . import autodiff as ad
from .errors import DimensionError

# Sigmoid outputs are clamped into this open interval so log a / log(1-a)
# stay finite even for extreme logits.
PROB_FLOOR = 1e-12


def _np_softplus(x):
    return np.logaddexp(0.0, x)


def _np_phi(x):
    return np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi)


def _np_Phi(x):
    from scipy.special import erf

    return 0.5 * (1.0 + erf(x / np.sqrt(2.0)))


def _np_gelu(x):
    return x * _np_Phi(x)


def _np_gelu_prime(x):
    return _np_Phi(x) + x * _np_phi(x)


def _init_linear(rng: np.random.Generator, fan_in: int, fan_out: int):
    """Uniform fan-in scaled initialization."""
    bound = 1.0 / np.sqrt(fan_in)
    w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
    b = rng.uniform(-bound, bound, size=fan_out)
    return w, b


def _as_batch(x, dim: int, what: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != dim:
        raise DimensionError(f"{what}: expected (n, {dim}) input, got shape {x.shape}")
    return x


class ScoreNet:
    """MLP x -> s(x) in R^d: input layer, two hidden layers, linear output.

    Softplus after every layer except the last, so the map is smooth and
    input-gradients exist everywhere.
    """

    def __init__(self, dim: int, hidden: int, seed: int = 0):
        self.dim = dim
        self.hidden = hidden
        rng = np.random.default_rng(seed)
        sizes = [(dim, hidden), (hidden, hidden), (hidden, hidden), (hidden, dim)]
        self._names = []
        for i, (fi, fo) in enumerate(sizes):
            w, b = _init_linear(rng, fi, fo)
            setattr(self, f"w{i}", ad.parameter(w))
            setattr(self, f"b{i}", ad.parameter(b))
            self._names += [f"w{i}", f"b{i}"]

    def parameters(self) -> list[tuple[str, ad.Tensor]]:
        return [(n, getattr(self, n)) for n in self._names]

    def forward_cached(self, x: ad.Tensor):
        """Graph forward returning the output and pre-activation nodes."""
        pre = []
        h = x
        for i in range(3):
            z = h @ getattr(self, f"w{i}") + getattr(self, f"b{i}")
            pre.append(z)
            h = ad.softplus(z)
        out = h @ self.w3 + self.b3
        return out, pre

    def forward(self, x) -> ad.Tensor:
        if not isinstance(x, ad.Tensor):
            x = ad.constant(_as_batch(x, self.dim, "ScoreNet"))
        out, _ = self.forward_cached(x)
        return out

    def jvp(self, x, v):
        """Graph (output, J(x) @ v) with the directional derivative materialized
        as explicit nodes, so losses built from it stay differentiable in the
        parameters."""
        if not isinstance(x, ad.Tensor):
            x = ad.constant(_as_batch(x, self.dim, "ScoreNet"))
        v = ad.constant(np.asarray(v, dtype=np.float64))
        out, pre = self.forward_cached(x)
        t = v @ self.w0
        t = ad.sigmoid(pre[0]) * t          # softplus' = sigmoid
        t = t @ self.w1
        t = ad.sigmoid(pre[1]) * t
        t = t @ self.w2
        t = ad.sigmoid(pre[2]) * t
        t = t @ self.w3
        return out, t

    # numpy fast paths ------------------------------------------------------

    def value(self, x) -> np.ndarray:
        x = _as_batch(x, self.dim, "ScoreNet")
        h = x
        for i in range(3):
            h = _np_softplus(h @ getattr(self, f"w{i}").value + getattr(self, f"b{i}").value)
        return h @ self.w3.value + self.b3.value

    def value_jvp(self, x, v) -> np.ndarray:
        x = _as_batch(x, self.dim, "ScoreNet")
        v = np.asarray(v, dtype=np.float64)
        h = x
        t = v
        for i in range(3):
            z = h @ getattr(self, f"w{i}").value + getattr(self, f"b{i}").value
            t = _sigmoid(z) * (t @ getattr(self, f"w{i}").value)
            h = _np_softplus(z)
        return t @ self.w3.value

    def value_jacobian(self, x) -> np.ndarray:
        """(n, d, d) Jacobian ds_i/dx_j via d JVP sweeps."""
        x = _as_batch(x, self.dim, "ScoreNet")
        n, d = x.shape
        jac = np.empty((n, d, d))
        for j in range(d):
            v = np.zeros((n, d))
            v[:, j] = 1.0
            jac[:, :, j] = self.value_jvp(x, v)
        return jac

    __call__ = value


class AcceptanceNet:
    """Residual MLP (x', x) -> acceptance probability in (0, 1).

    Concatenated input, initial dense layer, `n_blocks` residual blocks of two
    dense layers with GELU, then a final dense layer + GELU whose scalar output
    (the logit) feeds a sigmoid.
    """

    def __init__(self, dim: int, hidden: int, n_blocks: int = 3, seed: int = 0):
        self.dim = dim
        self.hidden = hidden
        self.n_blocks = n_blocks
        rng = np.random.default_rng(seed)
        self._names = []

        def reg(name, fi, fo):
            w, b = _init_linear(rng, fi, fo)
            setattr(self, f"w_{name}", ad.parameter(w))
            setattr(self, f"b_{name}", ad.parameter(b))
            self._names += [f"w_{name}", f"b_{name}"]

        reg("in", 2 * dim, hidden)
        for k in range(n_blocks):
            reg(f"blk{k}a", hidden, hidden)
            reg(f"blk{k}b", hidden, hidden)
        reg("out", hidden, 1)

    def parameters(self) -> list[tuple[str, ad.Tensor]]:
        return [(n, getattr(self, n)) for n in self._names]

    def _lin(self, name, h):
        return h @ getattr(self, f"w_{name}") + getattr(self, f"b_{name}")

    def logit_cached(self, xp: ad.Tensor, x: ad.Tensor):
        """Graph logit u(x', x) plus the intermediate nodes needed for the
        input-gradient sweep. Head order is GELU then the final dense layer:
        a GELU-activated logit would be bounded below (min ~ -0.17), which
        caps how small the acceptance can get and makes the balance condition
        unrepresentable for distant pairs."""
        inp = ad.concat([xp, x], axis=1)
        h = self._lin("in", inp)
        block_pre = []
        for k in range(self.n_blocks):
            za = self._lin(f"blk{k}a", h)
            block_pre.append(za)
            h = h + self._lin(f"blk{k}b", ad.gelu(za))
        u = self._lin("out", ad.gelu(h))
        return u, h, block_pre

    def logit(self, xp, x) -> ad.Tensor:
        xp, x = self._coerce(xp, x)
        u, _, _ = self.logit_cached(xp, x)
        return u

    def _coerce(self, xp, x):
        if not isinstance(xp, ad.Tensor):
            xp = ad.constant(_as_batch(xp, self.dim, "AcceptanceNet"))
        if not isinstance(x, ad.Tensor):
            x = ad.constant(_as_batch(x, self.dim, "AcceptanceNet"))
        return xp, x

    def log_accept_with_grad(self, xp, x):
        """Graph (logit u, log a, d log a / d(x' || x)) with the gradient
        written out as explicit chain-rule nodes (gelu_prime factors), so it
        can itself be differentiated with respect to the parameters.

        The returned gradient has shape (n, 2d): columns [0, d) are the
        derivative in the first argument x', columns [d, 2d) in x.
        """
        xp, x = self._coerce(xp, x)
        u, h_last, block_pre = self.logit_cached(xp, x)
        g = ad.gelu_prime(h_last) * _t(self.w_out)     # (n, h): du/dh_last
        for k in reversed(range(self.n_blocks)):
            inner = g @ _t(getattr(self, f"w_blk{k}b"))
            inner = ad.gelu_prime(block_pre[k]) * inner
            g = g + inner @ _t(getattr(self, f"w_blk{k}a"))
        g = g @ _t(getattr(self, "w_in"))              # (n, 2d)
        log_a = ad.logsigmoid(u)
        grad_log_a = ad.sigmoid(-u) * g                # d logsig(u) = sig(-u) du
        return u, log_a, grad_log_a

    # numpy fast paths ------------------------------------------------------

    def _np_logit(self, xp, x):
        xp = _as_batch(xp, self.dim, "AcceptanceNet")
        x = _as_batch(x, self.dim, "AcceptanceNet")
        h = np.concatenate([xp, x], axis=1) @ self.w_in.value + self.b_in.value
        for k in range(self.n_blocks):
            za = h @ getattr(self, f"w_blk{k}a").value + getattr(self, f"b_blk{k}a").value
            h = h + _np_gelu(za) @ getattr(self, f"w_blk{k}b").value + getattr(self, f"b_blk{k}b").value
        return (_np_gelu(h) @ self.w_out.value + self.b_out.value)[:, 0]

    def prob(self, xp, x) -> np.ndarray:
        """Acceptance probabilities, clamped inside (0, 1)."""
        return np.clip(_sigmoid(self._np_logit(xp, x)), PROB_FLOOR, 1.0 - PROB_FLOOR)

    def log_prob(self, xp, x) -> np.ndarray:
        return -np.logaddexp(0.0, -self._np_logit(xp, x))

    def value_log_accept_grad(self, xp, x) -> np.ndarray:
        """Numpy twin of log_accept_with_grad's gradient output, (n, 2d)."""
        xp = _as_batch(xp, self.dim, "AcceptanceNet")
        x = _as_batch(x, self.dim, "AcceptanceNet")
        h = np.concatenate([xp, x], axis=1) @ self.w_in.value + self.b_in.value
        block_pre = []
        for k in range(self.n_blocks):
            za = h @ getattr(self, f"w_blk{k}a").value + getattr(self, f"b_blk{k}a").value
            block_pre.append(za)
            h = h + _np_gelu(za) @ getattr(self, f"w_blk{k}b").value + getattr(self, f"b_blk{k}b").value
        u = _np_gelu(h) @ self.w_out.value + self.b_out.value
        g = _np_gelu_prime(h) * self.w_out.value.T
        for k in reversed(range(self.n_blocks)):
            inner = g @ getattr(self, f"w_blk{k}b").value.T
            inner = _np_gelu_prime(block_pre[k]) * inner
            g = g + inner @ getattr(self, f"w_blk{k}a").value.T
        g = g @ self.w_in.value.T
        return _sigmoid(-u) * g

    def __call__(self, xp, x) -> np.ndarray:
        return self.prob(xp, x)


def _t(p: ad.Tensor) -> ad.Tensor:
    """Transposed view of a parameter matrix as a graph node."""
    out = ad.Tensor(p.value.T, op="transpose", parents=(p,))

    def bw():
        p._accum(out.grad.T)

    out._backward = bw
    return out
