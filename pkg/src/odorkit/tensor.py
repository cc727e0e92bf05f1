"""Dense float64 tensors with reverse-mode automatic differentiation,
plus the layers, loss, optimizer and learning-rate schedule the graph
models train with.

The tape is implicit: every operation records its parents and a backward
closure on the output tensor, and backward() walks the graph in reverse
topological order. Everything runs on float64 numpy arrays so gradient
checks against central finite differences are crisp.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .hashutil import hash_ints

SELU_ALPHA = 1.6732632423543772
SELU_LAMBDA = 1.0507009873554805


class Tensor:
    """A numpy array that remembers how it was computed."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, _parents=(), _backward=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad or any(p.requires_grad for p in _parents)
        self._parents = _parents
        self._backward = _backward

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __sub__(self, other):
        return add(self, scale(other, -1.0))

    def __matmul__(self, other):
        return matmul(self, other)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def backward(loss: Tensor) -> None:
    """Accumulate gradients of a scalar loss into every reachable tensor.

    Gradients land on tensors with requires_grad set; constant leaves are
    skipped. Raises if loss is not a scalar.
    """
    if loss.data.size != 1:
        raise ValueError("backward requires a scalar loss")
    topo: list[Tensor] = []
    seen = set()
    stack = [(loss, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if parent.requires_grad and id(parent) not in seen:
                stack.append((parent, False))
    loss.grad = np.ones_like(loss.data)
    for node in reversed(topo):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    """Sum a gradient back down to the shape it was broadcast from."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# Primitive operations
# ---------------------------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data + b.data, _parents=(a, b))

    def bwd(g):
        _accumulate(a, _unbroadcast(g, a.data.shape))
        _accumulate(b, _unbroadcast(g, b.data.shape))

    out._backward = bwd
    return out


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data * b.data, _parents=(a, b))

    def bwd(g):
        _accumulate(a, _unbroadcast(g * b.data, a.data.shape))
        _accumulate(b, _unbroadcast(g * a.data, b.data.shape))

    out._backward = bwd
    return out


def scale(a, c: float) -> Tensor:
    a = as_tensor(a)
    out = Tensor(a.data * c, _parents=(a,))
    out._backward = lambda g: _accumulate(a, g * c)
    return out


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data @ b.data, _parents=(a, b))

    def bwd(g):
        _accumulate(a, g @ b.data.T)
        _accumulate(b, a.data.T @ g)

    out._backward = bwd
    return out


def concat_cols(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    split = a.data.shape[1]
    out = Tensor(np.concatenate([a.data, b.data], axis=1), _parents=(a, b))

    def bwd(g):
        _accumulate(a, g[:, :split])
        _accumulate(b, g[:, split:])

    out._backward = bwd
    return out


def gather_rows(a, idx) -> Tensor:
    a = as_tensor(a)
    idx = np.asarray(idx, dtype=np.intp)
    out = Tensor(a.data[idx], _parents=(a,))

    def bwd(g):
        if a.requires_grad:
            acc = np.zeros_like(a.data)
            np.add.at(acc, idx, g)
            _accumulate(a, acc)

    out._backward = bwd
    return out


def segment_sum(a, segment_ids, n_segments: int) -> Tensor:
    """Sum rows of a into n_segments buckets given per-row segment ids."""
    a = as_tensor(a)
    ids = np.asarray(segment_ids, dtype=np.intp)
    data = np.zeros((n_segments,) + a.data.shape[1:], dtype=np.float64)
    np.add.at(data, ids, a.data)
    out = Tensor(data, _parents=(a,))
    out._backward = lambda g: _accumulate(a, g[ids])
    return out


def segment_max(a, segment_ids, n_segments: int) -> Tensor:
    """Columnwise max of rows per segment; empty segments give zeros.

    The gradient is routed to the first row attaining each maximum, which
    matches the true derivative whenever tied rows are copies of the same
    upstream function (the case for symmetry-equivalent graph nodes).
    """
    a = as_tensor(a)
    ids = np.asarray(segment_ids, dtype=np.intp)
    n_rows, width = a.data.shape
    order = np.argsort(ids, kind="stable")
    sorted_ids = ids[order]
    sorted_vals = a.data[order]
    uniq, starts = np.unique(sorted_ids, return_index=True)
    data = np.zeros((n_segments, width), dtype=np.float64)
    winner = None
    if len(uniq):
        maxes = np.maximum.reduceat(sorted_vals, starts, axis=0)
        data[uniq] = maxes
        # first row achieving the max, per segment and column
        rel = np.arange(n_rows)
        seg_of_sorted = np.searchsorted(uniq, sorted_ids)
        rel = rel - starts[seg_of_sorted]
        pos = np.where(sorted_vals == maxes[seg_of_sorted], rel[:, None], n_rows)
        win_rel = np.minimum.reduceat(pos, starts, axis=0)
        winner = order[starts[:, None] + win_rel]          # row index in a
    out = Tensor(data, _parents=(a,))

    def bwd(g):
        if not a.requires_grad or winner is None:
            return
        acc = np.zeros_like(a.data)
        cols = np.broadcast_to(np.arange(width), winner.shape)
        np.add.at(acc, (winner.ravel(), cols.ravel()), g[uniq].ravel())
        _accumulate(a, acc)

    out._backward = bwd
    return out


def edge_matvec(mats, vecs) -> Tensor:
    """Per-row matrix-vector product: mats[e] (d*d flat) applied to vecs[e]."""
    mats, vecs = as_tensor(mats), as_tensor(vecs)
    n, d = vecs.data.shape
    m3 = mats.data.reshape(n, d, d)
    out = Tensor(np.einsum("eij,ej->ei", m3, vecs.data), _parents=(mats, vecs))

    def bwd(g):
        _accumulate(mats, np.einsum("ei,ej->eij", g, vecs.data).reshape(n, d * d))
        _accumulate(vecs, np.einsum("eij,ei->ej", m3, g))

    out._backward = bwd
    return out


def relu(a) -> Tensor:
    a = as_tensor(a)
    out = Tensor(np.maximum(a.data, 0.0), _parents=(a,))
    out._backward = lambda g: _accumulate(a, g * (a.data > 0))
    return out


def selu(a) -> Tensor:
    a = as_tensor(a)
    pos = a.data > 0
    expd = np.exp(np.minimum(a.data, 0.0))
    out = Tensor(
        SELU_LAMBDA * np.where(pos, a.data, SELU_ALPHA * (expd - 1.0)),
        _parents=(a,),
    )
    out._backward = lambda g: _accumulate(
        a, g * SELU_LAMBDA * np.where(pos, 1.0, SELU_ALPHA * expd)
    )
    return out


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    s = _sigmoid(a.data)
    out = Tensor(s, _parents=(a,))
    out._backward = lambda g: _accumulate(a, g * s * (1.0 - s))
    return out


def tanh(a) -> Tensor:
    a = as_tensor(a)
    t = np.tanh(a.data)
    out = Tensor(t, _parents=(a,))
    out._backward = lambda g: _accumulate(a, g * (1.0 - t * t))
    return out


def softmax_rows(a) -> Tensor:
    """Softmax over the last axis of a 2-D tensor."""
    a = as_tensor(a)
    shifted = a.data - a.data.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    s = e / e.sum(axis=1, keepdims=True)
    out = Tensor(s, _parents=(a,))

    def bwd(g):
        dot = (g * s).sum(axis=1, keepdims=True)
        _accumulate(a, s * (g - dot))

    out._backward = bwd
    return out


def absval(a) -> Tensor:
    a = as_tensor(a)
    out = Tensor(np.abs(a.data), _parents=(a,))
    out._backward = lambda g: _accumulate(a, g * np.sign(a.data))
    return out


def total_sum(a) -> Tensor:
    a = as_tensor(a)
    out = Tensor(a.data.sum(), _parents=(a,))
    out._backward = lambda g: _accumulate(a, np.full_like(a.data, float(g)))
    return out


def mean_all(a) -> Tensor:
    a = as_tensor(a)
    return scale(total_sum(a), 1.0 / a.data.size)


def batchnorm_normalize(a, eps: float) -> Tensor:
    """Normalize columns to zero mean, unit variance over the batch axis."""
    a = as_tensor(a)
    n = a.data.shape[0]
    mu = a.data.mean(axis=0)
    var = a.data.var(axis=0)
    invstd = 1.0 / np.sqrt(var + eps)
    xhat = (a.data - mu) * invstd
    out = Tensor(xhat, _parents=(a,))

    def bwd(g):
        gsum = g.sum(axis=0)
        gdot = (g * xhat).sum(axis=0)
        _accumulate(a, (invstd / n) * (n * g - gsum - xhat * gdot))

    out._backward = bwd
    return out


def weighted_bce(logits, targets, pos_weights) -> Tensor:
    """Mean weighted binary cross entropy over all (row, task) entries.

    Per entry: w*t*softplus(-z) + (1-t)*softplus(z), the numerically
    stable form of -[w*t*log(sigmoid(z)) + (1-t)*log(1-sigmoid(z))].
    """
    logits = as_tensor(logits)
    t = np.asarray(targets, dtype=np.float64)
    w = np.asarray(pos_weights, dtype=np.float64)
    if t.shape != logits.data.shape:
        raise ValueError("targets shape must match logits")
    z = logits.data
    elem = w * t * np.logaddexp(0.0, -z) + (1.0 - t) * np.logaddexp(0.0, z)
    out = Tensor(elem.mean(), _parents=(logits,))

    def bwd(g):
        s = _sigmoid(z)
        dz = (w * t * (s - 1.0) + (1.0 - t) * s) / elem.size
        _accumulate(logits, float(g) * dz)

    out._backward = bwd
    return out


# ---------------------------------------------------------------------------
# Layers
# ---------------------------------------------------------------------------

@dataclass
class LayerSpec:
    """Declarative layer description used to build parameterized layers."""

    kind: str                          # dense|relu|selu|sigmoid|softmax|batchnorm|dropout|gru_cell
    in_dim: int = 0
    out_dim: int = 0
    rate: float = 0.0                  # dropout rate
    momentum: float = 0.9              # batchnorm running-stat momentum
    eps: float = 1e-5


def fan_in_uniform(rng: np.random.Generator, in_dim: int, out_dim: int) -> np.ndarray:
    bound = 1.0 / math.sqrt(max(in_dim, 1))
    return rng.uniform(-bound, bound, size=(in_dim, out_dim))


class Dense:
    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator):
        self.w = Tensor(fan_in_uniform(rng, in_dim, out_dim), requires_grad=True)
        self.b = Tensor(np.zeros(out_dim), requires_grad=True)

    def forward(self, x: Tensor) -> Tensor:
        return add(matmul(x, self.w), self.b)

    def parameters(self):
        return {"w": self.w, "b": self.b}


class BatchNorm:
    """Batch statistics in train mode, running statistics in infer mode."""

    def __init__(self, dim: int, momentum: float = 0.9, eps: float = 1e-5):
        self.gamma = Tensor(np.ones(dim), requires_grad=True)
        self.beta = Tensor(np.zeros(dim), requires_grad=True)
        self.running_mean = np.zeros(dim)
        self.running_var = np.ones(dim)
        self.momentum = momentum
        self.eps = eps
        self.frozen = False            # force running stats even in train mode

    def forward(self, x: Tensor, mode: str) -> Tensor:
        if mode == "train" and not self.frozen:
            mu = x.data.mean(axis=0)
            var = x.data.var(axis=0)
            self.running_mean = self.momentum * self.running_mean + (1 - self.momentum) * mu
            self.running_var = self.momentum * self.running_var + (1 - self.momentum) * var
            xhat = batchnorm_normalize(x, self.eps)
        else:
            invstd = 1.0 / np.sqrt(self.running_var + self.eps)
            xhat = add(mul(x, Tensor(invstd)), Tensor(-self.running_mean * invstd))
        return add(mul(xhat, self.gamma), self.beta)

    def parameters(self):
        return {"gamma": self.gamma, "beta": self.beta}


class Dropout:
    """Inverted dropout: scales by 1/(1-rate) in train, identity in infer.

    Masks come from a counter-based generator keyed by (seed, epoch,
    layer), so a forward pass is reproducible for gradient checking.
    """

    def __init__(self, rate: float, layer_key: int = 0):
        if not 0.0 <= rate < 1.0:
            raise ValueError("dropout rate must be in [0, 1)")
        self.rate = rate
        self.layer_key = layer_key

    def forward(self, x: Tensor, mode: str, rng_key: tuple[int, int] = (0, 0)) -> Tensor:
        if mode != "train" or self.rate == 0.0:
            return x
        seed, epoch = rng_key
        gen = np.random.Generator(
            np.random.Philox(key=hash_ints((seed, epoch, self.layer_key)))
        )
        keep = 1.0 - self.rate
        mask = (gen.random(x.data.shape) < keep) / keep
        return mul(x, Tensor(mask))

    def parameters(self):
        return {}


class GruCell:
    """Standard gated recurrent unit update h' = (1-z)*n + z*h."""

    def __init__(self, dim: int, rng: np.random.Generator):
        self.dim = dim
        self.w = {}
        for gate in ("z", "r", "n"):
            self.w[f"wi_{gate}"] = Tensor(fan_in_uniform(rng, dim, dim), requires_grad=True)
            self.w[f"wh_{gate}"] = Tensor(fan_in_uniform(rng, dim, dim), requires_grad=True)
            self.w[f"bi_{gate}"] = Tensor(np.zeros(dim), requires_grad=True)
            self.w[f"bh_{gate}"] = Tensor(np.zeros(dim), requires_grad=True)

    def forward(self, x: Tensor, h: Tensor) -> Tensor:
        w = self.w
        z = sigmoid(add(add(matmul(x, w["wi_z"]), w["bi_z"]),
                        add(matmul(h, w["wh_z"]), w["bh_z"])))
        r = sigmoid(add(add(matmul(x, w["wi_r"]), w["bi_r"]),
                        add(matmul(h, w["wh_r"]), w["bh_r"])))
        n = tanh(add(add(matmul(x, w["wi_n"]), w["bi_n"]),
                     mul(r, add(matmul(h, w["wh_n"]), w["bh_n"]))))
        one_minus_z = add(scale(z, -1.0), Tensor(np.ones_like(z.data)))
        return add(mul(one_minus_z, n), mul(z, h))

    def parameters(self):
        return dict(self.w)


_ACTIVATIONS = {"relu": relu, "selu": selu, "sigmoid": sigmoid, "softmax": softmax_rows}


def build_layer(spec: LayerSpec, rng: np.random.Generator, layer_key: int = 0):
    """Construct the runtime layer object a LayerSpec describes."""
    if spec.kind == "dense":
        return Dense(spec.in_dim, spec.out_dim, rng)
    if spec.kind == "batchnorm":
        return BatchNorm(spec.out_dim or spec.in_dim, spec.momentum, spec.eps)
    if spec.kind == "dropout":
        return Dropout(spec.rate, layer_key)
    if spec.kind == "gru_cell":
        return GruCell(spec.out_dim or spec.in_dim, rng)
    if spec.kind in _ACTIVATIONS:
        return spec.kind
    raise ValueError(f"unknown layer kind {spec.kind!r}")


def layer_forward(layer, x: Tensor, mode: str = "infer",
                  rng_key: tuple[int, int] = (0, 0), hidden: Tensor | None = None) -> Tensor:
    """Apply a built layer. mode switches dropout/batchnorm behavior."""
    if isinstance(layer, str):
        return _ACTIVATIONS[layer](x)
    if isinstance(layer, Dense):
        return layer.forward(x)
    if isinstance(layer, BatchNorm):
        return layer.forward(x, mode)
    if isinstance(layer, Dropout):
        return layer.forward(x, mode, rng_key)
    if isinstance(layer, GruCell):
        if hidden is None:
            raise ValueError("gru_cell needs a hidden state")
        return layer.forward(x, hidden)
    raise TypeError(f"not a layer: {layer!r}")


def regularization_penalty(weights, l1: float, l2: float) -> Tensor:
    """l1*sum(|w|) + l2*sum(w^2) over the given weight tensors."""
    total = Tensor(0.0)
    for w in weights:
        if l1:
            total = add(total, scale(total_sum(absval(w)), l1))
        if l2:
            total = add(total, scale(total_sum(mul(w, w)), l2))
    return total


# ---------------------------------------------------------------------------
# Optimizer and learning-rate schedule
# ---------------------------------------------------------------------------

@dataclass
class AdamConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass
class AdamState:
    """First/second moment accumulators keyed like the parameter dict."""

    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    step: int = 0


def adam_step(params: dict, grads: dict, state: AdamState,
              cfg: AdamConfig, lr: float | None = None) -> AdamState:
    """One Adam update with bias correction; mutates params in place."""
    state.step += 1
    t = state.step
    rate = cfg.lr if lr is None else lr
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            continue
        if name not in state.m:
            state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        state.m[name] = cfg.beta1 * state.m[name] + (1 - cfg.beta1) * g
        state.v[name] = cfg.beta2 * state.v[name] + (1 - cfg.beta2) * g * g
        mhat = state.m[name] / (1 - cfg.beta1 ** t)
        vhat = state.v[name] / (1 - cfg.beta2 ** t)
        p.data -= rate * mhat / (np.sqrt(vhat) + cfg.eps)
    return state


@dataclass
class CosineRestartSchedule:
    """Cosine decay from base to min, restarting with growing periods."""

    base_lr: float = 1e-3
    min_lr: float = 1e-5
    period: int = 50
    period_mult: float = 2.0


def cosine_warm_restart_lr(step: int, schedule: CosineRestartSchedule) -> float:
    """Learning rate at a given step (usually an epoch index)."""
    if step < 0:
        raise ValueError("step must be >= 0")
    t = step
    period = schedule.period
    while t >= period:
        t -= period
        period = max(1, int(round(period * schedule.period_mult)))
    frac = t / period
    return schedule.min_lr + 0.5 * (schedule.base_lr - schedule.min_lr) * (
        1.0 + math.cos(math.pi * frac)
    )
