"""Fully connected feed-forward networks in numpy.

An :class:`Mlp` is a stack of affine layers with tanh (hidden) or linear
(final) activations and optional inverted dropout on each layer's input.  In
``softmax-classifier`` mode the final linear output is passed through a
softmax; in ``embedding`` mode it is returned as is.

``backward`` takes the gradient of the loss w.r.t. the final *linear* output
(the logits in classifier mode) and returns parameter gradients in the same
order as :attr:`Mlp.params`: ``[W0, b0, W1, b1, ...]``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import log_softmax, softmax

from . import container

TANH = "tanh"
LINEAR = "linear"
CLASSIFIER = "softmax-classifier"
EMBEDDING = "embedding"


class DivergenceError(ArithmeticError):
    pass


@dataclass(frozen=True)
class LayerSpec:
    n_in: int
    n_out: int
    activation: str = TANH
    dropout: float = 0.0  # applied to this layer's input

    def __post_init__(self):
        if self.n_in < 1 or self.n_out < 1:
            raise ValueError("layer widths must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout rate must lie in [0, 1)")
        if self.activation not in (TANH, LINEAR):
            raise ValueError(f"unknown activation {self.activation!r}")


@dataclass
class Cache:
    net_id: int
    version: int
    inputs: list  # post-dropout input of each layer
    masks: list  # scaled dropout mask per layer, or None
    outputs: list  # post-activation output of each layer


class Mlp:
    def __init__(self, layers: Sequence[LayerSpec], mode: str = CLASSIFIER,
                 weights=None, biases=None, dtype=np.float64):
        layers = tuple(layers)
        if not layers:
            raise ValueError("an Mlp needs at least one layer")
        for a, b in zip(layers, layers[1:]):
            if a.n_out != b.n_in:
                raise ValueError(f"layer widths disagree: {a.n_out} -> {b.n_in}")
        if mode not in (CLASSIFIER, EMBEDDING):
            raise ValueError(f"unknown output mode {mode!r}")
        self.layers = layers
        self.mode = mode
        self.dtype = np.dtype(dtype)
        if weights is None:
            weights = [np.zeros((l.n_in, l.n_out)) for l in layers]
        if biases is None:
            biases = [np.zeros(l.n_out) for l in layers]
        self.weights = [np.ascontiguousarray(w, dtype=self.dtype) for w in weights]
        self.biases = [np.ascontiguousarray(b, dtype=self.dtype) for b in biases]
        for l, w, b in zip(layers, self.weights, self.biases):
            if w.shape != (l.n_in, l.n_out) or b.shape != (l.n_out,):
                raise ValueError("parameter shapes do not match the layer specs")
        self.version = 0

    @classmethod
    def build(cls, n_in: int, hidden: Sequence[int], n_out: int, mode: str = CLASSIFIER,
              dropout: float = 0.0, input_dropout: float = 0.0, seed: int = 0,
              dtype=np.float64) -> "Mlp":
        """tanh hidden layers, linear output, Glorot-uniform weights, zero biases.

        ``dropout`` is applied before every layer after the first;
        ``input_dropout`` before the first.
        """
        widths = [n_in, *hidden, n_out]
        layers = []
        for i in range(len(widths) - 1):
            act = TANH if i < len(widths) - 2 else LINEAR
            layers.append(LayerSpec(widths[i], widths[i + 1], act, input_dropout if i == 0 else dropout))
        rng = np.random.default_rng(seed)
        weights = []
        for l in layers:
            limit = np.sqrt(6.0 / (l.n_in + l.n_out))
            weights.append(rng.uniform(-limit, limit, size=(l.n_in, l.n_out)))
        return cls(layers, mode, weights, None, dtype)

    @property
    def n_in(self) -> int:
        return self.layers[0].n_in

    @property
    def n_out(self) -> int:
        return self.layers[-1].n_out

    @property
    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def bump(self):
        """Mark parameters as changed; caches from earlier forwards go stale."""
        self.version += 1

    def copy(self) -> "Mlp":
        return Mlp(self.layers, self.mode, [w.copy() for w in self.weights],
                   [b.copy() for b in self.biases], self.dtype)

    # -- passes -----------------------------------------------------------

    def _input(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=self.dtype)
        if X.ndim == 1:
            X = X[None, :]
        if X.ndim != 2 or X.shape[1] != self.n_in:
            raise ValueError(f"expected width {self.n_in}, got shape {X.shape}")
        return X

    def forward(self, X, training: bool = False, rng: np.random.Generator | None = None):
        """Return ``(output, cache)``; cache is None unless ``training``.

        Output is class probabilities (float64) in classifier mode and the raw
        final-layer vectors in embedding mode.
        """
        a = self._input(X)
        if training and rng is None:
            raise ValueError("training-mode forward needs an rng for dropout")
        inputs, masks, outputs = [], [], []
        for l, w, b in zip(self.layers, self.weights, self.biases):
            mask = None
            if training and l.dropout > 0.0:
                keep = 1.0 - l.dropout
                mask = (rng.random(a.shape) < keep).astype(self.dtype) / self.dtype.type(keep)
                a = a * mask
            z = a @ w + b
            out = np.tanh(z) if l.activation == TANH else z
            if training:
                inputs.append(a)
                masks.append(mask)
                outputs.append(out)
            a = out
        if not np.all(np.isfinite(a)):
            raise DivergenceError("non-finite activation in forward pass")
        cache = Cache(id(self), self.version, inputs, masks, outputs) if training else None
        if self.mode == CLASSIFIER:
            return softmax(a.astype(np.float64), axis=1), cache
        return a, cache

    def logits(self, X) -> np.ndarray:
        a = self._input(X)
        for l, w, b in zip(self.layers, self.weights, self.biases):
            z = a @ w + b
            a = np.tanh(z) if l.activation == TANH else z
        return a

    def backward(self, cache: Cache | None, grad_out: np.ndarray) -> list[np.ndarray]:
        if cache is None or not cache.inputs:
            raise ValueError("backward needs the cache of a training-mode forward")
        if cache.net_id != id(self) or cache.version != self.version:
            raise ValueError("stale cache: parameters changed since the forward pass")
        delta = np.asarray(grad_out, dtype=self.dtype)
        grads = [None] * (2 * len(self.layers))
        for i in range(len(self.layers) - 1, -1, -1):
            l = self.layers[i]
            if l.activation == TANH:
                out = cache.outputs[i]
                delta = delta * (1.0 - out * out)
            grads[2 * i] = cache.inputs[i].T @ delta
            grads[2 * i + 1] = delta.sum(axis=0)
            if i:
                delta = delta @ self.weights[i].T
                if cache.masks[i] is not None:
                    delta = delta * cache.masks[i]
        return grads

    def predict_proba(self, X) -> np.ndarray:
        if self.mode != CLASSIFIER:
            raise ValueError("predict_proba needs a softmax-classifier network")
        single = np.ndim(X) == 1
        P, _ = self.forward(X)
        return P[0] if single else P

    def predict_label(self, X):
        P = self.predict_proba(X)
        return int(np.argmax(P)) if P.ndim == 1 else np.argmax(P, axis=1)

    def embed(self, X) -> np.ndarray:
        if self.mode != EMBEDDING:
            raise ValueError("embed needs an embedding-mode network")
        out, _ = self.forward(X)
        return out

    # -- serialization ----------------------------------------------------

    def to_container(self) -> tuple[dict, dict]:
        meta = {"version": 1, "mode": self.mode, "dtype": self.dtype.str,
                "layers": [asdict(l) for l in self.layers]}
        arrays = {}
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            arrays[f"W{i}"] = w
            arrays[f"b{i}"] = b
        return meta, arrays

    @classmethod
    def from_container(cls, meta: dict, arrays: dict) -> "Mlp":
        layers = [LayerSpec(**l) for l in meta["layers"]]
        n = len(layers)
        return cls(layers, meta["mode"], [arrays[f"W{i}"] for i in range(n)],
                   [arrays[f"b{i}"] for i in range(n)], np.dtype(meta["dtype"]))

    def save(self, path) -> str:
        return container.save(path, "mlp", *self.to_container())

    @classmethod
    def load(cls, path) -> "Mlp":
        return cls.from_container(*container.load(path, kind="mlp"))


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]):
        """In-place bias-corrected Adam update."""
        if not self.m:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p -= (self.lr / c1) * m / (np.sqrt(v / c2) + self.eps)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    batch_size: int = 256
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be >= 0 and batch_size >= 1")
        if not (self.lr > 0 and 0 <= self.beta1 < 1 and 0 <= self.beta2 < 1 and self.eps > 0):
            raise ValueError("invalid Adam hyperparameters")

    def adam(self) -> AdamState:
        return AdamState(self.lr, self.beta1, self.beta2, self.eps)


def cross_entropy(P: np.ndarray, y: np.ndarray) -> float:
    return float(-np.mean(np.log(np.clip(P[np.arange(len(y)), y], 1e-300, None))))


def cross_entropy_from_logits(Z: np.ndarray, y: np.ndarray) -> float:
    return float(-np.mean(log_softmax(np.asarray(Z, np.float64), axis=1)[np.arange(len(y)), y]))


def train(net: Mlp, X, y, config: TrainConfig = TrainConfig(), log=None) -> list[float]:
    """Minibatch Adam on softmax cross-entropy.  Updates ``net`` in place and
    returns the mean training loss of every epoch."""
    if net.mode != CLASSIFIER:
        raise ValueError("train needs a softmax-classifier network")
    X = net._input(X)
    y = np.asarray(y, dtype=np.int64)
    if y.shape != (X.shape[0],) or y.min() < 0 or y.max() >= net.n_out:
        raise ValueError("labels must be class indices valid for the output width")
    rng = np.random.default_rng(config.seed)
    adam = config.adam()
    n = X.shape[0]
    history = []
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            try:
                P, cache = net.forward(X[idx], training=True, rng=rng)
            except DivergenceError as exc:
                raise DivergenceError(f"training diverged at epoch {epoch}") from exc
            yb = y[idx]
            total += -np.log(np.clip(P[np.arange(len(idx)), yb], 1e-300, None)).sum()
            grad = P.copy()
            grad[np.arange(len(idx)), yb] -= 1.0
            grad /= len(idx)
            grads = net.backward(cache, grad)
            adam.step(net.params, grads)
            net.bump()
        loss = total / n
        if not np.isfinite(loss):
            raise DivergenceError(f"non-finite training loss at epoch {epoch}")
        history.append(float(loss))
        if log is not None:
            log(f"epoch {epoch + 1}/{config.epochs} loss {loss:.6f}")
    return history
