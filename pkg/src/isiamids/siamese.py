"""Siamese twin encoder trained with contrastive loss, used as a binary
normal/attack classifier through distances to stored reference samples.

Both twins are the same :class:`~isiamids.nn.Mlp` object.  During training the
left and right halves of a pair batch are stacked and pushed through it in one
pass, so their gradients accumulate into the single parameter set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import container
from .nn import EMBEDDING, DivergenceError, Mlp, TrainConfig

SIMILAR = 1
DISSIMILAR = 0


def contrastive_loss(d, y, margin: float = 1.0):
    """``y*d^2 + (1-y)*max(0, margin-d)^2``; y=1 marks a similar pair."""
    d = np.asarray(d, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if margin <= 0:
        raise ValueError("margin must be positive")
    if np.any(d < 0):
        raise ValueError("distance must be non-negative")
    out = y * d * d + (1.0 - y) * np.maximum(0.0, margin - d) ** 2
    return float(out) if out.ndim == 0 else out


def contrastive_grad(e_left: np.ndarray, e_right: np.ndarray, y: np.ndarray, margin: float):
    """Mean contrastive loss over a batch and its gradient w.r.t. both embeddings."""
    e_left = np.asarray(e_left, np.float64)
    e_right = np.asarray(e_right, np.float64)
    y = np.asarray(y, np.float64)
    diff = e_left - e_right
    d = np.sqrt(np.sum(diff * diff, axis=1))
    hinge = np.maximum(0.0, margin - d)
    loss = np.mean(y * d * d + (1.0 - y) * hinge * hinge)
    # d(d^2)/d(diff) = 2 diff;  d(hinge^2)/d(diff) = -2 hinge diff / d
    safe_d = np.where(d > 0.0, d, 1.0)
    coef = 2.0 * y - (1.0 - y) * np.where(d > 0.0, 2.0 * hinge / safe_d, 0.0)
    g = coef[:, None] * diff / len(y)
    return float(loss), g, -g


@dataclass(frozen=True)
class PairBatch:
    left: np.ndarray  # row indices into the training matrix
    right: np.ndarray
    y: np.ndarray  # 1 similar, 0 dissimilar

    def __len__(self):
        return len(self.y)


def make_pairs(y, count: int, seed: int = 0) -> PairBatch:
    """Half similar, half dissimilar pairs over a binary-labelled training set.

    Similar pairs pick their class uniformly, so a class with a handful of
    rows is paired as often as a large one (sampling is with replacement).
    """
    y = np.asarray(y)
    normal = np.flatnonzero(y == 0)
    attack = np.flatnonzero(y == 1)
    if normal.size == 0 or attack.size == 0:
        raise ValueError("pair construction needs both classes present")
    rng = np.random.default_rng(seed)
    n_sim = (count + 1) // 2
    n_dis = count // 2

    cls = rng.integers(0, 2, size=n_sim)
    pools = (normal, attack)
    sim_l = np.empty(n_sim, np.int64)
    sim_r = np.empty(n_sim, np.int64)
    for c in (0, 1):
        sel = cls == c
        k = int(sel.sum())
        sim_l[sel] = rng.choice(pools[c], size=k, replace=True)
        sim_r[sel] = rng.choice(pools[c], size=k, replace=True)

    a = rng.choice(normal, size=n_dis, replace=True)
    b = rng.choice(attack, size=n_dis, replace=True)
    flip = rng.random(n_dis) < 0.5
    dis_l = np.where(flip, b, a)
    dis_r = np.where(flip, a, b)

    left = np.concatenate([sim_l, dis_l])
    right = np.concatenate([sim_r, dis_r])
    lab = np.concatenate([np.full(n_sim, SIMILAR), np.full(n_dis, DISSIMILAR)]).astype(np.int64)
    order = rng.permutation(count)
    return PairBatch(left[order], right[order], lab[order])


class TwinEncoder:
    def __init__(self, net: Mlp, margin: float = 1.0):
        if net.mode != EMBEDDING:
            raise ValueError("the twin encoder must be an embedding-mode network")
        if margin <= 0:
            raise ValueError("margin must be positive")
        self.net = net
        self.margin = float(margin)

    @classmethod
    def build(cls, n_in: int, hidden=(1024, 512, 256, 128), embedding: int = 64,
              dropout: float = 0.5, margin: float = 1.0, seed: int = 0, dtype=np.float64) -> "TwinEncoder":
        net = Mlp.build(n_in, hidden, embedding, EMBEDDING, dropout=dropout,
                        input_dropout=dropout, seed=seed, dtype=dtype)
        return cls(net, margin)

    def embed(self, X) -> np.ndarray:
        return np.asarray(self.net.embed(X), dtype=np.float64)

    def distance(self, a, b):
        """Euclidean distance between embeddings, row-paired; scalars for 1-D input."""
        single = np.ndim(a) == 1 and np.ndim(b) == 1
        ea, eb = self.embed(a), self.embed(b)
        if ea.shape != eb.shape:
            raise ValueError("paired inputs must have the same shape")
        d = np.sqrt(np.sum((ea - eb) ** 2, axis=1))
        return float(d[0]) if single else d

    def pair_loss(self, X, pairs: PairBatch) -> float:
        """Mean eval-mode contrastive loss of ``pairs``."""
        d = self.distance(X[pairs.left], X[pairs.right])
        return float(np.mean(contrastive_loss(d, pairs.y, self.margin)))


def train_siamese(encoder: TwinEncoder, X, y, epochs: int = 10, pairs_per_epoch: int | None = None,
                  config: TrainConfig = TrainConfig(), log=None) -> list[float]:
    """Train ``encoder`` in place on fresh pairs each epoch; returns mean loss per epoch.

    ``pairs_per_epoch`` defaults to twice the training-set size.
    """
    net = encoder.net
    X = net._input(X)
    y = np.asarray(y)
    count = 2 * X.shape[0] if pairs_per_epoch is None else int(pairs_per_epoch)
    rng = np.random.default_rng(config.seed)
    adam = config.adam()
    history = []
    for epoch in range(epochs):
        pairs = make_pairs(y, count, seed=int(rng.integers(2**63 - 1)))
        total = 0.0
        for start in range(0, count, config.batch_size):
            sl = slice(start, start + config.batch_size)
            li, ri, yb = pairs.left[sl], pairs.right[sl], pairs.y[sl]
            B = len(yb)
            try:
                emb, cache = net.forward(np.concatenate([X[li], X[ri]]), training=True, rng=rng)
            except DivergenceError as exc:
                raise DivergenceError(f"siamese training diverged at epoch {epoch}") from exc
            loss, gl, gr = contrastive_grad(emb[:B], emb[B:], yb, encoder.margin)
            total += loss * B
            grads = net.backward(cache, np.concatenate([gl, gr]))
            adam.step(net.params, grads)
            net.bump()
        mean = total / count
        if not np.isfinite(mean):
            raise DivergenceError(f"non-finite contrastive loss at epoch {epoch}")
        history.append(float(mean))
        if log is not None:
            log(f"epoch {epoch + 1}/{epochs} loss {mean:.6f}")
    return history


@dataclass(frozen=True)
class ReferenceSet:
    normal: np.ndarray  # (R, d)
    attack: np.ndarray

    def __post_init__(self):
        if len(self.normal) < 1 or len(self.attack) < 1:
            raise ValueError("each reference class needs at least one sample")

    @classmethod
    def sample(cls, X, y, per_class: int = 25, seed: int = 0) -> "ReferenceSet":
        """Seeded uniform draw of ``per_class`` training rows per class
        (all rows when a class is smaller)."""
        X = np.asarray(X)
        y = np.asarray(y)
        rng = np.random.default_rng(seed)
        picked = []
        for c in (0, 1):
            pool = np.flatnonzero(y == c)
            if pool.size == 0:
                raise ValueError(f"no training rows for reference class {c}")
            take = rng.choice(pool, size=min(per_class, pool.size), replace=False)
            picked.append(X[np.sort(take)])
        return cls(*picked)


def mean_distances(encoder: TwinEncoder, refs: ReferenceSet, X, chunk: int = 4096):
    """Mean embedding distance of each row of ``X`` to the normal and attack references."""
    E = encoder.embed(X)
    out = []
    for ref in (refs.normal, refs.attack):
        R = encoder.embed(ref)
        D = np.empty(E.shape[0])
        for s in range(0, E.shape[0], chunk):
            diff = E[s:s + chunk, None, :] - R[None, :, :]
            D[s:s + chunk] = np.sqrt(np.sum(diff * diff, axis=2)).mean(axis=1)
        out.append(D)
    return out[0], out[1]


def predict_binary(encoder: TwinEncoder, refs: ReferenceSet, X):
    """Return ``(labels, attack_scores)``.

    ``attack_score = D_normal / (D_normal + D_attack)`` (0.5 when both are zero)
    and the label is 1 iff the score exceeds 0.5, i.e. the sample sits closer to
    the attack references; ties go to normal.
    """
    single = np.ndim(X) == 1
    dn, da = mean_distances(encoder, refs, X)
    total = dn + da
    score = np.where(total > 0.0, dn / np.where(total > 0.0, total, 1.0), 0.5)
    label = (score > 0.5).astype(np.int64)
    if single:
        return int(label[0]), float(score[0])
    return label, score


@dataclass
class SiameseClassifier:
    encoder: TwinEncoder
    refs: ReferenceSet

    def attack_score(self, X) -> np.ndarray:
        return predict_binary(self.encoder, self.refs, np.atleast_2d(X))[1]

    def to_container(self) -> tuple[dict, dict]:
        meta, arrays = self.encoder.net.to_container()
        arrays = container.prefixed("net", arrays)
        arrays["refs/normal"] = np.asarray(self.refs.normal, np.float64)
        arrays["refs/attack"] = np.asarray(self.refs.attack, np.float64)
        return {"version": 1, "margin": self.encoder.margin, "net": meta}, arrays

    @classmethod
    def from_container(cls, meta: dict, arrays: dict) -> "SiameseClassifier":
        net = Mlp.from_container(meta["net"], container.unprefixed("net", arrays))
        return cls(TwinEncoder(net, meta["margin"]), ReferenceSet(arrays["refs/normal"], arrays["refs/attack"]))

    def save(self, path) -> str:
        return container.save(path, "siamese", *self.to_container())

    @classmethod
    def load(cls, path) -> "SiameseClassifier":
        return cls.from_container(*container.load(path, kind="siamese"))
