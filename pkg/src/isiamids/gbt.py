"""Second-order gradient-boosted regression trees for binary (logistic) and
multiclass (softmax) classification.

Each boosting round fits one tree per output margin to the per-sample
gradient/hessian pair of the current loss.  Leaf weight is ``-G/(H + l2)``
and a split is scored by::

    gain = 0.5 * (GL^2/(HL+l2) + GR^2/(HR+l2) - (GL+GR)^2/(HL+HR+l2)) - split_penalty

Splits are found by exact greedy search: every midpoint between consecutive
distinct feature values present in a node is a candidate, ties resolved to the
lowest feature index and then the lowest threshold.  A sample goes left iff
``x[feature] < threshold``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import expit, log_softmax, softmax

from . import container

# Relative slack under which two candidate gains count as tied.
GAIN_TIE_RTOL = 1e-12


@dataclass(frozen=True)
class GbtConfig:
    rounds: int = 100
    max_depth: int = 6
    learning_rate: float = 0.3
    l2_penalty: float = 1.0
    split_penalty: float = 0.0
    min_child_hessian: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("learning_rate must lie in (0, 1]")
        if self.l2_penalty < 0 or self.split_penalty < 0 or self.min_child_hessian < 0:
            raise ValueError("penalties and min_child_hessian must be non-negative")


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    gain: float


@dataclass
class Tree:
    """Flat preorder node list.  ``feature == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    weight: np.ndarray

    @classmethod
    def leaf(cls, weight: float) -> "Tree":
        return cls(
            np.array([-1], np.int32), np.array([0.0]), np.array([-1], np.int32),
            np.array([-1], np.int32), np.array([weight], np.float64),
        )

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def depth(self, node: int = 0) -> int:
        if self.feature[node] < 0:
            return 0
        return 1 + max(self.depth(self.left[node]), self.depth(self.right[node]))

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row of ``X``."""
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = np.flatnonzero(self.feature[node] >= 0)
        while active.size:
            cur = node[active]
            go_left = X[active, self.feature[cur]] < self.threshold[cur]
            node[active] = np.where(go_left, self.left[cur], self.right[cur])
            active = active[self.feature[node[active]] >= 0]
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.weight[self.apply(X)]


class _Builder:
    """Grows one tree on fixed (g, h).  Feature values are pre-ranked once per
    training run so node statistics reduce to bincounts over rank codes."""

    def __init__(self, X: np.ndarray, config: GbtConfig):
        self.config = config
        self.n, self.d = X.shape
        self.uniq = []
        codes = np.empty((self.n, self.d), dtype=np.int64)
        for f in range(self.d):
            u, inv = np.unique(X[:, f], return_inverse=True)
            self.uniq.append(u)
            codes[:, f] = inv.ravel()
        self.codes = codes

    def best_split(self, rows: np.ndarray, g: np.ndarray, h: np.ndarray) -> Split | None:
        cfg = self.config
        lam = cfg.l2_penalty
        gr = g[rows]
        hr = h[rows]
        G = gr.sum()
        H = hr.sum()
        parent = G * G / max(H + lam, 1e-300)
        scored = []  # (feature, present codes, gains)
        sub = self.codes[rows]
        for f in range(self.d):
            nu = len(self.uniq[f])
            if nu < 2:
                continue
            col = sub[:, f]
            if nu <= 4 * len(rows):
                cnt = np.bincount(col, minlength=nu)
                present = np.flatnonzero(cnt)
                if present.size < 2:
                    continue
                Gb = np.bincount(col, weights=gr, minlength=nu)[present]
                Hb = np.bincount(col, weights=hr, minlength=nu)[present]
            else:
                present, inv = np.unique(col, return_inverse=True)
                if present.size < 2:
                    continue
                Gb = np.bincount(inv, weights=gr, minlength=present.size)
                Hb = np.bincount(inv, weights=hr, minlength=present.size)
            GL = np.cumsum(Gb)[:-1]
            HL = np.cumsum(Hb)[:-1]
            GR = G - GL
            HR = H - HL
            ok = (HL >= cfg.min_child_hessian) & (HR >= cfg.min_child_hessian)
            if not ok.any():
                continue
            gain = 0.5 * (GL * GL / np.maximum(HL + lam, 1e-300) + GR * GR / np.maximum(HR + lam, 1e-300) - parent)
            gain = gain - cfg.split_penalty
            gain[~ok] = -np.inf
            scored.append((f, present, gain))
        if not scored:
            return None
        top = max(float(gain.max()) for _, _, gain in scored)
        floor = top - GAIN_TIE_RTOL * max(1.0, abs(top))
        for f, present, gain in scored:
            near = np.flatnonzero(gain >= floor)
            if near.size:
                k = int(near[0])
                break
        if not gain[k] > 0.0:
            return None
        u = self.uniq[f]
        return Split(f, midpoint(u[present[k]], u[present[k + 1]]), float(gain[k]))

    def grow(self, g: np.ndarray, h: np.ndarray, rows: np.ndarray | None = None) -> tuple[Tree, np.ndarray]:
        """Return the tree and each training row's (unscaled) leaf weight."""
        rows = np.arange(self.n) if rows is None else rows
        feature, threshold, left, right, weight = [], [], [], [], []
        out = np.zeros(self.n)
        lam = self.config.l2_penalty

        def node(idx: np.ndarray, depth: int) -> int:
            me = len(feature)
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            weight.append(0.0)
            split = self.best_split(idx, g, h) if depth < self.config.max_depth and idx.size > 1 else None
            if split is None:
                denom = h[idx].sum() + lam
                w = -g[idx].sum() / denom if denom > 0 else 0.0
                weight[me] = w
                out[idx] = w
                return me
            u = self.uniq[split.feature]
            go_left = u[self.codes[idx, split.feature]] < split.threshold
            feature[me] = split.feature
            threshold[me] = split.threshold
            left[me] = node(idx[go_left], depth + 1)
            right[me] = node(idx[~go_left], depth + 1)
            return me

        node(rows, 0)
        tree = Tree(
            np.array(feature, np.int32), np.array(threshold, np.float64),
            np.array(left, np.int32), np.array(right, np.int32), np.array(weight, np.float64),
        )
        return tree, out


def midpoint(lo: float, hi: float) -> float:
    t = (lo + hi) / 2.0
    # adjacent floats: the midpoint may round onto lo, which would send lo right
    return float(hi) if not lo < t <= hi else float(t)


def find_best_split(X: np.ndarray, g: np.ndarray, h: np.ndarray, config: GbtConfig = GbtConfig()) -> Split | None:
    """Best root split of (X, g, h), or None when no split has positive gain."""
    X = np.asarray(X, dtype=np.float64)
    return _Builder(X, config).best_split(np.arange(X.shape[0]), np.asarray(g, float), np.asarray(h, float))


@dataclass
class GbtModel:
    num_classes: int
    n_features: int
    config: GbtConfig
    base_score: float = 0.0
    trees: list[list[Tree]] = field(default_factory=list)  # [round][margin]
    loss_history: list[float] = field(default_factory=list)

    @property
    def n_margins(self) -> int:
        return 1 if self.num_classes == 2 else self.num_classes

    @property
    def tree_count(self) -> int:
        return sum(len(r) for r in self.trees)

    def _check(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got shape {X.shape}")
        return X

    def margins(self, X) -> np.ndarray:
        X = self._check(X)
        F = np.full((X.shape[0], self.n_margins), self.base_score)
        eta = self.config.learning_rate
        for trees in self.trees:
            for k, tree in enumerate(trees):
                F[:, k] += eta * tree.predict(X)
        return F

    def predict_score(self, X) -> np.ndarray:
        """Class probabilities; a 1-D sample yields a 1-D vector."""
        single = np.ndim(X) == 1
        F = self.margins(X)
        if self.num_classes == 2:
            p = expit(F[:, 0])
            P = np.column_stack([1.0 - p, p])
        else:
            P = softmax(F, axis=1)
        return P[0] if single else P

    def predict_label(self, X) -> np.ndarray | int:
        P = self.predict_score(X)
        return int(np.argmax(P)) if P.ndim == 1 else np.argmax(P, axis=1)

    # -- serialization ----------------------------------------------------

    def to_container(self) -> tuple[dict, dict]:
        flat = [t for r in self.trees for t in r]
        sizes = np.array([t.n_nodes for t in flat], dtype=np.int64)
        cat = lambda attr, dt: (np.concatenate([getattr(t, attr) for t in flat]).astype(dt) if flat else np.zeros(0, dt))
        meta = {
            "version": 1,
            "num_classes": self.num_classes,
            "n_features": self.n_features,
            "config": asdict(self.config),
            "rounds_trained": len(self.trees),
        }
        arrays = {
            "base_score": np.array([self.base_score], np.float64),
            "loss_history": np.array(self.loss_history, np.float64),
            "tree_sizes": sizes,
            "feature": cat("feature", np.int32),
            "threshold": cat("threshold", np.float64),
            "left": cat("left", np.int32),
            "right": cat("right", np.int32),
            "weight": cat("weight", np.float64),
        }
        return meta, arrays

    @classmethod
    def from_container(cls, meta: dict, arrays: dict) -> "GbtModel":
        model = cls(meta["num_classes"], meta["n_features"], GbtConfig(**meta["config"]),
                    float(arrays["base_score"][0]), [], list(arrays["loss_history"]))
        per_round = model.n_margins
        start = 0
        flat = []
        for size in arrays["tree_sizes"]:
            sl = slice(start, start + int(size))
            flat.append(Tree(arrays["feature"][sl].copy(), arrays["threshold"][sl].copy(),
                             arrays["left"][sl].copy(), arrays["right"][sl].copy(), arrays["weight"][sl].copy()))
            start += int(size)
        model.trees = [flat[i:i + per_round] for i in range(0, len(flat), per_round)]
        return model

    def save(self, path) -> str:
        return container.save(path, "gbt", *self.to_container())

    @classmethod
    def load(cls, path) -> "GbtModel":
        return cls.from_container(*container.load(path, kind="gbt"))


def logistic_loss(y: np.ndarray, F: np.ndarray) -> float:
    # log(1 + e^F) - y F, stable
    return float(np.mean(np.logaddexp(0.0, F) - y * F))


def softmax_loss(y: np.ndarray, F: np.ndarray) -> float:
    return float(-np.mean(log_softmax(F, axis=1)[np.arange(len(y)), y]))


def _prepare(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("training data is empty")
    if y.shape != (X.shape[0],):
        raise ValueError("need exactly one label per row")
    return X, y.astype(np.int64)


def train_binary(X, y, config: GbtConfig = GbtConfig()) -> GbtModel:
    """Boosted logistic model, one tree per round on the logit."""
    X, y = _prepare(X, y)
    if not np.isin(y, (0, 1)).all():
        raise ValueError("binary labels must be 0 or 1")
    if X.shape[0] < 2 or np.unique(y).size < 2:
        raise ValueError("binary training needs both classes present")
    builder = _Builder(X, config)
    model = GbtModel(2, X.shape[1], config, 0.0)
    F = np.full(X.shape[0], model.base_score)
    model.loss_history.append(logistic_loss(y, F))
    for _ in range(config.rounds):
        p = expit(F)
        tree, leaf_out = builder.grow(p - y, p * (1.0 - p))
        F = F + config.learning_rate * leaf_out
        model.trees.append([tree])
        model.loss_history.append(logistic_loss(y, F))
    return model


def train_multiclass(X, y, num_classes: int | None = None, config: GbtConfig = GbtConfig()) -> GbtModel:
    """Boosted softmax model with ``num_classes`` trees per round."""
    X, y = _prepare(X, y)
    K = int(num_classes if num_classes is not None else y.max() + 1)
    if K < 2:
        raise ValueError("multiclass training needs at least two classes")
    if y.min() < 0 or y.max() >= K:
        raise ValueError("label outside 0..K-1")
    counts = np.bincount(y, minlength=K)
    if (counts == 0).any():
        raise ValueError(f"class {int(np.flatnonzero(counts == 0)[0])} has no samples")
    if K == 2:
        return train_binary(X, y, config)
    builder = _Builder(X, config)
    model = GbtModel(K, X.shape[1], config, 0.0)
    F = np.full((X.shape[0], K), model.base_score)
    Y = np.eye(K)[y]
    model.loss_history.append(softmax_loss(y, F))
    for _ in range(config.rounds):
        P = softmax(F, axis=1)
        round_trees = []
        delta = np.zeros_like(F)
        for k in range(K):
            pk = P[:, k]
            tree, leaf_out = builder.grow(pk - Y[:, k], pk * (1.0 - pk))
            round_trees.append(tree)
            delta[:, k] = leaf_out
        F = F + config.learning_rate * delta
        model.trees.append(round_trees)
        model.loss_history.append(softmax_loss(y, F))
    return model
