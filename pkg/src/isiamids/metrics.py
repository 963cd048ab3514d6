"""Confusion matrices, accuracy / recall / precision / F1, one-vs-rest
multiclass reports, ROC/AUC and per-sample timing.

Binary convention: class 1 is *attack* (positive), class 0 is *normal*.
Confusion grids are laid out with truth on rows and prediction on columns.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np


@dataclass(frozen=True)
class BinaryConfusion:
    tn: int
    fp: int
    fn: int
    tp: int

    def __post_init__(self):
        if min(self.tn, self.fp, self.fn, self.tp) < 0:
            raise ValueError("confusion counts must be non-negative")

    @classmethod
    def from_labels(cls, truth, pred) -> "BinaryConfusion":
        truth = np.asarray(truth).astype(bool)
        pred = np.asarray(pred).astype(bool)
        if truth.shape != pred.shape:
            raise ValueError("truth and prediction lengths differ")
        return cls(
            tn=int(np.sum(~truth & ~pred)), fp=int(np.sum(~truth & pred)),
            fn=int(np.sum(truth & ~pred)), tp=int(np.sum(truth & pred)),
        )

    @property
    def total(self) -> int:
        return self.tn + self.fp + self.fn + self.tp

    def grid(self) -> np.ndarray:
        return np.array([[self.tn, self.fp], [self.fn, self.tp]], dtype=np.int64)

    def to_dict(self) -> dict:
        return asdict(self)


def accuracy(cm: BinaryConfusion) -> float:
    total = cm.tp + cm.tn + cm.fp + cm.fn
    if total == 0:
        raise ValueError("accuracy of an empty confusion matrix")
    return (cm.tp + cm.tn) / total


@dataclass(frozen=True)
class ClassReport:
    name: str
    n_A: int  # rows truly in the class
    n_p: int  # of those, predicted correctly
    n_pA: int  # rows predicted as the class
    n_aA: int  # of those, truly in the class
    recall: float
    precision: float
    f1: float
    precision_undefined: bool = False
    f1_undefined: bool = False


def recall_precision_f1(n_A: int, n_p: int, n_pA: int, n_aA: int, name: str = "") -> ClassReport:
    """Recall n_p/n_A, precision n_aA/n_pA and their harmonic mean.

    Precision with no predictions and F1 with a zero component are reported
    as 0 and flagged as undefined.
    """
    if n_A <= 0:
        raise ValueError(f"class {name!r} has no samples; recall is undefined")
    if not (0 <= n_p <= n_A and 0 <= n_aA <= n_pA):
        raise ValueError("inconsistent class counts")
    recall = n_p / n_A
    p_undef = n_pA == 0
    precision = 0.0 if p_undef else n_aA / n_pA
    f_undef = recall == 0.0 or precision == 0.0
    f1 = 0.0 if f_undef else 2.0 / (1.0 / recall + 1.0 / precision)
    return ClassReport(name, n_A, n_p, n_pA, n_aA, recall, precision, f1, p_undef, f_undef)


def binary_class_reports(cm: BinaryConfusion) -> list[ClassReport]:
    """Reports for the normal and the attack class of a binary matrix."""
    out = []
    if cm.tn + cm.fp:
        out.append(recall_precision_f1(cm.tn + cm.fp, cm.tn, cm.tn + cm.fn, cm.tn, "normal"))
    if cm.tp + cm.fn:
        out.append(recall_precision_f1(cm.tp + cm.fn, cm.tp, cm.tp + cm.fp, cm.tp, "attack"))
    return out


@dataclass(frozen=True)
class MulticlassConfusion:
    grid: np.ndarray  # (K, K), rows = truth
    class_names: tuple[str, ...]

    @property
    def total(self) -> int:
        return int(self.grid.sum())


def confusion_grid(truth, pred, K: int) -> np.ndarray:
    truth = np.asarray(truth, dtype=np.int64)
    pred = np.asarray(pred, dtype=np.int64)
    if truth.shape != pred.shape:
        raise ValueError("truth and prediction lengths differ")
    for arr in (truth, pred):
        if arr.size and (arr.min() < 0 or arr.max() >= K):
            raise ValueError(f"label outside 0..{K - 1}")
    return np.bincount(truth * K + pred, minlength=K * K).reshape(K, K)


def multiclass_report(truth, pred, K: int, class_names: Sequence[str] | None = None):
    """K x K grid plus one-vs-rest reports for every class that occurs in ``truth``."""
    names = tuple(class_names) if class_names is not None else tuple(str(k) for k in range(K))
    grid = confusion_grid(truth, pred, K)
    reports = []
    for k in range(K):
        n_A = int(grid[k].sum())
        if n_A == 0:
            continue
        n_pA = int(grid[:, k].sum())
        reports.append(recall_precision_f1(n_A, int(grid[k, k]), n_pA, int(grid[k, k]), names[k]))
    return MulticlassConfusion(grid, names), reports


@dataclass(frozen=True)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray  # score >= threshold counts as positive
    auc: float


def roc_auc(scores, truth) -> RocCurve:
    """ROC over every distinct score; equal scores move the curve together."""
    scores = np.asarray(scores, dtype=np.float64)
    truth = np.asarray(truth).astype(bool)
    if scores.shape != truth.shape:
        raise ValueError("scores and truth lengths differ")
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    P = int(truth.sum())
    N = truth.size - P
    if P == 0 or N == 0:
        raise ValueError("ROC needs both classes in the truth labels")
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    t = truth[order]
    # last index of every tie group in descending order
    ends = np.flatnonzero(np.r_[s[1:] != s[:-1], True])
    tps = np.cumsum(t)[ends]
    fps = (ends + 1) - tps
    fpr = np.r_[0.0, fps / N]
    tpr = np.r_[0.0, tps / P]
    thresholds = np.r_[np.inf, s[ends]]
    auc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))
    return RocCurve(fpr, tpr, thresholds, auc)


def write_roc_points(path, curve: RocCurve):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("fpr\ttpr\tthreshold\n")
        for f, t, th in zip(curve.fpr, curve.tpr, curve.thresholds):
            fh.write(f"{float(f)!r}\t{float(t)!r}\t{float(th)!r}\n")


@dataclass
class TimingReport:
    subject: str
    mean_seconds: dict  # class name -> mean seconds per sample
    counts: dict  # class name -> samples timed
    indices: dict  # class name -> sampled row indices

    def to_dict(self) -> dict:
        return {"subject": self.subject, "mean_seconds": self.mean_seconds,
                "counts": self.counts, "indices": self.indices}


def sample_per_class(y, per_class: int, seed: int, class_names=("normal", "attack")) -> dict:
    """Seeded draw of ``per_class`` row indices for every class (sorted)."""
    y = np.asarray(y)
    rng = np.random.default_rng(seed)
    picks = {}
    for c, name in enumerate(class_names):
        pool = np.flatnonzero(y == c)
        if pool.size == 0:
            raise ValueError(f"class {name!r} has no samples to time")
        picks[name] = sorted(int(i) for i in rng.choice(pool, size=min(per_class, pool.size), replace=False))
    return picks


def time_per_sample(predict: Callable, X, y, per_class: int = 10, seed: int = 0,
                    subject: str = "", class_names=("normal", "attack"), picks: dict | None = None) -> TimingReport:
    """Mean wall-clock seconds of single-sample ``predict`` calls, per class."""
    X = np.asarray(X)
    picks = picks if picks is not None else sample_per_class(y, per_class, seed, class_names)
    first = next(iter(picks.values()))[0]
    predict(X[first:first + 1])  # warm-up
    means = {}
    for name, idx in picks.items():
        elapsed = []
        for i in idx:
            t0 = time.perf_counter()
            predict(X[i:i + 1])
            elapsed.append(time.perf_counter() - t0)
        means[name] = float(np.mean(elapsed))
    return TimingReport(subject, means, {k: len(v) for k, v in picks.items()}, picks)


def median_call_seconds(fn: Callable, repeats: int = 50) -> float:
    fn()
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def format_binary_grid(title: str, cm: BinaryConfusion) -> str:
    """Appendix-style table: truth rows, predicted columns."""
    return "\n".join([
        f"{title}\tNormal\tAttack",
        f"Normal\t{cm.tn}\t{cm.fp}",
        f"Attack\t{cm.fn}\t{cm.tp}",
    ])


def format_class_reports(reports: Sequence[ClassReport]) -> str:
    lines = ["class\tn_A\tn_p\tn_pA\tn_aA\trecall\tprecision\tf1"]
    for r in reports:
        flag = lambda v, undef: f"{v:.4f}" + ("*" if undef else "")
        lines.append(f"{r.name}\t{r.n_A}\t{r.n_p}\t{r.n_pA}\t{r.n_aA}\t{r.recall:.4f}\t"
                     f"{flag(r.precision, r.precision_undefined)}\t{flag(r.f1, r.f1_undefined)}")
    if any(r.precision_undefined or r.f1_undefined for r in reports):
        lines.append("* zero denominator, reported as 0")
    return "\n".join(lines)
