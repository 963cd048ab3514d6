"""Two-layer cascade.

Layer 1 passes each sample through an ordered chain of three binary stages.
A stage sees the sample only if every earlier stage called it normal, and the
first attack verdict ends the walk.  Samples flagged at any stage go to the
Layer-2 multiclass model, which assigns one of the attack families (there is no
normal output at that layer).  Since a sample is final-normal only when all
three stages agree on normal, the chain's final label is the OR of the stage
verdicts, whatever the order.

Stage letters: ``X`` boosted trees, ``S`` Siamese encoder, ``A`` feed-forward
network (``D`` is accepted as an alias).  Terminal sets are named after the
letter of the stage where the walk ended: ``A_<letter>`` for an attack verdict,
``N_<last letter>`` when all three said normal.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import container
from .gbt import GbtModel
from .metrics import BinaryConfusion, format_binary_grid
from .nn import Mlp
from .siamese import SiameseClassifier

THRESHOLD = 0.5

STAGE_NAMES = {"X": "b-xgboost", "S": "siamese", "A": "dnn"}
DISPLAY_NAMES = {"X": "XGBoost", "S": "Siamese-NN", "A": "DNN"}
LETTER_ALIASES = {"D": "A"}
PERMUTATIONS = {"P1": "SAX", "P2": "SXA", "P3": "ASX", "P4": "AXS", "P5": "XSA", "P6": "XAS"}
PRODUCTION_ORDER = PERMUTATIONS["P5"]


def parse_order(spec: str) -> str:
    """Canonical 3-letter chain order, e.g. ``"xsd" -> "XSA"``; also accepts P1..P6."""
    spec = spec.strip().upper()
    if spec in PERMUTATIONS:
        return PERMUTATIONS[spec]
    letters = "".join(LETTER_ALIASES.get(c, c) for c in spec if c not in " ,>-=")
    if len(letters) != 3 or set(letters) != set(STAGE_NAMES):
        raise ValueError(f"chain order {spec!r} must name X, S and A (or D) exactly once each")
    return letters


@dataclass(frozen=True)
class BinaryStage:
    """A Layer-1 detector reduced to an attack-score function."""

    letter: str
    score_fn: Callable[[np.ndarray], np.ndarray]
    n_features: int | None = None

    def __post_init__(self):
        if self.letter not in STAGE_NAMES:
            raise ValueError(f"unknown stage letter {self.letter!r}")

    @property
    def name(self) -> str:
        return STAGE_NAMES[self.letter]

    def scores(self, X: np.ndarray) -> np.ndarray:
        s = np.asarray(self.score_fn(X), dtype=np.float64).reshape(-1)
        if s.shape[0] != X.shape[0]:
            raise ValueError(f"stage {self.name} returned {s.shape[0]} scores for {X.shape[0]} samples")
        if np.any(~(s >= 0.0) | ~(s <= 1.0)):
            raise ValueError(f"stage {self.name} produced a score outside [0, 1]")
        return s

    def labels(self, X: np.ndarray) -> np.ndarray:
        return (self.scores(X) > THRESHOLD).astype(np.int8)


def gbt_stage(model: GbtModel) -> BinaryStage:
    if model.num_classes != 2:
        raise ValueError("the boosted-tree stage needs a binary model")
    return BinaryStage("X", lambda X: model.predict_score(X)[:, 1], model.n_features)


def siamese_stage(clf: SiameseClassifier) -> BinaryStage:
    return BinaryStage("S", clf.attack_score, clf.encoder.net.n_in)


def dnn_stage(net: Mlp) -> BinaryStage:
    if net.n_out != 2:
        raise ValueError("the network stage needs a 2-way classifier")
    return BinaryStage("A", lambda X: net.predict_proba(X)[:, 1], net.n_in)


@dataclass(frozen=True)
class LayerOneChain:
    stages: tuple[BinaryStage, ...]

    def __post_init__(self):
        if len(self.stages) != 3:
            raise ValueError("a Layer-1 chain has exactly three stages")
        if len({s.letter for s in self.stages}) != 3:
            raise ValueError("chain stages must be distinct")
        widths = {s.n_features for s in self.stages if s.n_features is not None}
        if len(widths) > 1:
            raise ValueError(f"stages disagree on the feature space: widths {sorted(widths)}")

    @classmethod
    def from_stages(cls, stages: Sequence[BinaryStage] | dict, order: str = PRODUCTION_ORDER) -> "LayerOneChain":
        by_letter = stages if isinstance(stages, dict) else {s.letter: s for s in stages}
        return cls(tuple(by_letter[c] for c in parse_order(order)))

    @property
    def order(self) -> str:
        return "".join(s.letter for s in self.stages)

    @property
    def n_features(self) -> int | None:
        return next((s.n_features for s in self.stages if s.n_features is not None), None)

    def check_width(self, X: np.ndarray):
        if self.n_features is not None and X.shape[1] != self.n_features:
            raise ValueError(f"samples have {X.shape[1]} features, the chain expects {self.n_features}")


@dataclass(frozen=True)
class FiltrationTrace:
    """Per-sample record of a Layer-1 walk (and the Layer-2 class, if any).

    ``labels``/``scores`` are indexed by chain position; stages a sample never
    reached hold -1 / NaN.  ``layer2`` is -1 for final-normal samples.
    """

    order: str
    labels: np.ndarray  # (n, 3) int8
    scores: np.ndarray  # (n, 3) float64
    terminal_stage: np.ndarray  # (n,) position where the walk ended
    final: np.ndarray  # (n,) 1 = attack
    layer2: np.ndarray  # (n,) attack-family index or -1

    def __len__(self) -> int:
        return len(self.final)

    @property
    def consulted(self) -> np.ndarray:
        return self.terminal_stage + 1

    def terminal_names(self) -> np.ndarray:
        letters = np.array(list(self.order))
        prefix = np.where(self.final == 1, "A_", "N_")
        return np.char.add(prefix, letters[self.terminal_stage])

    def set_sizes(self) -> dict[str, int]:
        names, counts = np.unique(self.terminal_names(), return_counts=True)
        return {str(k): int(v) for k, v in zip(names, counts)}

    def with_layer2(self, layer2: np.ndarray) -> "FiltrationTrace":
        return FiltrationTrace(self.order, self.labels, self.scores, self.terminal_stage, self.final, layer2)


def filter_layer1(chain: LayerOneChain, X) -> FiltrationTrace:
    """Short-circuit walk: each stage only scores the samples still called normal."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("filter_layer1 expects a 2-D sample matrix")
    chain.check_width(X)
    n = X.shape[0]
    labels = np.full((n, 3), -1, dtype=np.int8)
    scores = np.full((n, 3), np.nan)
    terminal = np.full(n, 2, dtype=np.int64)
    final = np.zeros(n, dtype=np.int8)
    remaining = np.arange(n)
    for pos, stage in enumerate(chain.stages):
        if remaining.size == 0:
            break
        s = stage.scores(X[remaining])
        hit = s > THRESHOLD
        scores[remaining, pos] = s
        labels[remaining, pos] = hit
        terminal[remaining[hit]] = pos
        final[remaining[hit]] = 1
        remaining = remaining[~hit]
    return FiltrationTrace(chain.order, labels, scores, terminal, final, np.full(n, -1, dtype=np.int64))


def combined_attack_score(chain: LayerOneChain, X) -> np.ndarray:
    """Max of all three stage scores; every stage is evaluated."""
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    chain.check_width(X)
    s = np.max(np.column_stack([st.scores(X) for st in chain.stages]), axis=1)
    return float(s[0]) if single else s


@dataclass
class ISiamIdsModel:
    """Trained cascade: three Layer-1 detectors plus the Layer-2 family model.

    ``class_names`` is the full table, normal first, then the attack families
    in Layer-2 index order.
    """

    xgb: GbtModel
    siamese: SiameseClassifier
    dnn: Mlp
    layer2: GbtModel
    class_names: tuple[str, ...]
    order: str = PRODUCTION_ORDER
    fingerprint: str = ""

    def __post_init__(self):
        self.order = parse_order(self.order)
        self.class_names = tuple(self.class_names)
        if self.layer2.num_classes != len(self.class_names) - 1:
            raise ValueError(
                f"Layer-2 model has {self.layer2.num_classes} classes but the scheme lists "
                f"{len(self.class_names) - 1} attack families")

    @property
    def attack_families(self) -> tuple[str, ...]:
        return self.class_names[1:]

    def stages(self) -> dict[str, BinaryStage]:
        return {"X": gbt_stage(self.xgb), "S": siamese_stage(self.siamese), "A": dnn_stage(self.dnn)}

    def chain(self, order: str | None = None) -> LayerOneChain:
        return LayerOneChain.from_stages(self.stages(), order or self.order)

    # -- serialization ----------------------------------------------------

    def to_container(self) -> tuple[dict, dict]:
        meta = {"version": 1, "order": self.order, "class_names": list(self.class_names),
                "fingerprint": self.fingerprint}
        arrays = {}
        for key, model in (("xgb", self.xgb), ("siamese", self.siamese), ("dnn", self.dnn), ("layer2", self.layer2)):
            m, a = model.to_container()
            meta[key] = m
            arrays.update(container.prefixed(key, a))
        return meta, arrays

    @classmethod
    def from_container(cls, meta: dict, arrays: dict) -> "ISiamIdsModel":
        part = lambda key: (meta[key], container.unprefixed(key, arrays))
        return cls(GbtModel.from_container(*part("xgb")), SiameseClassifier.from_container(*part("siamese")),
                   Mlp.from_container(*part("dnn")), GbtModel.from_container(*part("layer2")),
                   tuple(meta["class_names"]), meta["order"], meta.get("fingerprint", ""))

    def save(self, path) -> str:
        return container.save(path, "bundle", *self.to_container())

    @classmethod
    def load(cls, path) -> "ISiamIdsModel":
        return cls.from_container(*container.load(path, kind="bundle"))


def classify_layer2(model: ISiamIdsModel, X) -> np.ndarray:
    """Attack-family index (0..K-1) for every row; empty input gives an empty result."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    return np.asarray(model.layer2.predict_label(X), dtype=np.int64)


def predict(model: ISiamIdsModel, X, order: str | None = None) -> tuple[np.ndarray, FiltrationTrace]:
    """Final labels over the full class table (0 normal, k+1 family k) and the trace."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    trace = filter_layer1(model.chain(order), X)
    layer2 = np.full(len(trace), -1, dtype=np.int64)
    flagged = np.flatnonzero(trace.final == 1)
    layer2[flagged] = classify_layer2(model, X[flagged])
    return layer2 + 1, trace.with_layer2(layer2)


TRACE_HEADER = ("index", "stage1", "stage2", "stage3", "label1", "label2", "label3",
                "score1", "score2", "score3", "terminal", "final", "layer2")


def write_trace(path, trace: FiltrationTrace, family_names: Sequence[str] = ()):
    """Tab-separated trace archive, one row per sample in index order.

    Unvisited stages show ``-`` for label and score; ``layer2`` is ``-`` for
    final-normal rows.
    """
    names = trace.terminal_names()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(TRACE_HEADER) + "\n")
        stage_cols = "\t".join(STAGE_NAMES[c] for c in trace.order)
        for i in range(len(trace)):
            lab = "\t".join("-" if v < 0 else str(int(v)) for v in trace.labels[i])
            sc = "\t".join("-" if np.isnan(v) else repr(float(v)) for v in trace.scores[i])
            l2 = int(trace.layer2[i])
            fam = "-" if l2 < 0 else (family_names[l2] if family_names else str(l2))
            final = "attack" if trace.final[i] else "normal"
            fh.write(f"{i}\t{stage_cols}\t{lab}\t{sc}\t{names[i]}\t{final}\t{fam}\n")


@dataclass(frozen=True)
class PermutationReport:
    name: str
    order: str
    stage_matrices: tuple[BinaryConfusion, ...]  # restricted to samples reaching each stage
    combined: BinaryConfusion
    final: np.ndarray

    def format(self) -> str:
        blocks = [format_binary_grid(DISPLAY_NAMES[c], cm) for c, cm in zip(self.order, self.stage_matrices)]
        blocks.append(format_binary_grid(self.name, self.combined))
        return "\n\n".join(blocks)


def permutation_report(name: str, chain: LayerOneChain, X, truth) -> PermutationReport:
    truth = np.asarray(truth).astype(bool)
    trace = filter_layer1(chain, X)
    mats = []
    for pos in range(3):
        reached = trace.labels[:, pos] >= 0
        mats.append(BinaryConfusion.from_labels(truth[reached], trace.labels[reached, pos]))
    return PermutationReport(name, chain.order, tuple(mats),
                             BinaryConfusion.from_labels(truth, trace.final), trace.final)


def run_permutations(stages: Sequence[BinaryStage] | dict, X, truth) -> list[PermutationReport]:
    """Re-run Layer 1 under all six orders P1..P6."""
    return [permutation_report(name, LayerOneChain.from_stages(stages, order), X, truth)
            for name, order in PERMUTATIONS.items()]


def permutations_identical(reports: Sequence[PermutationReport]) -> bool:
    """True iff every order produced the same per-sample final labels."""
    return all(np.array_equal(a.final, b.final) for a, b in itertools.pairwise(reports))


def format_permutations(reports: Sequence[PermutationReport]) -> str:
    parts = []
    for i, r in enumerate(reports, 1):
        parts.append(f"Permutation {i} ({' => '.join(DISPLAY_NAMES[c] for c in r.order)})\n\n{r.format()}")
    same = sum(np.array_equal(r.final, reports[0].final) for r in reports)
    status = (f"{len(reports)}/{len(reports)} combined matrices identical" if permutations_identical(reports)
              else f"ORDER DEPENDENCE: {same}/{len(reports)} permutations agree with {reports[0].name}")
    return "\n\n".join(parts) + "\n\n" + status + "\n"
