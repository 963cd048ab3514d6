"""Train and evaluate a full cascade from preprocessed data."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .config import RunConfig
from .dataio import FeatureMatrix
from .ensemble import DISPLAY_NAMES, FiltrationTrace, ISiamIdsModel, predict
from .gbt import train_binary, train_multiclass
from .metrics import (BinaryConfusion, ClassReport, MulticlassConfusion, RocCurve, accuracy,
                      binary_class_reports, multiclass_report, roc_auc)
from .nn import CLASSIFIER, DivergenceError, Mlp, train
from .siamese import ReferenceSet, SiameseClassifier, TwinEncoder, train_siamese


class TrainingError(RuntimeError):
    """A sub-model failed to train; the message names it."""


@dataclass
class TrainLog:
    sections: dict = field(default_factory=dict)  # sub-model name -> lines

    def writer(self, name: str) -> Callable[[str], None]:
        lines = self.sections.setdefault(name, [])
        return lines.append

    def text(self) -> str:
        return "".join(f"[{name}]\n" + "".join(l + "\n" for l in lines) + "\n"
                       for name, lines in self.sections.items())


def train_cascade(data: FeatureMatrix, cfg: RunConfig, fingerprint: str = "",
                  progress: Callable[[str], None] | None = None) -> tuple[ISiamIdsModel, TrainLog]:
    """Fit the three Layer-1 detectors on binary labels and the Layer-2 model on attack rows."""
    if data.class_names[0] != "Normal":
        raise ValueError("training data must use the full label scheme (Normal first)")
    say = progress or (lambda msg: None)
    dtype = np.float32 if cfg["precision"] == "float32" else np.float64
    binary = data.to_binary()
    attacks = data.to_attack_only()
    log = TrainLog()
    d = data.X.shape[1]

    def guarded(name, fn):
        say(f"training {name}")
        try:
            return fn()
        except (DivergenceError, FloatingPointError) as exc:
            raise TrainingError(f"{name}: {exc}") from exc

    def fit_xgb():
        model = train_binary(binary.X, binary.y, cfg.gbt("gbt"))
        out = log.writer("b-xgboost")
        for i, loss in enumerate(model.loss_history):
            out(f"round {i} logloss {loss:.6f}")
        return model

    def fit_siamese():
        enc = TwinEncoder.build(d, cfg.hidden("siamese.hidden"), int(cfg["siamese.embedding"]),
                                dropout=float(cfg["siamese.dropout"]), margin=float(cfg["siamese.margin"]),
                                seed=cfg.component_seed("siamese"), dtype=dtype)
        pairs = int(cfg["siamese.pairs_per_epoch"]) or None
        tc = cfg.siamese_train()
        train_siamese(enc, binary.X, binary.y, epochs=tc.epochs, pairs_per_epoch=pairs, config=tc,
                      log=log.writer("siamese"))
        refs = ReferenceSet.sample(binary.X, binary.y, int(cfg["siamese.references"]), cfg.component_seed("references"))
        return SiameseClassifier(enc, refs)

    def fit_dnn():
        net = Mlp.build(d, cfg.hidden("dnn.hidden"), 2, CLASSIFIER, dropout=float(cfg["dnn.dropout"]),
                        seed=cfg.component_seed("dnn"), dtype=dtype)
        train(net, binary.X, binary.y, cfg.dnn_train(), log=log.writer("dnn"))
        return net

    def fit_layer2():
        model = train_multiclass(attacks.X, attacks.y, len(attacks.class_names), cfg.gbt("layer2"))
        out = log.writer("m-xgboost")
        for i, loss in enumerate(model.loss_history):
            out(f"round {i} mlogloss {loss:.6f}")
        return model

    xgb = guarded("b-xgboost", fit_xgb)
    siamese = guarded("siamese", fit_siamese)
    dnn = guarded("dnn", fit_dnn)
    layer2 = guarded("m-xgboost", fit_layer2)
    model = ISiamIdsModel(xgb, siamese, dnn, layer2, data.class_names, cfg["order"], fingerprint)
    return model, log


@dataclass
class Evaluation:
    multiclass: MulticlassConfusion
    class_reports: list[ClassReport]
    binary: BinaryConfusion
    binary_reports: list[ClassReport]
    stages: dict[str, BinaryConfusion]  # standalone, full test set
    rocs: dict[str, RocCurve]  # "<subject>/attack" and "<subject>/normal"
    trace: FiltrationTrace
    labels: np.ndarray

    @property
    def accuracy(self) -> float:
        return accuracy(self.binary)

    def monotonicity(self) -> tuple[bool, str]:
        best_tp = max(cm.tp for cm in self.stages.values())
        worst_tn = min(cm.tn for cm in self.stages.values())
        ok = self.binary.tp >= best_tp and self.binary.tn <= worst_tn
        msg = (f"chain TP {self.binary.tp} >= best stage TP {best_tp}; "
               f"chain TN {self.binary.tn} <= worst stage TN {worst_tn}: {'ok' if ok else 'VIOLATED'}")
        return ok, msg

    def conservation(self) -> bool:
        return len(self.trace) == self.binary.total == int(self.multiclass.grid.sum())


def evaluate(model: ISiamIdsModel, test: FeatureMatrix, order: str | None = None) -> Evaluation:
    if tuple(test.class_names) != model.class_names:
        raise ValueError(f"test classes {test.class_names} differ from the model's {model.class_names}")
    labels, trace = predict(model, test.X, order)
    truth_attack = (test.y != 0).astype(np.int64)
    grid, reports = multiclass_report(test.y, labels, len(model.class_names), model.class_names)
    binary = BinaryConfusion.from_labels(truth_attack, trace.final)

    stages = model.stages()
    stage_cms, rocs = {}, {}
    scores = {}
    for letter in ("A", "X", "S"):
        s = stages[letter].scores(test.X)
        scores[DISPLAY_NAMES[letter]] = s
        stage_cms[DISPLAY_NAMES[letter]] = BinaryConfusion.from_labels(truth_attack, s > 0.5)
    # same as combined_attack_score, reusing the stage scores computed above
    scores["I-SiamIDS"] = np.max(np.column_stack(list(scores.values())), axis=1)
    for name, s in scores.items():
        rocs[f"{name}/attack"] = roc_auc(s, truth_attack)
        rocs[f"{name}/normal"] = roc_auc(1.0 - s, 1 - truth_attack)
    return Evaluation(grid, reports, binary, binary_class_reports(binary), stage_cms, rocs, trace, labels)


def format_auc_table(rocs: dict[str, RocCurve], dataset: str) -> str:
    subjects = list(dict.fromkeys(k.split("/")[0] for k in rocs))
    lines = [f"Classifier \\ Dataset\t{dataset}\t", "\tNormal\tAttack"]
    for s in subjects:
        lines.append(f"{s}\t{rocs[s + '/normal'].auc:.4f}\t{rocs[s + '/attack'].auc:.4f}")
    return "\n".join(lines)


def format_multiclass_grid(cm: MulticlassConfusion) -> str:
    names = cm.class_names
    lines = ["truth \\ predicted\t" + "\t".join(names)]
    for name, row in zip(names, cm.grid):
        lines.append(name + "\t" + "\t".join(str(int(v)) for v in row))
    return "\n".join(lines)


def roc_svg(curves: dict[str, RocCurve], size: int = 360) -> str:
    """Minimal standalone SVG with one polyline per curve."""
    pad = 40
    span = size - 2 * pad
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"]
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size + 220}" height="{size}" font-size="11">',
             f'<rect x="{pad}" y="{pad}" width="{span}" height="{span}" fill="none" stroke="black"/>',
             f'<line x1="{pad}" y1="{pad + span}" x2="{pad + span}" y2="{pad}" stroke="#bbb" stroke-dasharray="4"/>',
             f'<text x="{pad + span / 2}" y="{size - 8}" text-anchor="middle">False Positive Rate</text>',
             f'<text x="12" y="{pad + span / 2}" transform="rotate(-90 12 {pad + span / 2})" '
             f'text-anchor="middle">True Positive Rate</text>']
    for i, (name, c) in enumerate(curves.items()):
        pts = " ".join(f"{pad + f * span:.2f},{pad + (1 - t) * span:.2f}" for f, t in zip(c.fpr, c.tpr))
        col = colors[i % len(colors)]
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{col}" stroke-width="1.5"/>')
        parts.append(f'<text x="{size + 5}" y="{pad + 14 * i + 10}" fill="{col}">{name} (AUC {c.auc:.3f})</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
