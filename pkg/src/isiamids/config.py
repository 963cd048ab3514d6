"""Run configuration: a flat ``key = value`` text file.

Blank lines and ``#`` comments are ignored.  Keys are fixed (see ``DEFAULTS``);
an unknown key is an error so that typos never fall back to defaults silently.
``seed`` has no default and must come from the file or the command line.

Every component draws its own seed from the global one at a fixed offset
(``SEED_OFFSETS``), so a single number reproduces a whole run.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .ensemble import parse_order
from .gbt import GbtConfig
from .nn import TrainConfig

DEFAULTS: dict[str, str] = {
    "dataset": "nslkdd",
    "train": "",
    "test": "",
    "data": "",
    "out": "",
    "order": "XSA",
    "precision": "float32",
    "gbt.rounds": "100",
    "gbt.max_depth": "6",
    "gbt.learning_rate": "0.3",
    "gbt.l2_penalty": "1.0",
    "gbt.split_penalty": "0.0",
    "gbt.min_child_hessian": "1.0",
    "layer2.rounds": "100",
    "layer2.max_depth": "6",
    "layer2.learning_rate": "0.3",
    "layer2.l2_penalty": "1.0",
    "layer2.split_penalty": "0.0",
    "layer2.min_child_hessian": "1.0",
    "dnn.hidden": "1024,512,256,128,64",
    "dnn.dropout": "0.1",
    "dnn.epochs": "20",
    "dnn.batch_size": "256",
    "dnn.lr": "0.001",
    "siamese.hidden": "1024,512,256,128",
    "siamese.embedding": "64",
    "siamese.dropout": "0.5",
    "siamese.margin": "1.0",
    "siamese.epochs": "10",
    "siamese.pairs_per_epoch": "0",
    "siamese.batch_size": "256",
    "siamese.lr": "0.001",
    "siamese.references": "25",
    "bench.per_class": "10",
    "bench.repeats": "50",
}

SEED_OFFSETS = {"gbt": 1, "layer2": 2, "dnn": 3, "siamese": 4, "references": 5, "bench": 6}
PATH_KEYS = ("train", "test", "data")


class ConfigError(ValueError):
    pass


def parse_text(text: str, source: str = "<config>") -> dict[str, str]:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key != "seed" and key not in DEFAULTS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        values[key] = value
    return values


@dataclass(frozen=True)
class RunConfig:
    seed: int
    values: dict

    @classmethod
    def build(cls, file_values: dict[str, str] | None = None, overrides: dict[str, object] | None = None,
              base_dir: Path | None = None) -> "RunConfig":
        merged = dict(DEFAULTS)
        merged.update(file_values or {})
        for k, v in (overrides or {}).items():
            if v is not None:
                merged[k] = str(v)
        if "seed" not in merged or merged["seed"] == "":
            raise ConfigError("a seed is required (config key 'seed' or --seed)")
        try:
            seed = int(merged.pop("seed"))
        except ValueError:
            raise ConfigError("seed must be an integer") from None
        for key in PATH_KEYS:
            if merged[key] and base_dir is not None and not Path(merged[key]).is_absolute():
                merged[key] = str(base_dir / merged[key])
        cfg = cls(seed, merged)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path, overrides: dict[str, object] | None = None) -> "RunConfig":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"{path}: {exc.strerror}") from exc
        return cls.build(parse_text(text, str(path)), overrides, path.parent)

    def validate(self):
        if self.values["dataset"] not in ("nslkdd", "cidds"):
            raise ConfigError(f"dataset must be nslkdd or cidds, not {self.values['dataset']!r}")
        try:
            self.values["order"] = parse_order(self.values["order"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.values["precision"] not in ("float32", "float64"):
            raise ConfigError("precision must be float32 or float64")
        for key in PATH_KEYS:
            if self.values[key] and not Path(self.values[key]).exists():
                raise ConfigError(f"{key} path {self.values[key]!r} does not exist")
        try:
            self.gbt("gbt")
            self.gbt("layer2")
            self.dnn_train()
            self.siamese_train()
            self.hidden("dnn.hidden")
            self.hidden("siamese.hidden")
            for key in ("dnn.dropout", "siamese.dropout", "siamese.margin"):
                float(self.values[key])
            for key in ("siamese.embedding", "siamese.pairs_per_epoch", "siamese.references", "siamese.epochs",
                        "bench.per_class", "bench.repeats"):
                if int(self.values[key]) < 0:
                    raise ValueError(f"{key} must be non-negative")
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def __getitem__(self, key: str) -> str:
        return self.values[key]

    def component_seed(self, name: str) -> int:
        return self.seed + SEED_OFFSETS[name]

    def hidden(self, key: str) -> tuple[int, ...]:
        widths = tuple(int(w) for w in self.values[key].split(",") if w.strip())
        if not widths or min(widths) < 1:
            raise ValueError(f"{key} must list positive layer widths")
        return widths

    def gbt(self, prefix: str) -> GbtConfig:
        v = self.values
        return GbtConfig(rounds=int(v[f"{prefix}.rounds"]), max_depth=int(v[f"{prefix}.max_depth"]),
                         learning_rate=float(v[f"{prefix}.learning_rate"]), l2_penalty=float(v[f"{prefix}.l2_penalty"]),
                         split_penalty=float(v[f"{prefix}.split_penalty"]),
                         min_child_hessian=float(v[f"{prefix}.min_child_hessian"]),
                         seed=self.component_seed("gbt" if prefix == "gbt" else "layer2"))

    def dnn_train(self) -> TrainConfig:
        v = self.values
        return TrainConfig(epochs=int(v["dnn.epochs"]), batch_size=int(v["dnn.batch_size"]), lr=float(v["dnn.lr"]),
                           seed=self.component_seed("dnn"))

    def siamese_train(self) -> TrainConfig:
        v = self.values
        return TrainConfig(epochs=int(v["siamese.epochs"]), batch_size=int(v["siamese.batch_size"]),
                           lr=float(v["siamese.lr"]), seed=self.component_seed("siamese"))

    def canonical(self) -> str:
        return json.dumps({"seed": self.seed, **self.values}, sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    def to_text(self) -> str:
        lines = [f"seed = {self.seed}"] + [f"{k} = {self.values[k]}" for k in DEFAULTS]
        return "\n".join(lines) + "\n"
