"""Raw intrusion-detection CSV ingestion, quantization, min-max scaling and
label schemes.

The pipeline is::

    load_csv -> fit_codebook -> quantize -> fit_normalizer -> NormalizationStats.apply -> map_labels

Every fitted artifact (codebook, stats, scheme) is derived from the training
file only and is immutable afterwards.
"""

from __future__ import annotations

import csv
import hashlib
import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import container

BINARY = "binary"
ATTACK_ONLY = "multiclass-attack-only"
FULL = "multiclass-full"
MODES = (BINARY, ATTACK_ONLY, FULL)

NORMAL_FAMILY = "Normal"


class DataError(ValueError):
    """Malformed or inconsistent input data."""


# --------------------------------------------------------------------------
# Raw tables
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RawTable:
    column_names: tuple[str, ...]
    cells: np.ndarray  # (n, m) object array of str

    def __post_init__(self):
        if self.cells.ndim != 2:
            raise DataError("cells must be two-dimensional")
        if self.cells.shape[1] != len(self.column_names):
            raise DataError(
                f"{self.cells.shape[1]} cell columns but {len(self.column_names)} column names"
            )
        if self.cells.shape[1] < 2:
            raise DataError("a table needs at least one feature and a label column")

    @property
    def n_rows(self) -> int:
        return self.cells.shape[0]

    @property
    def arity(self) -> int:
        return self.cells.shape[1]

    def column_index(self, column: int | str) -> int:
        if isinstance(column, str):
            try:
                return self.column_names.index(column)
            except ValueError:
                raise DataError(f"no column named {column!r}") from None
        if not 0 <= column < self.arity:
            raise DataError(f"column index {column} out of range for arity {self.arity}")
        return column

    def column(self, column: int | str) -> np.ndarray:
        return self.cells[:, self.column_index(column)]

    def drop_columns(self, columns: Iterable[int | str]) -> "RawTable":
        drop = {self.column_index(c) for c in columns}
        keep = [i for i in range(self.arity) if i not in drop]
        return RawTable(tuple(self.column_names[i] for i in keep), self.cells[:, keep])


def load_csv(
    path,
    has_header: bool = False,
    column_names: Sequence[str] | None = None,
    optional_trailing: str | None = None,
) -> RawTable:
    """Read a comma-separated file into a :class:`RawTable`.

    ``optional_trailing`` names a column that some variants of a file layout
    append after ``column_names`` (NSL-KDD's difficulty score).  When the rows
    carry exactly one extra cell it is dropped.
    """
    path = Path(path)
    try:
        handle = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"{path}: cannot read file ({exc.strerror})") from exc
    with handle:
        reader = csv.reader(handle)
        header = None
        rows = []
        arity = None
        for lineno, row in enumerate(reader, start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if has_header and header is None:
                header = [c.strip() for c in row]
                continue
            if arity is None:
                arity = len(row)
            elif len(row) != arity:
                raise DataError(
                    f"{path}: ragged row {lineno}: {len(row)} cells, expected {arity}"
                )
            rows.append(row)
    if not rows:
        raise DataError(f"{path}: no data rows")

    names = list(column_names) if column_names is not None else header
    if names is None:
        names = [f"c{i}" for i in range(arity)]
    cells = np.empty((len(rows), arity), dtype=object)
    cells[:] = rows
    if optional_trailing is not None and names and names[-1] == optional_trailing:
        names = names[:-1]
    if optional_trailing is not None and arity == len(names) + 1:
        cells = cells[:, :-1]
    if cells.shape[1] != len(names):
        raise DataError(f"{path}: {cells.shape[1]} cells per row but {len(names)} column names")
    return RawTable(tuple(names), np.ascontiguousarray(cells))


# --------------------------------------------------------------------------
# Quantization
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CategoryCodebook:
    """Per-column category -> code tables.  Codes are 1..K in first-occurrence
    order; 0 is reserved for categories never seen in training."""

    column_names: tuple[str, ...]
    categories: tuple[tuple[str, ...], ...]
    _lookup: tuple[dict, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        lookup = []
        for name, cats in zip(self.column_names, self.categories):
            table = {c: i + 1 for i, c in enumerate(cats)}
            if len(table) != len(cats):
                raise DataError(f"duplicate categories in codebook column {name!r}")
            lookup.append(table)
        object.__setattr__(self, "_lookup", tuple(lookup))

    def _pos(self, column: str) -> int:
        try:
            return self.column_names.index(column)
        except ValueError:
            raise DataError(f"codebook has no column {column!r}") from None

    def encode(self, column: str, value: str) -> int:
        return self._lookup[self._pos(column)].get(value, 0)

    def decode(self, column: str, code: int) -> str:
        cats = self.categories[self._pos(column)]
        if not 1 <= code <= len(cats):
            raise DataError(f"code {code} not in codebook column {column!r}")
        return cats[code - 1]

    def encode_column(self, column: str, values: np.ndarray) -> np.ndarray:
        table = self._lookup[self._pos(column)]
        return np.fromiter((table.get(v, 0) for v in values), dtype=np.float64, count=len(values))

    def to_meta(self) -> dict:
        return {"columns": list(self.column_names), "categories": [list(c) for c in self.categories]}

    @classmethod
    def from_meta(cls, meta: dict) -> "CategoryCodebook":
        return cls(tuple(meta["columns"]), tuple(tuple(c) for c in meta["categories"]))


def fit_codebook(table: RawTable, categorical_columns: Iterable[int | str]) -> CategoryCodebook:
    names = []
    cats = []
    for col in categorical_columns:
        idx = table.column_index(col)
        names.append(table.column_names[idx])
        # dict preserves insertion order: first occurrence wins
        cats.append(tuple(dict.fromkeys(s.strip() for s in table.cells[:, idx])))
    return CategoryCodebook(tuple(names), tuple(cats))


_UNIT = {"K": 1e3, "M": 1e6, "G": 1e9, "T": 1e12}
_SUFFIXED = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([KMGT])\s*$")


def parse_number(cell: str, unit_suffix: bool = False) -> float:
    """Parse a numeric cell; with ``unit_suffix`` also accept "1.2 M" style counts."""
    try:
        return float(cell)
    except ValueError:
        if unit_suffix:
            m = _SUFFIXED.match(cell)
            if m:
                return float(m.group(1)) * _UNIT[m.group(2)]
        raise


@dataclass(frozen=True)
class NumericTable:
    """Feature columns as floats plus the untouched raw label column."""

    feature_names: tuple[str, ...]
    values: np.ndarray  # (n, d) float64
    raw_labels: np.ndarray  # (n,) object


def quantize(
    table: RawTable,
    codebook: CategoryCodebook,
    label_column: int | str = -1,
    unit_suffix: bool = False,
) -> NumericTable:
    label_idx = table.column_index(label_column if label_column != -1 else table.arity - 1)
    feats = [i for i in range(table.arity) if i != label_idx]
    out = np.empty((table.n_rows, len(feats)), dtype=np.float64)
    categorical = set(codebook.column_names)
    for j, idx in enumerate(feats):
        name = table.column_names[idx]
        col = table.cells[:, idx]
        if name in categorical:
            out[:, j] = codebook.encode_column(name, [s.strip() for s in col])
            continue
        try:
            out[:, j] = np.asarray(col, dtype=np.float64)
        except ValueError:
            for row, cell in enumerate(col):
                try:
                    out[row, j] = parse_number(cell, unit_suffix)
                except ValueError:
                    raise DataError(
                        f"non-numeric cell {cell!r} in numeric column {name!r} (data row {row + 1})"
                    ) from None
    if not np.all(np.isfinite(out)):
        row, j = np.argwhere(~np.isfinite(out))[0]
        raise DataError(f"non-finite value in column {table.column_names[feats[j]]!r} (data row {row + 1})")
    labels = np.array([s.strip() for s in table.cells[:, label_idx]], dtype=object)
    return NumericTable(tuple(table.column_names[i] for i in feats), out, labels)


# --------------------------------------------------------------------------
# Normalization
# --------------------------------------------------------------------------


def normalize(value: float, v_min: float, v_max: float) -> float:
    """Min-max scale one value, clamped to [0, 1]; constant features map to 0."""
    if v_max <= v_min:
        return 0.0
    return min(1.0, max(0.0, (value - v_min) / (v_max - v_min)))


@dataclass(frozen=True)
class NormalizationStats:
    feature_names: tuple[str, ...]
    v_min: np.ndarray
    v_max: np.ndarray

    @property
    def degenerate(self) -> np.ndarray:
        return self.v_max <= self.v_min

    def apply(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=np.float64)
        if values.shape[-1] != len(self.v_min):
            raise DataError(f"expected {len(self.v_min)} features, got {values.shape[-1]}")
        span = self.v_max - self.v_min
        safe = np.where(self.degenerate, 1.0, span)
        out = (values - self.v_min) / safe
        out[..., self.degenerate] = 0.0
        return np.clip(out, 0.0, 1.0)

    def transform(self, table: NumericTable) -> NumericTable:
        if table.feature_names != self.feature_names:
            raise DataError("feature columns differ from the ones the normalizer was fitted on")
        return NumericTable(table.feature_names, self.apply(table.values), table.raw_labels)

    def to_arrays(self) -> dict:
        return {"v_min": self.v_min, "v_max": self.v_max}


def fit_normalizer(train: NumericTable) -> NormalizationStats:
    values = np.asarray(train.values, dtype=np.float64)
    if values.shape[0] == 0:
        raise DataError("cannot fit a normalizer on zero rows")
    return NormalizationStats(train.feature_names, values.min(axis=0), values.max(axis=0))


# --------------------------------------------------------------------------
# Labels
# --------------------------------------------------------------------------


def read_family_mapping(path=None, text: str | None = None) -> dict[str, str]:
    if text is None:
        text = Path(path).read_text(encoding="utf-8")
    mapping = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise DataError(f"family mapping line {lineno}: expected '<raw label> <family>'")
        raw, fam = parts
        if raw in mapping and mapping[raw] != fam:
            raise DataError(f"family mapping line {lineno}: {raw!r} mapped twice")
        mapping[raw] = fam
    if NORMAL_FAMILY not in mapping.values():
        raise DataError("family mapping has no raw label for the Normal family")
    return mapping


def builtin_mapping(name: str) -> dict[str, str]:
    text = resources.files("isiamids.data").joinpath(f"{name}_families.txt").read_text("utf-8")
    return read_family_mapping(text=text)


@dataclass(frozen=True)
class LabelScheme:
    mode: str
    families: tuple[tuple[str, str], ...]  # (raw label, family) pairs

    def __post_init__(self):
        if self.mode not in MODES:
            raise DataError(f"unknown label mode {self.mode!r}")

    @classmethod
    def from_mapping(cls, mode: str, mapping: dict[str, str]) -> "LabelScheme":
        return cls(mode, tuple(mapping.items()))

    @property
    def family_of(self) -> dict[str, str]:
        return dict(self.families)

    @property
    def attack_families(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(f for _, f in self.families if f != NORMAL_FAMILY))

    @property
    def class_names(self) -> tuple[str, ...]:
        if self.mode == BINARY:
            return ("normal", "attack")
        if self.mode == ATTACK_ONLY:
            return self.attack_families
        return (NORMAL_FAMILY,) + self.attack_families

    def index_of(self, raw: str) -> int:
        """Class index of a raw label; -1 for a normal row in attack-only mode."""
        fam = self.family_of.get(raw)
        if self.mode == BINARY:
            return 0 if fam == NORMAL_FAMILY else 1
        if fam is None:
            raise DataError(f"unknown raw label {raw!r}")
        if fam == NORMAL_FAMILY:
            return 0 if self.mode == FULL else -1
        return self.class_names.index(fam)

    def with_mode(self, mode: str) -> "LabelScheme":
        return LabelScheme(mode, self.families)


@dataclass(frozen=True)
class FeatureMatrix:
    X: np.ndarray
    y: np.ndarray
    class_names: tuple[str, ...]
    feature_names: tuple[str, ...] = ()

    def __post_init__(self):
        if self.X.ndim != 2 or self.X.shape[0] != self.y.shape[0]:
            raise DataError("X must be (n, d) with one label per row")
        if self.X.shape[0] < 1:
            raise DataError("a feature matrix needs at least one row")
        if np.any(self.X < 0.0) or np.any(self.X > 1.0) or not np.all(np.isfinite(self.X)):
            raise DataError("feature cells must lie in [0, 1]")
        if self.y.size and (self.y.min() < 0 or self.y.max() >= len(self.class_names)):
            raise DataError("label index outside the class table")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    def class_counts(self) -> dict[str, int]:
        counts = np.bincount(self.y, minlength=len(self.class_names))
        return {name: int(c) for name, c in zip(self.class_names, counts)}

    def subset(self, mask_or_index) -> "FeatureMatrix":
        return FeatureMatrix(self.X[mask_or_index], self.y[mask_or_index], self.class_names, self.feature_names)

    def to_binary(self) -> "FeatureMatrix":
        """Collapse a multiclass-full matrix (class 0 = Normal) to normal/attack."""
        return FeatureMatrix(self.X, (self.y != 0).astype(np.int64), ("normal", "attack"), self.feature_names)

    def to_attack_only(self) -> "FeatureMatrix":
        keep = self.y != 0
        return FeatureMatrix(self.X[keep], self.y[keep] - 1, self.class_names[1:], self.feature_names)


def map_labels(table: NumericTable, scheme: LabelScheme) -> FeatureMatrix:
    """Attach class indices under ``scheme``.  Attack-only mode drops normal rows."""
    idx = np.fromiter((scheme.index_of(r) for r in table.raw_labels), dtype=np.int64, count=len(table.raw_labels))
    keep = idx >= 0
    return FeatureMatrix(table.values[keep], idx[keep], scheme.class_names, table.feature_names)


# --------------------------------------------------------------------------
# Dataset layouts
# --------------------------------------------------------------------------

NSLKDD_COLUMNS = (
    "duration", "protocol_type", "service", "flag", "src_bytes", "dst_bytes", "land",
    "wrong_fragment", "urgent", "hot", "num_failed_logins", "logged_in", "num_compromised",
    "root_shell", "su_attempted", "num_root", "num_file_creations", "num_shells",
    "num_access_files", "num_outbound_cmds", "is_host_login", "is_guest_login", "count",
    "srv_count", "serror_rate", "srv_serror_rate", "rerror_rate", "srv_rerror_rate",
    "same_srv_rate", "diff_srv_rate", "srv_diff_host_rate", "dst_host_count",
    "dst_host_srv_count", "dst_host_same_srv_rate", "dst_host_diff_srv_rate",
    "dst_host_same_src_port_rate", "dst_host_srv_diff_host_rate", "dst_host_serror_rate",
    "dst_host_srv_serror_rate", "dst_host_rerror_rate", "dst_host_srv_rerror_rate", "label",
)

CIDDS_COLUMNS = (
    "Date first seen", "Duration", "Proto", "Src IP Addr", "Src Pt", "Dst IP Addr", "Dst Pt",
    "Packets", "Bytes", "Flows", "Flags", "Tos", "class", "attackType", "attackID",
    "attackDescription",
)


@dataclass(frozen=True)
class DatasetProfile:
    name: str
    column_names: tuple[str, ...]
    categorical: tuple[str, ...]
    label_column: str
    has_header: bool = False
    dropped: tuple[str, ...] = ()
    optional_trailing: str | None = None
    unit_suffix: bool = False

    def mapping(self) -> dict[str, str]:
        return builtin_mapping(self.name)

    def read(self, path) -> RawTable:
        table = load_csv(
            path,
            has_header=self.has_header,
            column_names=None if self.has_header else self.column_names,
            optional_trailing=self.optional_trailing,
        )
        if table.column_names != self.column_names:
            missing = set(self.column_names) - set(table.column_names)
            if missing:
                raise DataError(f"{path}: missing columns {sorted(missing)}")
            table = RawTable(self.column_names, table.cells[:, [table.column_index(c) for c in self.column_names]])
        return table.drop_columns(self.dropped) if self.dropped else table


PROFILES = {
    "nslkdd": DatasetProfile(
        name="nslkdd",
        column_names=NSLKDD_COLUMNS,
        categorical=("protocol_type", "service", "flag"),
        label_column="label",
        optional_trailing="difficulty",
    ),
    "cidds": DatasetProfile(
        name="cidds",
        column_names=CIDDS_COLUMNS,
        categorical=("Date first seen", "Proto", "Src IP Addr", "Dst IP Addr", "Flags"),
        label_column="attackType",
        has_header=True,
        dropped=("class", "attackID", "attackDescription"),
        unit_suffix=True,
    ),
}


@dataclass(frozen=True)
class Preprocessor:
    """Fitted codebook + normalizer + label scheme for one dataset layout."""

    profile: DatasetProfile
    codebook: CategoryCodebook
    stats: NormalizationStats
    scheme: LabelScheme

    @classmethod
    def fit(cls, profile: DatasetProfile, train: RawTable, mapping: dict[str, str] | None = None) -> "Preprocessor":
        codebook = fit_codebook(train, profile.categorical)
        numeric = quantize(train, codebook, profile.label_column, profile.unit_suffix)
        stats = fit_normalizer(numeric)
        scheme = LabelScheme.from_mapping(FULL, mapping or profile.mapping())
        return cls(profile, codebook, stats, scheme)

    def transform(self, table: RawTable) -> FeatureMatrix:
        numeric = quantize(table, self.codebook, self.profile.label_column, self.profile.unit_suffix)
        return map_labels(self.stats.transform(numeric), self.scheme)

    def fingerprint(self) -> str:
        """Digest of the fitted encoding; equal digests mean compatible feature spaces."""
        h = hashlib.sha256()
        h.update(json.dumps([self.profile.name, list(self.stats.feature_names), self.codebook.to_meta()],
                            sort_keys=True).encode())
        h.update(np.ascontiguousarray(self.stats.v_min, "<f8").tobytes())
        h.update(np.ascontiguousarray(self.stats.v_max, "<f8").tobytes())
        return h.hexdigest()


def save_dataset(path, data: FeatureMatrix, prep: Preprocessor, role: str) -> str:
    meta = {
        "role": role,
        "profile": prep.profile.name,
        "class_names": list(data.class_names),
        "feature_names": list(data.feature_names),
        "codebook": prep.codebook.to_meta(),
        "scheme": {"mode": prep.scheme.mode, "families": [list(p) for p in prep.scheme.families]},
    }
    arrays = {
        "X": np.ascontiguousarray(data.X, dtype=np.float64),
        "y": np.ascontiguousarray(data.y, dtype=np.int64),
        "v_min": prep.stats.v_min,
        "v_max": prep.stats.v_max,
    }
    return container.save(path, "dataset", meta, arrays)


@dataclass(frozen=True)
class StoredDataset:
    data: FeatureMatrix
    prep: Preprocessor
    role: str


def load_dataset(path) -> StoredDataset:
    try:
        meta, arrays = container.load(path, kind="dataset")
    except OSError as exc:
        raise DataError(f"{path}: cannot read dataset ({exc.strerror})") from exc
    except container.ContainerError as exc:
        raise DataError(f"{path}: {exc}") from exc
    profile = PROFILES[meta["profile"]]
    feats = tuple(meta["feature_names"])
    prep = Preprocessor(
        profile,
        CategoryCodebook.from_meta(meta["codebook"]),
        NormalizationStats(feats, arrays["v_min"], arrays["v_max"]),
        LabelScheme(meta["scheme"]["mode"], tuple(tuple(p) for p in meta["scheme"]["families"])),
    )
    data = FeatureMatrix(arrays["X"], arrays["y"], tuple(meta["class_names"]), feats)
    return StoredDataset(data, prep, meta["role"])
