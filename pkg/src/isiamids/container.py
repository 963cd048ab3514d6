"""Versioned single-file container used by every on-disk artifact.

Layout::

    ISIAMIDS-CONTAINER <version>\\n
    <header json, one line>\\n
    <array payloads, concatenated, in header order>

The header carries ``kind`` (what the file holds), ``meta`` (free-form JSON)
and an ``arrays`` table of ``{name, dtype, shape, nbytes}`` records.  Arrays
are stored as raw little-endian bytes in C order so a write/read round trip
is bit-exact, and the encoder uses sorted keys so identical inputs produce
byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

MAGIC = b"ISIAMIDS-CONTAINER"
VERSION = 1


class ContainerError(ValueError):
    pass


def _canonical(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr).reshape(arr.shape)  # keeps 0-d arrays 0-d
    if arr.dtype.byteorder == ">":
        arr = arr.astype(arr.dtype.newbyteorder("<"))
    return arr


def dumps(kind: str, meta: dict, arrays: dict[str, np.ndarray] | None = None) -> bytes:
    arrays = arrays or {}
    table = []
    payloads = []
    for name, arr in arrays.items():
        arr = _canonical(np.asarray(arr))
        if arr.dtype == object:
            raise ContainerError(f"array {name!r} has object dtype")
        table.append(
            {"name": name, "dtype": arr.dtype.str, "shape": list(arr.shape), "nbytes": arr.nbytes}
        )
        payloads.append(arr.tobytes())
    header = json.dumps(
        {"kind": kind, "meta": meta, "arrays": table}, sort_keys=True, separators=(",", ":")
    )
    return b"".join(
        [MAGIC, b" ", str(VERSION).encode(), b"\n", header.encode("utf-8"), b"\n", *payloads]
    )


def loads(blob: bytes, kind: str | None = None) -> tuple[dict, dict[str, np.ndarray]]:
    first, sep, rest = blob.partition(b"\n")
    if not sep or not first.startswith(MAGIC):
        raise ContainerError("not an isiamids container")
    version = int(first[len(MAGIC):].strip() or 0)
    if version != VERSION:
        raise ContainerError(f"unsupported container version {version}")
    header_raw, sep, body = rest.partition(b"\n")
    if not sep:
        raise ContainerError("truncated container header")
    header = json.loads(header_raw.decode("utf-8"))
    if kind is not None and header["kind"] != kind:
        raise ContainerError(f"expected a {kind!r} container, found {header['kind']!r}")
    arrays = {}
    offset = 0
    for rec in header["arrays"]:
        end = offset + rec["nbytes"]
        if end > len(body):
            raise ContainerError(f"truncated payload for array {rec['name']!r}")
        arr = np.frombuffer(body[offset:end], dtype=np.dtype(rec["dtype"]))
        arrays[rec["name"]] = arr.reshape(rec["shape"]).copy()
        offset = end
    return header["meta"], arrays


def save(path, kind: str, meta: dict, arrays: dict[str, np.ndarray] | None = None) -> str:
    """Write a container and return its sha256 hex digest."""
    blob = dumps(kind, meta, arrays)
    Path(path).write_bytes(blob)
    return hashlib.sha256(blob).hexdigest()


def load(path, kind: str | None = None) -> tuple[dict, dict[str, np.ndarray]]:
    return loads(Path(path).read_bytes(), kind=kind)


def prefixed(prefix: str, arrays: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    return {f"{prefix}/{k}": v for k, v in arrays.items()}


def unprefixed(prefix: str, arrays: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    head = prefix + "/"
    return {k[len(head):]: v for k, v in arrays.items() if k.startswith(head)}
