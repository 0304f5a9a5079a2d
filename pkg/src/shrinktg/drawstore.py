"""Columnar container for posterior draws with a binary + JSON on-disk form."""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

import numpy as np

from .errors import DataError, DomainError

__all__ = ["DrawStore", "config_hash", "BIN_NAME", "INDEX_NAME"]

BIN_NAME = "draws.bin"
INDEX_NAME = "draws_index.json"
_FORMAT = "shrinktg-draws"
_VERSION = 1


def config_hash(obj) -> str:
    """sha256 of the canonical JSON form of ``obj``."""
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


class DrawStore:
    """Named float64 columns, each of shape ``(n_draws, *param_shape)``.

    Columns are written to ``draws.bin`` back to back as little-endian
    C-ordered float64; ``draws_index.json`` records names, shapes, byte
    offsets, the draw count and free-form metadata.
    """

    def __init__(self, columns: dict | None = None, meta: dict | None = None):
        self._cols: dict[str, np.ndarray] = {}
        self.meta: dict = dict(meta or {})
        n = None
        for name, arr in (columns or {}).items():
            arr = np.asarray(arr, dtype=np.float64)
            if arr.ndim == 0:
                raise DomainError(f"column {name!r} needs a leading draw axis")
            arr = np.ascontiguousarray(arr)
            if n is None:
                n = arr.shape[0]
            elif arr.shape[0] != n:
                raise DomainError(f"column {name!r} has {arr.shape[0]} draws, expected {n}")
            self._cols[name] = arr

    @classmethod
    def allocate(cls, n_draws: int, shapes: dict, meta: dict | None = None) -> "DrawStore":
        cols = {name: np.full((n_draws, *tuple(shape)), np.nan) for name, shape in shapes.items()}
        return cls(cols, meta)

    @property
    def names(self) -> list:
        return list(self._cols)

    @property
    def n_draws(self) -> int:
        if not self._cols:
            return 0
        return next(iter(self._cols.values())).shape[0]

    def __contains__(self, name):
        return name in self._cols

    def __getitem__(self, name) -> np.ndarray:
        try:
            return self._cols[name]
        except KeyError:
            raise KeyError(f"unknown parameter {name!r}; available: {self.names}") from None

    def __len__(self):
        return self.n_draws

    def shape(self, name) -> tuple:
        return self[name].shape[1:]

    def record(self, i: int, values: dict):
        for name, v in values.items():
            self._cols[name][i] = v

    def add(self, name: str, arr):
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim == 0:
            raise DomainError(f"column {name!r} needs a leading draw axis")
        arr = np.ascontiguousarray(arr)
        if self._cols and arr.shape[0] != self.n_draws:
            raise DomainError(f"column {name!r} has {arr.shape[0]} draws, expected {self.n_draws}")
        if name in self._cols:
            raise DomainError(f"duplicate column {name!r}")
        self._cols[name] = arr

    def columns(self) -> dict:
        return dict(self._cols)

    @staticmethod
    def pool(stores) -> "DrawStore":
        """Concatenate draws from several stores with identical columns."""
        stores = list(stores)
        if not stores:
            raise DomainError("nothing to pool")
        names = stores[0].names
        for s in stores[1:]:
            if s.names != names:
                raise DomainError("stores have different columns")
        cols = {n: np.concatenate([s[n] for s in stores], axis=0) for n in names}
        meta = dict(stores[0].meta)
        meta["pooled_chains"] = len(stores)
        return DrawStore(cols, meta)

    def save(self, directory) -> Path:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        entries = []
        offset = 0
        with open(d / BIN_NAME, "wb") as fh:
            for name, arr in self._cols.items():
                buf = np.ascontiguousarray(arr, dtype="<f8").tobytes(order="C")
                fh.write(buf)
                entries.append({"name": name, "shape": list(arr.shape[1:]), "offset": offset, "nbytes": len(buf)})
                offset += len(buf)
        index = {
            "format": _FORMAT,
            "version": _VERSION,
            "byte_order": "little",
            "dtype": "float64",
            "n_draws": self.n_draws,
            "columns": entries,
            "meta": self.meta,
        }
        tmp = d / (INDEX_NAME + ".tmp")
        tmp.write_text(json.dumps(index, indent=1, sort_keys=True, default=str))
        os.replace(tmp, d / INDEX_NAME)
        return d

    @classmethod
    def load(cls, directory) -> "DrawStore":
        d = Path(directory)
        try:
            index = json.loads((d / INDEX_NAME).read_text())
        except FileNotFoundError:
            raise DataError(f"no {INDEX_NAME} in {d}") from None
        if index.get("format") != _FORMAT:
            raise DataError(f"{d / INDEX_NAME} is not a draw manifest")
        raw = (d / BIN_NAME).read_bytes()
        n = int(index["n_draws"])
        cols = {}
        for e in index["columns"]:
            shape = (n, *e["shape"])
            chunk = raw[e["offset"]: e["offset"] + e["nbytes"]]
            cols[e["name"]] = np.frombuffer(chunk, dtype="<f8").reshape(shape).astype(np.float64)
        return cls(cols, index.get("meta", {}))
