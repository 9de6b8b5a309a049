"""Datasets of timestamped, labeled feature vectors, plus file I/O,
splitting, monthly bucketing, and feature-mask application.

A Dataset is stored column-wise (features matrix, label vector, timestamp
vector) and is immutable by convention: every operation returns new values.
Timestamps are collection metadata (seconds since epoch, UTC), never model
features; they exist to support chronological splits and bucketing.

On-disk formats
---------------
CSV     header ``timestamp,label,f0,...,f{d-1}``; integer seconds, 0/1 label.
JSONL   one object per line: ``{"ts": int, "label": 0|1, "features": [...]}``.
Binary  magic ``DSET``, version byte 1, then little-endian u32 feature_dim,
        u64 sample_count, and per sample: i64 timestamp, u8 label,
        feature_dim float32 values. Features widen to float64 in memory.
Mask    JSON ``{"original_dim": int, "kept_indices": [int, ...]}``; extra
        keys are ignored on read.
"""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, FormatError, ParseError, ShapeError
from .numerics import make_rng

_MAGIC = b"DSET"
_VERSION = 1


@dataclass(frozen=True)
class Sample:
    """One labeled observation: feature vector, 0/1 label, epoch timestamp."""

    features: np.ndarray
    label: int
    timestamp: int


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray  # (n, feature_dim) float64
    labels: np.ndarray  # (n,) uint8, values in {0, 1}
    timestamps: np.ndarray  # (n,) int64, seconds since epoch UTC
    name: str = ""

    def __post_init__(self):
        f = np.ascontiguousarray(self.features, dtype=np.float64)
        if f.ndim != 2:
            raise ShapeError("features must be a 2-D matrix")
        lab = np.asarray(self.labels, dtype=np.uint8)
        ts = np.asarray(self.timestamps, dtype=np.int64)
        if lab.shape != (f.shape[0],) or ts.shape != (f.shape[0],):
            raise ShapeError("labels/timestamps length must match sample count")
        if lab.size and not np.all((lab == 0) | (lab == 1)):
            raise DataError("labels must be 0 or 1")
        if f.size and not np.all(np.isfinite(f)):
            raise DataError("feature values must be finite")
        object.__setattr__(self, "features", f)
        object.__setattr__(self, "labels", lab)
        object.__setattr__(self, "timestamps", ts)

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    def __len__(self) -> int:
        return self.features.shape[0]

    def __getitem__(self, i: int) -> Sample:
        return Sample(self.features[i], int(self.labels[i]), int(self.timestamps[i]))

    def subset(self, idx, name: str | None = None) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(
            self.features[idx],
            self.labels[idx],
            self.timestamps[idx],
            self.name if name is None else name,
        )


@dataclass(frozen=True)
class FeatureMask:
    """Ordered list of feature indices kept after reduction."""

    kept_indices: tuple
    original_dim: int

    def __post_init__(self):
        idx = tuple(int(i) for i in self.kept_indices)
        if not idx:
            raise ConfigError("feature mask must keep at least one index")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ConfigError("kept_indices must be strictly increasing")
        if idx[0] < 0 or idx[-1] >= self.original_dim:
            raise ConfigError("kept index out of range for original_dim")
        object.__setattr__(self, "kept_indices", idx)

    def __len__(self) -> int:
        return len(self.kept_indices)

    def to_dict(self) -> dict:
        return {"original_dim": self.original_dim, "kept_indices": list(self.kept_indices)}

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureMask":
        try:
            return cls(tuple(d["kept_indices"]), int(d["original_dim"]))
        except KeyError as e:
            raise FormatError(f"feature mask file missing key {e}") from None

    def save(self, path, extra: dict | None = None) -> None:
        doc = self.to_dict()
        if extra:
            doc.update(extra)
        Path(path).write_text(json.dumps(doc, indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "FeatureMask":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except json.JSONDecodeError as e:
            raise FormatError(f"feature mask file is not valid JSON: {e}") from None


# ---------------------------------------------------------------------------
# loading / saving
# ---------------------------------------------------------------------------

def _load_csv(path: Path) -> Dataset:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty dataset file") from None
        if len(header) < 3 or header[0] != "timestamp" or header[1] != "label":
            raise ParseError(f"{path}: expected header timestamp,label,f0,...", row=1)
        width = len(header) - 2
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != width + 2:
                raise ShapeError(
                    f"{path} row {lineno}: expected {width + 2} columns, got {len(rec)}"
                )
            try:
                ts = int(rec[0])
                label = int(rec[1])
                feats = [float(v) for v in rec[2:]]
            except ValueError as e:
                raise ParseError(f"{path}: {e}", row=lineno) from None
            rows.append((ts, label, feats))
    if not rows:
        raise DataError(f"{path}: empty dataset file")
    return Dataset(
        np.array([r[2] for r in rows], dtype=np.float64),
        np.array([r[1] for r in rows], dtype=np.uint8),
        np.array([r[0] for r in rows], dtype=np.int64),
        name=path.stem,
    )


def _load_jsonl(path: Path) -> Dataset:
    ts_list, lab_list, feat_list = [], [], []
    width = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                ts_list.append(int(obj["ts"]))
                lab_list.append(int(obj["label"]))
                feats = obj["features"]
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                raise ParseError(f"{path}: {e}", row=lineno) from None
            if width is None:
                width = len(feats)
            elif len(feats) != width:
                raise ShapeError(
                    f"{path} row {lineno}: expected {width} features, got {len(feats)}"
                )
            feat_list.append(feats)
    if not feat_list:
        raise DataError(f"{path}: empty dataset file")
    return Dataset(
        np.array(feat_list, dtype=np.float64),
        np.array(lab_list, dtype=np.uint8),
        np.array(ts_list, dtype=np.int64),
        name=path.stem,
    )


def _load_binary(path: Path) -> Dataset:
    raw = path.read_bytes()
    if len(raw) == 0:
        raise DataError(f"{path}: empty dataset file")
    if len(raw) < 17 or raw[:4] != _MAGIC:
        raise FormatError(f"{path}: bad magic, not a DSET file")
    if raw[4] != _VERSION:
        raise FormatError(f"{path}: unsupported DSET version {raw[4]}")
    dim, count = struct.unpack_from("<IQ", raw, 5)
    rec = np.dtype([("ts", "<i8"), ("label", "u1"), ("feat", "<f4", (dim,))])
    expected = 17 + count * rec.itemsize
    if len(raw) != expected:
        raise FormatError(f"{path}: truncated file, expected {expected} bytes, got {len(raw)}")
    if count == 0:
        raise DataError(f"{path}: empty dataset file")
    body = np.frombuffer(raw, dtype=rec, count=count, offset=17)
    return Dataset(
        body["feat"].astype(np.float64),
        body["label"].copy(),
        body["ts"].copy(),
        name=path.stem,
    )


_FORMATS = {"csv": _load_csv, "jsonl": _load_jsonl, "binary": _load_binary}
_EXTENSIONS = {".csv": "csv", ".jsonl": "jsonl", ".dset": "binary"}


def _infer_format(path: Path, fmt: str | None) -> str:
    if fmt is not None:
        if fmt not in _FORMATS:
            raise ConfigError(f"unknown dataset format {fmt!r}")
        return fmt
    by_ext = _EXTENSIONS.get(path.suffix.lower())
    if by_ext is None:
        raise ConfigError(f"cannot infer format from extension of {path}")
    return by_ext


def load_dataset(path, format: str | None = None) -> Dataset:
    """Load a dataset file (csv, jsonl, or binary; inferred from extension)."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"dataset file not found: {path}")
    return _FORMATS[_infer_format(path, format)](path)


def save_dataset(ds: Dataset, path, format: str | None = None) -> None:
    path = Path(path)
    fmt = _infer_format(path, format)
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["timestamp", "label"] + [f"f{i}" for i in range(ds.feature_dim)])
            for i in range(len(ds)):
                w.writerow(
                    [int(ds.timestamps[i]), int(ds.labels[i])]
                    + [repr(float(v)) for v in ds.features[i]]
                )
    elif fmt == "jsonl":
        with open(path, "w") as fh:
            for i in range(len(ds)):
                fh.write(
                    json.dumps(
                        {
                            "ts": int(ds.timestamps[i]),
                            "label": int(ds.labels[i]),
                            "features": [float(v) for v in ds.features[i]],
                        }
                    )
                    + "\n"
                )
    else:
        rec = np.dtype([("ts", "<i8"), ("label", "u1"), ("feat", "<f4", (ds.feature_dim,))])
        body = np.empty(len(ds), dtype=rec)
        body["ts"] = ds.timestamps
        body["label"] = ds.labels
        body["feat"] = ds.features.astype(np.float32)
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(bytes([_VERSION]))
            fh.write(struct.pack("<IQ", ds.feature_dim, len(ds)))
            fh.write(body.tobytes())


# ---------------------------------------------------------------------------
# splitting and bucketing
# ---------------------------------------------------------------------------

def _check_n_val(ds: Dataset, n_val: int) -> None:
    if not 0 < n_val < len(ds):
        raise ConfigError(f"n_val must be in (0, {len(ds)}), got {n_val}")


def split_random(ds: Dataset, n_val: int, seed: int) -> tuple[Dataset, Dataset]:
    """Uniform random partition into (train, val) with |val| == n_val."""
    _check_n_val(ds, n_val)
    perm = make_rng(seed).permutation(len(ds))
    val_idx = np.sort(perm[:n_val])
    train_idx = np.sort(perm[n_val:])
    return ds.subset(train_idx, name=ds.name + "/train"), ds.subset(val_idx, name=ds.name + "/val")


def split_recent(ds: Dataset, n_val: int) -> tuple[Dataset, Dataset]:
    """Chronological partition: val is the n_val most recent samples.

    Ties at the boundary go to the sample that appears later in the
    original order (stable sort on timestamp).
    """
    _check_n_val(ds, n_val)
    order = np.argsort(ds.timestamps, kind="stable")
    return (
        ds.subset(order[:-n_val], name=ds.name + "/train"),
        ds.subset(order[-n_val:], name=ds.name + "/val"),
    )


def month_of(ts: int) -> tuple[int, int]:
    d = datetime.fromtimestamp(int(ts), tz=timezone.utc)
    return d.year, d.month


def month_label(year: int, month: int) -> str:
    return f"{year:04d}-{month:02d}"


def _next_month(ym: tuple[int, int]) -> tuple[int, int]:
    y, m = ym
    return (y + 1, 1) if m == 12 else (y, m + 1)


def bucket_by_month(ds: Dataset) -> list[tuple[str, Dataset]]:
    """Split into UTC calendar-month buckets, ascending, including empty
    months between the first and last occupied ones."""
    if len(ds) == 0:
        return []
    order = np.argsort(ds.timestamps, kind="stable")
    months = [month_of(ds.timestamps[i]) for i in order]
    first, last = months[0], months[-1]
    groups: dict[tuple[int, int], list[int]] = {}
    ym = first
    while True:
        groups[ym] = []
        if ym == last:
            break
        ym = _next_month(ym)
    for pos, ym in zip(order, months):
        groups[ym].append(pos)
    out = []
    for ym, idx in groups.items():
        label = month_label(*ym)
        out.append((label, ds.subset(np.array(idx, dtype=np.int64), name=f"{ds.name}/{label}")))
    return out


def class_counts(ds: Dataset) -> tuple[int, int]:
    """(number of label-0 samples, number of label-1 samples)."""
    n1 = int(np.sum(ds.labels == 1))
    return len(ds) - n1, n1


def apply_mask(ds: Dataset, mask: FeatureMask) -> Dataset:
    """Keep only the masked feature columns; labels/timestamps unchanged."""
    if mask.original_dim != ds.feature_dim:
        raise ShapeError(
            f"mask built for {mask.original_dim} features, dataset has {ds.feature_dim}"
        )
    idx = np.array(mask.kept_indices, dtype=np.int64)
    return Dataset(ds.features[:, idx], ds.labels, ds.timestamps, name=ds.name)


def compose_masks(first: FeatureMask, then: FeatureMask) -> FeatureMask:
    """Single mask equivalent to applying ``first`` and then ``then``."""
    if then.original_dim != len(first):
        raise ShapeError(
            f"second mask expects {then.original_dim} features, first keeps {len(first)}"
        )
    return FeatureMask(
        tuple(first.kept_indices[j] for j in then.kept_indices), first.original_dim
    )
