"""Seeded generator of labeled binary streams with controlled covariate
drift, for desk-scale verification of the full pipeline.

Samples are class-conditional Gaussians. A chosen subset of feature
columns is informative: label-0 samples center at -informative_scale and
label-1 samples at +informative_scale on those columns; every other
column is pure N(0, 1) noise for both classes. From ``drift_month``
onward the positive-class cluster mean moves a Euclidean distance of
``drift_magnitude`` toward (and past) the negative cluster, following one
of four time profiles:

  sudden       full shift from drift_month on
  incremental  mean interpolates linearly, reaching the full shift in the
               final month
  gradual      each positive sample draws old or new concept at random,
               with the new-concept probability ramping linearly to 1
  recurrent    full shift alternating on/off in blocks of
               ``recurrent_period`` months

Only the input distribution moves; the label rule never changes. Months
are generated from per-month derived seeds, so the stream is reproducible
sample-for-sample regardless of generation order.
"""

from __future__ import annotations

import calendar
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .data import Dataset
from .errors import ConfigError

DRIFT_SHAPES = ("sudden", "gradual", "incremental", "recurrent")

# tag mixed into the seed stream that picks the informative column subset
_IDX_STREAM = 101


@dataclass(frozen=True)
class DriftSpec:
    shape: str = "sudden"
    n_months: int = 12
    samples_per_month: int = 500
    feature_dim: int = 30
    n_informative: int = 6
    drift_month: int = 6
    drift_magnitude: float = 2.5
    class_balance: float = 0.5  # P(label == 1)
    seed: int = 0
    informative_scale: float = 1.0
    recurrent_period: int = 2
    start_month: str = "2021-01"

    def __post_init__(self):
        if self.shape not in DRIFT_SHAPES:
            raise ConfigError(f"unknown drift shape {self.shape!r}")
        if self.n_months < 1 or self.samples_per_month < 1:
            raise ConfigError("n_months and samples_per_month must be >= 1")
        if not 1 <= self.n_informative <= self.feature_dim:
            raise ConfigError("need 1 <= n_informative <= feature_dim")
        if not 0 <= self.drift_month < self.n_months:
            raise ConfigError("drift_month must lie in [0, n_months)")
        if self.drift_magnitude < 0:
            raise ConfigError("drift_magnitude must be >= 0")
        if not 0.0 < self.class_balance < 1.0:
            raise ConfigError("class_balance must be in (0, 1)")
        if self.recurrent_period < 1:
            raise ConfigError("recurrent_period must be >= 1")
        _parse_month(self.start_month)

    def to_dict(self) -> dict:
        return {
            "shape": self.shape,
            "n_months": self.n_months,
            "samples_per_month": self.samples_per_month,
            "feature_dim": self.feature_dim,
            "n_informative": self.n_informative,
            "drift_month": self.drift_month,
            "drift_magnitude": self.drift_magnitude,
            "class_balance": self.class_balance,
            "seed": self.seed,
            "informative_scale": self.informative_scale,
            "recurrent_period": self.recurrent_period,
            "start_month": self.start_month,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DriftSpec":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown drift spec keys: {sorted(unknown)}")
        return cls(**d)


def _parse_month(s: str) -> tuple[int, int]:
    try:
        y, m = s.split("-")
        y, m = int(y), int(m)
    except ValueError:
        raise ConfigError(f"start_month must look like 'YYYY-MM', got {s!r}") from None
    if not 1 <= m <= 12:
        raise ConfigError(f"month out of range in {s!r}")
    return y, m


def _month_add(year: int, month: int, k: int) -> tuple[int, int]:
    idx = (year * 12 + (month - 1)) + k
    return idx // 12, idx % 12 + 1


def informative_indices(spec: DriftSpec) -> np.ndarray:
    """Seed-determined informative column subset, sorted ascending."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((spec.seed, _IDX_STREAM))))
    return np.sort(rng.choice(spec.feature_dim, size=spec.n_informative, replace=False))


def concept_weight(spec: DriftSpec, month: int) -> float:
    """Fraction of the full mean shift in effect during ``month``.

    For the gradual shape this is the probability a positive sample draws
    the new concept rather than a partial shift.
    """
    if month < spec.drift_month or spec.drift_magnitude == 0:
        return 0.0
    if spec.shape == "sudden":
        return 1.0
    if spec.shape in ("incremental", "gradual"):
        span = spec.n_months - spec.drift_month
        return (month - spec.drift_month + 1) / span
    # recurrent: alternate in blocks, starting shifted
    block = (month - spec.drift_month) // spec.recurrent_period
    return 1.0 if block % 2 == 0 else 0.0


def _month_timestamps(spec: DriftSpec, month: int) -> np.ndarray:
    y0, m0 = _parse_month(spec.start_month)
    y, m = _month_add(y0, m0, month)
    mid = datetime(y, m, 15, tzinfo=timezone.utc)
    base = int(calendar.timegm(mid.timetuple()))
    return base + np.arange(spec.samples_per_month, dtype=np.int64)


def generate_stream(spec: DriftSpec) -> Dataset:
    """Generate the full stream, timestamped mid-month, months ascending."""
    info = informative_indices(spec)
    shift_per_dim = (
        spec.drift_magnitude / np.sqrt(spec.n_informative) if spec.drift_magnitude else 0.0
    )
    feats, labels, stamps = [], [], []
    for month in range(spec.n_months):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((spec.seed, month))))
        n = spec.samples_per_month
        y = (rng.random(n) < spec.class_balance).astype(np.uint8)
        X = rng.standard_normal((n, spec.feature_dim))
        w = concept_weight(spec, month)
        if spec.shape == "gradual" and 0.0 < w:
            # per-sample concept choice: old mean or fully shifted mean
            shift = (rng.random(n) < w).astype(np.float64)
        else:
            shift = np.full(n, w)
        pos = y == 1
        X[np.ix_(pos, info)] += spec.informative_scale - np.outer(
            shift[pos], np.full(spec.n_informative, shift_per_dim)
        )
        X[np.ix_(~pos, info)] -= spec.informative_scale
        feats.append(X)
        labels.append(y)
        stamps.append(_month_timestamps(spec, month))
    return Dataset(
        np.vstack(feats),
        np.concatenate(labels),
        np.concatenate(stamps),
        name=f"synth-{spec.shape}",
    )


def concept_truth(spec: DriftSpec) -> dict:
    """Ground-truth sidecar: informative columns and per-month concept
    parameters, for oracle tests against the generated stream."""
    info = informative_indices(spec)
    months = []
    y0, m0 = _parse_month(spec.start_month)
    for month in range(spec.n_months):
        y, m = _month_add(y0, m0, month)
        w = concept_weight(spec, month)
        months.append(
            {
                "label": f"{y:04d}-{m:02d}",
                "n": spec.samples_per_month,
                "new_concept_weight": w,
                "mixing": spec.shape == "gradual",
                "pos_mean_shift_distance": w * spec.drift_magnitude
                if spec.shape != "gradual"
                else None,
            }
        )
    return {
        "spec": spec.to_dict(),
        "informative_indices": [int(i) for i in info],
        "negative_mean": -spec.informative_scale,
        "positive_mean_base": spec.informative_scale,
        "months": months,
    }


def save_truth(spec: DriftSpec, path) -> None:
    Path(path).write_text(json.dumps(concept_truth(spec), indent=2) + "\n")
