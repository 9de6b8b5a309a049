"""Permutation feature importance and the feature mask it produces.

Importance of feature i is the drop in a chosen metric when column i is
randomly permuted across samples, which severs the feature-target
relationship while preserving the column's marginal distribution:

    importance(i) = E_base - mean over repeats of E(permuted_i)

A feature is kept iff its importance strictly exceeds ``keep_threshold``
(default 0): a feature whose permutation does not hurt the model carries
no usable signal. A single repeat reproduces the plain algorithm; more
repeats average out permutation luck.

Every (feature, repeat) pair derives its own RNG from
``SeedSequence((seed, feature, repeat))``, so results are identical
whether features are evaluated in order, shuffled, or across threads.
"""

from __future__ import annotations

import csv
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .data import FeatureMask
from .errors import ConfigError, DataError, EmptyMaskError, ShapeError
from .evaluation import confusion, metrics
from .model import ModelParams, predict_proba

PFI_METRICS = ("f1", "accuracy")


@dataclass(frozen=True)
class PfiConfig:
    metric: str = "f1"
    n_repeats: int = 5
    seed: int = 0
    keep_threshold: float = 0.0
    threshold: float = 0.5  # probability cut for class decisions

    def __post_init__(self):
        if self.metric not in PFI_METRICS:
            raise ConfigError(f"unknown importance metric {self.metric!r}")
        if self.n_repeats < 1:
            raise ConfigError("n_repeats must be >= 1")


@dataclass
class PfiReport:
    importances: np.ndarray  # (feature_dim,) E_base - mean(E_perm)
    kept: np.ndarray  # (feature_dim,) bool
    e_base: float
    metric: str
    n_repeats: int
    seed: int

    def write_csv(self, path, comment: str | None = None) -> None:
        with open(path, "w", newline="") as fh:
            if comment:
                fh.write(f"# {comment}\n")
            w = csv.writer(fh)
            w.writerow(["feature_index", "importance", "kept"])
            for i, (imp, keep) in enumerate(zip(self.importances, self.kept)):
                w.writerow([i, repr(float(imp)), int(keep)])


def permute_feature(X: np.ndarray, i: int, rng: np.random.Generator) -> np.ndarray:
    """Copy of X with column i uniformly permuted; X itself is untouched."""
    X = np.asarray(X)
    if X.ndim != 2:
        raise ShapeError("expected a 2-D matrix")
    if not 0 <= i < X.shape[1]:
        raise ShapeError(f"feature index {i} out of range for {X.shape[1]} features")
    out = X.copy()
    out[:, i] = rng.permutation(out[:, i])
    return out


def _score(params: ModelParams, X, y, cfg: PfiConfig) -> float:
    m = metrics(confusion(predict_proba(params, X), y, cfg.threshold))
    v = m.f1 if cfg.metric == "f1" else m.acc
    return v if v is not None else 0.0


def column_importance(
    params: ModelParams, X_work: np.ndarray, y, col: int, cfg: PfiConfig, e_base: float
) -> float:
    """Importance of one column, mutating X_work in place and restoring it.

    Depends only on (params, data, col, cfg), not on evaluation order.
    """
    orig = X_work[:, col].copy()
    total = 0.0
    for rep in range(cfg.n_repeats):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((cfg.seed, col, rep))))
        X_work[:, col] = rng.permutation(orig)
        total += _score(params, X_work, y, cfg)
    X_work[:, col] = orig
    return e_base - total / cfg.n_repeats


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get("DRIFTKIT_THREADS", "1")))
    except ValueError:
        return 1


def run_pfi(
    params: ModelParams,
    X: np.ndarray,
    y,
    cfg: PfiConfig,
    n_threads: int | None = None,
) -> tuple[FeatureMask, PfiReport]:
    """Score every feature and return (mask of kept features, full report).

    Neither the model nor X is modified. When no feature clears the keep
    threshold an EmptyMaskError is raised with the report attached, since
    a mask must keep at least one feature.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DataError("PFI needs a non-empty 2-D evaluation matrix")
    if X.shape[1] != params.cfg.input_dim:
        raise ShapeError(
            f"matrix has {X.shape[1]} features, model expects {params.cfg.input_dim}"
        )
    y = np.asarray(y)
    if y.shape != (X.shape[0],):
        raise ShapeError("labels length must match sample count")
    if n_threads is None:
        n_threads = default_threads()

    e_base = _score(params, X, y, cfg)
    n_feat = X.shape[1]

    if n_threads <= 1:
        X_work = X.copy()
        importances = np.array(
            [column_importance(params, X_work, y, col, cfg, e_base) for col in range(n_feat)]
        )
    else:
        local = threading.local()

        def worker(col: int) -> float:
            if not hasattr(local, "X_work"):
                local.X_work = X.copy()
            return column_importance(params, local.X_work, y, col, cfg, e_base)

        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            importances = np.array(list(pool.map(worker, range(n_feat))))

    kept = importances > cfg.keep_threshold
    report = PfiReport(importances, kept, e_base, cfg.metric, cfg.n_repeats, cfg.seed)
    if not kept.any():
        raise EmptyMaskError("no feature importance exceeded the keep threshold", report)
    mask = FeatureMask(tuple(int(i) for i in np.flatnonzero(kept)), n_feat)
    return mask, report
