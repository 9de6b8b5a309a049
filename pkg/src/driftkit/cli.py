"""driftkit command line.

Subcommands:

  synth    generate a synthetic drifting stream from a drift-spec JSON
  train    train a model on data.train, write model.dnet + history.json
  pfi      score feature importance on data.pfi, write mask.json +
           pfi_report.csv
  eval     evaluate out_dir/model.dnet on data.eval by calendar month,
           write metrics.csv + metrics.json (model file is never touched)
  sweep    grid of training runs over lam and (p_fn, p_fp) pairs, one
           subdirectory per cell, consolidated sweep.csv
  report   consolidate histories/metrics under a run directory into
           report.csv + f1_over_time.csv

Shared flags: ``--config <file>`` (run config JSON; for synth it is the
drift-spec JSON), ``--seed <int>`` and ``--out <dir>`` override the file
values. ``DRIFTKIT_THREADS`` caps importance-scoring threads and
``DRIFTKIT_NUMBA=0`` forces the pure-numpy kernels.

Exit codes: 0 success, 2 configuration problem, 3 data problem (missing
or malformed input, empty mask), 4 numeric divergence, 1 other failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .config import RunConfig
from .data import (
    FeatureMask,
    apply_mask,
    bucket_by_month,
    compose_masks,
    load_dataset,
    save_dataset,
)
from .errors import (
    ConfigError,
    DataError,
    DriftkitError,
    EmptyMaskError,
    NumericError,
    ShapeError,
)
from .evaluation import detect_drift, evaluate_buckets, save_report_json
from .model import LoadedModel, load_model, save_model
from .pfi import run_pfi
from .synthdrift import DriftSpec, generate_stream, save_truth
from .training import train

DEFAULT_LAMBDAS = (0.5, 0.1, 0.05, 0.01, 0.001)
DEFAULT_PENALTY_PAIRS = ((1.0, 1.0), (1.0, 3.0), (3.0, 1.0), (5.0, 1.0))


def _require_file(path, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise DataError(f"{what} not found: {p}")
    return p


def _load_run_config(args) -> RunConfig:
    if not args.config:
        raise ConfigError("--config is required for this command")
    p = Path(args.config)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    cfg = RunConfig.from_file(p)
    return cfg.with_overrides(seed=args.seed, out_dir=args.out)


def _stamp(cfg: RunConfig) -> str:
    return f"config_hash={cfg.config_hash} seed={cfg.seed}"


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_input(cfg: RunConfig, role: str) -> "Dataset":
    path = cfg.data_path(role)
    if not path:
        raise ConfigError(f"data.{role} is required for this command")
    return load_dataset(_require_file(path, f"data.{role}"))


def _load_run_model(cfg: RunConfig) -> LoadedModel:
    return load_model(_require_file(Path(cfg.out_dir) / "model.dnet", "model file"))


def _apply_model_mask(model: LoadedModel, ds, role: str):
    if model.mask is not None:
        ds = apply_mask(ds, model.mask)
    if ds.feature_dim != model.params.cfg.input_dim:
        raise ConfigError(
            f"data.{role} has {ds.feature_dim} features after masking, "
            f"model expects {model.params.cfg.input_dim}"
        )
    return ds


def _wrote(path: Path) -> None:
    print(f"wrote {path}")


def cmd_synth(args) -> int:
    if not args.config:
        raise ConfigError("--config <drift-spec JSON> is required")
    if not args.out:
        raise ConfigError("--out <dir> is required")
    p = Path(args.config)
    if not p.is_file():
        raise ConfigError(f"drift spec file not found: {p}")
    try:
        raw = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {p}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("drift spec must be a JSON object")
    if args.seed is not None:
        raw["seed"] = args.seed
    try:
        spec = DriftSpec.from_dict(raw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ds = generate_stream(spec)
    save_dataset(ds, out / "stream.dset")
    save_truth(spec, out / "truth.json")
    _wrote(out / "stream.dset")
    _wrote(out / "truth.json")
    return 0


def _run_train(cfg: RunConfig) -> "TrainHistory":
    ds = _load_input(cfg, "train")
    mask = None
    mask_path = cfg.data_path("mask")
    if mask_path:
        mask = FeatureMask.load(_require_file(mask_path, "data.mask"))
        ds = apply_mask(ds, mask)
    model_cfg = cfg.model_config(input_dim=ds.feature_dim)
    params, history = train(ds, model_cfg, cfg.train_config())
    out = _out_dir(cfg)
    meta = {
        "config_hash": cfg.config_hash,
        "seed": cfg.seed,
        "best_epoch": history.best_epoch,
        "best_score": history.best_score,
        "selection_metric": cfg.train_config().selection_metric,
        "n_train": history.n_train,
        "n_val": history.n_val,
    }
    save_model(params, out / "model.dnet", mask=mask, meta=meta)
    history.save(
        out / "history.json", extra={"config_hash": cfg.config_hash, "seed": cfg.seed}
    )
    cfg.save(out / "config.json")
    return history


def cmd_train(args) -> int:
    cfg = _load_run_config(args)
    _run_train(cfg)
    out = Path(cfg.out_dir)
    for name in ("model.dnet", "history.json", "config.json"):
        _wrote(out / name)
    return 0


def cmd_pfi(args) -> int:
    cfg = _load_run_config(args)
    model = _load_run_model(cfg)
    ds = _apply_model_mask(model, _load_input(cfg, "pfi"), "pfi")
    out = _out_dir(cfg)
    try:
        mask, report = run_pfi(model.params, ds.features, ds.labels, cfg.pfi_config())
    except EmptyMaskError as exc:
        if exc.report is not None:
            exc.report.write_csv(out / "pfi_report.csv", comment=_stamp(cfg))
            _wrote(out / "pfi_report.csv")
        raise
    if model.mask is not None:
        mask = compose_masks(model.mask, mask)
    mask.save(out / "mask.json", extra={"config_hash": cfg.config_hash, "seed": cfg.seed})
    report.write_csv(out / "pfi_report.csv", comment=_stamp(cfg))
    _wrote(out / "mask.json")
    _wrote(out / "pfi_report.csv")
    return 0


def _run_eval(cfg: RunConfig) -> tuple:
    model = _load_run_model(cfg)
    ds = _apply_model_mask(model, _load_input(cfg, "eval"), "eval")
    settings = cfg.eval_settings()
    report = evaluate_buckets(model.params, bucket_by_month(ds), threshold=settings.threshold)
    verdict = detect_drift(
        report.error_series(settings.error_metric),
        epsilon=settings.epsilon,
        persistence=settings.persistence,
    )
    out = _out_dir(cfg)
    report.write_csv(out / "metrics.csv", comment=_stamp(cfg))
    save_report_json(
        report,
        verdict,
        out / "metrics.json",
        extra={"config_hash": cfg.config_hash, "seed": cfg.seed},
    )
    return report, verdict


def cmd_eval(args) -> int:
    cfg = _load_run_config(args)
    _report, verdict = _run_eval(cfg)
    out = Path(cfg.out_dir)
    _wrote(out / "metrics.csv")
    _wrote(out / "metrics.json")
    onset = "none" if verdict.onset is None else str(verdict.onset)
    print(f"drift onset: {onset} (epsilon={verdict.epsilon}, persisted={verdict.persisted})")
    return 0


def _load_grid(path) -> tuple[list, list]:
    if path is None:
        return list(DEFAULT_LAMBDAS), [list(p) for p in DEFAULT_PENALTY_PAIRS]
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"grid file not found: {p}")
    try:
        raw = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {p}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("grid file must be a JSON object")
    unknown = set(raw) - {"lambdas", "penalty_pairs"}
    if unknown:
        raise ConfigError(f"unknown grid key: {sorted(unknown)[0]}")
    lambdas = raw.get("lambdas", list(DEFAULT_LAMBDAS))
    pairs = raw.get("penalty_pairs", [list(p) for p in DEFAULT_PENALTY_PAIRS])
    if not lambdas or not pairs:
        raise ConfigError("grid lists must be non-empty")
    for pair in pairs:
        if not isinstance(pair, (list, tuple)) or len(pair) != 2:
            raise ConfigError(f"penalty pair must be [p_fn, p_fp], got {pair!r}")
    return list(lambdas), [list(p) for p in pairs]


def _cell_name(lam: float, p_fn: float, p_fp: float) -> str:
    return f"lam{lam:g}_fn{p_fn:g}_fp{p_fp:g}"


def cmd_sweep(args) -> int:
    cfg = _load_run_config(args)
    lambdas, pairs = _load_grid(args.grid)
    base_out = _out_dir(cfg)
    rows = []
    for lam in lambdas:
        for p_fn, p_fp in pairs:
            cell = _cell_name(lam, p_fn, p_fp)
            cell_cfg = cfg.with_overrides(
                out_dir=str(base_out / cell),
                loss={"lam": lam, "p_fn": p_fn, "p_fp": p_fp},
            )
            history = _run_train(cell_cfg)
            cell_loss = cell_cfg.loss_config()
            row = {
                "cell": cell,
                "lam": cell_loss.lam,
                "p_fn": cell_loss.p_fn,
                "p_fp": cell_loss.p_fp,
                "config_hash": cell_cfg.config_hash,
                "best_epoch": history.best_epoch,
                "best_score": history.best_score,
                "agg_acc": "",
                "agg_f1": "",
                "agg_fnr": "",
                "drift_onset": "",
            }
            if cfg.data_path("eval"):
                report, verdict = _run_eval(cell_cfg)
                agg = report.aggregate
                row["agg_acc"] = agg.acc
                row["agg_f1"] = "" if agg.f1 is None else agg.f1
                row["agg_fnr"] = "" if agg.fnr is None else agg.fnr
                row["drift_onset"] = "" if verdict.onset is None else verdict.onset
            rows.append(row)
            print(f"cell {cell}: best_score={history.best_score:.4f}")
    sweep_csv = base_out / "sweep.csv"
    with open(sweep_csv, "w", newline="") as fh:
        fh.write(f"# {_stamp(cfg)}\n")
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
    _wrote(sweep_csv)
    return 0


def _scan_runs(run_dir: Path) -> list[dict]:
    runs = []
    for hist_path in sorted(run_dir.rglob("history.json")):
        d = hist_path.parent
        entry = {"dir": d, "name": str(d.relative_to(run_dir)) or ".", "history": None, "metrics": None}
        entry["history"] = json.loads(hist_path.read_text())
        metrics_path = d / "metrics.json"
        if metrics_path.is_file():
            entry["metrics"] = json.loads(metrics_path.read_text())
        runs.append(entry)
    return runs


def cmd_report(args) -> int:
    if not args.out:
        raise ConfigError("--out <run-dir> is required")
    run_dir = Path(args.out)
    if not run_dir.is_dir():
        raise DataError(f"run directory not found: {run_dir}")
    runs = _scan_runs(run_dir)
    if not runs:
        raise DataError(f"no history.json found under {run_dir}")

    report_csv = run_dir / "report.csv"
    fields = [
        "model",
        "config_hash",
        "seed",
        "epochs_run",
        "best_epoch",
        "best_score",
        "agg_acc",
        "agg_f1",
        "agg_fnr",
        "drift_onset",
        "drift_persisted",
    ]
    with open(report_csv, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for run in runs:
            h = run["history"]
            row = {
                "model": run["name"],
                "config_hash": h.get("config_hash", ""),
                "seed": h.get("seed", ""),
                "epochs_run": len(h.get("train_loss", [])),
                "best_epoch": h.get("best_epoch", ""),
                "best_score": h.get("best_score", ""),
                "agg_acc": "",
                "agg_f1": "",
                "agg_fnr": "",
                "drift_onset": "",
                "drift_persisted": "",
            }
            m = run["metrics"]
            if m is not None:
                agg = m.get("aggregate", {})
                row["agg_acc"] = _blank_none(agg.get("acc"))
                row["agg_f1"] = _blank_none(agg.get("f1"))
                row["agg_fnr"] = _blank_none(agg.get("fnr"))
                verdict = m.get("drift") or {}
                row["drift_onset"] = _blank_none(verdict.get("onset"))
                row["drift_persisted"] = _blank_none(verdict.get("persisted"))
            writer.writerow(row)

    over_time_csv = run_dir / "f1_over_time.csv"
    with open(over_time_csv, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model", "bucket", "metric", "value"])
        for run in runs:
            m = run["metrics"]
            if m is None:
                continue
            for bucket_row in m.get("buckets", []):
                for metric in ("f1", "acc", "err"):
                    writer.writerow(
                        [
                            run["name"],
                            bucket_row["bucket"],
                            metric,
                            _blank_none(bucket_row.get(metric)),
                        ]
                    )
    _wrote(report_csv)
    _wrote(over_time_csv)
    return 0


def _blank_none(v):
    return "" if v is None else v


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="driftkit",
        description="Train, prune, and evaluate drift-resilient binary classifiers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    commands = [
        ("synth", cmd_synth, "generate a synthetic drifting stream"),
        ("train", cmd_train, "train a model"),
        ("pfi", cmd_pfi, "permutation feature importance and mask"),
        ("eval", cmd_eval, "monthly evaluation and drift detection"),
        ("sweep", cmd_sweep, "grid of training runs over loss settings"),
        ("report", cmd_report, "consolidate run artifacts"),
    ]
    for name, func, help_text in commands:
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", help="config JSON (drift spec for synth)")
        sp.add_argument("--seed", type=int, default=None, help="override the config seed")
        sp.add_argument("--out", default=None, help="override the output directory")
        if name == "sweep":
            sp.add_argument("--grid", default=None, help="grid JSON file")
        sp.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ShapeError) as exc:
        return _fail(exc, 2)
    except NumericError as exc:
        return _fail(exc, 4)
    except DataError as exc:
        return _fail(exc, 3)
    except DriftkitError as exc:
        return _fail(exc, 1)


def _fail(exc: Exception, code: int) -> int:
    print(f"driftkit: error: {exc}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
