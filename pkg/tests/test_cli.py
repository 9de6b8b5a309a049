import json
import shutil
import subprocess

import pytest

from driftkit.cli import main
from driftkit.data import FeatureMask, load_dataset
from driftkit.model import load_model

DRIFT_SPEC = {
    "shape": "sudden",
    "n_months": 4,
    "samples_per_month": 150,
    "feature_dim": 6,
    "n_informative": 2,
    "drift_month": 2,
    "drift_magnitude": 1.0,
    "informative_scale": 2.0,
    "seed": 0,
}

RUN_CONFIG = {
    "seed": 0,
    "model": {"trunk_width": 16, "n_residual_blocks": 1,
              "dropout_rate": 0.1, "head_widths": [8]},
    "train": {"n_val": 100, "batch_size": 64, "max_epochs": 6,
              "patience": 6, "lr": 5e-3},
    "pfi": {"n_repeats": 3},
    "eval": {"epsilon": 0.25, "persistence": 2},
}


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """synth + train + pfi + eval executed once; tests inspect the artifacts."""
    root = tmp_path_factory.mktemp("cli")
    spec_path = root / "spec.json"
    spec_path.write_text(json.dumps(DRIFT_SPEC))
    assert main(["synth", "--config", str(spec_path), "--out", str(root / "synth")]) == 0

    stream = str(root / "synth" / "stream.dset")
    cfg = dict(RUN_CONFIG)
    cfg["out_dir"] = str(root / "run1")
    cfg["data"] = {"train": stream, "eval": stream, "pfi": stream, "mask": None}
    cfg_path = root / "run.json"
    cfg_path.write_text(json.dumps(cfg))

    assert main(["train", "--config", str(cfg_path)]) == 0
    assert main(["pfi", "--config", str(cfg_path)]) == 0
    model_before_eval = (root / "run1" / "model.dnet").read_bytes()
    assert main(["eval", "--config", str(cfg_path)]) == 0
    return {"root": root, "spec_path": spec_path, "cfg_path": cfg_path,
            "cfg": cfg, "run": root / "run1", "stream": stream,
            "model_before_eval": model_before_eval}


def test_synth_outputs(workdir):
    synth = workdir["root"] / "synth"
    ds = load_dataset(synth / "stream.dset")
    assert len(ds) == 600 and ds.feature_dim == 6
    truth = json.loads((synth / "truth.json").read_text())
    assert len(truth["informative_indices"]) == 2
    assert [m["label"] for m in truth["months"]][0] == "2021-01"


def test_train_artifacts(workdir):
    run = workdir["run"]
    model = load_model(run / "model.dnet")
    assert model.params.cfg.input_dim == 6
    assert model.mask is None
    hist = json.loads((run / "history.json").read_text())
    assert hist["seed"] == 0
    assert len(hist["config_hash"]) == 16
    assert model.meta["config_hash"] == hist["config_hash"]
    assert 1 <= len(hist["train_loss"]) <= 6
    saved_cfg = json.loads((run / "config.json").read_text())
    assert saved_cfg["train"]["n_val"] == 100


def test_pfi_artifacts(workdir):
    run = workdir["run"]
    mask = FeatureMask.load(run / "mask.json")
    assert mask.original_dim == 6
    truth = json.loads((workdir["root"] / "synth" / "truth.json").read_text())
    # the two genuinely informative columns must survive the cut
    assert set(truth["informative_indices"]) <= set(mask.kept_indices)
    lines = (run / "pfi_report.csv").read_text().splitlines()
    assert lines[0].startswith("# config_hash=")
    assert lines[1] == "feature_index,importance,kept"
    assert len(lines) == 2 + 6


def test_eval_artifacts_and_model_untouched(workdir):
    run = workdir["run"]
    metrics = json.loads((run / "metrics.json").read_text())
    assert [b["bucket"] for b in metrics["buckets"]] == [
        "2021-01", "2021-02", "2021-03", "2021-04"]
    assert "drift" in metrics and "onset" in metrics["drift"]
    # the stream is cleanly separable, so self-evaluation scores high
    assert metrics["aggregate"]["acc"] >= 0.8
    assert (run / "model.dnet").read_bytes() == workdir["model_before_eval"]
    head = (run / "metrics.csv").read_text().splitlines()
    assert head[0].startswith("# config_hash=")
    assert head[1].startswith("bucket,")


def test_eval_prints_onset(workdir, capsys):
    assert main(["eval", "--config", str(workdir["cfg_path"])]) == 0
    out = capsys.readouterr().out
    assert "drift onset:" in out


def test_seed_and_out_overrides(workdir):
    out2 = workdir["root"] / "run_seed1"
    rc = main(["train", "--config", str(workdir["cfg_path"]),
               "--seed", "1", "--out", str(out2)])
    assert rc == 0
    hist = json.loads((out2 / "history.json").read_text())
    assert hist["seed"] == 1
    base_hist = json.loads((workdir["run"] / "history.json").read_text())
    assert hist["config_hash"] != base_hist["config_hash"]


def test_sweep_single_cell_reproduces_train(workdir):
    root = workdir["root"]
    grid = root / "grid.json"
    grid.write_text(json.dumps({"lambdas": [0.1], "penalty_pairs": [[5, 1]]}))
    sweep_out = root / "sweeprun"
    rc = main(["sweep", "--config", str(workdir["cfg_path"]),
               "--out", str(sweep_out), "--grid", str(grid)])
    assert rc == 0
    cell = sweep_out / "lam0.1_fn5_fp1"
    # the cell re-states the config defaults, so its model and history
    # must be byte-identical to the plain train run
    assert (cell / "model.dnet").read_bytes() == (workdir["run"] / "model.dnet").read_bytes()
    assert (cell / "history.json").read_bytes() == (workdir["run"] / "history.json").read_bytes()
    lines = (sweep_out / "sweep.csv").read_text().splitlines()
    assert lines[0].startswith("# config_hash=")
    assert lines[1].split(",")[:5] == ["cell", "lam", "p_fn", "p_fp", "config_hash"]
    assert len(lines) == 3
    assert lines[2].startswith("lam0.1_fn5_fp1,0.1,5.0,1.0,")


def test_sweep_rejects_bad_grid(workdir, tmp_path):
    bad = tmp_path / "grid.json"
    bad.write_text(json.dumps({"lambdas": [0.1], "pairs": [[1, 1]]}))
    assert main(["sweep", "--config", str(workdir["cfg_path"]),
                 "--out", str(tmp_path / "s"), "--grid", str(bad)]) == 2
    bad.write_text(json.dumps({"penalty_pairs": [[1, 2, 3]]}))
    assert main(["sweep", "--config", str(workdir["cfg_path"]),
                 "--out", str(tmp_path / "s"), "--grid", str(bad)]) == 2


def test_report_consolidates(workdir):
    root = workdir["root"]
    assert main(["report", "--out", str(root)]) == 0
    rows = (root / "report.csv").read_text().splitlines()
    header = rows[0].split(",")
    assert header[:3] == ["model", "config_hash", "seed"]
    assert len(rows) >= 3  # run1, run_seed1, sweep cell at minimum
    names = [r.split(",")[0] for r in rows[1:]]
    assert "run1" in names
    long_rows = (root / "f1_over_time.csv").read_text().splitlines()
    assert long_rows[0] == "model,bucket,metric,value"
    # run1 has metrics.json: 4 buckets x 3 metrics
    assert sum(r.startswith("run1,") for r in long_rows[1:]) == 12


def test_retrain_with_mask_roundtrip(workdir):
    root = workdir["root"]
    cfg = json.loads(json.dumps(workdir["cfg"]))
    cfg["out_dir"] = str(root / "run_masked")
    cfg["data"]["mask"] = str(workdir["run"] / "mask.json")
    cfg_path = root / "run_masked.json"
    cfg_path.write_text(json.dumps(cfg))
    assert main(["train", "--config", str(cfg_path)]) == 0
    model = load_model(root / "run_masked" / "model.dnet")
    mask = FeatureMask.load(workdir["run"] / "mask.json")
    assert model.mask == mask
    assert model.params.cfg.input_dim == len(mask)
    # eval applies the stored mask to the full-width stream
    assert main(["eval", "--config", str(cfg_path)]) == 0


def test_missing_config_flag():
    assert main(["train"]) == 2
    assert main(["synth", "--out", "x"]) == 2


def test_config_file_errors(tmp_path):
    assert main(["train", "--config", str(tmp_path / "nope.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{oops")
    assert main(["train", "--config", str(bad)]) == 2
    unknown = tmp_path / "unknown.json"
    unknown.write_text(json.dumps({"optimiser": {}}))
    assert main(["train", "--config", str(unknown)]) == 2


def test_train_requires_data(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"out_dir": str(tmp_path / "o")}))
    assert main(["train", "--config", str(cfg)]) == 2
    assert "data.train" in capsys.readouterr().err

    cfg.write_text(json.dumps({"out_dir": str(tmp_path / "o"),
                               "data": {"train": str(tmp_path / "missing.dset")}}))
    assert main(["train", "--config", str(cfg)]) == 3


def test_eval_without_model(workdir, tmp_path, capsys):
    cfg = dict(workdir["cfg"])
    cfg["out_dir"] = str(tmp_path / "empty")
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg))
    assert main(["eval", "--config", str(p)]) == 3
    assert "model file not found" in capsys.readouterr().err


def test_malformed_dataset(workdir, tmp_path):
    garbage = tmp_path / "garbage.dset"
    garbage.write_bytes(b"NOTD" + b"\x00" * 40)
    cfg = dict(workdir["cfg"])
    cfg["out_dir"] = str(tmp_path / "o")
    cfg["data"] = {"train": str(garbage), "eval": None, "pfi": None, "mask": None}
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg))
    assert main(["train", "--config", str(p)]) == 3


@pytest.mark.filterwarnings("ignore:overflow:RuntimeWarning")
def test_divergence_exit_code(workdir, tmp_path, capsys):
    cfg = json.loads(json.dumps(workdir["cfg"]))
    cfg["out_dir"] = str(tmp_path / "o")
    cfg["train"]["lr"] = 1e10
    cfg["train"]["max_epochs"] = 50
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg))
    assert main(["train", "--config", str(p)]) == 4
    assert "diverged" in capsys.readouterr().err


def test_empty_mask_exit_code_still_writes_report(workdir, tmp_path, capsys):
    cfg = json.loads(json.dumps(workdir["cfg"]))
    out = tmp_path / "o"
    cfg["out_dir"] = str(out)
    cfg["pfi"]["keep_threshold"] = 10.0  # impossible: importance <= 1
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg))
    assert main(["train", "--config", str(p)]) == 0
    assert main(["pfi", "--config", str(p)]) == 3
    assert "keep threshold" in capsys.readouterr().err
    assert (out / "pfi_report.csv").is_file()
    assert not (out / "mask.json").exists()


def test_synth_errors(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({**DRIFT_SPEC, "wavelength": 3}))
    assert main(["synth", "--config", str(spec), "--out", str(tmp_path / "s")]) == 2
    spec.write_text(json.dumps({**DRIFT_SPEC, "shape": "cubic"}))
    assert main(["synth", "--config", str(spec), "--out", str(tmp_path / "s")]) == 2


def test_report_errors(tmp_path):
    assert main(["report", "--out", str(tmp_path / "missing")]) == 3
    empty = tmp_path / "empty"
    empty.mkdir()
    assert main(["report", "--out", str(empty)]) == 3
    assert main(["report"]) == 2


def test_no_subcommand_exits_via_argparse():
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2


def test_installed_entry_point(tmp_path):
    exe = shutil.which("driftkit")
    assert exe, "console script not installed"
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({**DRIFT_SPEC, "samples_per_month": 20}))
    proc = subprocess.run(
        [exe, "synth", "--config", str(spec), "--out", str(tmp_path / "s")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert "wrote" in proc.stdout
    assert (tmp_path / "s" / "stream.dset").is_file()
