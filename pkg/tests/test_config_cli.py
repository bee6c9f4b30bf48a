import csv
import math

import numpy as np
import pytest

from waveseq.cli import EXIT_CONFIG, EXIT_IO, build_parser, main
from waveseq.config import KEYS, ConfigError, load_config, parse_config_text

SINE = ["--set", "features=synth:WVHT", "--set", "target=synth:WVHT", "--set", "hidden=4", "--set", "T=6",
        "--set", "T_out=2", "--set", "epochs=3", "--set", "stride=7", "--set", "batch_size=8"]


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _strip(path, col="wall_time"):
    rows = _rows(path)
    for r in rows:
        r.pop(col, None)
    return rows


def test_config_parse_and_overrides(tmp_path):
    p = tmp_path / "run.conf"
    p.write_text("# comment\nhidden = 8\nlr=0.01\nstations = 1, 2\n")
    cfg = load_config(p, {"lr": "0.02", "seed": "5"})
    assert (cfg.hidden, cfg.lr, cfg.stations, cfg.seed) == (8, 0.02, ("1", "2"), 5)
    again = load_config(None, parse_config_text(cfg.to_text()))
    assert again.as_dict() == cfg.as_dict()
    with pytest.raises(ConfigError):
        parse_config_text("bogus = 1\n")
    with pytest.raises(ConfigError):
        load_config(None, {"hidden": "many"})
    with pytest.raises(ConfigError):
        load_config(None).require("seed")


def test_help_lists_every_key(capsys):
    with pytest.raises(SystemExit):
        build_parser().parse_args(["train", "--help"])
    text = capsys.readouterr().out
    for key in KEYS:
        assert key.name in text


def test_exit_codes(tmp_path, data_dir):
    assert main(["train", "--out", str(tmp_path)]) == EXIT_CONFIG  # seed missing
    assert main(["train", "--config", str(tmp_path / "nope.conf"), "--seed", "1"]) == EXIT_IO
    assert main(["train", "--set", "unknown_key=1", "--seed", "1"]) == EXIT_CONFIG
    assert main(["metrics", str(tmp_path / "a.csv"), str(tmp_path / "b.csv"), "--out", str(tmp_path)]) == EXIT_IO
    assert main(["train", "--seed", "1", "--out", str(tmp_path), "--set", f"data_dir={tmp_path}",
                 "--set", "years=1999"]) == EXIT_IO


def test_metrics_identical_files(tmp_path, data_dir):
    sine = str(data_dir / "sine.csv")
    assert main(["metrics", sine, sine, "--out", str(tmp_path)]) == 0
    row = _rows(tmp_path / "metrics.csv")[0]
    assert float(row["rmse"]) == 0.0 and float(row["maape"]) == 0.0 and float(row["r2"]) == pytest.approx(1.0)


def test_train_forecast_and_determinism(tmp_path, data_dir):
    args = ["train", "--seed", "3", "--set", f"table={data_dir / 'sine.csv'}"] + SINE
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    rep = _rows(tmp_path / "a" / "train_report.csv")
    assert len(rep) == 3
    assert _strip(tmp_path / "a" / "train_report.csv") == _strip(tmp_path / "b" / "train_report.csv")
    assert (tmp_path / "a" / "test_metrics.csv").read_bytes() == (tmp_path / "b" / "test_metrics.csv").read_bytes()
    pa = (tmp_path / "a" / "checkpoint" / "params.bin").read_bytes()
    assert pa == (tmp_path / "b" / "checkpoint" / "params.bin").read_bytes()

    assert main(["forecast", "--checkpoint", str(tmp_path / "a" / "checkpoint"), "--input", str(data_dir / "sine.csv"),
                 "--t-out", "48", "--out", str(tmp_path / "f")]) == 0
    fc = _rows(tmp_path / "f" / "forecast.csv")
    assert len(fc) == 48 and fc[0]["timestamp"] == "2000-03-24T08:00Z"
    assert all(math.isfinite(float(r["synth:WVHT"])) for r in fc)


def test_ingest_and_reconstruct(tmp_path, data_dir):
    buoys = str(data_dir / "synthetic_buoys")
    assert main(["ingest", "--set", f"data_dir={buoys}", "--out", str(tmp_path / "i")]) == 0
    aligned = _rows(tmp_path / "i" / "aligned.csv")
    assert len(aligned) == 1325
    assert len(_rows(tmp_path / "i" / "ingest_report.csv")) == 6

    assert main(["reconstruct", "--seed", "0", "--set", f"data_dir={buoys}", "--set", "model=sl-lstm",
                 "--set", "hidden=8", "--set", "T=4", "--set", "epochs=3", "--out", str(tmp_path / "r")]) == 0
    m = _rows(tmp_path / "r" / "metrics.csv")[0]
    for key in ("rmse", "mae", "maape", "huber", "cc", "r2"):
        assert math.isfinite(float(m[key]))
    rec = _rows(tmp_path / "r" / "reconstruction.csv")
    assert int(m["n"]) == len(rec) > 0


def test_ingest_explicit_paths(tmp_path, data_dir):
    assert main(["ingest", str(data_dir / "stdmet_5col.txt"), "--set", "features=WVHT", "--set", "target=",
                 "--out", str(tmp_path)]) == 0
    rep = _rows(tmp_path / "ingest_report.csv")[0]
    assert int(rep["rows_kept"]) == 6


def test_tune_and_select_features(tmp_path, data_dir):
    base = ["--seed", "1", "--set", f"table={data_dir / 'sine.csv'}"] + SINE
    grid = ["--set", "grid_hidden=2,3", "--set", "grid_T=4,6", "--set", "grid_batch_size=16", "--set", "grid_lr=0.01",
            "--set", "grid_layers=1", "--set", "grid_l2=0.001", "--set", "grid_k_fraction=0.5",
            "--set", "grid_l1=0,0.01", "--set", "budget=3", "--set", "tune_epochs=2"]
    assert main(["tune"] + base + grid + ["--out", str(tmp_path / "t")]) == 0
    ledger = _rows(tmp_path / "t" / "tune_ledger.csv")
    assert len(ledger) == 3 and "idx_l1" in ledger[0]
    best = load_config(tmp_path / "t" / "best.conf")
    assert best.hidden in (2, 3) and best.T in (4, 6) and best.l1 in (0.0, 0.01)

    assert main(["select-features"] + base + ["--set", "l1=0.001", "--out", str(tmp_path / "s")]) == 0
    sp = _rows(tmp_path / "s" / "sparsity.csv")[0]
    assert 0 <= float(sp["nonzero_pct"]) <= 100
    assert _rows(tmp_path / "s" / "attribution.csv")[0]["feature"] == "synth:WVHT"
