import numpy as np
import pytest

from waveseq.dataset import SampleWindow
from waveseq.optim import Optimizer, OptimizerConfig
from waveseq.seq2seq.checkpoint import load_checkpoint, save_checkpoint
from waveseq.seq2seq.model import AUTO, Seq2Seq
from waveseq.seq2seq.schedule import SchedulePolicy
from waveseq.seq2seq.training import (TrainConfig, TrainingDiverged, batch_slices, evaluate, forecast, train)

T0 = np.datetime64("2000-01-01T00:00", "m")


def _windows(x, y):
    return [SampleWindow(a, b, T0) for a, b in zip(x, y)]


def test_batch_slices():
    assert batch_slices(5, 16) == [slice(0, 5)]
    assert batch_slices(10, 4) == [slice(0, 4), slice(4, 8)]


def test_constant_target_is_learned():
    rng = np.random.default_rng(0)
    ws = _windows(rng.normal(size=(32, 3, 1)), np.full((32, 2, 1), 0.7))
    cfg = TrainConfig(epochs=60, batch_size=8, optimizer=OptimizerConfig("adam", lr=0.02))
    model, rep = train(Seq2Seq(1, 1, 4, 1, T=3, T_out=2).init(0), ws, ws, cfg)
    _, m = evaluate(model, ws)
    assert m.rmse**2 < 1e-4
    assert len(rep) == 60 and rep.best_epoch is not None


def test_two_epoch_schedule_is_all_auto(tmp_path):
    rng = np.random.default_rng(1)
    ws = _windows(rng.normal(size=(8, 3, 1)), rng.normal(size=(8, 2, 1)))
    cfg = TrainConfig(epochs=2, batch_size=4, schedule=SchedulePolicy(k=100.0, epochs=2))
    _, rep = train(Seq2Seq(1, 1, 3, 1, T=3, T_out=2).init(0), ws, ws, cfg)
    assert [r.mode for r in rep.records] == [AUTO, AUTO]
    rep.to_csv(tmp_path / "r.csv", wall_time=False)
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert len(lines) == 3 and "wall_time" not in lines[0]


def test_training_is_deterministic():
    rng = np.random.default_rng(2)
    ws = _windows(rng.normal(size=(12, 3, 2)), rng.normal(size=(12, 2, 1)))
    cfg = TrainConfig(epochs=4, batch_size=4, schedule=SchedulePolicy(k=2.0, epochs=4), seed=7)
    a, ra = train(Seq2Seq(2, 1, 3, 1, T=3, T_out=2).init(0), ws, ws, cfg)
    b, rb = train(Seq2Seq(2, 1, 3, 1, T=3, T_out=2).init(0), ws, ws, cfg)
    np.testing.assert_array_equal(a.params.flat, b.params.flat)
    assert [r.train_loss for r in ra.records] == [r.train_loss for r in rb.records]


def test_divergence_restores_parameters():
    rng = np.random.default_rng(3)
    ws = _windows(rng.normal(size=(8, 3, 1)) * 1e154, rng.normal(size=(8, 2, 1)) * 1e154)
    model = Seq2Seq(1, 1, 3, 1, T=3, T_out=2).init(0)
    before = model.params.flat.copy()
    with pytest.raises(TrainingDiverged) as info:
        with np.errstate(all="ignore"):
            train(model, ws, ws, TrainConfig(epochs=3, batch_size=4, optimizer=OptimizerConfig("sgd", lr=1e10)))
    assert np.all(np.isfinite(model.params.flat))
    assert info.value.report is not None
    if not info.value.report.records:
        np.testing.assert_array_equal(model.params.flat, before)


def test_empty_windows_rejected():
    with pytest.raises(ValueError):
        train(Seq2Seq(1, 1, 2, 1), [], [], TrainConfig())


def test_checkpoint_round_trip(tmp_path, rng):
    model = Seq2Seq(2, 1, 3, 2, T=4, T_out=3).init(5)
    opt = Optimizer(OptimizerConfig("amsgrad"), len(model.params))
    opt.step(model.params.flat, rng.normal(size=len(model.params)))
    save_checkpoint(tmp_path / "ck", model, {"note": "x", "scale": [1.0, 2.0]}, opt.state)
    ck = load_checkpoint(tmp_path / "ck")
    np.testing.assert_array_equal(ck.model.params.flat, model.params.flat)
    assert ck.manifest["note"] == "x" and ck.manifest["n_params"] == len(model.params)
    assert ck.optimizer_state.step == 1
    np.testing.assert_array_equal(ck.optimizer_state.v_max, opt.state.v_max)
    x = rng.normal(size=(4, 2))
    np.testing.assert_array_equal(forecast(ck.model, x, 48), forecast(model, x, 48))
    assert forecast(model, x, 48).shape == (48, 1)


def test_checkpoint_catalog_mismatch(tmp_path):
    save_checkpoint(tmp_path / "ck", Seq2Seq(2, 1, 3, 1).init(0))
    text = (tmp_path / "ck" / "manifest.txt").read_text().replace('"hidden": 3', '"hidden": 4')
    (tmp_path / "ck" / "manifest.txt").write_text(text)
    with pytest.raises(ValueError):
        load_checkpoint(tmp_path / "ck")
