"""Mini-batch training with epoch-scheduled teacher forcing."""
from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from ..dataset import SampleWindow, stack
from ..metrics import MetricReport
from ..net.bptt import NonFiniteGradientError, bptt_gradient
from ..optim import Optimizer, OptimizerConfig, RegularizerConfig, decayed_lr
from .model import AUTO, TEACHER
from .schedule import SchedulePolicy

logger = logging.getLogger(__name__)


class TrainingDiverged(FloatingPointError):
    """Raised when the loss or parameters become non-finite.

    The model has already been reset to the last finite snapshot.
    """

    def __init__(self, message: str, report: "TrainReport"):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 15
    batch_size: int = 16
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    reg: RegularizerConfig = field(default_factory=RegularizerConfig)
    schedule: Optional[SchedulePolicy] = None  # None: always teacher forced
    seed: int = 0
    huber_delta: float = 1.0
    keep_best: bool = True

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")


@dataclass
class EpochRecord:
    epoch: int
    mode: str
    epsilon: float
    lr: float
    train_loss: float
    val: MetricReport
    wall_time: float


@dataclass
class TrainReport:
    records: List[EpochRecord] = field(default_factory=list)
    best_epoch: Optional[int] = None

    def __len__(self) -> int:
        return len(self.records)

    def to_csv(self, path, wall_time: bool = True) -> None:
        head = ["epoch", "mode", "epsilon", "lr", "train_loss"] + [f"val_{k}" for k in MetricReport.header()]
        if wall_time:
            head.append("wall_time")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(head + ["best"])
            for r in self.records:
                row = [r.epoch, r.mode, repr(r.epsilon), repr(r.lr), repr(r.train_loss)] + r.val.row()
                if wall_time:
                    row.append(f"{r.wall_time:.3f}")
                w.writerow(row + [int(r.epoch == self.best_epoch)])


def batch_slices(n: int, batch_size: int) -> List[slice]:
    """Chronological batches; a trailing partial batch is dropped."""
    if n <= batch_size:
        return [slice(0, n)]
    return [slice(i, i + batch_size) for i in range(0, n - batch_size + 1, batch_size)]


def evaluate(model, windows: Sequence[SampleWindow], huber_delta: float = 1.0):
    """Autoregressive predictions on ``windows`` and their metrics."""
    X, Y = stack(windows)
    Yhat = model.predict(X, t_out=Y.shape[1])
    return Yhat, MetricReport.compute(Y, Yhat, delta=huber_delta)


def train(model, train_windows: Sequence[SampleWindow], val_windows: Sequence[SampleWindow], cfg: TrainConfig):
    """Fit ``model`` in place and return ``(model, report)``.

    With ``cfg.keep_best`` the parameters of the epoch with the lowest
    validation MAAPE are restored at the end.
    """
    if not train_windows or not val_windows:
        raise ValueError("training and validation windows must be non-empty")
    X, Y = stack(train_windows)
    rng = np.random.default_rng(cfg.seed)
    opt = Optimizer(cfg.optimizer, len(model.params))
    report = TrainReport()
    best_flat, best_score = None, math.inf
    slices = batch_slices(len(X), cfg.batch_size)

    for ep in range(cfg.epochs):
        t0 = time.perf_counter()
        lr = decayed_lr(cfg.optimizer.lr, cfg.optimizer.decay, ep)
        if cfg.schedule is not None:
            eps = cfg.schedule.epsilon(ep)
            mode = cfg.schedule.mode(ep, rng)
        else:
            eps, mode = 1.0, TEACHER
        start_flat = model.params.flat.copy()
        total = 0.0
        try:
            for sl in slices:
                loss, g = bptt_gradient(model, X[sl], Y[sl], mode, cfg.reg)
                if not math.isfinite(loss):
                    raise FloatingPointError(f"non-finite loss at epoch {ep}")
                new = opt.step(model.params.flat, g, lr)
                if not np.all(np.isfinite(new)):
                    raise FloatingPointError(f"non-finite parameters at epoch {ep}")
                model.params.flat = new
                total += loss
        except (FloatingPointError, NonFiniteGradientError) as exc:
            model.params.flat = best_flat if best_flat is not None else start_flat
            raise TrainingDiverged(str(exc), report) from exc

        _, val = evaluate(model, val_windows, cfg.huber_delta)
        report.records.append(EpochRecord(ep, mode, eps, lr, total / len(slices), val, time.perf_counter() - t0))
        logger.info("epoch %d mode=%s loss=%.6g val_maape=%.4f", ep, mode, total / len(slices), val.maape)
        score = val.maape if math.isfinite(val.maape) else math.inf
        if best_flat is None or score < best_score:
            best_flat, best_score = model.params.flat.copy(), score
            report.best_epoch = ep

    if cfg.keep_best and best_flat is not None:
        model.params.flat = best_flat
    return model, report


def forecast(model, x, t_out: int) -> np.ndarray:
    """Autoregressive ``t_out``-step forecast from a single input sequence (T x d)."""
    return model.predict(np.asarray(x, dtype=float)[None], t_out=t_out)[0]
