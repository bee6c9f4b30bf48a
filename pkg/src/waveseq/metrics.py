"""Forecast error metrics. Inputs are flattened before evaluation."""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, fields
from typing import Optional

import numpy as np

ZERO_TARGET = 1e-12


class ZeroVarianceError(ValueError):
    """Correlation is undefined when either argument is constant."""


def _pair(y, yhat):
    y = np.asarray(y, dtype=float).ravel()
    yhat = np.asarray(yhat, dtype=float).ravel()
    if y.shape != yhat.shape:
        raise ValueError(f"length mismatch: {y.size} vs {yhat.size}")
    if y.size == 0:
        raise ValueError("metrics need at least one value")
    return y, yhat


def rmse(y, yhat) -> float:
    y, yhat = _pair(y, yhat)
    return math.sqrt(float(np.mean((y - yhat) ** 2)))


def mae(y, yhat) -> float:
    y, yhat = _pair(y, yhat)
    return float(np.mean(np.abs(y - yhat)))


def huber(y, yhat, delta: float = 1.0) -> float:
    """Mean Huber loss: quadratic inside ``|e| <= delta``, linear outside."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    y, yhat = _pair(y, yhat)
    a = np.abs(y - yhat)
    loss = np.where(a <= delta, 0.5 * a * a, delta * a - 0.5 * delta * delta)
    return float(np.mean(loss))


def mape(y, yhat, return_skipped: bool = False):
    """Mean ``|e / y|`` over terms with non-zero target.

    Terms with ``|y| <= 1e-12`` are left out; ``return_skipped=True`` also
    returns how many were dropped. NaN when every target is zero.
    """
    y, yhat = _pair(y, yhat)
    keep = np.abs(y) > ZERO_TARGET
    skipped = int(y.size - keep.sum())
    value = float(np.mean(np.abs((y[keep] - yhat[keep]) / y[keep]))) if keep.any() else float("nan")
    return (value, skipped) if return_skipped else value


def maape(y, yhat) -> float:
    """Mean arctangent absolute percentage error, bounded by pi/2.

    A zero target contributes pi/2 when the prediction misses it and 0 when
    it is exact.
    """
    y, yhat = _pair(y, yhat)
    e = np.abs(y - yhat)
    zero = np.abs(y) <= ZERO_TARGET
    ratio = np.divide(e, np.abs(y), out=np.zeros_like(e), where=~zero)
    terms = np.arctan(ratio)
    terms[zero & (e > 0)] = math.pi / 2
    return float(np.mean(terms))


def pearson_cc(y, yhat) -> float:
    y, yhat = _pair(y, yhat)
    dy = y - y.mean()
    dh = yhat - yhat.mean()
    sy = math.sqrt(float(np.mean(dy * dy)))
    sh = math.sqrt(float(np.mean(dh * dh)))
    if sy == 0.0 or sh == 0.0:
        raise ZeroVarianceError("correlation undefined: zero variance")
    cc = float(np.mean(dy * dh)) / (sy * sh)
    return max(-1.0, min(1.0, cc))


def r2(y, yhat) -> float:
    """Squared correlation coefficient."""
    return pearson_cc(y, yhat) ** 2


@dataclass
class MetricReport:
    rmse: float
    mae: float
    mape: float
    maape: float
    huber: float
    cc: float
    r2: float
    n: int
    skipped_zero_targets: int
    note: str = ""

    @classmethod
    def compute(cls, y, yhat, delta: float = 1.0) -> "MetricReport":
        y, yhat = _pair(y, yhat)
        mape_value, skipped = mape(y, yhat, return_skipped=True)
        note = ""
        try:
            cc = pearson_cc(y, yhat)
        except ZeroVarianceError:
            cc = float("nan")
            note = "cc undefined: zero variance"
        return cls(rmse(y, yhat), mae(y, yhat), mape_value, maape(y, yhat), huber(y, yhat, delta),
                   cc, cc * cc, int(y.size), skipped, note)

    @classmethod
    def header(cls):
        return [f.name for f in fields(cls)]

    def row(self):
        out = []
        for k, v in asdict(self).items():
            if isinstance(v, float):
                out.append("" if math.isnan(v) else repr(v))
            else:
                out.append(v)
        return out

    def to_csv(self, path, prefix: Optional[dict] = None) -> None:
        prefix = prefix or {}
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(list(prefix) + self.header())
            w.writerow(list(prefix.values()) + self.row())
