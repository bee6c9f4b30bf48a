"""Elastic-net training objective and sparsity accounting."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .net.params import ParamSet
from .optim import RegularizerConfig, regularizer_value

THRESHOLD = 1e-4


def elastic_net_loss(yhat, y, w, l2: float, l1: float) -> float:
    """``MSE + l2 * ||w||_2^2 + l1 * ||w||_1``."""
    yhat = np.asarray(yhat, dtype=float)
    y = np.asarray(y, dtype=float)
    if yhat.shape != y.shape:
        raise ValueError(f"shape mismatch: {yhat.shape} vs {y.shape}")
    mse = float(np.mean((yhat - y) ** 2)) if y.size else 0.0
    return mse + regularizer_value(np.ravel(w), RegularizerConfig(l2=l2, l1=l1))


@dataclass(frozen=True)
class SparsityReport:
    threshold: float
    total_vars: int
    nonzero_vars: int
    nonzero_pct: float
    feature_mass: Tuple[Tuple[str, float], ...] = ()

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["threshold", "total_vars", "nonzero_vars", "nonzero_pct"])
            w.writerow([repr(self.threshold), self.total_vars, self.nonzero_vars, repr(self.nonzero_pct)])


def nonzero_percentage(w, threshold: float = THRESHOLD, model=None, names: Optional[Sequence[str]] = None) -> SparsityReport:
    """Share of variables with ``|w| > threshold``, over every entry of ``w`` (biases included).

    ``w`` may be a ParamSet or any array. Passing ``model`` also records the
    per-input-column weight mass.
    """
    flat = w.flat if isinstance(w, ParamSet) else np.ravel(np.asarray(w, dtype=float))
    total = int(flat.size)
    nz = int(np.count_nonzero(np.abs(flat) > threshold))
    pct = 100.0 * nz / total if total else 0.0
    mass = tuple(feature_attribution(model, names)) if model is not None else ()
    return SparsityReport(threshold, total, nz, pct, mass)


def feature_attribution(model, names: Optional[Sequence[str]] = None) -> List[Tuple[str, float]]:
    """Sum of absolute first-layer input weights per input column, largest first."""
    W = np.asarray(model.first_layer_input_weights())
    mass = np.abs(W).sum(axis=1)
    if names is None:
        names = [f"x{j}" for j in range(len(mass))]
    if len(names) != len(mass):
        raise ValueError(f"{len(names)} names for {len(mass)} input columns")
    order = sorted(range(len(mass)), key=lambda j: (-mass[j], j))
    return [(names[j], float(mass[j])) for j in order]


def attribution_to_csv(ranking: Sequence[Tuple[str, float]], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rank", "feature", "mass"])
        for k, (name, m) in enumerate(ranking, 1):
            w.writerow([k, name, repr(m)])
