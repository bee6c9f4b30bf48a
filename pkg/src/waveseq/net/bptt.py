"""Batch loss gradients through the unrolled networks."""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from ..optim import RegularizerConfig, regularizer_gradient, regularizer_value


class NonFiniteGradientError(FloatingPointError):
    def __init__(self, name: str):
        super().__init__(f"non-finite gradient in parameter {name!r}")
        self.name = name


def batch_loss(model, X, Y, mode: str, reg: Optional[RegularizerConfig] = None, w=None) -> float:
    """MSE over the batch plus regularizer terms, optionally at parameters ``w``."""
    if w is not None:
        saved = model.params.flat
        model.params.flat = np.asarray(w, dtype=float)
    try:
        Yhat, _ = model.forward(X, mode, Y=Y, t_out=np.shape(Y)[1])
    finally:
        if w is not None:
            model.params.flat = saved
    loss = float(np.mean((Yhat - np.asarray(Y)) ** 2))
    if reg is not None:
        loss += regularizer_value(model.params.flat if w is None else np.asarray(w), reg)
    return loss


def bptt_gradient(model, X, Y, mode: str, reg: Optional[RegularizerConfig] = None):
    """``(loss, gradient)`` of the batch objective, gradient aligned with ``model.params``."""
    loss, grads = model.loss_and_grad(X, Y, mode)
    g = grads.flat
    if reg is not None:
        g += regularizer_gradient(model.params.flat, reg)
        loss += regularizer_value(model.params.flat, reg)
    bad = np.flatnonzero(~np.isfinite(g))
    if bad.size:
        raise NonFiniteGradientError(model.catalog.locate(int(bad[0])))
    return loss, g
