"""First-order update rules and regularizer terms.

All step functions are pure: they return new parameter and state arrays.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

VARIANTS = ("sgd", "rmsprop", "adam", "amsgrad")


@dataclass(frozen=True)
class OptimizerConfig:
    variant: str = "adam"
    lr: float = 0.001
    decay: float = 1.0  # per-epoch learning-rate multiplier
    beta1: float = 0.9
    beta2: float = 0.99
    eps: Optional[float] = None  # 1e-8 for Adam/AMSGrad, 1e-10 for RMSProp when unset
    rms_momentum: float = 0.0
    clip_norm: Optional[float] = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown optimizer {self.variant!r}; choose from {VARIANTS}")
        if not self.lr > 0:
            raise ValueError("learning rate must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("beta1 and beta2 must lie in [0, 1)")
        if self.eps is not None and not self.eps > 0:
            raise ValueError("eps must be positive")
        if not self.decay > 0:
            raise ValueError("decay must be positive")

    @property
    def epsilon(self) -> float:
        if self.eps is not None:
            return self.eps
        return 1e-10 if self.variant == "rmsprop" else 1e-8


@dataclass
class OptimizerState:
    step: int
    m: np.ndarray
    v: np.ndarray
    v_max: Optional[np.ndarray] = None

    @classmethod
    def zeros(cls, n: int, amsgrad: bool = False) -> "OptimizerState":
        return cls(0, np.zeros(n), np.zeros(n), np.zeros(n) if amsgrad else None)


@dataclass(frozen=True)
class RegularizerConfig:
    l2: float = 0.0  # coefficient of the squared 2-norm
    l1: float = 0.0  # coefficient of the 1-norm

    def __post_init__(self):
        if self.l2 < 0 or self.l1 < 0:
            raise ValueError("regularizer coefficients must be non-negative")


def sgd_step(w, grad, lr: float):
    return np.asarray(w) - lr * np.asarray(grad)


def rmsprop_step(w, grad, state: OptimizerState, cfg: OptimizerConfig, lr: Optional[float] = None):
    """``v <- b2 v + (1 - b2) g^2``; ``w <- w - lr g / (sqrt(v) + eps)``, with optional momentum."""
    lr = cfg.lr if lr is None else lr
    g = np.asarray(grad)
    v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * g * g
    delta = lr * g / (np.sqrt(v) + cfg.epsilon)
    m = cfg.rms_momentum * state.m + delta
    return np.asarray(w) - m, OptimizerState(state.step + 1, m, v)


def adam_step(w, grad, state: OptimizerState, cfg: OptimizerConfig, lr: Optional[float] = None):
    lr = cfg.lr if lr is None else lr
    g = np.asarray(grad)
    i = state.step + 1
    m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * g
    v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * g * g
    m_hat = m / (1.0 - cfg.beta1**i)
    v_hat = v / (1.0 - cfg.beta2**i)
    return np.asarray(w) - lr * m_hat / (np.sqrt(v_hat) + cfg.epsilon), OptimizerState(i, m, v)


def amsgrad_step(w, grad, state: OptimizerState, cfg: OptimizerConfig, lr: Optional[float] = None):
    """Adam with the denominator built from the running maximum of ``v``.

    The maximum is taken over the raw second-moment estimates and then
    bias corrected, so a constant gradient gives exactly Adam's step.
    """
    lr = cfg.lr if lr is None else lr
    g = np.asarray(grad)
    i = state.step + 1
    m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * g
    v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * g * g
    prev = state.v_max if state.v_max is not None else np.zeros_like(v)
    v_max = np.maximum(prev, v)
    m_hat = m / (1.0 - cfg.beta1**i)
    v_hat = v_max / (1.0 - cfg.beta2**i)
    return np.asarray(w) - lr * m_hat / (np.sqrt(v_hat) + cfg.epsilon), OptimizerState(i, m, v, v_max)


def decayed_lr(lr0: float, decay: float, epoch: int) -> float:
    return lr0 * decay**epoch


def regularizer_value(w, reg: RegularizerConfig) -> float:
    w = np.asarray(w)
    out = 0.0
    if reg.l2:
        out += reg.l2 * float(np.dot(w, w))
    if reg.l1:
        out += reg.l1 * float(np.abs(w).sum())
    return out


def regularizer_gradient(w, reg: RegularizerConfig) -> np.ndarray:
    """``2 l2 w + l1 sign(w)`` with the subgradient 0 at w = 0."""
    w = np.asarray(w, dtype=float)
    return 2.0 * reg.l2 * w + reg.l1 * np.sign(w)


def clip_by_norm(grad, max_norm: float):
    norm = float(np.linalg.norm(grad))
    if norm > max_norm:
        return grad * (max_norm / norm)
    return grad


class Optimizer:
    """Stateful wrapper dispatching to the step function of ``cfg.variant``."""

    def __init__(self, cfg: OptimizerConfig, n: int):
        self.cfg = cfg
        self.state = OptimizerState.zeros(n, amsgrad=cfg.variant == "amsgrad")

    def step(self, w, grad, lr: Optional[float] = None):
        cfg = self.cfg
        if cfg.clip_norm is not None:
            grad = clip_by_norm(grad, cfg.clip_norm)
        lr = cfg.lr if lr is None else lr
        if cfg.variant == "sgd":
            self.state = replace(self.state, step=self.state.step + 1)
            return sgd_step(w, grad, lr)
        fn = {"rmsprop": rmsprop_step, "adam": adam_step, "amsgrad": amsgrad_step}[cfg.variant]
        w, self.state = fn(w, grad, self.state, cfg, lr)
        return w
