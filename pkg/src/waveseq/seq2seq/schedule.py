"""Epoch-level scheduled sampling.

At the start of every epoch a single coin decides whether the decoder is
fed ground truth (teacher forcing) or its own predictions for the whole
epoch. The probability of teacher forcing follows an inverse-sigmoid decay
in the epoch index; the final epochs are always autoregressive.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .model import AUTO, TEACHER


def epsilon(ep: int, k: float) -> float:
    """Teacher-forcing probability ``k / (k + exp(ep / k))`` for epoch ``ep``."""
    if k <= 0:
        raise ValueError("k must be positive")
    if ep < 0:
        raise ValueError("epoch index must be >= 0")
    z = ep / k
    if z > 700:
        return 0.0
    return k / (k + math.exp(z))


def draw_epoch_mode(rng, eps: float, ep: int = 0, epochs: int = 0, forced_tail: int = 2) -> str:
    """Teacher forcing with probability ``eps``; autoregressive in the last ``forced_tail`` epochs.

    One uniform draw is consumed every call so the random stream does not
    depend on the override.
    """
    coin = rng.random()
    if epochs and ep >= epochs - forced_tail:
        return AUTO
    return TEACHER if coin < eps else AUTO


@dataclass(frozen=True)
class SchedulePolicy:
    k: float
    epochs: int
    forced_tail: int = 2

    def __post_init__(self):
        if not self.k > 0:
            raise ValueError("k must be positive")
        if self.epochs < self.forced_tail:
            raise ValueError("epochs must be at least forced_tail")

    @classmethod
    def from_fraction(cls, fraction: float, epochs: int, forced_tail: int = 2) -> "SchedulePolicy":
        """``k`` expressed as a multiple of the epoch budget."""
        return cls(fraction * epochs, epochs, forced_tail)

    def epsilon(self, ep: int) -> float:
        return epsilon(ep, self.k)

    def mode(self, ep: int, rng) -> str:
        return draw_epoch_mode(rng, self.epsilon(ep), ep, self.epochs, self.forced_tail)
