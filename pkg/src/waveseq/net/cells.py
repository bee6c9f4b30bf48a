"""Single-sequence cell operations with per-gate weight matrices.

These mirror the textbook LSTM notation (one ``h x d`` / ``h x h`` matrix
per gate) and are what the unit tests check by hand. Batched training goes
through :mod:`waveseq.net.layers`, which stores the same weights stacked.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from . import kernels


class LSTMState(NamedTuple):
    h: np.ndarray
    s: np.ndarray


class Gates(NamedTuple):
    f: np.ndarray
    i: np.ndarray
    o: np.ndarray
    s_tilde: np.ndarray


@dataclass
class LSTMWeights:
    W_fx: np.ndarray
    W_ix: np.ndarray
    W_ox: np.ndarray
    W_sx: np.ndarray
    W_fh: np.ndarray
    W_ih: np.ndarray
    W_oh: np.ndarray
    W_sh: np.ndarray
    b_f: np.ndarray
    b_i: np.ndarray
    b_o: np.ndarray
    b_s: np.ndarray
    activation: str = "tanh"

    @property
    def shape(self) -> Tuple[int, int]:
        """(input width d, hidden width h)."""
        return self.W_fx.shape[1], self.W_fx.shape[0]

    @classmethod
    def filled(cls, d: int, h: int, weight: float = 0.0, bias: float = 0.0) -> "LSTMWeights":
        W = lambda r, c: np.full((r, c), float(weight))
        bv = lambda: np.full(h, float(bias))
        return cls(W(h, d), W(h, d), W(h, d), W(h, d), W(h, h), W(h, h), W(h, h), W(h, h), bv(), bv(), bv(), bv())

    @classmethod
    def random(cls, d: int, h: int, rng, std: float = 0.5) -> "LSTMWeights":
        W = lambda r, c: rng.normal(0.0, std, size=(r, c))
        bv = lambda: rng.normal(0.0, std, size=h)
        return cls(W(h, d), W(h, d), W(h, d), W(h, d), W(h, h), W(h, h), W(h, h), W(h, h), bv(), bv(), bv(), bv())

    def stacked(self):
        """Kernel layout: ``Wx (d, 4h)``, ``Wh (h, 4h)``, ``b (4h,)``."""
        Wx = np.ascontiguousarray(np.hstack([self.W_fx.T, self.W_ix.T, self.W_ox.T, self.W_sx.T]), dtype=float)
        Wh = np.ascontiguousarray(np.hstack([self.W_fh.T, self.W_ih.T, self.W_oh.T, self.W_sh.T]), dtype=float)
        b = np.concatenate([self.b_f, self.b_i, self.b_o, self.b_s]).astype(float)
        return Wx, Wh, b


@dataclass
class RNNWeights:
    W_x: np.ndarray  # (h, d)
    W_h: np.ndarray  # (h, h)
    b: np.ndarray
    activation: str = "tanh"

    def stacked(self):
        return (
            np.ascontiguousarray(self.W_x.T, dtype=float),
            np.ascontiguousarray(self.W_h.T, dtype=float),
            np.asarray(self.b, dtype=float),
        )


@dataclass
class DenseWeights:
    W: np.ndarray  # (out, in)
    b: np.ndarray
    activation: str = "identity"


def _vec(x, n: int, what: str) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != n:
        raise ValueError(f"{what} has length {x.size}, expected {n}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{what} contains non-finite values")
    return x


def lstm_step(w: LSTMWeights, x_t, st: Optional[LSTMState] = None, return_gates: bool = False):
    """One LSTM update. Returns ``(new_state, h_t)`` and optionally the gates."""
    d, h = w.shape
    x_t = _vec(x_t, d, "x_t")
    if st is None:
        st = LSTMState(np.zeros(h), np.zeros(h))
    hp = _vec(st.h, h, "h")
    sp = _vec(st.s, h, "s")
    Wx, Wh, b = w.stacked()
    H, S, G = kernels.lstm_forward(
        Wx, Wh, b, x_t.reshape(1, 1, d).copy(), hp.reshape(1, h).copy(), sp.reshape(1, h).copy(),
        kernels.ACTIVATIONS[w.activation],
    )
    new = LSTMState(H[0, 0].copy(), S[0, 0].copy())
    if return_gates:
        g = G[0, 0]
        return new, new.h, Gates(g[:h].copy(), g[h : 2 * h].copy(), g[2 * h : 3 * h].copy(), g[3 * h :].copy())
    return new, new.h


def rnn_step(W_x, W_h, b, x_t, h_prev, activation: str = "tanh") -> np.ndarray:
    """Elman update ``act(W_x x + W_h h_prev + b)``."""
    w = RNNWeights(np.asarray(W_x, float), np.asarray(W_h, float), np.asarray(b, float), activation)
    h, d = w.W_x.shape
    x_t = _vec(x_t, d, "x_t")
    h_prev = _vec(h_prev, h, "h_prev")
    Wx, Wh, bb = w.stacked()
    H = kernels.rnn_forward(Wx, Wh, bb, x_t.reshape(1, 1, d).copy(), h_prev.reshape(1, h).copy(), kernels.ACTIVATIONS[activation])
    return H[0, 0].copy()


def dense_forward(w: DenseWeights, v) -> np.ndarray:
    out = np.asarray(w.W, float) @ np.asarray(v, float) + np.asarray(w.b, float)
    if w.activation == "relu":
        out = np.maximum(out, 0.0)
    elif w.activation != "identity":
        raise ValueError(f"unknown activation {w.activation!r}")
    return out


CellWeights = Union[LSTMWeights, RNNWeights]


def unroll(stack: Sequence[CellWeights], xs, init: Optional[List] = None):
    """Run stacked cells over ``xs`` (T x d).

    Layer k consumes layer k-1's hidden sequence. ``init`` gives one state
    per layer (``LSTMState`` or hidden vector), zeros when omitted. Returns
    the top layer's hidden outputs (T x h_top) and the final state of every
    layer, suitable as ``init`` for a continuation.
    """
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 2 or xs.shape[0] < 1:
        raise ValueError("xs must be a non-empty T x d matrix")
    seq = xs[:, None, :].copy()
    finals = []
    for k, w in enumerate(stack):
        act = kernels.ACTIVATIONS[w.activation]
        Wx, Wh, b = w.stacked()
        if Wx.shape[0] != seq.shape[2]:
            raise ValueError(f"layer {k} expects input width {Wx.shape[0]}, got {seq.shape[2]}")
        h = Wh.shape[0]
        st = None if init is None else init[k]
        if isinstance(w, LSTMWeights):
            st = st or LSTMState(np.zeros(h), np.zeros(h))
            H, S, _ = kernels.lstm_forward(Wx, Wh, b, seq, np.array(st.h, float).reshape(1, h), np.array(st.s, float).reshape(1, h), act)
            finals.append(LSTMState(H[-1, 0].copy(), S[-1, 0].copy()))
        else:
            h0 = np.zeros(h) if st is None else np.asarray(st, float)
            H = kernels.rnn_forward(Wx, Wh, b, seq, h0.reshape(1, h).copy(), act)
            finals.append(H[-1, 0].copy())
        seq = H
    return seq[:, 0, :].copy(), finals
