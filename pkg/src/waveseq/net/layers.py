"""Batched layers operating on views of a ParamSet.

Each layer owns a name prefix in the catalog. ``forward`` returns the
outputs and a cache; ``backward`` consumes the cache, accumulates parameter
gradients into a gradient ParamSet and returns upstream gradients.
"""
from __future__ import annotations

import numpy as np

from . import kernels
from .params import Catalog, ParamSet


def _c(a):
    return np.ascontiguousarray(a, dtype=np.float64)


class LSTMLayer:
    n_states = 2

    def __init__(self, prefix: str, d_in: int, hidden: int, activation: str = "tanh"):
        if d_in < 1 or hidden < 1:
            raise ValueError("layer widths must be >= 1")
        self.prefix = prefix
        self.d_in = d_in
        self.hidden = hidden
        self.activation = activation
        self.act = kernels.ACTIVATIONS[activation]

    def register(self, catalog: Catalog) -> None:
        catalog.add(f"{self.prefix}.Wx", (self.d_in, 4 * self.hidden))
        catalog.add(f"{self.prefix}.Wh", (self.hidden, 4 * self.hidden))
        catalog.add(f"{self.prefix}.b", (4 * self.hidden,), kind="lstm_bias")

    def input_weights(self, params: ParamSet) -> np.ndarray:
        return params[f"{self.prefix}.Wx"]

    def zero_state(self, batch: int):
        return (np.zeros((batch, self.hidden)), np.zeros((batch, self.hidden)))

    def forward(self, params: ParamSet, X, state):
        p = self.prefix
        h0, s0 = _c(state[0]), _c(state[1])
        X = _c(X)
        H, S, G = kernels.lstm_forward(params[f"{p}.Wx"], params[f"{p}.Wh"], params[f"{p}.b"], X, h0, s0, self.act)
        return H, (H[-1], S[-1]), (X, h0, s0, H, S, G)

    def backward(self, params: ParamSet, grads: ParamSet, cache, dH, dstate):
        p = self.prefix
        X, h0, s0, H, S, G = cache
        dhT, dsT = dstate
        dX, dh0, ds0 = kernels.lstm_backward(
            params[f"{p}.Wx"], params[f"{p}.Wh"], X, h0, s0, H, S, G,
            None if dH is None else _c(dH), _c(dhT), _c(dsT), self.act,
            grads[f"{p}.Wx"], grads[f"{p}.Wh"], grads[f"{p}.b"],
        )
        return dX, (dh0, ds0)


class RNNLayer:
    """Elman cell ``h_t = act(x_t Wx + h_{t-1} Wh + b)``."""

    n_states = 1

    def __init__(self, prefix: str, d_in: int, hidden: int, activation: str = "tanh"):
        if d_in < 1 or hidden < 1:
            raise ValueError("layer widths must be >= 1")
        self.prefix = prefix
        self.d_in = d_in
        self.hidden = hidden
        self.activation = activation
        self.act = kernels.ACTIVATIONS[activation]

    def register(self, catalog: Catalog) -> None:
        catalog.add(f"{self.prefix}.Wx", (self.d_in, self.hidden))
        catalog.add(f"{self.prefix}.Wh", (self.hidden, self.hidden))
        catalog.add(f"{self.prefix}.b", (self.hidden,), kind="bias")

    def input_weights(self, params: ParamSet) -> np.ndarray:
        return params[f"{self.prefix}.Wx"]

    def zero_state(self, batch: int):
        return (np.zeros((batch, self.hidden)),)

    def forward(self, params: ParamSet, X, state):
        p = self.prefix
        h0 = _c(state[0])
        X = _c(X)
        H = kernels.rnn_forward(params[f"{p}.Wx"], params[f"{p}.Wh"], params[f"{p}.b"], X, h0, self.act)
        return H, (H[-1],), (X, h0, H)

    def backward(self, params: ParamSet, grads: ParamSet, cache, dH, dstate):
        p = self.prefix
        X, h0, H = cache
        dX, dh0 = kernels.rnn_backward(
            params[f"{p}.Wx"], params[f"{p}.Wh"], X, h0, H,
            None if dH is None else _c(dH), _c(dstate[0]), self.act,
            grads[f"{p}.Wx"], grads[f"{p}.Wh"], grads[f"{p}.b"],
        )
        return dX, (dh0,)


class DenseLayer:
    def __init__(self, prefix: str, d_in: int, d_out: int, activation: str = "identity"):
        if activation not in ("identity", "relu"):
            raise ValueError(f"unknown dense activation {activation!r}")
        self.prefix = prefix
        self.d_in = d_in
        self.d_out = d_out
        self.activation = activation

    def register(self, catalog: Catalog) -> None:
        catalog.add(f"{self.prefix}.W", (self.d_in, self.d_out))
        catalog.add(f"{self.prefix}.b", (self.d_out,), kind="bias")

    def forward(self, params: ParamSet, V):
        out = V @ params[f"{self.prefix}.W"] + params[f"{self.prefix}.b"]
        if self.activation == "relu":
            out = np.maximum(out, 0.0)
        return out, (V, out)

    def backward(self, params: ParamSet, grads: ParamSet, cache, dOut):
        V, out = cache
        if self.activation == "relu":
            dOut = dOut * (out > 0.0)
        grads[f"{self.prefix}.W"][...] += V.T @ dOut
        grads[f"{self.prefix}.b"][...] += dOut.sum(axis=0)
        return dOut @ params[f"{self.prefix}.W"].T


def make_recurrent(cell: str, prefix: str, d_in: int, hidden: int, activation: str = "tanh"):
    if cell == "lstm":
        return LSTMLayer(prefix, d_in, hidden, activation)
    if cell == "rnn":
        return RNNLayer(prefix, d_in, hidden, activation)
    raise ValueError(f"unknown recurrent cell {cell!r}")
