"""Encoder-decoder LSTM and the recurrent + fully-connected baselines.

Both model classes expose the same batched interface used by training:

* ``forward(X, mode, Y=None, t_out=None)`` -> ``(Yhat, cache)`` with
  ``X`` shaped (B, T, d) and ``Yhat`` (B, t_out, m);
* ``backward(cache, dYhat)`` -> gradient ParamSet (exact reverse mode);
* ``loss_and_grad(X, Y, mode)`` -> ``(mse, gradient)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..net.layers import DenseLayer, LSTMLayer, make_recurrent
from ..net.params import Catalog, ParamSet, init_params

TEACHER = "teacher"
AUTO = "auto"
MODES = (TEACHER, AUTO)


@dataclass
class ContextVector:
    """Final encoder state: top-layer hidden ``v`` plus every layer's (h, s)."""

    v: np.ndarray
    carry: List[Tuple[np.ndarray, np.ndarray]]


def mse_and_grad(Yhat: np.ndarray, Y: np.ndarray) -> Tuple[float, np.ndarray]:
    """Mean over every element of the batch; gradient w.r.t. ``Yhat``."""
    diff = Yhat - Y
    return float(np.mean(diff * diff)), (2.0 / diff.size) * diff


class _Model:
    kind = ""
    catalog: Catalog
    params: ParamSet

    def init(self, seed: int, std: float = 0.1, forget_bias: float = 1.0) -> "_Model":
        self.params = init_params(self.catalog, seed, std=std, forget_bias=forget_bias)
        return self

    def _check_x(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim == 2:
            X = X[None]
        if X.ndim != 3 or X.shape[2] != self.d:
            raise ValueError(f"expected input of shape (B, T, {self.d}), got {X.shape}")
        if not np.all(np.isfinite(X)):
            raise ValueError("input contains non-finite values")
        return X

    def loss_and_grad(self, X, Y, mode: str = TEACHER) -> Tuple[float, ParamSet]:
        Y = np.asarray(Y, dtype=float)
        Yhat, cache = self.forward(X, mode, Y=Y, t_out=Y.shape[1])
        loss, dY = mse_and_grad(Yhat, Y)
        return loss, self.backward(cache, dY)

    def predict(self, X, t_out: Optional[int] = None) -> np.ndarray:
        Yhat, _ = self.forward(X, AUTO, t_out=t_out)
        return Yhat

    def first_layer_input_weights(self) -> np.ndarray:
        """(d, k) matrix of weights multiplying the raw input columns."""
        return self.layers_in[0].input_weights(self.params)


class Seq2Seq(_Model):
    """LSTM encoder and a separately parameterised LSTM decoder.

    The decoder starts from the encoder's final (h, s) in every layer. Its
    first input is a learned affine map of the top encoder hidden state into
    target space; later inputs are the previous target (teacher forcing) or
    the previous prediction (autoregressive). A linear head maps each
    decoder hidden state to the ``m`` targets.
    """

    kind = "seq2seq"

    def __init__(self, d: int, m: int, hidden: int, layers: int = 1, T: Optional[int] = None, T_out: int = 1):
        if layers < 1:
            raise ValueError("need at least one layer")
        self.d, self.m, self.hidden, self.n_layers = d, m, hidden, layers
        self.T, self.T_out = T, T_out
        self.encoder = [LSTMLayer(f"enc{l}", d if l == 0 else hidden, hidden) for l in range(layers)]
        self.decoder = [LSTMLayer(f"dec{l}", m if l == 0 else hidden, hidden) for l in range(layers)]
        self.start = DenseLayer("dec.start", hidden, m)
        self.head = DenseLayer("head", hidden, m)
        self.layers_in = self.encoder
        self.catalog = Catalog()
        for layer in self.encoder + self.decoder + [self.start, self.head]:
            layer.register(self.catalog)
        self.params = ParamSet(self.catalog)

    def config(self) -> Dict[str, object]:
        return {"kind": self.kind, "d": self.d, "m": self.m, "hidden": self.hidden,
                "layers": self.n_layers, "T": self.T, "T_out": self.T_out}

    def _encode(self, X):
        B = X.shape[0]
        seq = np.ascontiguousarray(X.transpose(1, 0, 2))
        caches, carry = [], []
        for layer in self.encoder:
            seq, state, cache = layer.forward(self.params, seq, layer.zero_state(B))
            caches.append(cache)
            carry.append(state)
        return ContextVector(carry[-1][0], carry), caches

    def _decode(self, ctx: ContextVector, mode: str, Y, t_out: int):
        if mode not in MODES:
            raise ValueError(f"unknown decode mode {mode!r}")
        if mode == TEACHER:
            if Y is None:
                raise ValueError("teacher-forced decoding needs the target sequence")
            Y = np.asarray(Y, dtype=float)
            if Y.shape[1] < t_out - 1:
                raise ValueError("target sequence shorter than the decode length")
        u, start_cache = self.start.forward(self.params, ctx.v)
        states = list(ctx.carry)
        outs, steps = [], []
        for t in range(t_out):
            if t > 0:
                u = Y[:, t - 1, :] if mode == TEACHER else outs[-1]
            inp = np.ascontiguousarray(u[None])
            layer_caches = []
            for l, layer in enumerate(self.decoder):
                inp, states[l], cache = layer.forward(self.params, inp, states[l])
                layer_caches.append(cache)
            yhat, head_cache = self.head.forward(self.params, inp[0])
            outs.append(yhat)
            steps.append((layer_caches, head_cache))
        return np.stack(outs, axis=1), (start_cache, steps)

    def forward(self, X, mode: str = AUTO, Y=None, t_out: Optional[int] = None):
        X = self._check_x(X)
        t_out = t_out or self.T_out
        ctx, enc_caches = self._encode(X)
        Yhat, dec_cache = self._decode(ctx, mode, Y, t_out)
        return Yhat, (mode, enc_caches, dec_cache, X.shape[0])

    def backward(self, cache, dYhat) -> ParamSet:
        mode, enc_caches, (start_cache, steps), B = cache
        grads = self.params.zeros_like()
        p = self.params
        dstate = [(np.zeros((B, self.hidden)), np.zeros((B, self.hidden))) for _ in self.decoder]
        feedback = None
        dv = None
        for t in range(len(steps) - 1, -1, -1):
            layer_caches, head_cache = steps[t]
            dy = dYhat[:, t, :]
            if feedback is not None:
                dy = dy + feedback
            dinp = self.head.backward(p, grads, head_cache, dy)[None]
            for l in range(len(self.decoder) - 1, -1, -1):
                dinp, dstate[l] = self.decoder[l].backward(p, grads, layer_caches[l], dinp, dstate[l])
            du = dinp[0]
            if t == 0:
                dv = self.start.backward(p, grads, start_cache, du)
            feedback = du if mode == AUTO else None
        dH = None
        for l in range(len(self.encoder) - 1, -1, -1):
            dh, ds = dstate[l]
            if l == len(self.encoder) - 1:
                dh = dh + dv
            dH, _ = self.encoder[l].backward(p, grads, enc_caches[l], dH, (dh, ds))
        return grads

    def encode(self, x) -> ContextVector:
        """Context of a single sequence ``x`` (T x d)."""
        ctx, _ = self._encode(self._check_x(x))
        return ContextVector(ctx.v[0], [(h[0], s[0]) for h, s in ctx.carry])

    def decode(self, v: ContextVector, mode: str = AUTO, y=None, t_out: Optional[int] = None) -> np.ndarray:
        """Decode a single context; ``y`` (t_out x m) is required when teacher forcing."""
        t_out = t_out or self.T_out
        ctx = ContextVector(np.asarray(v.v, float)[None], [(np.asarray(h, float)[None], np.asarray(s, float)[None]) for h, s in v.carry])
        Y = None if y is None else np.asarray(y, float)[None]
        Yhat, _ = self._decode(ctx, mode, Y, t_out)
        return Yhat[0]


BASELINE_KINDS = ("sl-rnn", "ml-rnn", "sl-lstm", "ml-lstm")


class RecurrentFCL(_Model):
    """Stacked recurrent trunk whose last hidden state feeds one linear layer.

    The head emits all ``T_out * m`` outputs at once, so the decode mode is
    irrelevant for these models.
    """

    def __init__(self, cell: str, d: int, m: int, widths, T_out: int = 1, activation: str = "tanh",
                 kind: str = "", T: Optional[int] = None):
        widths = [int(w) for w in widths]
        if not widths:
            raise ValueError("need at least one recurrent layer")
        self.cell, self.d, self.m, self.widths, self.T_out = cell, d, m, widths, T_out
        self.activation = activation
        self.kind = kind or f"{cell}-fcl"
        self.T = T
        self.trunk = []
        width_in = d
        for l, w in enumerate(widths):
            self.trunk.append(make_recurrent(cell, f"rnn{l}", width_in, w, activation))
            width_in = w
        self.head = DenseLayer("head", widths[-1], T_out * m)
        self.layers_in = self.trunk
        self.catalog = Catalog()
        for layer in self.trunk + [self.head]:
            layer.register(self.catalog)
        self.params = ParamSet(self.catalog)

    def config(self) -> Dict[str, object]:
        return {"kind": self.kind, "cell": self.cell, "d": self.d, "m": self.m, "widths": list(self.widths),
                "T_out": self.T_out, "activation": self.activation, "T": self.T}

    def forward(self, X, mode: str = AUTO, Y=None, t_out: Optional[int] = None):
        X = self._check_x(X)
        if t_out not in (None, self.T_out):
            raise ValueError(f"{self.kind} emits exactly {self.T_out} steps")
        B = X.shape[0]
        seq = np.ascontiguousarray(X.transpose(1, 0, 2))
        caches = []
        for layer in self.trunk:
            seq, _, cache = layer.forward(self.params, seq, layer.zero_state(B))
            caches.append(cache)
        out, head_cache = self.head.forward(self.params, seq[-1])
        return out.reshape(B, self.T_out, self.m), (caches, head_cache, seq.shape)

    def backward(self, cache, dYhat) -> ParamSet:
        caches, head_cache, (T, B, h) = cache
        grads = self.params.zeros_like()
        dlast = self.head.backward(self.params, grads, head_cache, dYhat.reshape(B, -1))
        dH = np.zeros((T, B, h))
        dH[-1] = dlast
        for l in range(len(self.trunk) - 1, -1, -1):
            layer = self.trunk[l]
            zero = tuple(np.zeros((B, layer.hidden)) for _ in range(layer.n_states))
            dH, _ = layer.backward(self.params, grads, caches[l], dH, zero)
        return grads


def build_baseline(kind: str, d: int, m: int, hidden: int, T: int, T_out: int = 1) -> RecurrentFCL:
    """SL/ML RNN or LSTM trunk plus a fully connected output layer.

    Single-layer variants use one tanh layer of width ``hidden``; the
    multi-layer ones stack three ReLU recurrent layers of widths
    (T, T, hidden).
    """
    kind = kind.lower()
    if kind not in BASELINE_KINDS:
        raise ValueError(f"unknown baseline {kind!r}; choose from {BASELINE_KINDS}")
    depth, cell = kind.split("-")
    if depth == "sl":
        return RecurrentFCL(cell, d, m, [hidden], T_out, "tanh", kind=kind, T=T)
    return RecurrentFCL(cell, d, m, [T, T, hidden], T_out, "relu", kind=kind, T=T)


MODEL_KINDS = ("seq2seq",) + BASELINE_KINDS


def build_model(kind: str, d: int, m: int, hidden: int, T: int, T_out: int, layers: int = 1):
    if kind == "seq2seq":
        return Seq2Seq(d, m, hidden, layers, T=T, T_out=T_out)
    return build_baseline(kind, d, m, hidden, T, T_out)


def model_from_config(cfg: Dict[str, object]):
    kind = cfg["kind"]
    if kind == "seq2seq":
        return Seq2Seq(int(cfg["d"]), int(cfg["m"]), int(cfg["hidden"]), int(cfg["layers"]),
                       T=cfg.get("T"), T_out=int(cfg["T_out"]))
    return RecurrentFCL(cfg["cell"], int(cfg["d"]), int(cfg["m"]), cfg["widths"], int(cfg["T_out"]),
                        cfg.get("activation", "tanh"), kind=kind, T=cfg.get("T"))
