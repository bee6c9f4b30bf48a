import importlib

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from waveseq.net import kernels
from waveseq.net import _pykernels as py

try:
    cy = importlib.import_module("waveseq.net._kernels")
except ImportError:  # extension not built
    cy = None

needs_ext = pytest.mark.skipif(cy is None, reason="compiled extension not built")

shapes = st.tuples(st.integers(1, 6), st.integers(1, 5), st.integers(1, 4), st.integers(1, 5))


def _lstm_inputs(T, B, d, h, seed, scale):
    rng = np.random.default_rng(seed)
    return (rng.normal(0, scale, (d, 4 * h)), rng.normal(0, scale, (h, 4 * h)), rng.normal(0, scale, 4 * h),
            rng.normal(size=(T, B, d)), rng.normal(size=(B, h)), rng.normal(size=(B, h)))


def _lstm_both(mod, args, act, seed):
    Wx, Wh, b, X, h0, s0 = args
    H, S, G = mod.lstm_forward(Wx, Wh, b, X, h0, s0, act)
    rng = np.random.default_rng(seed + 1)
    dH = rng.normal(size=H.shape)
    dhT, dsT = rng.normal(size=h0.shape), rng.normal(size=s0.shape)
    grads = [np.zeros_like(Wx), np.zeros_like(Wh), np.zeros_like(b)]
    back = mod.lstm_backward(Wx, Wh, X, h0, s0, H, S, G, dH, dhT, dsT, act, *grads)
    return [H, S, G, *back, *grads]


def test_backend_selection_env(monkeypatch):
    assert kernels.load_backend("python") is py
    assert kernels.BACKEND in ("python", "cython")
    assert set(kernels.ACTIVATIONS) == {"tanh", "relu"}


@needs_ext
@settings(max_examples=60, deadline=None)
@given(shape=shapes, seed=st.integers(0, 10_000), act=st.sampled_from([0, 1]), scale=st.sampled_from([0.1, 1.0, 5.0]))
def test_lstm_backends_agree(shape, seed, act, scale):
    args = _lstm_inputs(*shape, seed, scale)
    for a, b in zip(_lstm_both(py, args, act, seed), _lstm_both(cy, args, act, seed)):
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)


@needs_ext
@settings(max_examples=60, deadline=None)
@given(shape=shapes, seed=st.integers(0, 10_000), act=st.sampled_from([0, 1]))
def test_rnn_backends_agree(shape, seed, act):
    T, B, d, h = shape
    rng = np.random.default_rng(seed)
    Wx, Wh, b = rng.normal(size=(d, h)), rng.normal(size=(h, h)), rng.normal(size=h)
    X, h0 = rng.normal(size=(T, B, d)), rng.normal(size=(B, h))
    dH, dhT = rng.normal(size=(T, B, h)), rng.normal(size=(B, h))
    out = []
    for mod in (py, cy):
        H = mod.rnn_forward(Wx, Wh, b, X, h0, act)
        g = [np.zeros_like(Wx), np.zeros_like(Wh), np.zeros_like(b)]
        dX, dh0 = mod.rnn_backward(Wx, Wh, X, h0, H, dH, dhT, act, *g)
        out.append([H, dX, dh0, *g])
    for a, b_ in zip(*out):
        np.testing.assert_allclose(a, b_, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("mod", [py] + ([cy] if cy is not None else []), ids=lambda m: m.__name__.rsplit(".", 1)[-1])
def test_saturated_inputs_stay_finite(mod):
    args = _lstm_inputs(3, 2, 2, 3, 0, 800.0)
    H, S, G = mod.lstm_forward(*args, 0)
    assert np.all(np.isfinite(H)) and np.all(np.isfinite(G))
    assert np.all((G[..., :9] >= 0) & (G[..., :9] <= 1))


@settings(max_examples=40, deadline=None)
@given(shape=shapes, seed=st.integers(0, 10_000))
def test_lstm_hidden_bounded(shape, seed):
    args = _lstm_inputs(*shape, seed, 1.0)
    H, _, _ = kernels.lstm_forward(*args, 0)
    assert np.all(np.abs(H) < 1)
