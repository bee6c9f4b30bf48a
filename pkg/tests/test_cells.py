import math

import numpy as np
import pytest

from waveseq.net.cells import (DenseWeights, LSTMState, LSTMWeights, RNNWeights, dense_forward, lstm_step,
                               rnn_step, unroll)


def sig(z):
    return 1.0 / (1.0 + math.exp(-z))


def test_zero_weights_give_zero_state():
    w = LSTMWeights.filled(3, 2)
    st, h = lstm_step(w, [1.0, -2.0, 3.0])
    assert np.all(h == 0) and np.all(st.s == 0)


def test_scalar_unit_weights_zero_input():
    st, h, g = lstm_step(LSTMWeights.filled(1, 1, weight=1.0), [0.0], return_gates=True)
    assert g.f[0] == g.i[0] == g.o[0] == 0.5
    assert g.s_tilde[0] == 0.0 and st.s[0] == 0.0 and h[0] == 0.0


def test_scalar_unit_weights_unit_input():
    st, h, g = lstm_step(LSTMWeights.filled(1, 1, weight=1.0), [1.0], return_gates=True)
    f = sig(1.0)
    s = f * math.tanh(1.0)
    assert g.f[0] == pytest.approx(0.7310586, abs=1e-7)
    assert g.s_tilde[0] == pytest.approx(0.7615942, abs=1e-7)
    assert st.s[0] == pytest.approx(s, abs=1e-14)
    assert h[0] == pytest.approx(f * math.tanh(s), abs=1e-14)
    assert h[0] == pytest.approx(0.36961, abs=1e-5)


def test_gate_and_output_ranges(rng):
    w = LSTMWeights.random(4, 6, rng, std=2.0)
    st = LSTMState(rng.normal(size=6), rng.normal(size=6))
    for _ in range(20):
        st, h, g = lstm_step(w, rng.normal(size=4) * 3, st, return_gates=True)
        for gate in (g.f, g.i, g.o):
            assert np.all((gate > 0) & (gate < 1))
        assert np.all(np.abs(h) < 1)


def test_lstm_step_validation():
    w = LSTMWeights.filled(2, 3)
    with pytest.raises(ValueError):
        lstm_step(w, [1.0])
    with pytest.raises(ValueError):
        lstm_step(w, [1.0, np.nan])


def test_rnn_step_cases():
    assert rnn_step(np.zeros((2, 1)), np.zeros((2, 2)), np.zeros(2), [5.0], [0.3, 0.1]).tolist() == [0, 0]
    assert rnn_step([[1.0]], [[0.0]], [0.0], [1.0], [0.0])[0] == pytest.approx(math.tanh(1.0))
    out = rnn_step(np.full((3, 2), 50.0), np.eye(3), np.ones(3), [1, 1], [1, 1, 1])
    assert np.all(np.abs(out) <= 1)


def test_unroll_matches_repeated_steps(rng):
    w = LSTMWeights.random(2, 3, rng)
    xs = rng.normal(size=(5, 2))
    top, finals = unroll([w], xs)
    st = None
    for t in range(5):
        st, h = lstm_step(w, xs[t], st)
        np.testing.assert_allclose(top[t], h, atol=1e-14)
    np.testing.assert_allclose(finals[0].s, st.s, atol=1e-14)


def test_two_layer_scalar_hand_check():
    w = LSTMWeights.filled(1, 1, weight=1.0)
    top, _ = unroll([w, w], np.array([[1.0]]))
    s1 = sig(1) * math.tanh(1)
    h1 = sig(1) * math.tanh(s1)
    s2 = sig(h1) * math.tanh(h1)
    h2 = sig(h1) * math.tanh(s2)
    assert top[0, 0] == pytest.approx(h2, abs=1e-14)
    zero, _ = unroll([LSTMWeights.filled(1, 2), LSTMWeights.filled(2, 2)], np.ones((3, 1)))
    assert np.all(zero == 0)


def test_unroll_mixed_rnn_and_shape_errors(rng):
    r = RNNWeights(rng.normal(size=(2, 1)), rng.normal(size=(2, 2)), np.zeros(2))
    top, finals = unroll([r], np.ones((3, 1)))
    h = np.zeros(2)
    for _ in range(3):
        h = rnn_step(r.W_x, r.W_h, r.b, [1.0], h)
    np.testing.assert_allclose(top[-1], h, atol=1e-14)
    with pytest.raises(ValueError):
        unroll([LSTMWeights.filled(3, 2)], np.ones((3, 1)))


def test_dense_forward(rng):
    v = np.array([1.0, -2.0, 0.5])
    assert dense_forward(DenseWeights(np.eye(3), np.zeros(3)), v).tolist() == v.tolist()
    assert dense_forward(DenseWeights(np.eye(1), np.zeros(1), "relu"), [-1.0])[0] == 0.0
    W = rng.normal(size=(2, 3))
    b = rng.normal(size=2)
    expected = [sum(W[i, j] * v[j] for j in range(3)) + b[i] for i in range(2)]
    np.testing.assert_allclose(dense_forward(DenseWeights(W, b), v), expected, atol=1e-14)
