import numpy as np
import pytest

from waveseq.net.cells import LSTMWeights, lstm_step
from waveseq.seq2seq.model import (AUTO, TEACHER, Seq2Seq, build_baseline, build_model, model_from_config)


def _weights_from_stacked(Wx, Wh, b):
    h = Wh.shape[0]
    parts = [slice(k * h, (k + 1) * h) for k in range(4)]
    return LSTMWeights(*(Wx[:, s].T for s in parts), *(Wh[:, s].T for s in parts), *(b[s] for s in parts))


def test_zero_weights_output_head_bias():
    m = Seq2Seq(3, 2, 4, 1, T=5, T_out=4)
    m.params["head.b"][:] = [0.25, -1.5]
    out = m.predict(np.ones((2, 5, 3)))
    np.testing.assert_array_equal(out, np.broadcast_to([0.25, -1.5], (2, 4, 2)))
    fcl = build_baseline("sl-lstm", 3, 2, 4, T=5, T_out=3)
    fcl.params["head.b"][:] = np.arange(6.0)
    np.testing.assert_array_equal(fcl.predict(np.ones((1, 5, 3)))[0], np.arange(6.0).reshape(3, 2))


def test_teacher_with_own_predictions_matches_auto(rng):
    m = Seq2Seq(2, 2, 5, 2, T=4, T_out=6).init(4, std=0.4)
    X = rng.normal(size=(3, 4, 2))
    auto, _ = m.forward(X, AUTO)
    teach, _ = m.forward(X, TEACHER, Y=auto)
    np.testing.assert_allclose(teach, auto, rtol=0, atol=1e-14)


def test_encode_one_step_is_lstm_step(rng):
    m = Seq2Seq(3, 1, 4, 1, T=1, T_out=1).init(2, std=0.5)
    x = rng.normal(size=3)
    ctx = m.encode(x[None])
    w = _weights_from_stacked(m.params["enc0.Wx"], m.params["enc0.Wh"], m.params["enc0.b"])
    st, h = lstm_step(w, x)
    np.testing.assert_allclose(ctx.v, h, atol=1e-14)
    np.testing.assert_allclose(ctx.carry[0][1], st.s, atol=1e-14)


def test_decode_single_matches_batch(rng):
    m = Seq2Seq(2, 1, 3, 1, T=6, T_out=48).init(0)
    x = rng.normal(size=(6, 2))
    out = m.decode(m.encode(x))
    assert out.shape == (48, 1)
    np.testing.assert_allclose(out, m.predict(x[None])[0], atol=1e-14)


def test_teacher_needs_targets():
    m = Seq2Seq(1, 1, 2, 1, T=2, T_out=3)
    with pytest.raises(ValueError):
        m.forward(np.zeros((1, 2, 1)), TEACHER)
    with pytest.raises(ValueError):
        m.forward(np.zeros((1, 2, 1)), "sideways")
    with pytest.raises(ValueError):
        m.forward(np.zeros((1, 2, 4)))


def test_baseline_widths():
    ml = build_baseline("ml-lstm", 4, 1, 16, T=10, T_out=1)
    assert ml.widths == [10, 10, 16] and ml.activation == "relu"
    sl = build_baseline("sl-rnn", 4, 1, 16, T=10)
    assert sl.widths == [16] and sl.activation == "tanh"
    with pytest.raises(ValueError):
        build_baseline("xl-gru", 1, 1, 1, 1)


@pytest.mark.parametrize("kind", ["seq2seq", "sl-rnn", "ml-lstm"])
def test_config_round_trip(kind):
    m = build_model(kind, 3, 2, 5, T=4, T_out=2, layers=2).init(1)
    clone = model_from_config(m.config())
    assert clone.catalog == m.catalog
    clone.params.flat = m.params.flat
    X = np.random.default_rng(0).normal(size=(2, 4, 3))
    np.testing.assert_array_equal(clone.predict(X), m.predict(X))
