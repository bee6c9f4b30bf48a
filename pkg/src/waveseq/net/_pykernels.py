"""Pure numpy recurrent kernels; reference for the compiled ``_kernels``.

Layout conventions shared with the Cython module:

* sequences are time-major ``(T, B, width)`` C-contiguous float64 arrays;
* LSTM weights are ``Wx (d, 4h)``, ``Wh (h, 4h)``, ``b (4h,)`` with gate
  blocks ordered forget, input, output, candidate;
* ``G`` holds post-activation gate values;
* backward functions accumulate into the supplied weight-gradient arrays
  and return input / initial-state gradients.
"""
import numpy as np

ACT_TANH = 0
ACT_RELU = 1


def _sigmoid(z):
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-z))


def _act(z, act):
    if act == ACT_TANH:
        return np.tanh(z)
    return np.maximum(z, 0.0)


def _dact_from_output(a, act):
    if act == ACT_TANH:
        return 1.0 - a * a
    return (a > 0.0).astype(float)


def lstm_forward(Wx, Wh, b, X, h0, s0, act=ACT_TANH):
    T, B, _ = X.shape
    h = Wh.shape[0]
    H = np.empty((T, B, h))
    S = np.empty((T, B, h))
    G = np.empty((T, B, 4 * h))
    hp, sp = h0, s0
    for t in range(T):
        z = X[t] @ Wx
        z += hp @ Wh
        z += b
        g = G[t]
        g[:, : 3 * h] = _sigmoid(z[:, : 3 * h])
        g[:, 3 * h :] = _act(z[:, 3 * h :], act)
        f, i, o, c = g[:, :h], g[:, h : 2 * h], g[:, 2 * h : 3 * h], g[:, 3 * h :]
        S[t] = f * sp + i * c
        H[t] = o * _act(S[t], act)
        hp, sp = H[t], S[t]
    return H, S, G


def lstm_backward(Wx, Wh, X, h0, s0, H, S, G, dH, dhT, dsT, act, dWx, dWh, db):
    T, B, d = X.shape
    h = Wh.shape[0]
    dX = np.empty((T, B, d))
    dh = dhT.copy()
    ds = dsT.copy()
    dZ = np.empty((B, 4 * h))
    for t in range(T - 1, -1, -1):
        hp = h0 if t == 0 else H[t - 1]
        sp = s0 if t == 0 else S[t - 1]
        g = G[t]
        f, i, o, c = g[:, :h], g[:, h : 2 * h], g[:, 2 * h : 3 * h], g[:, 3 * h :]
        if dH is not None:
            dh = dh + dH[t]
        a_s = _act(S[t], act)
        ds = ds + dh * o * _dact_from_output(a_s, act)
        dZ[:, :h] = ds * sp * f * (1.0 - f)
        dZ[:, h : 2 * h] = ds * c * i * (1.0 - i)
        dZ[:, 2 * h : 3 * h] = dh * a_s * o * (1.0 - o)
        dZ[:, 3 * h :] = ds * i * _dact_from_output(c, act)
        ds = ds * f
        dWx += X[t].T @ dZ
        dWh += hp.T @ dZ
        db += dZ.sum(axis=0)
        dX[t] = dZ @ Wx.T
        dh = dZ @ Wh.T
    return dX, dh, ds


def rnn_forward(Wx, Wh, b, X, h0, act=ACT_TANH):
    T, B, _ = X.shape
    H = np.empty((T, B, Wh.shape[0]))
    hp = h0
    for t in range(T):
        z = X[t] @ Wx
        z += hp @ Wh
        z += b
        H[t] = _act(z, act)
        hp = H[t]
    return H


def rnn_backward(Wx, Wh, X, h0, H, dH, dhT, act, dWx, dWh, db):
    T, B, d = X.shape
    dX = np.empty((T, B, d))
    dh = dhT.copy()
    for t in range(T - 1, -1, -1):
        hp = h0 if t == 0 else H[t - 1]
        if dH is not None:
            dh = dh + dH[t]
        dz = dh * _dact_from_output(H[t], act)
        dWx += X[t].T @ dz
        dWh += hp.T @ dz
        db += dz.sum(axis=0)
        dX[t] = dz @ Wx.T
        dh = dz @ Wh.T
    return dX, dh
