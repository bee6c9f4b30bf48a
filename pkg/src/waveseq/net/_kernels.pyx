# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled recurrent kernels. Same signatures and layouts as ``_pykernels``."""
import numpy as np

from libc.math cimport exp, tanh
from scipy.linalg.cython_blas cimport dgemm

cdef extern from "_gates.h" nogil:
    void ws_sigmoid_bias(double* g, const double* b, int n)
    void ws_tanh_bias(double* g, const double* b, int n)
    void ws_tanh(const double* x, double* y, int n)

cdef enum:
    ACT_TANH = 0
    ACT_RELU = 1


cdef inline void _gemm(char ta, char tb, int M, int N, int K, double alpha,
                       double* A, int lda, double* B, int ldb,
                       double beta, double* C, int ldc) noexcept nogil:
    # row-major C(M, N) = alpha op(A) op(B) + beta C, via column-major BLAS
    dgemm(&tb, &ta, &N, &M, &K, &alpha, B, &ldb, A, &lda, &beta, C, &ldc)


cdef inline double _sig(double z) noexcept nogil:
    return 1.0 / (1.0 + exp(-z))


cdef inline double _act(double z, int act) noexcept nogil:
    if act == ACT_TANH:
        return tanh(z)
    return z if z > 0.0 else 0.0


cdef inline double _dact(double a, int act) noexcept nogil:
    # derivative expressed through the activation output
    if act == ACT_TANH:
        return 1.0 - a * a
    return 1.0 if a > 0.0 else 0.0


def lstm_forward(double[:, ::1] Wx, double[:, ::1] Wh, double[::1] b,
                 double[:, :, ::1] X, double[:, ::1] h0, double[:, ::1] s0, int act=ACT_TANH):
    cdef int T = X.shape[0], B = X.shape[1], d = X.shape[2]
    cdef int h = Wh.shape[0], h4 = 4 * Wh.shape[0]
    H_arr = np.empty((T, B, h))
    S_arr = np.empty((T, B, h))
    G_arr = np.empty((T, B, h4))
    cdef double[:, :, ::1] H = H_arr
    cdef double[:, :, ::1] S = S_arr
    cdef double[:, :, ::1] G = G_arr
    cdef double* hp
    cdef double* sp
    cdef double* g
    cdef int t, r, j
    with nogil:
        for t in range(T):
            hp = &h0[0, 0] if t == 0 else &H[t - 1, 0, 0]
            sp = &s0[0, 0] if t == 0 else &S[t - 1, 0, 0]
            _gemm(b'N', b'N', B, h4, d, 1.0, &X[t, 0, 0], d, &Wx[0, 0], h4, 0.0, &G[t, 0, 0], h4)
            _gemm(b'N', b'N', B, h4, h, 1.0, hp, h, &Wh[0, 0], h4, 1.0, &G[t, 0, 0], h4)
            for r in range(B):
                g = &G[t, r, 0]
                ws_sigmoid_bias(g, &b[0], 3 * h)
                if act == ACT_TANH:
                    ws_tanh_bias(&g[3 * h], &b[3 * h], h)
                else:
                    for j in range(3 * h, h4):
                        g[j] = _act(g[j] + b[j], act)
                for j in range(h):
                    S[t, r, j] = g[j] * sp[r * h + j] + g[h + j] * g[3 * h + j]
                if act == ACT_TANH:
                    ws_tanh(&S[t, r, 0], &H[t, r, 0], h)
                    for j in range(h):
                        H[t, r, j] = g[2 * h + j] * H[t, r, j]
                else:
                    for j in range(h):
                        H[t, r, j] = g[2 * h + j] * _act(S[t, r, j], act)
    return H_arr, S_arr, G_arr


def lstm_backward(double[:, ::1] Wx, double[:, ::1] Wh, double[:, :, ::1] X,
                  double[:, ::1] h0, double[:, ::1] s0,
                  double[:, :, ::1] H, double[:, :, ::1] S, double[:, :, ::1] G,
                  double[:, :, ::1] dH, double[:, ::1] dhT, double[:, ::1] dsT, int act,
                  double[:, ::1] dWx, double[:, ::1] dWh, double[::1] db):
    cdef int T = X.shape[0], B = X.shape[1], d = X.shape[2]
    cdef int h = Wh.shape[0], h4 = 4 * Wh.shape[0]
    cdef bint has_dH = dH is not None
    dX_arr = np.empty((T, B, d))
    dh_arr = np.array(dhT, copy=True)
    ds_arr = np.array(dsT, copy=True)
    dZ_arr = np.empty((B, h4))
    aS_arr = np.empty(h)
    cdef double[::1] aS = aS_arr
    cdef double[:, :, ::1] dX = dX_arr
    cdef double[:, ::1] dh = dh_arr
    cdef double[:, ::1] ds = ds_arr
    cdef double[:, ::1] dZ = dZ_arr
    cdef double* hp
    cdef double* sp
    cdef double* g
    cdef double* z
    cdef double f, i, o, c, a_s, dht, dst
    cdef int t, r, j
    with nogil:
        for t in range(T - 1, -1, -1):
            hp = &h0[0, 0] if t == 0 else &H[t - 1, 0, 0]
            sp = &s0[0, 0] if t == 0 else &S[t - 1, 0, 0]
            for r in range(B):
                g = &G[t, r, 0]
                z = &dZ[r, 0]
                if act == ACT_TANH:
                    ws_tanh(&S[t, r, 0], &aS[0], h)
                else:
                    for j in range(h):
                        aS[j] = _act(S[t, r, j], act)
                for j in range(h):
                    f = g[j]
                    i = g[h + j]
                    o = g[2 * h + j]
                    c = g[3 * h + j]
                    dht = dh[r, j]
                    if has_dH:
                        dht = dht + dH[t, r, j]
                    a_s = aS[j]
                    dst = ds[r, j] + dht * o * _dact(a_s, act)
                    z[j] = dst * sp[r * h + j] * f * (1.0 - f)
                    z[h + j] = dst * c * i * (1.0 - i)
                    z[2 * h + j] = dht * a_s * o * (1.0 - o)
                    z[3 * h + j] = dst * i * _dact(c, act)
                    ds[r, j] = dst * f
            _gemm(b'T', b'N', d, h4, B, 1.0, &X[t, 0, 0], d, &dZ[0, 0], h4, 1.0, &dWx[0, 0], h4)
            _gemm(b'T', b'N', h, h4, B, 1.0, hp, h, &dZ[0, 0], h4, 1.0, &dWh[0, 0], h4)
            for r in range(B):
                for j in range(h4):
                    db[j] += dZ[r, j]
            _gemm(b'N', b'T', B, d, h4, 1.0, &dZ[0, 0], h4, &Wx[0, 0], h4, 0.0, &dX[t, 0, 0], d)
            _gemm(b'N', b'T', B, h, h4, 1.0, &dZ[0, 0], h4, &Wh[0, 0], h4, 0.0, &dh[0, 0], h)
    return dX_arr, dh_arr, ds_arr


def rnn_forward(double[:, ::1] Wx, double[:, ::1] Wh, double[::1] b,
                double[:, :, ::1] X, double[:, ::1] h0, int act=ACT_TANH):
    cdef int T = X.shape[0], B = X.shape[1], d = X.shape[2]
    cdef int h = Wh.shape[0]
    H_arr = np.empty((T, B, h))
    cdef double[:, :, ::1] H = H_arr
    cdef double* hp
    cdef int t, r, j
    with nogil:
        for t in range(T):
            hp = &h0[0, 0] if t == 0 else &H[t - 1, 0, 0]
            _gemm(b'N', b'N', B, h, d, 1.0, &X[t, 0, 0], d, &Wx[0, 0], h, 0.0, &H[t, 0, 0], h)
            _gemm(b'N', b'N', B, h, h, 1.0, hp, h, &Wh[0, 0], h, 1.0, &H[t, 0, 0], h)
            for r in range(B):
                for j in range(h):
                    H[t, r, j] = _act(H[t, r, j] + b[j], act)
    return H_arr


def rnn_backward(double[:, ::1] Wx, double[:, ::1] Wh, double[:, :, ::1] X,
                 double[:, ::1] h0, double[:, :, ::1] H,
                 double[:, :, ::1] dH, double[:, ::1] dhT, int act,
                 double[:, ::1] dWx, double[:, ::1] dWh, double[::1] db):
    cdef int T = X.shape[0], B = X.shape[1], d = X.shape[2]
    cdef int h = Wh.shape[0]
    cdef bint has_dH = dH is not None
    dX_arr = np.empty((T, B, d))
    dh_arr = np.array(dhT, copy=True)
    dz_arr = np.empty((B, h))
    cdef double[:, :, ::1] dX = dX_arr
    cdef double[:, ::1] dh = dh_arr
    cdef double[:, ::1] dz = dz_arr
    cdef double* hp
    cdef double dht
    cdef int t, r, j
    with nogil:
        for t in range(T - 1, -1, -1):
            hp = &h0[0, 0] if t == 0 else &H[t - 1, 0, 0]
            for r in range(B):
                for j in range(h):
                    dht = dh[r, j]
                    if has_dH:
                        dht = dht + dH[t, r, j]
                    dz[r, j] = dht * _dact(H[t, r, j], act)
            _gemm(b'T', b'N', d, h, B, 1.0, &X[t, 0, 0], d, &dz[0, 0], h, 1.0, &dWx[0, 0], h)
            _gemm(b'T', b'N', h, h, B, 1.0, hp, h, &dz[0, 0], h, 1.0, &dWh[0, 0], h)
            for r in range(B):
                for j in range(h):
                    db[j] += dz[r, j]
            _gemm(b'N', b'T', B, d, h, 1.0, &dz[0, 0], h, &Wx[0, 0], h, 0.0, &dX[t, 0, 0], d)
            _gemm(b'N', b'T', B, h, h, 1.0, &dz[0, 0], h, &Wh[0, 0], h, 0.0, &dh[0, 0], h)
    return dX_arr, dh_arr
