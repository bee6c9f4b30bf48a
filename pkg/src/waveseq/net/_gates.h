/* Vectorisable gate nonlinearities for the compiled kernels.
 *
 * With WAVESEQ_LIBMVEC (glibc on x86_64) exp and tanh are declared with
 * SIMD variants so the loops below call libmvec; elsewhere they stay scalar.
 */
#ifndef WAVESEQ_GATES_H
#define WAVESEQ_GATES_H
#include <math.h>

#ifdef WAVESEQ_LIBMVEC
#pragma omp declare simd notinbranch simdlen(2)
double exp(double);
#pragma omp declare simd notinbranch simdlen(2)
double tanh(double);
#endif

static inline void ws_sigmoid_bias(double *restrict g, const double *restrict b, int n)
{
#pragma omp simd
    for (int j = 0; j < n; j++)
        g[j] = 1.0 / (1.0 + exp(-(g[j] + b[j])));
}

static inline void ws_tanh_bias(double *restrict g, const double *restrict b, int n)
{
#pragma omp simd
    for (int j = 0; j < n; j++)
        g[j] = tanh(g[j] + b[j]);
}

static inline void ws_tanh(const double *restrict x, double *restrict y, int n)
{
#pragma omp simd
    for (int j = 0; j < n; j++)
        y[j] = tanh(x[j]);
}

#endif
