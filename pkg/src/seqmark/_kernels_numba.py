"""Numba @njit kernel implementations.

Loop-level twins of the functions in _kernels_numpy; see that module for
the contract of each kernel.
"""

import math

import numpy as np
from numba import njit

NEG = -np.inf


@njit(cache=True)
def hmm_forward(pi, A, B, obs):
    T = obs.shape[0]
    N = pi.shape[0]
    alphas = np.zeros((T, N))
    scales = np.zeros(T)
    for t in range(T):
        s = 0.0
        if t == 0:
            for i in range(N):
                alphas[0, i] = pi[i] * B[i, obs[0]]
                s += alphas[0, i]
        else:
            for i in range(N):
                acc = 0.0
                for j in range(N):
                    acc += alphas[t - 1, j] * A[j, i]
                alphas[t, i] = acc * B[i, obs[t]]
                s += alphas[t, i]
        if s <= 0.0:
            for u in range(t, T):
                scales[u] = np.inf
            return alphas, scales, t
        c = 1.0 / s
        for i in range(N):
            alphas[t, i] *= c
        scales[t] = c
    return alphas, scales, -1


@njit(cache=True)
def hmm_backward(A, B, obs, scales):
    T = obs.shape[0]
    N = A.shape[0]
    betas = np.zeros((T, N))
    for i in range(N):
        betas[T - 1, i] = scales[T - 1]
    for t in range(T - 2, -1, -1):
        for i in range(N):
            acc = 0.0
            for j in range(N):
                acc += A[i, j] * B[j, obs[t + 1]] * betas[t + 1, j]
            betas[t, i] = scales[t] * acc
    return betas


@njit(cache=True)
def align_fill(ea, eb, score, gap_open, gap_extend, semi_local):
    n = ea.shape[0]
    m = eb.shape[0]
    M = np.full((n + 1, m + 1), NEG)
    GA = np.full((n + 1, m + 1), NEG)
    GB = np.full((n + 1, m + 1), NEG)
    if not semi_local:
        M[0, 0] = 0.0
    for i in range(n + 1):
        for j in range(m + 1):
            if i > 0 and j > 0:
                d = M[i - 1, j - 1]
                if GA[i - 1, j - 1] > d:
                    d = GA[i - 1, j - 1]
                if GB[i - 1, j - 1] > d:
                    d = GB[i - 1, j - 1]
                if semi_local and 0.0 > d:
                    d = 0.0
                M[i, j] = d + score[ea[i - 1], eb[j - 1]]
            if i > 0:
                g = M[i - 1, j] - gap_open
                if GA[i - 1, j] - gap_extend > g:
                    g = GA[i - 1, j] - gap_extend
                if GB[i - 1, j] - gap_open > g:
                    g = GB[i - 1, j] - gap_open
                GA[i, j] = g
            if j > 0:
                g = M[i, j - 1] - gap_open
                if GB[i, j - 1] - gap_extend > g:
                    g = GB[i, j - 1] - gap_extend
                if GA[i, j - 1] - gap_open > g:
                    g = GA[i, j - 1] - gap_open
                GB[i, j] = g
    return M, GA, GB


@njit(cache=True, inline="always")
def _lse3(a, b, c):
    m = a
    if b > m:
        m = b
    if c > m:
        m = c
    if m == NEG:
        return NEG
    return m + math.log(math.exp(a - m) + math.exp(b - m) + math.exp(c - m))


@njit(cache=True)
def phmm_forward(ltm, lti, ltd, lem, lei, obs):
    N = ltm.shape[0] - 1
    fM = np.full(N + 1, NEG)
    fI = np.full(N + 1, NEG)
    fD = np.full(N + 1, NEG)
    fM[0] = 0.0
    for j in range(1, N + 1):
        fD[j] = _lse3(fM[j - 1] + ltm[j - 1, 2], fI[j - 1] + lti[j - 1, 2],
                      fD[j - 1] + ltd[j - 1, 2])
    for i in range(obs.shape[0]):
        o = obs[i]
        newM = np.full(N + 1, NEG)
        newI = np.full(N + 1, NEG)
        newD = np.full(N + 1, NEG)
        for j in range(1, N + 1):
            newM[j] = lem[j, o] + _lse3(fM[j - 1] + ltm[j - 1, 0],
                                        fI[j - 1] + lti[j - 1, 0],
                                        fD[j - 1] + ltd[j - 1, 0])
        for j in range(N + 1):
            newI[j] = lei[j, o] + _lse3(fM[j] + ltm[j, 1], fI[j] + lti[j, 1],
                                        fD[j] + ltd[j, 1])
        for j in range(1, N + 1):
            newD[j] = _lse3(newM[j - 1] + ltm[j - 1, 2],
                            newI[j - 1] + lti[j - 1, 2],
                            newD[j - 1] + ltd[j - 1, 2])
        fM, fI, fD = newM, newI, newD
    return _lse3(fM[N] + ltm[N, 0], fI[N] + lti[N, 0], fD[N] + ltd[N, 0])
