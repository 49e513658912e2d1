"""Pure-numpy kernel implementations.

These are the fallback for the numba kernels in _kernels_numba; both
modules expose the same four functions with identical semantics. The
recurrences that cannot be vectorized (time sweeps, the same-row gap lane
in the alignment fill, delete-state chains) are expressed with the
smallest possible python-level loops.
"""

import math

import numpy as np

NEG = -np.inf


def hmm_forward(pi, A, B, obs):
    """Scaled forward sweep.

    Returns (alphas, scales, fail_t). alphas[t] is the forward vector
    normalized to sum 1, scales[t] is the constant c_t it was multiplied
    by (reciprocal of the unnormalized row sum), so the log-likelihood is
    -sum(log(scales)). fail_t is the first step whose unnormalized row sum
    was zero, or -1 if the sweep completed.
    """
    T = obs.shape[0]
    N = pi.shape[0]
    alphas = np.zeros((T, N))
    scales = np.zeros(T)
    v = pi * B[:, obs[0]]
    for t in range(T):
        if t > 0:
            v = (alphas[t - 1] @ A) * B[:, obs[t]]
        s = v.sum()
        if s <= 0.0:
            scales[t:] = np.inf
            return alphas, scales, t
        c = 1.0 / s
        alphas[t] = v * c
        scales[t] = c
    return alphas, scales, -1


def hmm_backward(A, B, obs, scales):
    """Scaled backward sweep matching hmm_forward's scaling constants.

    betas[T-1] = c_{T-1}; each earlier step is multiplied by its own c_t,
    which makes the posterior combination with the scaled alphas come out
    scale-free.
    """
    T = obs.shape[0]
    N = A.shape[0]
    betas = np.zeros((T, N))
    betas[T - 1] = scales[T - 1]
    for t in range(T - 2, -1, -1):
        betas[t] = scales[t] * (A @ (B[:, obs[t + 1]] * betas[t + 1]))
    return betas


def align_fill(ea, eb, score, gap_open, gap_extend, semi_local):
    """Fill the three affine-gap DP lanes for sequences ea vs eb.

    score is a lookup table indexed [ea_code, eb_code]. Lane M holds
    alignments ending in a substitution column, lane GA alignments ending
    with a gap in row b (consuming ea), lane GB with a gap in row a.
    Opening a gap costs gap_open, each extension gap_extend, and switching
    gap direction opens anew. In semi_local mode lane M may restart from
    zero at any cell (free leading runs); trailing runs are handled by the
    caller taking the matrix maximum.
    """
    n = ea.shape[0]
    m = eb.shape[0]
    M = np.full((n + 1, m + 1), NEG)
    GA = np.full((n + 1, m + 1), NEG)
    GB = np.full((n + 1, m + 1), NEG)
    if not semi_local:
        M[0, 0] = 0.0
    js = np.arange(m + 1)
    for i in range(n + 1):
        if i > 0:
            s_row = score[ea[i - 1], eb]
            diag = np.maximum(np.maximum(M[i - 1, :-1], GA[i - 1, :-1]), GB[i - 1, :-1])
            if semi_local:
                diag = np.maximum(diag, 0.0)
            M[i, 1:] = diag + s_row
            GA[i, :] = np.maximum(
                np.maximum(M[i - 1] - gap_open, GA[i - 1] - gap_extend),
                GB[i - 1] - gap_open,
            )
        # same-row gap-in-a lane via a running max: a gap of length k back to
        # column j-k costs gap_open + (k-1)*gap_extend, which linearizes under
        # the substitution H[j] + extend*j.
        H = np.maximum(M[i], GA[i])
        P = np.maximum.accumulate(H + gap_extend * js)
        GB[i, 1:] = P[:-1] - gap_open - gap_extend * (js[1:] - 1)
        GB[i, 0] = NEG
    return M, GA, GB


def _lse3(a, b, c):
    m = a
    if b > m:
        m = b
    if c > m:
        m = c
    if m == NEG:
        return NEG
    return m + math.log(math.exp(a - m) + math.exp(b - m) + math.exp(c - m))


def phmm_forward(ltm, lti, ltd, lem, lei, obs):
    """Log-space forward pass over a begin/match/insert/delete topology.

    ltm/lti/ltd are (N+1, 3) log-transition tables for sources M_j, I_j,
    D_j with destination order (next match or end, own insert, next
    delete); row 0 of ltm is the begin state and row 0 of ltd is unused
    (-inf). lem/lei are (N+1, M) log-emission tables (lem row 0 unused).
    Returns the log-probability of emitting exactly obs and reaching the
    end state.
    """
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
        newM[1:] = lem[1:, o] + np.logaddexp(
            np.logaddexp(fM[:-1] + ltm[:-1, 0], fI[:-1] + lti[:-1, 0]),
            fD[:-1] + ltd[:-1, 0],
        )
        newI = lei[:, o] + np.logaddexp(
            np.logaddexp(fM + ltm[:, 1], fI + lti[:, 1]), fD + ltd[:, 1]
        )
        newD = np.full(N + 1, NEG)
        for j in range(1, N + 1):
            newD[j] = _lse3(newM[j - 1] + ltm[j - 1, 2],
                            newI[j - 1] + lti[j - 1, 2],
                            newD[j - 1] + ltd[j - 1, 2])
        fM, fI, fD = newM, newI, newD
    return _lse3(fM[N] + ltm[N, 0], fI[N] + lti[N, 0], fD[N] + ltd[N, 0])
