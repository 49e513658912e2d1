"""Discrete hidden Markov models: scaled forward/backward, posteriors,
Baum-Welch training and log-likelihood scoring.

All public scores are natural logs. Scoring normalizes by sequence length
(log-likelihood per observation) so that traces of different lengths are
comparable under a single threshold.
"""

import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import (DegenerateDataError, DegenerateStateWarning,
                     FileFormatError, InstanceTooLargeError,
                     ZeroProbabilityError)

ROW_SUM_TOL = 1e-12
CONVERGENCE_TOL = 1e-9
BRUTE_FORCE_LIMIT = 10 ** 7


@dataclass
class HmmModel:
    """lambda = (pi, A, B): initial, transition and emission distributions."""

    pi: np.ndarray
    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        self.pi = np.ascontiguousarray(self.pi, dtype=np.float64)
        self.A = np.ascontiguousarray(self.A, dtype=np.float64)
        self.B = np.ascontiguousarray(self.B, dtype=np.float64)

    @property
    def N(self):
        return int(self.pi.shape[0])

    @property
    def M(self):
        return int(self.B.shape[1])

    def validate(self):
        if self.N < 1 or self.M < 1:
            raise ValueError("model needs N >= 1 states and M >= 1 symbols")
        if self.A.shape != (self.N, self.N) or self.B.shape != (self.N, self.M):
            raise ValueError("inconsistent matrix shapes")
        for name, mat in (("pi", self.pi[None, :]), ("A", self.A), ("B", self.B)):
            if np.any(mat < 0.0) or np.any(mat > 1.0):
                raise ValueError(f"{name} has entries outside [0, 1]")
            if np.any(np.abs(mat.sum(axis=1) - 1.0) > ROW_SUM_TOL):
                raise ValueError(f"{name} rows do not sum to 1 within {ROW_SUM_TOL}")
        return self


@dataclass
class ForwardResult:
    log_likelihood: float
    alphas: np.ndarray   # (T, N) rows normalized to sum 1
    scales: np.ndarray   # (T,) per-step constants c_t; ll == -sum(log c_t)


@dataclass
class PosteriorSet:
    gammas: np.ndarray     # (T, N)
    digammas: np.ndarray   # (T-1, N, N)


@dataclass
class TrainReport:
    log_likelihood_trace: np.ndarray
    iterations_run: int
    final_model: HmmModel


def _obs_ids(obs):
    ids = getattr(obs, "ids", obs)
    return np.ascontiguousarray(ids, dtype=np.int64)


def _perturbed_row(rng, dim):
    # Zero-sum noise scaled to peak at exactly 10% of 1/dim keeps the row
    # summing to 1 without a renormalization that could push entries past
    # the intended band.
    base = np.full(dim, 1.0 / dim)
    if dim == 1:
        return base
    u = rng.uniform(-1.0, 1.0, dim)
    v = u - u.mean()
    peak = np.abs(v).max()
    if peak == 0.0:
        v = np.zeros(dim)
        v[0], v[1] = 1.0, -1.0
        peak = 1.0
    return base + v * (0.1 / dim / peak)


def init_random(n_states, n_symbols, seed):
    """Near-uniform random row-stochastic model, deterministic in seed.

    Exactly uniform rows are a Baum-Welch fixed point, so every row is
    jittered away from 1/dim (by at most 10% of 1/dim).
    """
    if n_states < 1 or n_symbols < 1:
        raise ValueError("need n_states >= 1 and n_symbols >= 1")
    rng = np.random.default_rng(seed)
    pi = _perturbed_row(rng, n_states)
    A = np.vstack([_perturbed_row(rng, n_states) for _ in range(n_states)])
    B = np.vstack([_perturbed_row(rng, n_symbols) for _ in range(n_states)])
    return HmmModel(pi=pi, A=A, B=B)


def likelihood_bruteforce(model, obs):
    """P(obs | model) by explicit enumeration of all state paths.

    This is the oracle the forward algorithm is checked against; it is
    exponential in T and refuses instances with more than 10^7 paths.
    """
    ids = _obs_ids(obs)
    N, T = model.N, ids.shape[0]
    if N ** T > BRUTE_FORCE_LIMIT:
        raise InstanceTooLargeError(f"{N}^{T} state paths exceed the oracle limit")
    pi, A, B = model.pi, model.A, model.B
    total = 0.0
    for path in itertools.product(range(N), repeat=T):
        p = pi[path[0]] * B[path[0], ids[0]]
        for t in range(1, T):
            p *= A[path[t - 1], path[t]] * B[path[t], ids[t]]
        total += p
    return total


def forward(model, obs, strict=False):
    """Scaled forward pass; log_likelihood is -inf for impossible sequences
    unless strict, in which case ZeroProbabilityError is raised."""
    ids = _obs_ids(obs)
    alphas, scales, fail_t = backend.kernels().hmm_forward(
        model.pi, model.A, model.B, ids)
    if fail_t >= 0:
        if strict:
            raise ZeroProbabilityError(
                f"model assigns probability 0 at step {fail_t}")
        return ForwardResult(log_likelihood=-np.inf, alphas=alphas, scales=scales)
    ll = -float(np.sum(np.log(scales)))
    return ForwardResult(log_likelihood=ll, alphas=alphas, scales=scales)


def backward(model, obs, scales):
    """Scaled backward pass using the forward pass's scaling constants."""
    ids = _obs_ids(obs)
    if scales.shape[0] != ids.shape[0]:
        raise ValueError("scales length does not match the observation length")
    return backend.kernels().hmm_backward(model.A, model.B, ids, scales)


def posteriors(model, obs):
    """State and state-pair posteriors given the full observation."""
    ids = _obs_ids(obs)
    fwd = forward(model, obs, strict=True)
    betas = backward(model, obs, fwd.scales)
    gammas = fwd.alphas * betas / fwd.scales[:, None]
    bb = model.B[:, ids[1:]].T * betas[1:]            # (T-1, N)
    digammas = fwd.alphas[:-1, :, None] * model.A[None, :, :] * bb[:, None, :]
    return PosteriorSet(gammas=gammas, digammas=digammas)


def posterior_decode(model, obs):
    """Most likely state per step (ties to the smaller state index)."""
    return np.argmax(posteriors(model, obs).gammas, axis=1)


def _reestimate(model, post, ids):
    gammas, digammas = post.gammas, post.digammas
    N, M = model.N, model.M
    new_pi = gammas[0] / gammas[0].sum()
    occupancy_a = gammas[:-1].sum(axis=0)
    occupancy_b = gammas.sum(axis=0)
    num_a = digammas.sum(axis=0)
    num_b = np.zeros((M, N))
    np.add.at(num_b, ids, gammas)
    num_b = num_b.T
    new_A = model.A.copy()
    new_B = model.B.copy()
    degenerate = []
    for i in range(N):
        if occupancy_a[i] > 0.0:
            new_A[i] = num_a[i] / num_a[i].sum()
        else:
            degenerate.append(i)
        if occupancy_b[i] > 0.0:
            new_B[i] = num_b[i] / num_b[i].sum()
        elif i not in degenerate:
            degenerate.append(i)
    return HmmModel(pi=new_pi, A=new_A, B=new_B), degenerate


def baum_welch(model, obs, max_iterations, tol=CONVERGENCE_TOL):
    """Iterative re-estimation of (pi, A, B) on one observation stream.

    Stops at max_iterations or once the log-likelihood improves by less
    than tol. States with zero expected occupancy keep their rows for the
    iteration and raise DegenerateStateWarning.
    """
    ids = _obs_ids(obs)
    if ids.shape[0] < 2:
        raise DegenerateDataError("training needs an observation of length >= 2")
    if max_iterations < 1:
        raise ValueError("max_iterations must be >= 1")
    trace = []
    iterations_run = 0
    warned = set()
    current = model
    for _ in range(max_iterations):
        fwd = forward(current, ids, strict=True)
        if trace and fwd.log_likelihood - trace[-1] < tol:
            trace.append(fwd.log_likelihood)
            break
        trace.append(fwd.log_likelihood)
        betas = backward(current, ids, fwd.scales)
        gammas = fwd.alphas * betas / fwd.scales[:, None]
        bb = current.B[:, ids[1:]].T * betas[1:]
        digammas = fwd.alphas[:-1, :, None] * current.A[None, :, :] * bb[:, None, :]
        post = PosteriorSet(gammas=gammas, digammas=digammas)
        current, degenerate = _reestimate(current, post, ids)
        for i in degenerate:
            if i not in warned:
                warnings.warn(f"state {i} has zero expected occupancy; "
                              "rows left unchanged", DegenerateStateWarning)
                warned.add(i)
        iterations_run += 1
    return TrainReport(log_likelihood_trace=np.array(trace),
                       iterations_run=iterations_run,
                       final_model=current)


def train_multi_report(sequences, n_states, n_symbols, iterations, seed):
    """train_multi, but returning the full TrainReport."""
    if not sequences:
        raise DegenerateDataError("empty training set")
    stream = np.concatenate([_obs_ids(s) for s in sequences])
    model = init_random(n_states, n_symbols, seed)
    return baum_welch(model, stream, max_iterations=iterations)


def train_multi(sequences, n_states, n_symbols, iterations, seed):
    """Train one model on many sequences by concatenating them into a
    single observation stream."""
    return train_multi_report(sequences, n_states, n_symbols,
                              iterations, seed).final_model


def score(model, obs):
    """Log-likelihood per observation symbol (-inf propagates)."""
    ids = _obs_ids(obs)
    return forward(model, ids).log_likelihood / ids.shape[0]


def write_hmm(model, path):
    from .corpus import _atomic_write

    lines = ["HMM v1", f"N {model.N} M {model.M}", _fmt_row(model.pi)]
    lines.extend(_fmt_row(r) for r in model.A)
    lines.extend(_fmt_row(r) for r in model.B)
    _atomic_write(path, "\n".join(lines) + "\n")


def read_hmm(path):
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines()]
    if not lines or lines[0] != "HMM v1":
        raise FileFormatError(f"{path}: missing 'HMM v1' header")
    try:
        parts = lines[1].split()
        n, m = int(parts[1]), int(parts[3])
        pi = _parse_row(lines[2], n)
        A = np.vstack([_parse_row(lines[3 + i], n) for i in range(n)])
        B = np.vstack([_parse_row(lines[3 + n + i], m) for i in range(n)])
    except (IndexError, ValueError) as exc:
        raise FileFormatError(f"{path}: malformed HMM file") from exc
    return HmmModel(pi=pi, A=A, B=B).validate()


def _fmt_row(row):
    return " ".join(f"{x:.17g}" for x in row)


def _parse_row(line, width):
    vals = np.array([float(x) for x in line.split()])
    if vals.shape[0] != width:
        raise ValueError(f"expected {width} values, got {vals.shape[0]}")
    return vals
