"""Profile models derived from a multiple sequence alignment.

Columns with at most half gaps become match states; each maximal run of
gappier columns becomes one insert state. Emission and transition
probabilities are counted straight off the MSA with add-one smoothing, so
no probability is ever zero and every score is finite. Scoring uses the
forward algorithm over the begin/match/insert/delete topology in log
space.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import backend
from .align import GAP
from .corpus import Alphabet
from .errors import (AlphabetMismatchError, FileFormatError,
                     InstanceTooLargeError)

ROW_SUM_TOL = 1e-12
ORACLE_MAX_STATES = 3
ORACLE_MAX_LEN = 4


@dataclass
class ColumnClassification:
    """Per-column tags: ('match', state 1..N) or ('insert', region 0..N)."""

    tags: list
    n_match: int


@dataclass
class PhmmScore:
    log_probability: float
    per_symbol: float


@dataclass
class PhmmModel:
    """Match/insert emissions plus per-source transition triples.

    Transition rows are indexed by source column j with destination order
    (M_{j+1} or End, I_j, D_{j+1}); trans_m[0] is the begin state and
    trans_d[0] is unused. Row N of each table targets {End, I_N} only.
    """

    match_emissions: np.ndarray    # (N, M)
    insert_emissions: np.ndarray   # (N+1, M)
    trans_m: np.ndarray            # (N+1, 3)
    trans_i: np.ndarray            # (N+1, 3)
    trans_d: np.ndarray            # (N+1, 3)
    alphabet: Alphabet

    @property
    def N(self):
        return int(self.match_emissions.shape[0])

    @property
    def alphabet_m(self):
        return self.alphabet.M

    def validate(self):
        n, m = self.N, self.alphabet_m
        if self.match_emissions.shape != (n, m) or \
                self.insert_emissions.shape != (n + 1, m):
            raise ValueError("emission table shapes inconsistent")
        for table in (self.match_emissions, self.insert_emissions):
            if table.size and (np.any(table <= 0.0) or
                               np.any(np.abs(table.sum(axis=1) - 1.0) > ROW_SUM_TOL)):
                raise ValueError("emission rows must be positive and sum to 1")
        for name, t, first in (("m", self.trans_m, 0), ("i", self.trans_i, 0),
                               ("d", self.trans_d, 1)):
            for j in range(first, n + 1):
                row = t[j]
                if j < n:
                    ok = np.all(row > 0.0) and abs(row.sum() - 1.0) <= ROW_SUM_TOL
                else:
                    ok = (row[0] > 0.0 and row[1] > 0.0 and row[2] == 0.0
                          and abs(row[0] + row[1] - 1.0) <= ROW_SUM_TOL)
                if not ok:
                    raise ValueError(f"transition row {name}{j} invalid")
        return self


def classify_columns(msa):
    """Tag each MSA column as a match state or part of an insert region."""
    n_rows = msa.n
    tags = []
    n_match = 0
    for k in range(msa.width):
        gaps = sum(1 for row in msa.rows if row[k] == GAP)
        if 2 * gaps <= n_rows:
            n_match += 1
            tags.append(("match", n_match))
        else:
            tags.append(("insert", n_match))
    return ColumnClassification(tags=tags, n_match=n_match)


def estimate_emissions(msa, classification, m_symbols):
    """Add-one-smoothed symbol distributions per match and insert state.

    States that never emit in the MSA come out uniform, which is exactly
    what add-one smoothing of an empty count vector yields.
    """
    n = classification.n_match
    match_counts = np.zeros((n, m_symbols))
    insert_counts = np.zeros((n + 1, m_symbols))
    for k, (kind, idx) in enumerate(classification.tags):
        for row in msa.rows:
            sym = int(row[k])
            if sym == GAP:
                continue
            if sym >= m_symbols:
                raise AlphabetMismatchError(
                    f"MSA symbol {sym} outside alphabet of size {m_symbols}")
            if kind == "match":
                match_counts[idx - 1, sym] += 1
            else:
                insert_counts[idx, sym] += 1
    match_em = (match_counts + 1.0) / (match_counts.sum(axis=1, keepdims=True)
                                       + m_symbols)
    insert_em = (insert_counts + 1.0) / (insert_counts.sum(axis=1, keepdims=True)
                                         + m_symbols)
    return match_em, insert_em


def _row_state_path(row, tags, n_match):
    path = [("M", 0)]
    for k, (kind, idx) in enumerate(tags):
        gap = row[k] == GAP
        if kind == "match":
            path.append(("M", idx) if not gap else ("D", idx))
        elif not gap:
            path.append(("I", idx))
    path.append(("M", n_match + 1))
    return path


def estimate_transitions(msa, classification):
    """Add-one-smoothed transition triples counted from per-row state paths.

    Interior sources smooth over their three destinations; sources in the
    final column smooth over the two reachable ones (end, own insert).
    """
    n = classification.n_match
    counts = {"M": np.zeros((n + 1, 3)), "I": np.zeros((n + 1, 3)),
              "D": np.zeros((n + 1, 3))}
    for row in msa.rows:
        path = _row_state_path(row, classification.tags, n)
        for (pk, pj), (ck, cj) in zip(path, path[1:]):
            if ck == "M" and cj == pj + 1:
                slot = 0
            elif ck == "I" and cj == pj:
                slot = 1
            elif ck == "D" and cj == pj + 1:
                slot = 2
            else:
                raise AssertionError(f"illegal state step {pk}{pj}->{ck}{cj}")
            counts[pk][pj, slot] += 1

    def smooth(c):
        out = np.zeros_like(c)
        for j in range(n + 1):
            if j < n:
                out[j] = (c[j] + 1.0) / (c[j].sum() + 3.0)
            else:
                out[j, 0] = (c[j, 0] + 1.0) / (c[j, 0] + c[j, 1] + 2.0)
                out[j, 1] = (c[j, 1] + 1.0) / (c[j, 0] + c[j, 1] + 2.0)
        return out

    trans_m = smooth(counts["M"])
    trans_i = smooth(counts["I"])
    trans_d = smooth(counts["D"])
    trans_d[0] = 0.0  # there is no D_0 state
    return trans_m, trans_i, trans_d


def build_phmm(msa, alphabet):
    """Classify columns, count emissions and transitions, assemble model."""
    classification = classify_columns(msa)
    match_em, insert_em = estimate_emissions(msa, classification, alphabet.M)
    trans_m, trans_i, trans_d = estimate_transitions(msa, classification)
    return PhmmModel(match_emissions=match_em, insert_emissions=insert_em,
                     trans_m=trans_m, trans_i=trans_i, trans_d=trans_d,
                     alphabet=alphabet).validate()


def _log_tables(model):
    with np.errstate(divide="ignore"):
        lem = np.vstack([np.full((1, model.alphabet_m), -np.inf),
                         np.log(model.match_emissions)])
        lei = np.log(model.insert_emissions)
        ltm = np.log(model.trans_m)
        lti = np.log(model.trans_i)
        ltd = np.log(model.trans_d)
    return ltm, lti, ltd, lem, lei


def _obs_ids(obs, m):
    ids = np.ascontiguousarray(getattr(obs, "ids", obs), dtype=np.int64)
    if ids.shape[0] < 1:
        raise ValueError("observation must be nonempty")
    if ids.min() < 0 or ids.max() >= m:
        raise AlphabetMismatchError("observation symbol outside model alphabet")
    return ids


def phmm_forward_score(model, obs):
    """Log-probability of emitting exactly obs, begin to end."""
    ids = _obs_ids(obs, model.alphabet_m)
    ltm, lti, ltd, lem, lei = _log_tables(model)
    lp = float(backend.kernels().phmm_forward(ltm, lti, ltd, lem, lei, ids))
    return PhmmScore(log_probability=lp, per_symbol=lp / ids.shape[0])


def phmm_bruteforce_score(model, obs):
    """Oracle: sum the probability of every begin-to-end state path that
    emits exactly obs. Exponential; only tiny instances are accepted."""
    ids = _obs_ids(obs, model.alphabet_m)
    n, t = model.N, ids.shape[0]
    if n > ORACLE_MAX_STATES or t > ORACLE_MAX_LEN:
        raise InstanceTooLargeError(
            f"oracle accepts N <= {ORACLE_MAX_STATES}, length <= {ORACLE_MAX_LEN}")
    total = 0.0
    stack = [("M", 0, 0, 1.0)]  # (kind, column, symbols consumed, path prob)
    while stack:
        kind, j, pos, p = stack.pop()
        table = {"M": model.trans_m, "I": model.trans_i, "D": model.trans_d}[kind]
        p_next_m, p_ins, p_del = table[j]
        # advance to M_{j+1} (or End when j == N)
        if j == n:
            if pos == t:
                total += p * p_next_m
        elif pos < t:
            stack.append(("M", j + 1, pos + 1,
                          p * p_next_m * model.match_emissions[j, ids[pos]]))
        # self insert I_j
        if pos < t:
            stack.append(("I", j, pos + 1,
                          p * p_ins * model.insert_emissions[j, ids[pos]]))
        # delete D_{j+1}
        if j < n and p_del > 0.0:
            stack.append(("D", j + 1, pos, p * p_del))
    return math.log(total)


def write_phmm(model, path):
    from .corpus import _atomic_write
    from .hmm import _fmt_row

    n, m = model.N, model.alphabet_m
    alpha = model.alphabet
    other = "none" if alpha.other_id is None else str(alpha.other_id)
    lines = ["PHMM v1", f"N {n} M {m}", f"OTHER {other}"]
    lines.extend(alpha.symbols)
    for j in range(n):
        lines.append(f"EM{j + 1} " + _fmt_row(model.match_emissions[j]))
    for j in range(n + 1):
        lines.append(f"EI{j} " + _fmt_row(model.insert_emissions[j]))
    lines.append("TB " + _fmt_row(model.trans_m[0]))
    for j in range(1, n + 1):
        lines.append(f"TM{j} " + _fmt_row(model.trans_m[j]))
    for j in range(n + 1):
        lines.append(f"TI{j} " + _fmt_row(model.trans_i[j]))
    for j in range(1, n + 1):
        lines.append(f"TD{j} " + _fmt_row(model.trans_d[j]))
    _atomic_write(path, "\n".join(lines) + "\n")


def read_phmm(path):
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    if not lines or lines[0] != "PHMM v1":
        raise FileFormatError(f"{path}: missing 'PHMM v1' header")
    try:
        parts = lines[1].split()
        n, m = int(parts[1]), int(parts[3])
        other = None if lines[2].split()[1] == "none" else int(lines[2].split()[1])
        symbols = tuple(lines[3:3 + m])
        alpha = Alphabet(symbols=symbols, other_id=other)
        cursor = 3 + m

        def take(label, count):
            nonlocal cursor
            rows = []
            for k in range(count):
                name, _, rest = lines[cursor].partition(" ")
                if name != label(k):
                    raise ValueError(f"expected {label(k)}, found {name}")
                rows.append([float(x) for x in rest.split()])
                cursor += 1
            return np.array(rows).reshape(count, -1)

        match_em = take(lambda k: f"EM{k + 1}", n) if n else np.zeros((0, m))
        insert_em = take(lambda k: f"EI{k}", n + 1)
        tb = take(lambda k: "TB", 1)
        tm = take(lambda k: f"TM{k + 1}", n) if n else np.zeros((0, 3))
        trans_m = np.vstack([tb, tm])
        trans_i = take(lambda k: f"TI{k}", n + 1)
        td = take(lambda k: f"TD{k + 1}", n) if n else np.zeros((0, 3))
        trans_d = np.vstack([np.zeros((1, 3)), td])
    except (IndexError, ValueError) as exc:
        raise FileFormatError(f"{path}: malformed PHMM file") from exc
    return PhmmModel(match_emissions=match_em, insert_emissions=insert_em,
                     trans_m=trans_m, trans_i=trans_i, trans_d=trans_d,
                     alphabet=alpha).validate()
