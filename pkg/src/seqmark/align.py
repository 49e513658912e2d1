"""Pairwise sequence alignment by dynamic programming with affine gaps.

Two modes: global (every symbol scored) and semi-local, where the leading
and trailing unaligned runs of either sequence are kept as zero-cost gap
columns. A gap run of length k costs open + extend*(k-1); switching gap
direction opens a new run.
"""

from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import AlphabetMismatchError, FileFormatError

GAP = -1

DEFAULT_MATCH = 2.0
DEFAULT_MISMATCH = -1.0
DEFAULT_GAP_OPEN = 3.0
DEFAULT_GAP_EXTEND = 1.0
# score of a real symbol aligned against a gap cell of an MSA guide row
DEFAULT_GUIDE_GAP_SCORE = -1.0


@dataclass(frozen=True)
class SubstitutionMatrix:
    """Symmetric symbol-vs-symbol score table over one alphabet."""

    S: np.ndarray

    def __post_init__(self):
        S = np.ascontiguousarray(self.S, dtype=np.float64)
        if S.ndim != 2 or S.shape[0] != S.shape[1]:
            raise ValueError("substitution matrix must be square")
        if not np.array_equal(S, S.T):
            raise ValueError("substitution matrix must be symmetric")
        object.__setattr__(self, "S", S)

    @property
    def M(self):
        return int(self.S.shape[0])


def default_substitution(m, other_id=None,
                         match=DEFAULT_MATCH, mismatch=DEFAULT_MISMATCH):
    """Identity scoring: +2 diagonal, -1 elsewhere; an OTHER symbol scores
    as mismatch against everything, itself included."""
    S = np.full((m, m), mismatch)
    np.fill_diagonal(S, match)
    if other_id is not None:
        S[other_id, :] = mismatch
        S[:, other_id] = mismatch
    return SubstitutionMatrix(S=S)


@dataclass(frozen=True)
class GapPenalty:
    open: float = DEFAULT_GAP_OPEN
    extend: float = DEFAULT_GAP_EXTEND

    def __post_init__(self):
        if not self.open >= self.extend >= 0.0:
            raise ValueError("need gap open >= extend >= 0")


@dataclass
class PairwiseAlignment:
    """Equal-length rows over symbol ids and GAP markers.

    In semi-local mode the first free_prefix and last free_suffix columns
    are the unscored end runs; they hold real symbols paired with gaps so
    that stripping gaps from a row always reproduces its source sequence.
    """

    row_a: list
    row_b: list
    score: float
    mode: str
    free_prefix: int = 0
    free_suffix: int = 0

    @property
    def width(self):
        return len(self.row_a)

    def columns(self):
        return list(zip(self.row_a, self.row_b))

    def core_columns(self):
        end = self.width - self.free_suffix
        return list(zip(self.row_a[self.free_prefix:end],
                        self.row_b[self.free_prefix:end]))

    def identical_columns(self):
        """Number of scored columns pairing two equal symbols."""
        return sum(1 for x, y in self.core_columns() if x != GAP and x == y)


def _as_ids(seq):
    ids = getattr(seq, "ids", seq)
    return np.ascontiguousarray(ids, dtype=np.int64)


def _check_ids(ids, dim, who):
    if ids.shape[0] == 0:
        raise ValueError(f"sequence {who} is empty")
    if ids.min() < 0 or ids.max() >= dim:
        raise AlphabetMismatchError(
            f"sequence {who} has symbol ids outside the score matrix range")


def global_align(a, b, subst=None, gap=None):
    """Optimal global alignment of a and b (maximum total score)."""
    ea, eb = _as_ids(a), _as_ids(b)
    subst, gap = _defaults(ea, eb, subst, gap)
    _check_ids(ea, subst.M, "a")
    _check_ids(eb, subst.M, "b")
    return align_encoded(ea, eb, subst.S, gap, semi_local=False)


def semi_local_align(a, b, subst=None, gap=None):
    """Optimal alignment with free (unscored) end runs in both rows."""
    ea, eb = _as_ids(a), _as_ids(b)
    subst, gap = _defaults(ea, eb, subst, gap)
    _check_ids(ea, subst.M, "a")
    _check_ids(eb, subst.M, "b")
    return align_encoded(ea, eb, subst.S, gap, semi_local=True)


def _defaults(ea, eb, subst, gap):
    if subst is None:
        m = int(max(ea.max(), eb.max())) + 1
        subst = default_substitution(m)
    if gap is None:
        gap = GapPenalty()
    return subst, gap


def align_encoded(ea, eb, score_matrix, gap, semi_local):
    """Alignment over pre-encoded id arrays against an explicit score
    lookup (rows may exceed the column alphabet, e.g. a guide-gap row)."""
    score_matrix = np.ascontiguousarray(score_matrix, dtype=np.float64)
    M, GA, GB = backend.kernels().align_fill(
        ea, eb, score_matrix, float(gap.open), float(gap.extend), semi_local)
    if semi_local:
        return _traceback_semilocal(ea, eb, score_matrix, gap, M, GA, GB)
    return _traceback_global(ea, eb, score_matrix, gap, M, GA, GB)


def _traceback_global(ea, eb, S, gap, M, GA, GB):
    n, m = ea.shape[0], eb.shape[0]
    i, j = n, m
    lane = _pick_lane(M[i, j], GA[i, j], GB[i, j])
    best = (M[i, j], GA[i, j], GB[i, j])["MAB".index(lane)]
    cols_a, cols_b = [], []
    while (i, j) != (0, 0) or lane != "M":
        if lane == "M":
            cols_a.append(int(ea[i - 1]))
            cols_b.append(int(eb[j - 1]))
            target = M[i, j] - S[ea[i - 1], eb[j - 1]]
            i, j = i - 1, j - 1
            lane = _pick_lane(M[i, j], GA[i, j], GB[i, j], target)
        elif lane == "A":
            cols_a.append(int(ea[i - 1]))
            cols_b.append(GAP)
            target = GA[i, j]
            i = i - 1
            lane = _pick_lane(M[i, j] - gap.open, GA[i, j] - gap.extend,
                              GB[i, j] - gap.open, target)
        else:
            cols_a.append(GAP)
            cols_b.append(int(eb[j - 1]))
            target = GB[i, j]
            j = j - 1
            lane = _pick_lane(M[i, j] - gap.open, GA[i, j] - gap.extend,
                              GB[i, j] - gap.open, target)
    cols_a.reverse()
    cols_b.reverse()
    return PairwiseAlignment(row_a=cols_a, row_b=cols_b, score=float(best),
                             mode="global")


def _close(x, target):
    return abs(x - target) <= 1e-9 * (1.0 + abs(target))


def _pick_lane(vm, va, vb, target=None):
    # preference order: substitution column, gap in row b, gap in row a
    if target is None:
        target = max(vm, va, vb)
    if _close(vm, target):
        return "M"
    if _close(va, target):
        return "A"
    if _close(vb, target):
        return "B"
    raise AssertionError("traceback lost the optimal path")


def _traceback_semilocal(ea, eb, S, gap, M, GA, GB):
    n, m = ea.shape[0], eb.shape[0]
    best = float(M[1:, 1:].max()) if n and m else float("-inf")
    if best <= 0.0:
        # empty core: everything is a free end run
        return _all_free_alignment(ea, eb, max(best, 0.0) if n and m else 0.0)
    # end cell: prefer the longest core, then the one consuming more of a
    cand = np.argwhere(M == best)
    i2, j2 = max(((int(i), int(j)) for i, j in cand), key=lambda c: (c[0] + c[1], c[0]))
    cols_a, cols_b = [], []
    i, j, lane = i2, j2, "M"
    while True:
        if lane == "M":
            cols_a.append(int(ea[i - 1]))
            cols_b.append(int(eb[j - 1]))
            target = M[i, j] - S[ea[i - 1], eb[j - 1]]
            i, j = i - 1, j - 1
            if _close(0.0, target) and not _reachable(M, GA, GB, i, j, target):
                break  # restart point: core starts here
            lane = _pick_lane(M[i, j], GA[i, j], GB[i, j], target)
        elif lane == "A":
            cols_a.append(int(ea[i - 1]))
            cols_b.append(GAP)
            target = GA[i, j]
            i = i - 1
            lane = _pick_lane(M[i, j] - gap.open, GA[i, j] - gap.extend,
                              GB[i, j] - gap.open, target)
        else:
            cols_a.append(GAP)
            cols_b.append(int(eb[j - 1]))
            target = GB[i, j]
            j = j - 1
            lane = _pick_lane(M[i, j] - gap.open, GA[i, j] - gap.extend,
                              GB[i, j] - gap.open, target)
    i1, j1 = i, j
    cols_a.reverse()
    cols_b.reverse()
    pre_a, pre_b = list(ea[:i1]), list(eb[:j1])
    suf_a, suf_b = list(ea[i2:]), list(eb[j2:])
    row_a = ([int(x) for x in pre_a] + [GAP] * len(pre_b) + cols_a
             + [int(x) for x in suf_a] + [GAP] * len(suf_b))
    row_b = ([GAP] * len(pre_a) + [int(x) for x in pre_b] + cols_b
             + [GAP] * len(suf_a) + [int(x) for x in suf_b])
    return PairwiseAlignment(row_a=row_a, row_b=row_b, score=best,
                             mode="semi-local",
                             free_prefix=len(pre_a) + len(pre_b),
                             free_suffix=len(suf_a) + len(suf_b))


def _reachable(M, GA, GB, i, j, target):
    return (_close(M[i, j], target) or _close(GA[i, j], target)
            or _close(GB[i, j], target))


def _all_free_alignment(ea, eb, score):
    row_a = [int(x) for x in ea] + [GAP] * eb.shape[0]
    row_b = [GAP] * ea.shape[0] + [int(x) for x in eb]
    w = len(row_a)
    return PairwiseAlignment(row_a=row_a, row_b=row_b, score=float(score),
                             mode="semi-local", free_prefix=w, free_suffix=0)


def alignment_score(alignment, subst, gap):
    """Recompute an alignment's score column by column (affine runs, free
    end columns contributing zero). Used to cross-check the DP."""
    total = 0.0
    prev = None  # 'A' or 'B' when the previous scored column held that gap
    end = alignment.width - alignment.free_suffix
    for k, (x, y) in enumerate(alignment.columns()):
        if k < alignment.free_prefix or k >= end:
            continue
        if x == GAP and y == GAP:
            raise ValueError("double-gap column")
        if x == GAP:
            total -= gap.extend if prev == "B" else gap.open
            prev = "B"
        elif y == GAP:
            total -= gap.extend if prev == "A" else gap.open
            prev = "A"
        else:
            total += subst.S[x, y]
            prev = None
    return total


def strip_gaps(row):
    return [x for x in row if x != GAP]


def write_substitution(subst, path):
    from .corpus import _atomic_write

    rows = []
    for r in subst.S:
        ints = [int(round(v)) for v in r]
        if any(abs(v - i) > 0 for v, i in zip(r, ints)):
            raise ValueError("substitution file format stores integers only")
        rows.append(" ".join(str(v) for v in ints))
    _atomic_write(path, "\n".join(["SUBST v1", str(subst.M)] + rows) + "\n")


def read_substitution(path):
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != "SUBST v1":
        raise FileFormatError(f"{path}: missing 'SUBST v1' header")
    try:
        m = int(lines[1])
        S = np.array([[int(v) for v in lines[2 + i].split()] for i in range(m)],
                     dtype=np.float64)
    except (IndexError, ValueError) as exc:
        raise FileFormatError(f"{path}: malformed substitution matrix") from exc
    return SubstitutionMatrix(S=S)
