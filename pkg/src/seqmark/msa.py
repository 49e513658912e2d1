"""Multiple sequence alignment via spanning-tree-guided progressive merging.

All-pairs semi-local alignment scores feed a maximum spanning tree
(Prim's algorithm on similarity scores); traversing it from the best pair
gives the merge order, and each merge aligns the incoming sequence
globally against the row of the sequence it shares with the MSA. Gaps,
once inserted, are never removed.
"""

from dataclasses import dataclass, field

import numpy as np

from .align import (GAP, DEFAULT_GUIDE_GAP_SCORE, GapPenalty, align_encoded,
                    default_substitution, global_align, semi_local_align,
                    strip_gaps)
from .errors import FileFormatError


@dataclass
class PairScoreTable:
    """Symmetric table of pairwise semi-local alignment scores."""

    n: int
    scores: np.ndarray

    def score(self, i, j):
        if i == j:
            raise ValueError("diagonal is undefined")
        return float(self.scores[i, j])


@dataclass
class SpanningEdgeSet:
    """n-1 edges (i, j, score) with i < j, covering all sequences."""

    n: int
    edges: list

    @property
    def total_score(self):
        return sum(e[2] for e in self.edges)

    def edge_pairs(self):
        return {(i, j) for i, j, _ in self.edges}


@dataclass
class Msa:
    """Rectangular alignment; rows hold symbol ids with GAP = -1.

    merge_gap_masks flags gaps that were introduced while merging a row
    into the MSA (displayed as '+') as opposed to gaps already present in
    the underlying pairwise alignment ('-'). The distinction is purely
    presentational.
    """

    rows: list
    row_order: list
    merge_gap_masks: list = field(default_factory=list)

    @property
    def n(self):
        return len(self.rows)

    @property
    def width(self):
        return len(self.rows[0]) if self.rows else 0

    def row_for(self, seq_index):
        return self.rows[self.row_order.index(seq_index)]

    def validate(self):
        w = self.width
        if any(len(r) != w for r in self.rows):
            raise ValueError("ragged MSA rows")
        for k in range(w):
            if all(r[k] == GAP for r in self.rows):
                raise ValueError(f"column {k} is all gaps")
        return self


def pair_score_table(sequences, subst=None, gap=None):
    """All n-choose-2 semi-local alignment scores, mirrored."""
    n = len(sequences)
    if n < 2:
        raise ValueError("need at least two sequences")
    scores = np.full((n, n), np.nan)
    for i in range(n):
        for j in range(i + 1, n):
            s = semi_local_align(sequences[i], sequences[j], subst, gap).score
            scores[i, j] = scores[j, i] = s
    return PairScoreTable(n=n, scores=scores)


def select_spanning_edges(table):
    """Prim's algorithm maximizing total similarity score.

    Growth starts at the globally best pair; score ties are broken toward
    the lower new-sequence index.
    """
    n = table.n
    s = table.scores
    best = None
    for i in range(n):
        for j in range(i + 1, n):
            if best is None or s[i, j] > s[best] or (
                    s[i, j] == s[best] and (i, j) < best):
                best = (i, j)
    visited = {best[0]}
    edges = []
    while len(visited) < n:
        pick = None
        for u in sorted(visited):
            for v in range(n):
                if v in visited:
                    continue
                if pick is None or s[u, v] > pick[2] or (
                        s[u, v] == pick[2] and v < pick[1]):
                    pick = (u, v, float(s[u, v]))
        visited.add(pick[1])
        i, j = sorted(pick[:2])
        edges.append((i, j, pick[2]))
    return SpanningEdgeSet(n=n, edges=edges)


def merge_order(edge_set):
    """Sequence of (already-merged, incoming) pairs covering the tree.

    The highest-scoring edge goes first; afterwards the highest-scoring
    edge touching the merged set is taken (ties toward the lower incoming
    index). The first pair is oriented so that its anchor is the endpoint
    with the stronger remaining tree edge.
    """
    edges = list(edge_set.edges)
    root = max(edges, key=lambda e: (e[2], (-e[0], -e[1])))
    remaining = [e for e in edges if e is not root]

    def best_other(node):
        comp = [e[2] for e in remaining if node in (e[0], e[1])]
        return max(comp) if comp else float("-inf")

    a, b = root[0], root[1]
    anchor = a if (best_other(a), -a) >= (best_other(b), -b) else b
    first = (anchor, b if anchor == a else a)
    order = [first]
    merged = {root[0], root[1]}
    while remaining:
        frontier = []
        for e in remaining:
            i, j, sc = e
            if (i in merged) != (j in merged):
                old, new = (i, j) if i in merged else (j, i)
                frontier.append((sc, -new, old, new, e))
        sc, _, old, new, e = max(frontier)
        order.append((old, new))
        merged.add(new)
        remaining.remove(e)
    return order


def progressive_msa(sequences, order, subst=None, gap=None,
                    guide_gap_score=DEFAULT_GUIDE_GAP_SCORE):
    """Merge sequences into an MSA following a merge order.

    Each step aligns the incoming sequence globally against the MSA row of
    the sequence it shares with the tree edge; guide gap cells score
    guide_gap_score against any symbol, and newly required gap columns are
    inserted across every existing row.
    """
    seqs = [np.ascontiguousarray(getattr(s, "ids", s), dtype=np.int64)
            for s in sequences]
    if subst is None:
        subst = default_substitution(int(max(s.max() for s in seqs)) + 1)
    if gap is None:
        gap = GapPenalty()
    u0, v0 = order[0]
    root = global_align(seqs[u0], seqs[v0], subst, gap)
    rows = {u0: list(root.row_a), v0: list(root.row_b)}
    masks = {u0: [False] * root.width, v0: [False] * root.width}
    row_order = [u0, v0]
    m = subst.M
    guide_scores = np.vstack([subst.S, np.full((1, m), guide_gap_score)])

    for u, v in order[1:]:
        if u not in rows or v in rows:
            raise ValueError(f"merge pair ({u}, {v}) does not extend the MSA")
        guide = np.array([m if x == GAP else x for x in rows[u]], dtype=np.int64)
        aln = align_encoded(guide, seqs[v], guide_scores, gap, semi_local=False)
        plan = []          # True = take next existing column, False = insert
        new_row, new_mask = [], []
        for ga, vb in zip(aln.row_a, aln.row_b):
            if ga == GAP:
                plan.append(False)
                new_row.append(vb)
                new_mask.append(False)
            else:
                plan.append(True)
                new_row.append(vb if vb != GAP else GAP)
                new_mask.append(vb == GAP)
        for k in rows:
            rows[k], masks[k] = _apply_plan(plan, rows[k], masks[k])
        rows[v], masks[v] = new_row, new_mask
        row_order.append(v)

    return Msa(rows=[np.array(rows[k], dtype=np.int64) for k in row_order],
               row_order=row_order,
               merge_gap_masks=[np.array(masks[k], dtype=bool)
                                for k in row_order]).validate()


def _apply_plan(plan, row, mask):
    out_row, out_mask = [], []
    ptr = 0
    for take in plan:
        if take:
            out_row.append(row[ptr])
            out_mask.append(mask[ptr])
            ptr += 1
        else:
            out_row.append(GAP)
            out_mask.append(True)
    return out_row, out_mask


def build_msa(sequences, subst=None, gap=None):
    """Full pipeline: score table -> spanning edges -> merge order -> MSA.

    A single sequence yields the trivial one-row alignment.
    """
    if len(sequences) == 0:
        raise ValueError("cannot build an MSA from zero sequences")
    if len(sequences) == 1:
        ids = np.ascontiguousarray(
            getattr(sequences[0], "ids", sequences[0]), dtype=np.int64)
        return Msa(rows=[ids.copy()], row_order=[0],
                   merge_gap_masks=[np.zeros(ids.shape[0], dtype=bool)])
    table = pair_score_table(sequences, subst, gap)
    order = merge_order(select_spanning_edges(table))
    return progressive_msa(sequences, order, subst, gap)


def msa_source_sequence(msa, k):
    """Row k with gaps stripped (the original sequence it came from)."""
    return strip_gaps(list(msa.rows[k]))


def write_msa(msa, alphabet, path):
    from .corpus import _atomic_write

    by_index = sorted(range(msa.n), key=lambda k: msa.row_order[k])
    lines = ["MSA v1", f"n {msa.n} width {msa.width}"]
    for k in by_index:
        lines.append(" ".join(
            "-" if x == GAP else alphabet.token_of(int(x)) for x in msa.rows[k]))
    _atomic_write(path, "\n".join(lines) + "\n")


def read_msa(path, alphabet):
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != "MSA v1":
        raise FileFormatError(f"{path}: missing 'MSA v1' header")
    try:
        parts = lines[1].split()
        n, width = int(parts[1]), int(parts[3])
    except (IndexError, ValueError) as exc:
        raise FileFormatError(f"{path}: bad size line") from exc
    rows = []
    for ln in lines[2:2 + n]:
        toks = ln.split()
        if len(toks) != width:
            raise FileFormatError(f"{path}: row width mismatch")
        rows.append(np.array(
            [GAP if t == "-" else alphabet.id_of(t) for t in toks],
            dtype=np.int64))
    return Msa(rows=rows, row_order=list(range(n)),
               merge_gap_masks=[np.zeros(width, dtype=bool) for _ in rows])


def render_msa(msa, alphabet, show_merge_gaps=False):
    """Text rows for debugging; '+' marks merge-time gaps when requested."""
    out = []
    for row, mask in zip(msa.rows, msa.merge_gap_masks):
        cells = []
        for x, plus in zip(row, mask):
            if x == GAP:
                cells.append("+" if (show_merge_gaps and plus) else "-")
            else:
                cells.append(alphabet.token_of(int(x)))
        out.append(" ".join(cells))
    return out
