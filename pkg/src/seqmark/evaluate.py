"""Cross-validation, ROC/AUC computation, synthetic trace generation and
the end-to-end experiment driver."""

import os
import zlib
from dataclasses import dataclass, field

import numpy as np

from . import hmm as hmm_mod
from .align import GapPenalty, default_substitution
from .corpus import ObservationSequence, _atomic_write
from .errors import DegenerateDataError
from .msa import build_msa
from .phmm import build_phmm, phmm_forward_score


def derive_seed(*entropy):
    """Fixed-splitting sub-seed derivation; every consumer names its own
    stream, so module call order cannot perturb any other stream."""
    parts = [zlib.crc32(e.encode()) if isinstance(e, str) else int(e)
             for e in entropy]
    return int(np.random.SeedSequence(parts).generate_state(1)[0])


@dataclass
class FoldPlan:
    k: int
    assignments: np.ndarray
    seed: int


def kfold_split(n_items, k, seed):
    """Seeded shuffle followed by round-robin assignment; fold sizes can
    differ by at most one."""
    if k < 2:
        raise ValueError("need k >= 2 folds")
    if n_items < k:
        raise DegenerateDataError(f"{n_items} items cannot fill {k} folds")
    perm = np.random.default_rng(seed).permutation(n_items)
    assignments = np.empty(n_items, dtype=np.int64)
    for pos, item in enumerate(perm):
        assignments[item] = pos % k
    return FoldPlan(k=k, assignments=assignments, seed=seed)


def auc(positive_scores, negative_scores):
    """Probability that a random positive outscores a random negative,
    ties counted half (the Mann-Whitney statistic)."""
    pos = np.asarray(positive_scores, dtype=np.float64)
    neg = np.asarray(negative_scores, dtype=np.float64)
    if pos.size == 0 or neg.size == 0:
        raise ValueError("need at least one score on each side")
    both = np.concatenate([pos, neg])
    ranks = _fractional_ranks(both)
    u = ranks[:pos.size].sum() - pos.size * (pos.size + 1) / 2.0
    return float(u / (pos.size * neg.size))


def _fractional_ranks(values):
    order = np.argsort(values, kind="mergesort")
    sorted_vals = values[order]
    new_group = np.r_[True, sorted_vals[1:] != sorted_vals[:-1]]
    group = np.cumsum(new_group) - 1
    counts = np.bincount(group)
    ends = np.cumsum(counts).astype(np.float64)
    avg = ends - (counts - 1) / 2.0
    ranks = np.empty(values.shape[0])
    ranks[order] = avg[group]
    return ranks


@dataclass
class RocCurve:
    points: list   # (fpr, tpr) from threshold +inf down to -inf
    auc: float


def roc_curve(positive_scores, negative_scores):
    """Threshold sweep over the distinct scores (classify as positive when
    score >= threshold). The trapezoidal area equals auc()."""
    pos = np.asarray(positive_scores, dtype=np.float64)
    neg = np.asarray(negative_scores, dtype=np.float64)
    if pos.size == 0 or neg.size == 0:
        raise ValueError("need at least one score on each side")
    thresholds = np.concatenate(
        [[np.inf], np.unique(np.concatenate([pos, neg]))[::-1], [-np.inf]])
    points = [(0.0, 0.0)]
    for th in thresholds:
        fpr = float(np.count_nonzero(neg >= th)) / neg.size
        tpr = float(np.count_nonzero(pos >= th)) / pos.size
        if (fpr, tpr) != points[-1]:
            points.append((fpr, tpr))
    area = 0.0
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        area += (x1 - x0) * (y0 + y1) / 2.0
    return RocCurve(points=points, auc=area)


def generate_from_hmm(model, length, seed, name=""):
    """Sample one observation sequence from a model (state path from pi
    and A, emissions from B)."""
    if length < 1:
        raise ValueError("length must be >= 1")
    rng = np.random.default_rng(seed)
    ids = np.empty(length, dtype=np.int64)
    state = rng.choice(model.N, p=model.pi)
    for t in range(length):
        ids[t] = rng.choice(model.M, p=model.B[state])
        if t + 1 < length:
            state = rng.choice(model.N, p=model.A[state])
    return ObservationSequence(ids=ids, source_name=name or f"gen{seed}")


@dataclass
class ExperimentReport:
    family: str
    model_kind: str
    fold_aucs: list
    malware_rows: list = field(default_factory=list)  # (fold, name, score)
    benign_rows: list = field(default_factory=list)   # (fold, name, score)

    @property
    def mean_auc(self):
        return float(np.mean(self.fold_aucs))


def run_experiment(family, benign, model_kind, m_symbols, n_states=2,
                   iterations=800, k=5, group_size=10, seed=1,
                   subst=None, gap=None, alphabet=None):
    """k-fold protocol: train on k-1 folds of the family corpus, score the
    held-out fold plus the whole benign corpus, one AUC per fold.

    HMM folds train on the concatenated training sequences; PHMM folds
    build an MSA from group_size training sequences picked in seeded
    shuffle order and derive the profile from it. The benign corpus never
    enters training.
    """
    if model_kind not in ("hmm", "phmm"):
        raise ValueError(f"unknown model kind {model_kind!r}")
    n = len(family.sequences)
    plan = kfold_split(n, k, derive_seed(seed, "folds"))
    if model_kind == "phmm":
        if subst is None:
            other = alphabet.other_id if alphabet is not None else None
            subst = default_substitution(m_symbols, other_id=other)
        if gap is None:
            gap = GapPenalty()
        if alphabet is None:
            from .corpus import numeric_alphabet
            alphabet = numeric_alphabet(m_symbols)

    report = ExperimentReport(family=family.family_name, model_kind=model_kind,
                              fold_aucs=[])
    for fold in range(k):
        train_idx = [i for i in range(n) if plan.assignments[i] != fold]
        test_idx = [i for i in range(n) if plan.assignments[i] == fold]
        if model_kind == "hmm":
            model = hmm_mod.train_multi(
                [family.sequences[i] for i in train_idx], n_states, m_symbols,
                iterations, derive_seed(seed, "train", fold))
            scorer = lambda s: hmm_mod.score(model, s)
        else:
            if group_size > len(train_idx):
                raise DegenerateDataError(
                    f"group size {group_size} exceeds training fold size "
                    f"{len(train_idx)}")
            rng = np.random.default_rng(derive_seed(seed, "group", fold))
            chosen = [train_idx[i] for i in rng.permutation(len(train_idx))]
            chosen = chosen[:group_size]
            msa = build_msa([family.sequences[i] for i in chosen], subst, gap)
            pm = build_phmm(msa, alphabet)
            scorer = lambda s: phmm_forward_score(pm, s).per_symbol
        pos = []
        for i in test_idx:
            s = scorer(family.sequences[i])
            pos.append(s)
            report.malware_rows.append((fold, family.sequences[i].source_name, s))
        negs = []
        for b in benign.sequences:
            s = scorer(b)
            negs.append(s)
            report.benign_rows.append((fold, b.source_name, s))
        report.fold_aucs.append(auc(pos, negs))
    return report


def write_report_tsv(reports, path):
    lines = ["family\tmodel\tfold\tauc"]
    for rep in reports:
        for fold, a in enumerate(rep.fold_aucs):
            lines.append(f"{rep.family}\t{rep.model_kind}\t{fold}\t{a:.17g}")
        lines.append(f"{rep.family}\t{rep.model_kind}\tmean\t{rep.mean_auc:.17g}")
    _atomic_write(path, "\n".join(lines) + "\n")


def write_scores_tsv(report, out_dir):
    path = os.path.join(out_dir, f"scores_{report.family}_{report.model_kind}.tsv")
    lines = ["label\tname\tscore"]
    for fold, name, s in report.malware_rows:
        lines.append(f"malware\t{name}\t{s:.17g}")
    for fold, name, s in report.benign_rows:
        lines.append(f"benign\t{name}#fold{fold}\t{s:.17g}")
    _atomic_write(path, "\n".join(lines) + "\n")
    return path


def write_roc_csvs(report, out_dir):
    paths = []
    for fold in range(len(report.fold_aucs)):
        pos = [s for f, _, s in report.malware_rows if f == fold]
        neg = [s for f, _, s in report.benign_rows if f == fold]
        curve = roc_curve(pos, neg)
        path = os.path.join(
            out_dir, f"roc_{report.family}_{report.model_kind}_fold{fold}.csv")
        lines = ["fpr,tpr"] + [f"{x:.17g},{y:.17g}" for x, y in curve.points]
        _atomic_write(path, "\n".join(lines) + "\n")
        paths.append(path)
    return paths
