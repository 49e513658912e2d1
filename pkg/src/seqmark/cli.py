"""Command-line front end.

Subcommands: alphabet, train, score, msa, experiment, roc. Exit codes:
0 success, 2 usage or input errors, 3 degenerate training data.
"""

import argparse
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import align as align_mod
from . import corpus as corpus_mod
from . import evaluate as eval_mod
from . import hmm as hmm_mod
from . import msa as msa_mod
from . import phmm as phmm_mod
from .errors import DegenerateDataError, EmptyTraceError, SeqmarkError

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_DEGENERATE = 3


@dataclass
class ExperimentConfig:
    family_dir: str
    benign_dir: str
    model: str
    states: int = 2
    iterations: int = 800
    folds: int = 5
    max_symbols: int = 36
    group_size: int = 10
    seed: int = 1
    gap_open: float = align_mod.DEFAULT_GAP_OPEN
    gap_extend: float = align_mod.DEFAULT_GAP_EXTEND
    subst_matrix: str = None

    def validate(self):
        for name in ("states", "iterations", "folds", "max_symbols",
                     "group_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"config value {name} must be positive")
        if self.model not in ("hmm", "phmm"):
            raise ValueError(f"config model must be hmm or phmm, not {self.model!r}")
        for name in ("family_dir", "benign_dir"):
            if not os.path.isdir(getattr(self, name)):
                raise ValueError(f"config {name} {getattr(self, name)!r} "
                                 "is not a directory")
        return self


_CONFIG_TYPES = {
    "family_dir": str, "benign_dir": str, "model": str, "states": int,
    "iterations": int, "folds": int, "max_symbols": int, "group_size": int,
    "seed": int, "gap_open": float, "gap_extend": float, "subst_matrix": str,
}


def parse_config(path):
    """Line-oriented 'key value' config; '#' starts a comment."""
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(None, 1)
            if len(parts) != 2:
                raise SeqmarkError(f"{path}:{lineno}: expected 'key value'")
            key, value = parts
            if key not in _CONFIG_TYPES:
                raise SeqmarkError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                values[key] = _CONFIG_TYPES[key](value)
            except ValueError:
                raise SeqmarkError(f"{path}:{lineno}: bad value for {key!r}")
    for required in ("family_dir", "benign_dir", "model"):
        if required not in values:
            raise SeqmarkError(f"{path}: missing required key {required!r}")
    try:
        return ExperimentConfig(**values).validate()
    except ValueError as exc:
        raise SeqmarkError(f"{path}: {exc}")


def _scoring_args(args):
    gap = align_mod.GapPenalty(open=args.gap_open, extend=args.gap_extend)
    subst = align_mod.read_substitution(args.subst) if args.subst else None
    return subst, gap


def cmd_alphabet(args):
    all_traces = []
    for d in args.in_dirs:
        all_traces.extend(corpus_mod.load_trace_dir(d))
    alphabet = corpus_mod.build_alphabet(
        [toks for _, toks in all_traces], args.max_symbols)
    corpus_mod.write_alphabet(alphabet, args.out)
    print(f"alphabet written to {args.out}: M={alphabet.M} "
          f"other={'none' if alphabet.other_id is None else alphabet.other_id}")
    return EXIT_OK


def _load_encoded(traces_dir, alphabet, family=None):
    named = corpus_mod.load_trace_dir(traces_dir)
    return corpus_mod.encode_corpus(alphabet, named,
                                    family or os.path.basename(
                                        os.path.normpath(traces_dir)))


def cmd_train(args):
    alphabet = corpus_mod.read_alphabet(args.alphabet)
    corp = _load_encoded(args.traces, alphabet)
    if args.model == "hmm":
        report = hmm_mod.train_multi_report(
            corp.sequences, args.states, alphabet.M, args.iterations, args.seed)
        hmm_mod.write_hmm(report.final_model, args.out)
        print(f"final log-likelihood {report.log_likelihood_trace[-1]:.17g}")
    else:
        seqs = corp.sequences
        if args.group_size is not None:
            if args.group_size > len(seqs):
                raise EmptyTraceError(
                    f"group size {args.group_size} exceeds corpus size {len(seqs)}")
            seqs = seqs[:args.group_size]
        subst, gap = _scoring_args(args)
        if subst is None:
            subst = align_mod.default_substitution(
                alphabet.M, other_id=alphabet.other_id)
        msa = msa_mod.build_msa(seqs, subst, gap)
        model = phmm_mod.build_phmm(msa, alphabet)
        phmm_mod.write_phmm(model, args.out)
        print(f"MSA width {msa.width} N {model.N}")
    return EXIT_OK


def _detect_model(path):
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
    if header == "HMM v1":
        return "hmm"
    if header == "PHMM v1":
        return "phmm"
    raise SeqmarkError(f"{path}: unrecognized model header {header!r}")


def cmd_score(args):
    kind = _detect_model(args.model)
    if kind == "hmm":
        if not args.alphabet:
            raise SeqmarkError("scoring an HMM model requires --alphabet")
        model = hmm_mod.read_hmm(args.model)
        alphabet = corpus_mod.read_alphabet(args.alphabet)
        corpus_mod.check_same_alphabet(alphabet, model.M)
        scorer = lambda s: hmm_mod.score(model, s)
    else:
        model = phmm_mod.read_phmm(args.model)
        alphabet = model.alphabet
        if args.alphabet:
            on_disk = corpus_mod.read_alphabet(args.alphabet)
            corpus_mod.check_same_alphabet(on_disk, model.alphabet_m)
        scorer = lambda s: phmm_mod.phmm_forward_score(model, s).per_symbol
    corp = _load_encoded(args.traces, alphabet)
    lines = ["name\tscore"]
    for seq in corp.sequences:
        lines.append(f"{seq.source_name}\t{scorer(seq):.17g}")
    corpus_mod._atomic_write(args.out, "\n".join(lines) + "\n")
    print(f"scored {len(corp.sequences)} traces -> {args.out}")
    return EXIT_OK


def cmd_msa(args):
    alphabet = corpus_mod.read_alphabet(args.alphabet)
    corp = _load_encoded(args.traces, alphabet)
    seqs = corp.sequences
    if args.group_size is not None:
        if args.group_size > len(seqs):
            raise EmptyTraceError(
                f"group size {args.group_size} exceeds corpus size {len(seqs)}")
        seqs = seqs[:args.group_size]
    subst, gap = _scoring_args(args)
    if subst is None:
        subst = align_mod.default_substitution(alphabet.M,
                                               other_id=alphabet.other_id)
    msa = msa_mod.build_msa(seqs, subst, gap)
    msa_mod.write_msa(msa, alphabet, args.out)
    print(f"MSA n {msa.n} width {msa.width} -> {args.out}")
    return EXIT_OK


def cmd_experiment(args):
    cfg = parse_config(args.config)
    family_named = corpus_mod.load_trace_dir(cfg.family_dir)
    benign_named = corpus_mod.load_trace_dir(cfg.benign_dir)
    alphabet = corpus_mod.build_alphabet(
        [toks for _, toks in family_named] + [toks for _, toks in benign_named],
        cfg.max_symbols)
    family = corpus_mod.encode_corpus(
        alphabet, family_named,
        os.path.basename(os.path.normpath(cfg.family_dir)))
    benign = corpus_mod.encode_corpus(alphabet, benign_named, "benign")
    subst = (align_mod.read_substitution(cfg.subst_matrix)
             if cfg.subst_matrix else None)
    gap = align_mod.GapPenalty(open=cfg.gap_open, extend=cfg.gap_extend)
    report = eval_mod.run_experiment(
        family, benign, cfg.model, alphabet.M, n_states=cfg.states,
        iterations=cfg.iterations, k=cfg.folds, group_size=cfg.group_size,
        seed=cfg.seed, subst=subst, gap=gap, alphabet=alphabet)
    os.makedirs(args.out_dir, exist_ok=True)
    eval_mod.write_report_tsv(
        [report], os.path.join(args.out_dir,
                               f"report_{report.family}_{report.model_kind}.tsv"))
    eval_mod.write_scores_tsv(report, args.out_dir)
    eval_mod.write_roc_csvs(report, args.out_dir)
    print(f"family {report.family} model {report.model_kind} "
          f"mean AUC {report.mean_auc:.6f}")
    return EXIT_OK


def cmd_roc(args):
    pos, neg = [], []
    with open(args.scores, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split("\t")
        if header[:1] != ["label"]:
            raise SeqmarkError(f"{args.scores}: expected label/name/score TSV")
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 3 or parts[0] not in ("malware", "benign"):
                raise SeqmarkError(f"{args.scores}:{lineno}: bad score row")
            (pos if parts[0] == "malware" else neg).append(float(parts[2]))
    curve = eval_mod.roc_curve(pos, neg)
    lines = ["fpr,tpr"] + [f"{x:.17g},{y:.17g}" for x, y in curve.points]
    corpus_mod._atomic_write(args.out, "\n".join(lines) + "\n")
    print(f"AUC {curve.auc:.17g}")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="seqmark",
                                description="HMM/PHMM birthmark models "
                                            "over symbol traces")
    sub = p.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("alphabet", help="build an alphabet from trace dirs")
    pa.add_argument("in_dirs", nargs="+")
    pa.add_argument("--max-symbols", type=int, default=36)
    pa.add_argument("--out", required=True)
    pa.set_defaults(func=cmd_alphabet)

    def add_scoring_flags(sp):
        sp.add_argument("--gap-open", type=float,
                        default=align_mod.DEFAULT_GAP_OPEN)
        sp.add_argument("--gap-extend", type=float,
                        default=align_mod.DEFAULT_GAP_EXTEND)
        sp.add_argument("--subst", default=None,
                        help="substitution matrix file (SUBST v1)")

    pt = sub.add_parser("train", help="train an HMM or PHMM on a trace dir")
    pt.add_argument("--model", choices=("hmm", "phmm"), required=True)
    pt.add_argument("--traces", required=True)
    pt.add_argument("--alphabet", required=True)
    pt.add_argument("--out", required=True)
    pt.add_argument("--states", type=int, default=2)
    pt.add_argument("--iterations", type=int, default=800)
    pt.add_argument("--seed", type=int, default=1)
    pt.add_argument("--group-size", type=int, default=None,
                    help="PHMM: number of training sequences (default all)")
    add_scoring_flags(pt)
    pt.set_defaults(func=cmd_train)

    ps = sub.add_parser("score", help="score traces against a model file")
    ps.add_argument("--model", required=True)
    ps.add_argument("--traces", required=True)
    ps.add_argument("--alphabet", default=None)
    ps.add_argument("--out", required=True)
    ps.set_defaults(func=cmd_score)

    pm = sub.add_parser("msa", help="dump the multiple sequence alignment")
    pm.add_argument("--traces", required=True)
    pm.add_argument("--alphabet", required=True)
    pm.add_argument("--out", required=True)
    pm.add_argument("--group-size", type=int, default=None)
    add_scoring_flags(pm)
    pm.set_defaults(func=cmd_msa)

    pe = sub.add_parser("experiment", help="run a cross-validated experiment")
    pe.add_argument("--config", required=True)
    pe.add_argument("--out-dir", default=".")
    pe.set_defaults(func=cmd_experiment)

    pr = sub.add_parser("roc", help="ROC curve and AUC from a scores TSV")
    pr.add_argument("--scores", required=True)
    pr.add_argument("--out", required=True)
    pr.set_defaults(func=cmd_roc)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DegenerateDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (SeqmarkError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
