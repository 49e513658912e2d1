"""HMM and profile-HMM models over symbol traces (software birthmarks),
with alignment, cross-validation and ROC/AUC tooling."""

from . import backend
from .align import (GAP, GapPenalty, PairwiseAlignment, SubstitutionMatrix,
                    default_substitution, global_align, semi_local_align)
from .corpus import (Alphabet, ObservationSequence, TraceCorpus,
                     build_alphabet, encode_sequence, parse_trace_file)
from .evaluate import (ExperimentReport, FoldPlan, RocCurve, auc,
                       generate_from_hmm, kfold_split, roc_curve,
                       run_experiment)
from .hmm import (ForwardResult, HmmModel, PosteriorSet, TrainReport,
                  backward, baum_welch, forward, init_random,
                  likelihood_bruteforce, posterior_decode, posteriors, score,
                  train_multi)
from .msa import (Msa, PairScoreTable, SpanningEdgeSet, build_msa,
                  merge_order, pair_score_table, progressive_msa,
                  select_spanning_edges)
from .phmm import (ColumnClassification, PhmmModel, PhmmScore, build_phmm,
                   classify_columns, estimate_emissions, estimate_transitions,
                   phmm_bruteforce_score, phmm_forward_score)

__version__ = "0.1.0"
