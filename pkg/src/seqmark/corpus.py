"""Trace ingestion, alphabet construction and sequence encoding.

Traces are whitespace-separated token files, one trace per file, with
'#'-prefixed comment lines. An alphabet maps the most frequent tokens to
dense symbol ids; everything rarer is funneled into a reserved OTHER
bucket so that model matrices stay small.
"""

import os
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import (AlphabetMismatchError, EmptyTraceError, FileFormatError,
                     UnknownTokenError)

# Unprintable prefix keeps the sentinel from colliding with real
# opcode/API-call names.
OTHER_TOKEN = "\x00OTHER"


@dataclass(frozen=True)
class Alphabet:
    """Bidirectional token <-> symbol-id map, ids 0..M-1."""

    symbols: tuple
    other_id: int | None = None
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.symbols) < 1:
            raise ValueError("alphabet needs at least one symbol")
        index = {tok: i for i, tok in enumerate(self.symbols)}
        if len(index) != len(self.symbols):
            raise ValueError("duplicate tokens in alphabet")
        if self.other_id is not None and not 0 <= self.other_id < len(self.symbols):
            raise ValueError("other_id out of range")
        object.__setattr__(self, "_index", index)

    @property
    def M(self):
        return len(self.symbols)

    def id_of(self, token):
        i = self._index.get(token)
        if i is None:
            if self.other_id is None:
                raise UnknownTokenError(
                    f"token {token!r} not in alphabet and no OTHER bucket present")
            return self.other_id
        return i

    def token_of(self, symbol_id):
        return self.symbols[symbol_id]


@dataclass(frozen=True)
class ObservationSequence:
    """Encoded symbol-id sequence plus provenance."""

    ids: np.ndarray
    source_name: str = ""

    def __post_init__(self):
        ids = np.ascontiguousarray(self.ids, dtype=np.int64)
        if ids.ndim != 1 or ids.shape[0] < 1:
            raise ValueError("observation sequence must be a nonempty 1-d id array")
        object.__setattr__(self, "ids", ids)

    @property
    def T(self):
        return int(self.ids.shape[0])


@dataclass
class TraceCorpus:
    """A named family of observation sequences."""

    family_name: str
    sequences: list

    def __post_init__(self):
        names = [s.source_name for s in self.sequences]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate sequence names in corpus {self.family_name!r}")

    def __len__(self):
        return len(self.sequences)


def parse_trace_file(source, name=None):
    """Read one trace: whitespace-separated tokens, '#' lines are comments.

    `source` is a path or an open text stream. Raises EmptyTraceError when
    no tokens remain after comment stripping.
    """
    if hasattr(source, "read"):
        text = source.read()
        label = name or getattr(source, "name", "<stream>")
    else:
        label = name or str(source)
        with open(source, "r", encoding="utf-8") as fh:
            text = fh.read()
    tokens = []
    for line in text.splitlines():
        if line.lstrip().startswith("#"):
            continue
        tokens.extend(line.split())
    if not tokens:
        raise EmptyTraceError(f"no tokens in trace {label}")
    return tokens


def load_trace_dir(path, family_name=None):
    """Read every regular file in a directory as one raw trace each.

    Returns a list of (name, tokens) sorted by file name.
    """
    entries = sorted(
        e for e in os.listdir(path) if os.path.isfile(os.path.join(path, e))
    )
    if not entries:
        raise EmptyTraceError(f"no traces found in {path}")
    return [(e, parse_trace_file(os.path.join(path, e))) for e in entries]


def build_alphabet(token_sequences, max_symbols):
    """Frequency-ranked alphabet over raw token sequences.

    The max_symbols most frequent tokens (ties broken lexicographically)
    become symbols in rank order; if any token falls outside that set an
    OTHER symbol is appended to absorb them.
    """
    if max_symbols < 1:
        raise ValueError("max_symbols must be >= 1")
    counts = Counter()
    for toks in token_sequences:
        counts.update(toks)
    if not counts:
        raise EmptyTraceError("cannot build an alphabet from an empty corpus")
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    kept = [tok for tok, _ in ranked[:max_symbols]]
    if len(ranked) > max_symbols:
        return Alphabet(symbols=tuple(kept) + (OTHER_TOKEN,), other_id=len(kept))
    return Alphabet(symbols=tuple(kept), other_id=None)


def encode_sequence(alphabet, tokens, name=""):
    """Map raw tokens to symbol ids; unknown tokens go to OTHER if present."""
    if not tokens:
        raise EmptyTraceError(f"cannot encode an empty token list ({name!r})")
    ids = np.fromiter((alphabet.id_of(t) for t in tokens), dtype=np.int64,
                      count=len(tokens))
    return ObservationSequence(ids=ids, source_name=name)


def decode_sequence(alphabet, seq):
    """Inverse of encode_sequence up to OTHER substitution."""
    return [alphabet.token_of(int(i)) for i in seq.ids]


def numeric_alphabet(m):
    """Placeholder alphabet s0..s{m-1} for corpora born as id arrays."""
    return Alphabet(symbols=tuple(f"s{i}" for i in range(m)), other_id=None)


def encode_corpus(alphabet, named_token_sequences, family_name):
    seqs = [encode_sequence(alphabet, toks, name=nm)
            for nm, toks in named_token_sequences]
    return TraceCorpus(family_name=family_name, sequences=seqs)


def coverage_fraction(alphabet, token_sequences):
    """Fraction of all tokens that map to a non-OTHER symbol."""
    total = 0
    covered = 0
    direct = set(alphabet.symbols)
    if alphabet.other_id is not None:
        direct.discard(OTHER_TOKEN)
    for toks in token_sequences:
        total += len(toks)
        covered += sum(1 for t in toks if t in direct)
    if total == 0:
        raise EmptyTraceError("no tokens to measure coverage over")
    return covered / total


def write_alphabet(alphabet, path):
    other = "none" if alphabet.other_id is None else str(alphabet.other_id)
    lines = ["ALPHABET v1", f"M {alphabet.M} OTHER {other}"]
    lines.extend(alphabet.symbols)
    _atomic_write(path, "\n".join(lines) + "\n")


def read_alphabet(path):
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    if not lines or lines[0] != "ALPHABET v1":
        raise FileFormatError(f"{path}: missing 'ALPHABET v1' header")
    try:
        parts = lines[1].split()
        m = int(parts[1])
        other = None if parts[3] == "none" else int(parts[3])
    except (IndexError, ValueError) as exc:
        raise FileFormatError(f"{path}: bad size line {lines[1]!r}") from exc
    symbols = tuple(lines[2:2 + m])
    if len(symbols) != m:
        raise FileFormatError(f"{path}: expected {m} symbol lines")
    return Alphabet(symbols=symbols, other_id=other)


def check_same_alphabet(alphabet, model_m, what="model"):
    if alphabet.M != model_m:
        raise AlphabetMismatchError(
            f"alphabet has {alphabet.M} symbols but {what} expects {model_m}")


def _atomic_write(path, text):
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)
