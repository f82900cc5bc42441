"""Feature extraction: unigram bags of words, embedding means, lexicon counts.

Three feature families feed the supervised classifiers:

- unigram counts over a document-frequency-pruned vocabulary (raw counts
  for Naive Bayes, sublinear 1 + log(count) for the linear models),
- the unweighted mean of per-token word vectors, either loaded from a
  text file or trained in-repo with skip-gram negative sampling,
- per-category token proportions against a lexicon of exact words and
  ``prefix*`` patterns.

File formats
------------
embeddings    UTF-8 text, one ``token v1 v2 ... vD`` per line
lexicon.csv   header ``category,pattern``; a trailing ``*`` marks a
              prefix pattern
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import (
    DimensionMismatchError,
    EmptyCorpusError,
    EmptyVocabularyError,
    SchemaError,
)


@dataclass(frozen=True)
class Vocabulary:
    index: dict
    doc_freq: dict
    n_docs: int

    def __len__(self):
        return len(self.index)

    def __contains__(self, token):
        return token in self.index

    @property
    def tokens(self):
        """Tokens in index order."""
        out = [None] * len(self.index)
        for token, i in self.index.items():
            out[i] = token
        return out


@dataclass(frozen=True)
class BowVector:
    entries: tuple  # ((index, count), ...) with strictly increasing indices

    @property
    def total(self):
        return sum(c for _, c in self.entries)


@dataclass(frozen=True)
class EmbeddingTable:
    dim: int
    vectors: dict

    def __post_init__(self):
        for token, vec in self.vectors.items():
            if vec.shape != (self.dim,):
                raise DimensionMismatchError(
                    "vector for %r has shape %s, expected (%d,)"
                    % (token, vec.shape, self.dim)
                )
            if not np.all(np.isfinite(vec)):
                raise DimensionMismatchError("non-finite vector for %r" % token)

    def __contains__(self, token):
        return token in self.vectors

    def __len__(self):
        return len(self.vectors)


@dataclass(frozen=True)
class LexiconCategory:
    exact: frozenset
    prefixes: tuple

    def matches(self, token):
        if token in self.exact:
            return True
        for prefix in self.prefixes:
            if token.startswith(prefix):
                return True
        return False


@dataclass(frozen=True)
class Lexicon:
    categories: dict

    @property
    def names(self):
        """Category names in the deterministic feature order."""
        return sorted(self.categories)

    def __len__(self):
        return len(self.categories)


def build_vocab(docs, min_df=1) -> Vocabulary:
    """Vocabulary of tokens appearing in at least min_df documents.

    Index order is descending document frequency with lexicographic
    tie-breaking, so indices are reproducible across runs and platforms.
    """
    if min_df < 1:
        raise ValueError("min_df must be >= 1")
    df = {}
    n_docs = 0
    for doc in docs:
        n_docs += 1
        for token in set(doc.tokens):
            df[token] = df.get(token, 0) + 1
    kept = [(token, n) for token, n in df.items() if n >= min_df]
    if not kept:
        raise EmptyVocabularyError(
            "no token appears in at least %d documents" % min_df
        )
    kept.sort(key=lambda item: (-item[1], item[0]))
    return Vocabulary(
        index={token: i for i, (token, _) in enumerate(kept)},
        doc_freq={token: n for token, n in kept},
        n_docs=n_docs,
    )


def vectorize_bow(vocab: Vocabulary, doc) -> BowVector:
    """Counts of in-vocabulary tokens; out-of-vocabulary tokens are ignored."""
    counts = {}
    for token in doc.tokens:
        i = vocab.index.get(token)
        if i is not None:
            counts[i] = counts.get(i, 0) + 1
    return BowVector(entries=tuple(sorted(counts.items())))


def bow_matrix(vocab: Vocabulary, docs, sublinear=False):
    """Stack documents into a CSR matrix of counts (or 1 + log counts)."""
    indptr = [0]
    indices = []
    data = []
    for doc in docs:
        vec = vectorize_bow(vocab, doc)
        for i, c in vec.entries:
            indices.append(i)
            data.append(1.0 + math.log(c) if sublinear else float(c))
        indptr.append(len(indices))
    return sp.csr_matrix(
        (np.asarray(data), np.asarray(indices, dtype=np.int64), np.asarray(indptr)),
        shape=(len(indptr) - 1, len(vocab)),
    )


def load_embeddings(path) -> EmbeddingTable:
    """Read a text embedding file, rejecting malformed lines by number."""
    vectors = {}
    dim = None
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) < 2:
                raise DimensionMismatchError(
                    "line %d: expected 'token v1 ... vD'" % line_no
                )
            token = parts[0]
            try:
                vec = np.array([float(p) for p in parts[1:]], dtype=np.float64)
            except ValueError as exc:
                raise DimensionMismatchError(
                    "line %d: non-numeric component" % line_no
                ) from exc
            if dim is None:
                dim = vec.shape[0]
            elif vec.shape[0] != dim:
                raise DimensionMismatchError(
                    "line %d: expected %d components, found %d"
                    % (line_no, dim, vec.shape[0])
                )
            vectors[token] = vec
    if dim is None:
        raise SchemaError("embeddings file %s is empty" % path)
    return EmbeddingTable(dim=dim, vectors=vectors)


def write_embeddings(table: EmbeddingTable, path):
    with open(path, "w", encoding="utf-8") as fh:
        for token in sorted(table.vectors):
            comps = " ".join(repr(float(v)) for v in table.vectors[token])
            fh.write("%s %s\n" % (token, comps))


def embed_document(table: EmbeddingTable, doc):
    """Mean of in-table token vectors.

    Returns (vector, degenerate) where degenerate is True and the vector
    is all zeros when no token of the document is in the table.
    """
    acc = np.zeros(table.dim, dtype=np.float64)
    n = 0
    for token in doc.tokens:
        vec = table.vectors.get(token)
        if vec is not None:
            acc += vec
            n += 1
    if n == 0:
        return acc, True
    return acc / n, False


def embedding_matrix(table: EmbeddingTable, docs):
    out = np.zeros((len(docs), table.dim), dtype=np.float64)
    for row, doc in enumerate(docs):
        out[row], _ = embed_document(table, doc)
    return out


def load_lexicon(path) -> Lexicon:
    categories = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        expected = {"category", "pattern"}
        if reader.fieldnames is None or not expected.issubset(reader.fieldnames):
            raise SchemaError("lexicon file must have header category,pattern")
        exact = {}
        prefixes = {}
        for row in reader:
            name = row["category"]
            pattern = row["pattern"]
            if not name or not pattern:
                raise SchemaError("lexicon rows need both category and pattern")
            if pattern != pattern.lower():
                raise SchemaError("lexicon pattern %r must be lowercase" % pattern)
            if pattern.endswith("*"):
                prefixes.setdefault(name, []).append(pattern[:-1])
            else:
                exact.setdefault(name, set()).add(pattern)
        for name in set(exact) | set(prefixes):
            categories[name] = LexiconCategory(
                exact=frozenset(exact.get(name, ())),
                prefixes=tuple(sorted(prefixes.get(name, ()))),
            )
    return Lexicon(categories=categories)


def lexicon_features(lexicon: Lexicon, doc):
    """Per-category proportion of matching tokens, in lexicon.names order."""
    out = np.zeros(len(lexicon.categories), dtype=np.float64)
    if not doc.tokens:
        return out
    for slot, name in enumerate(lexicon.names):
        category = lexicon.categories[name]
        hits = sum(1 for token in doc.tokens if category.matches(token))
        out[slot] = hits / len(doc.tokens)
    return out


def lexicon_matrix(lexicon: Lexicon, docs):
    out = np.zeros((len(docs), len(lexicon.categories)), dtype=np.float64)
    for row, doc in enumerate(docs):
        out[row] = lexicon_features(lexicon, doc)
    return out


def train_sgns(docs, dim=100, window=5, negatives=5, epochs=5, seed=0,
               learning_rate=0.025):
    """Train corpus-specific word vectors with skip-gram negative sampling.

    Negatives are drawn from the unigram distribution raised to 0.75.
    Single-threaded and deterministic for a given seed. Returns
    (EmbeddingTable, per-epoch mean losses).
    """
    if dim < 2:
        raise ValueError("dim must be >= 2")
    counts = {}
    for doc in docs:
        for token in doc.tokens:
            counts[token] = counts.get(token, 0) + 1
    if not counts:
        raise EmptyCorpusError("no tokens to train embeddings on")

    order = sorted(counts, key=lambda t: (-counts[t], t))
    index = {token: i for i, token in enumerate(order)}

    words = []
    offsets = [0]
    for doc in docs:
        if not doc.tokens:
            continue
        words.extend(index[t] for t in doc.tokens)
        offsets.append(len(words))
    words = np.asarray(words, dtype=np.int64)
    offsets = np.asarray(offsets, dtype=np.int64)

    weights = np.array([counts[t] for t in order], dtype=np.float64) ** 0.75
    neg_cdf = np.cumsum(weights / weights.sum())
    neg_cdf[-1] = 1.0

    from ._kernels import sgns_fit

    w_in, losses = sgns_fit(
        words, offsets, len(order), dim, window, negatives, epochs,
        learning_rate, neg_cdf, seed,
    )
    table = EmbeddingTable(
        dim=dim, vectors={token: w_in[i].copy() for token, i in index.items()}
    )
    return table, [float(x) for x in losses]
