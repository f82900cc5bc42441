"""Collapsed-Gibbs LDA over individual tweets.

A fit runs a single Gibbs chain: token assignments are initialized
uniformly at random (seeded), then every sweep resamples each token from
the collapsed conditional with that token's own assignment excluded.
Point estimates are read off the final state:

    theta_dk = (n_dk + alpha) / (len_d + K * alpha)
    phi_kw   = (n_kw + beta) / (n_k + V * beta)

Priors default to alpha = 50/K and beta = 0.01. Replays with the same
seed are byte-identical, so a fit can be reproduced exactly from its
config. Held-out documents are scored by folding them in against the
frozen topic-word counts.

State files are versioned JSON holding the config, vocabulary,
documents (as word ids), and assignments; counts are rebuilt on load and
checked against the conservation identities.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    DataError,
    EmptyCorpusError,
    EmptyDocumentError,
    EmptyHeldoutError,
    KTooSmallError,
)
from .features import Vocabulary, build_vocab

STATE_FORMAT = "politopics-lda-state"
STATE_VERSION = 1


@dataclass(frozen=True)
class LdaConfig:
    k: int
    seed: int = 0
    alpha: float = None  # defaults to 50 / k
    beta: float = 0.01
    iterations: int = 1000
    burn_in: int = 200

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.alpha is not None and self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if not self.iterations > self.burn_in >= 0:
            raise ValueError("need iterations > burn_in >= 0")

    @property
    def alpha_value(self):
        return self.alpha if self.alpha is not None else 50.0 / self.k


@dataclass(frozen=True)
class DocTopics:
    tweet_id: str
    theta: np.ndarray


@dataclass(frozen=True)
class TopicSummary:
    topic: int
    words: tuple  # ((token, weight), ...) with non-increasing weights

    @property
    def tokens(self):
        return tuple(token for token, _ in self.words)


class LdaState:
    """Sufficient statistics of one collapsed-Gibbs chain."""

    def __init__(self, doc_ids, docs, z, k, vocab: Vocabulary):
        self.doc_ids = tuple(doc_ids)
        self.docs = [np.asarray(d, dtype=np.int32) for d in docs]
        self.z = [np.asarray(a, dtype=np.int32) for a in z]
        self.k = k
        self.vocab = vocab
        v = len(vocab)
        self.n_dk = np.zeros((len(self.docs), k), dtype=np.int64)
        self.n_kw = np.zeros((k, v), dtype=np.int64)
        self.n_k = np.zeros(k, dtype=np.int64)
        for d, (words, topics) in enumerate(zip(self.docs, self.z)):
            if words.shape != topics.shape:
                raise DataError("doc %d: words/assignments length mismatch" % d)
            for w, t in zip(words, topics):
                self.n_dk[d, t] += 1
                self.n_kw[t, w] += 1
                self.n_k[t] += 1
        self.check_counts()

    @property
    def n_docs(self):
        return len(self.docs)

    @property
    def total_tokens(self):
        return int(sum(len(d) for d in self.docs))

    def check_counts(self):
        """The three conservation identities; raises DataError when broken."""
        for d, words in enumerate(self.docs):
            if self.n_dk[d].sum() != len(words):
                raise DataError("doc-topic counts broken for doc %d" % d)
        if not np.array_equal(self.n_kw.sum(axis=1), self.n_k):
            raise DataError("topic-word counts disagree with topic totals")
        if self.n_k.sum() != self.total_tokens:
            raise DataError("topic totals disagree with corpus token count")
        if (self.n_dk < 0).any() or (self.n_kw < 0).any() or (self.n_k < 0).any():
            raise DataError("negative count")
        for topics in self.z:
            if len(topics) and (topics.min() < 0 or topics.max() >= self.k):
                raise DataError("assignment outside [0, k)")

    def phi(self, config: LdaConfig):
        """Topic-word distributions (k x V)."""
        beta = config.beta
        v = self.n_kw.shape[1]
        return (self.n_kw + beta) / (self.n_k + v * beta)[:, None]


def _flatten(docs_as_ids):
    doc_of = []
    word_of = []
    for d, words in enumerate(docs_as_ids):
        doc_of.extend([d] * len(words))
        word_of.extend(words)
    return (
        np.asarray(doc_of, dtype=np.int64),
        np.asarray(word_of, dtype=np.int64),
    )


def prepare_documents(docs, vocab: Vocabulary):
    """Restrict token lists to the vocabulary for fitting.

    Returns (kept_ids, kept_word_id_lists, excluded_ids). Documents with
    no in-vocabulary token are excluded; downstream they get the
    sentinel uninterpretable assignment.
    """
    kept_ids = []
    kept = []
    excluded = []
    for doc in docs:
        ids = [vocab.index[t] for t in doc.tokens if t in vocab.index]
        if ids:
            kept_ids.append(doc.tweet_id)
            kept.append(ids)
        else:
            excluded.append(doc.tweet_id)
    return kept_ids, kept, excluded


def fit(config: LdaConfig, docs, vocab: Vocabulary = None) -> LdaState:
    """Run collapsed Gibbs for config.iterations sweeps.

    docs must all be non-empty; empty documents are the caller's problem
    (preprocess reports them). When a vocabulary is given, tokens outside
    it are invisible to the sampler and a document reduced to nothing
    raises EmptyDocumentError.
    """
    docs = list(docs)
    if not docs:
        raise EmptyCorpusError("no documents to fit")
    empty = [doc.tweet_id for doc in docs if not doc.tokens]
    if empty:
        raise EmptyDocumentError(
            "empty documents must be filtered upstream: %s" % ", ".join(empty[:5])
        )
    if vocab is None:
        vocab = build_vocab(docs, min_df=1)
    doc_ids, docs_as_ids, excluded = prepare_documents(docs, vocab)
    if excluded:
        raise EmptyDocumentError(
            "documents with no in-vocabulary token: %s" % ", ".join(excluded[:5])
        )

    doc_of, word_of = _flatten(docs_as_ids)

    from ._kernels import gibbs_fit

    z_flat, _, _, _ = gibbs_fit(
        doc_of,
        word_of,
        len(docs_as_ids),
        len(vocab),
        config.k,
        config.alpha_value,
        config.beta,
        config.iterations,
        config.seed,
    )

    z_per_doc = []
    pos = 0
    for words in docs_as_ids:
        z_per_doc.append(z_flat[pos : pos + len(words)])
        pos += len(words)
    return LdaState(doc_ids, docs_as_ids, z_per_doc, config.k, vocab)


def doc_topics(state: LdaState, config: LdaConfig, doc_index) -> DocTopics:
    if not 0 <= doc_index < state.n_docs:
        raise IndexError("doc index %d out of range" % doc_index)
    alpha = config.alpha_value
    length = len(state.docs[doc_index])
    theta = (state.n_dk[doc_index] + alpha) / (length + state.k * alpha)
    return DocTopics(tweet_id=state.doc_ids[doc_index], theta=theta)


def all_doc_topics(state: LdaState, config: LdaConfig):
    return [doc_topics(state, config, d) for d in range(state.n_docs)]


def top2_assign(doc: DocTopics):
    """Indices of the largest and second-largest theta components.

    Ties break toward the lower topic id.
    """
    theta = doc.theta
    if theta.shape[0] < 2:
        raise KTooSmallError("top-2 assignment needs k >= 2")
    order = np.argsort(-theta, kind="stable")
    return int(order[0]), int(order[1])


def top_words(state: LdaState, config: LdaConfig, topic, top_n) -> TopicSummary:
    """Tokens ranked by phi, descending, ties broken lexicographically."""
    if not 0 <= topic < state.k:
        raise IndexError("topic %d out of range" % topic)
    tokens = state.vocab.tokens
    phi_row = state.phi(config)[topic]
    order = sorted(range(len(tokens)), key=lambda w: (-phi_row[w], tokens[w]))
    chosen = order[: min(top_n, len(tokens))]
    return TopicSummary(
        topic=topic,
        words=tuple((tokens[w], float(phi_row[w])) for w in chosen),
    )


def heldout_perplexity(state: LdaState, config: LdaConfig, heldout_docs,
                       fold_in_sweeps=50, seed=None) -> float:
    """exp(- mean log p(w|d)) over held-out tokens.

    Each held-out document's mixture is estimated by fold-in Gibbs with
    the model's topic-word counts frozen; p(w|d) = sum_k theta_dk phi_kw.
    Out-of-vocabulary tokens are skipped.
    """
    heldout_docs = list(heldout_docs)
    if not heldout_docs:
        raise EmptyHeldoutError("no held-out documents")
    vocab = state.vocab
    docs_as_ids = []
    for doc in heldout_docs:
        ids = [vocab.index[t] for t in doc.tokens if t in vocab.index]
        if ids:
            docs_as_ids.append(ids)
    total = sum(len(d) for d in docs_as_ids)
    if total == 0:
        raise EmptyHeldoutError("held-out documents share no vocabulary with the model")

    flat = np.asarray([w for d in docs_as_ids for w in d], dtype=np.int64)
    offsets = np.zeros(len(docs_as_ids) + 1, dtype=np.int64)
    for i, d in enumerate(docs_as_ids):
        offsets[i + 1] = offsets[i] + len(d)

    phi = state.phi(config)
    if seed is None:
        seed = config.seed + 0x5EED

    from ._kernels import fold_in

    theta = fold_in(
        flat, offsets, phi, state.k, config.alpha_value, fold_in_sweeps, seed
    )

    log_lik = 0.0
    for i, d in enumerate(docs_as_ids):
        word_probs = theta[i] @ phi[:, d]
        log_lik += float(np.log(word_probs).sum())
    return math.exp(-log_lik / total)


@dataclass(frozen=True)
class SweepResult:
    k: int
    config: LdaConfig
    state: LdaState
    perplexity: float
    mean_npmi: float


DEFAULT_SWEEP_KS = tuple(range(5, 71, 5))


def sweep_k(docs, k_values, base_config: LdaConfig, heldout_fraction=0.1,
            reference=None, coherence_top_n=10, window=10,
            epsilon=1e-12, vocab=None) -> list:
    """One independent fit per K with selection diagnostics.

    Seeds derive from the base seed plus K. A seeded held-out slice of
    the documents provides perplexity; NPMI coherence is scored against
    `reference` (the training documents themselves when not given).
    The diagnostics inform a human choice of K; nothing is auto-selected.
    """
    from .evaluate import npmi_coherence

    k_values = list(k_values)
    if not k_values:
        raise ValueError("k_values must be non-empty")
    docs = list(docs)
    if len(docs) < 2:
        raise EmptyCorpusError("need at least two documents to hold one out")

    rng = random.Random(base_config.seed)
    n_heldout = max(1, int(len(docs) * heldout_fraction))
    heldout_idx = set(rng.sample(range(len(docs)), n_heldout))
    train_docs = [d for i, d in enumerate(docs) if i not in heldout_idx]
    heldout_docs = [d for i, d in enumerate(docs) if i in heldout_idx]
    if reference is None:
        reference = train_docs

    results = []
    for k in k_values:
        config = replace(base_config, k=k, seed=base_config.seed + k)
        state = fit(config, train_docs, vocab=vocab)
        perplexity = heldout_perplexity(state, config, heldout_docs)
        summaries = [
            top_words(state, config, t, coherence_top_n) for t in range(k)
        ]
        coherence = npmi_coherence(summaries, reference, window=window,
                                   epsilon=epsilon)
        results.append(
            SweepResult(
                k=k,
                config=config,
                state=state,
                perplexity=perplexity,
                mean_npmi=coherence.mean,
            )
        )
    return results


def save_state(state: LdaState, config: LdaConfig, path):
    payload = {
        "format": STATE_FORMAT,
        "version": STATE_VERSION,
        "config": {
            "k": config.k,
            "seed": config.seed,
            "alpha": config.alpha,
            "beta": config.beta,
            "iterations": config.iterations,
            "burn_in": config.burn_in,
        },
        "vocab": state.vocab.tokens,
        "doc_freq": [state.vocab.doc_freq[t] for t in state.vocab.tokens],
        "n_vocab_docs": state.vocab.n_docs,
        "doc_ids": list(state.doc_ids),
        "docs": [d.tolist() for d in state.docs],
        "z": [a.tolist() for a in state.z],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)


def load_state(path):
    """Read a state file back; returns (state, config)."""
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != STATE_FORMAT:
        raise DataError("not an LDA state file: %s" % path)
    if payload.get("version") != STATE_VERSION:
        raise DataError("unsupported state version %r" % payload.get("version"))
    cfg = payload["config"]
    config = LdaConfig(
        k=cfg["k"],
        seed=cfg["seed"],
        alpha=cfg["alpha"],
        beta=cfg["beta"],
        iterations=cfg["iterations"],
        burn_in=cfg["burn_in"],
    )
    tokens = payload["vocab"]
    vocab = Vocabulary(
        index={t: i for i, t in enumerate(tokens)},
        doc_freq=dict(zip(tokens, payload["doc_freq"])),
        n_docs=payload["n_vocab_docs"],
    )
    state = LdaState(
        doc_ids=payload["doc_ids"],
        docs=payload["docs"],
        z=payload["z"],
        k=config.k,
        vocab=vocab,
    )
    return state, config
