"""The four supervised classifiers and their evaluation.

All models share one surface: ``train`` fits from a feature matrix and a
label list, ``predict``/``predict_many`` return the winning code plus a
per-class score vector (probabilities for the probabilistic models,
margins for the SVM), and ``evaluate`` scores a test set. Argmax ties
break toward the lowest code, so predictions are deterministic.

The dummy baseline guesses stratified by the empirical class
distribution; its draw stream is part of the model state, so a saved and
reloaded model continues exactly where the original left off.

Model files are versioned JSON and round-trip exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .corpus import stratified_indices
from .errors import (
    ConfigError,
    DataError,
    DimensionMismatchError,
    EmptyClassError,
)
from .features import bow_matrix, embedding_matrix, lexicon_matrix

ALGORITHMS = ("dummy", "naive_bayes", "logistic_regression", "linear_svm")
FEATURE_SETS = ("unigram", "unigram_embedding", "unigram_lexicon", "embedding")
EMBEDDING_SOURCES = ("corpus", "pretrained")

MODEL_FORMAT = "politopics-classifier"
MODEL_VERSION = 1


@dataclass(frozen=True)
class SgdParams:
    learning_rate: float = 0.1
    epochs: int = 20
    l2_penalty: float = 1e-4
    batch_size: int = 64

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.l2_penalty < 0:
            raise ValueError("l2_penalty must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass(frozen=True)
class TrainConfig:
    algorithm: str = "logistic_regression"
    feature_set: str = "unigram"
    embedding_source: str = "corpus"
    test_fraction: float = 0.1
    seed: int = 0
    sgd: SgdParams = field(default_factory=SgdParams)

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError("unknown algorithm %r" % self.algorithm)
        if self.feature_set not in FEATURE_SETS:
            raise ValueError("unknown feature_set %r" % self.feature_set)
        if self.embedding_source not in EMBEDDING_SOURCES:
            raise ValueError("unknown embedding_source %r" % self.embedding_source)
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError("test_fraction must be in (0, 1)")


def _as_2d(x):
    if sp.issparse(x):
        return x
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    return arr


def _check_width(x, expected, what):
    if x.shape[1] != expected:
        raise DimensionMismatchError(
            "%s expects %d features, got %d" % (what, expected, x.shape[1])
        )


class DummyModel:
    """Stratified random guesser over the training class distribution."""

    algorithm = "dummy"

    def __init__(self, classes, priors, seed, draws=0):
        self.classes = tuple(classes)
        self.priors = np.asarray(priors, dtype=np.float64)
        self.seed = seed
        self.draws = draws

    def predict_scores(self, x):
        x = _as_2d(x)
        return np.tile(self.priors, (x.shape[0], 1))

    def draw(self, n):
        # replay the whole stream so a reloaded model resumes exactly
        rng = np.random.default_rng(self.seed)
        seq = rng.choice(len(self.classes), size=self.draws + n, p=self.priors)
        self.draws += n
        return seq[-n:] if n else seq[:0]

    def to_dict(self):
        return {
            "classes": list(self.classes),
            "priors": self.priors.tolist(),
            "seed": self.seed,
            "draws": self.draws,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["classes"], d["priors"], d["seed"], d["draws"])


class NaiveBayesModel:
    """Multinomial Naive Bayes with additive smoothing."""

    algorithm = "naive_bayes"

    def __init__(self, classes, log_prior, log_lik, smoothing):
        self.classes = tuple(classes)
        self.log_prior = np.asarray(log_prior, dtype=np.float64)
        self.log_lik = np.asarray(log_lik, dtype=np.float64)
        self.smoothing = smoothing

    def predict_scores(self, x):
        x = _as_2d(x)
        _check_width(x, self.log_lik.shape[1], "naive_bayes")
        joint = np.asarray(x @ self.log_lik.T) + self.log_prior
        # normalize to posteriors in log space
        joint -= joint.max(axis=1, keepdims=True)
        post = np.exp(joint)
        post /= post.sum(axis=1, keepdims=True)
        return post

    def to_dict(self):
        return {
            "classes": list(self.classes),
            "log_prior": self.log_prior.tolist(),
            "log_lik": self.log_lik.tolist(),
            "smoothing": self.smoothing,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["classes"], d["log_prior"], d["log_lik"], d["smoothing"])


class LogisticRegressionModel:
    """Multinomial logistic regression trained by mini-batch SGD."""

    algorithm = "logistic_regression"

    def __init__(self, classes, weights, biases):
        self.classes = tuple(classes)
        self.weights = np.asarray(weights, dtype=np.float64)
        self.biases = np.asarray(biases, dtype=np.float64)

    def predict_scores(self, x):
        x = _as_2d(x)
        _check_width(x, self.weights.shape[1], "logistic_regression")
        z = np.asarray(x @ self.weights.T) + self.biases
        return softmax(z)

    def to_dict(self):
        return {
            "classes": list(self.classes),
            "weights": self.weights.tolist(),
            "biases": self.biases.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["classes"], d["weights"], d["biases"])


class LinearSvmModel:
    """One-vs-rest linear SVM trained by hinge-loss SGD; scores are margins."""

    algorithm = "linear_svm"

    def __init__(self, classes, weights, biases):
        self.classes = tuple(classes)
        self.weights = np.asarray(weights, dtype=np.float64)
        self.biases = np.asarray(biases, dtype=np.float64)

    def predict_scores(self, x):
        x = _as_2d(x)
        _check_width(x, self.weights.shape[1], "linear_svm")
        return np.asarray(x @ self.weights.T) + self.biases

    def to_dict(self):
        return {
            "classes": list(self.classes),
            "weights": self.weights.tolist(),
            "biases": self.biases.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["classes"], d["weights"], d["biases"])


_MODEL_TYPES = {
    "dummy": DummyModel,
    "naive_bayes": NaiveBayesModel,
    "logistic_regression": LogisticRegressionModel,
    "linear_svm": LinearSvmModel,
}


def softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_loss_grad(weights, biases, x, y_idx, l2):
    """Multinomial cross-entropy with L2 on the weights (not the biases).

    Returns (loss, grad_weights, grad_biases). Kept as a standalone
    function so the gradient can be checked against finite differences.
    """
    x = _as_2d(x)
    n = x.shape[0]
    z = np.asarray(x @ weights.T) + biases
    z_shift = z - z.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z_shift).sum(axis=1, keepdims=True))
    log_p = z_shift - log_norm
    loss = -log_p[np.arange(n), y_idx].mean() + 0.5 * l2 * float((weights**2).sum())
    p = np.exp(log_p)
    p[np.arange(n), y_idx] -= 1.0
    p /= n
    grad_w = np.asarray(x.T @ p).T + l2 * weights
    grad_b = p.sum(axis=0)
    return loss, grad_w, grad_b


def hinge_loss_grad(weights, biases, x, y_idx, l2):
    """One-vs-rest hinge loss and subgradient, L2 on the weights."""
    x = _as_2d(x)
    n, n_classes = x.shape[0], weights.shape[0]
    targets = -np.ones((n, n_classes))
    targets[np.arange(n), y_idx] = 1.0
    margins = np.asarray(x @ weights.T) + biases
    slack = 1.0 - targets * margins
    viol = slack > 0
    loss = float(np.where(viol, slack, 0.0).sum()) / n
    loss += 0.5 * l2 * float((weights**2).sum())
    a = np.where(viol, targets, 0.0) / n
    grad_w = -np.asarray(x.T @ a).T + l2 * weights
    grad_b = -a.sum(axis=0)
    return loss, grad_w, grad_b


def _sgd(train_fn, x, y_idx, n_classes, sgd: SgdParams, seed):
    n, dim = x.shape
    weights = np.zeros((n_classes, dim))
    biases = np.zeros(n_classes)
    rng = np.random.default_rng(seed)
    step = 0
    for _ in range(sgd.epochs):
        order = rng.permutation(n)
        for start in range(0, n, sgd.batch_size):
            batch = order[start : start + sgd.batch_size]
            _, gw, gb = train_fn(
                weights, biases, x[batch], y_idx[batch], sgd.l2_penalty
            )
            step += 1
            lr = sgd.learning_rate / math.sqrt(step)
            weights -= lr * gw
            biases -= lr * gb
    return weights, biases


def train(config: TrainConfig, features, labels):
    """Fit the configured classifier. Deterministic given config.seed."""
    x = _as_2d(features)
    labels = list(labels)
    if x.shape[0] != len(labels):
        raise DimensionMismatchError(
            "%d feature rows but %d labels" % (x.shape[0], len(labels))
        )
    if not labels:
        raise EmptyClassError("no training instances")
    classes = sorted(set(labels))
    class_pos = {c: i for i, c in enumerate(classes)}
    y_idx = np.array([class_pos[c] for c in labels], dtype=np.int64)

    if config.algorithm == "dummy":
        priors = np.bincount(y_idx, minlength=len(classes)) / len(labels)
        return DummyModel(classes, priors, config.seed)

    if config.algorithm == "naive_bayes":
        data = x.data if sp.issparse(x) else x
        if np.any(data < 0):
            raise DataError("naive_bayes requires non-negative count features")
        alpha = 1.0
        log_prior = np.log(np.bincount(y_idx, minlength=len(classes)) / len(labels))
        log_lik = np.empty((len(classes), x.shape[1]))
        for i in range(len(classes)):
            rows = x[y_idx == i]
            counts = np.asarray(rows.sum(axis=0)).ravel()
            log_lik[i] = np.log(counts + alpha) - np.log(
                counts.sum() + alpha * x.shape[1]
            )
        return NaiveBayesModel(classes, log_prior, log_lik, alpha)

    if config.algorithm == "logistic_regression":
        weights, biases = _sgd(
            softmax_loss_grad, x, y_idx, len(classes), config.sgd, config.seed
        )
        return LogisticRegressionModel(classes, weights, biases)

    weights, biases = _sgd(
        hinge_loss_grad, x, y_idx, len(classes), config.sgd, config.seed
    )
    return LinearSvmModel(classes, weights, biases)


def predict_many(clf, features):
    """Predicted codes and score matrix for a batch of feature rows."""
    x = _as_2d(features)
    scores = clf.predict_scores(x)
    if isinstance(clf, DummyModel):
        idx = clf.draw(x.shape[0])
    else:
        idx = scores.argmax(axis=1)  # argmax takes the first (lowest) code on ties
    codes = np.array([clf.classes[i] for i in idx])
    return codes, scores


def predict(clf, feature_vector):
    """Predict one feature vector; returns (code, score vector)."""
    codes, scores = predict_many(clf, np.asarray(feature_vector, dtype=np.float64))
    return int(codes[0]), scores[0]


@dataclass(frozen=True)
class EvalReport:
    classes: tuple
    confusion: np.ndarray  # rows: true class, columns: predicted class
    per_class: dict  # code -> {"precision", "recall", "f1", "support"}
    macro_precision: float
    macro_recall: float
    macro_f1: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float


def compute_scores(y_true, y_pred) -> EvalReport:
    """Precision/recall/F1 per class plus macro and support-weighted averages.

    Denominator-zero cases score 0 by convention.
    """
    y_true = list(y_true)
    y_pred = list(y_pred)
    if len(y_true) != len(y_pred):
        raise DimensionMismatchError("prediction/label length mismatch")
    if not y_true:
        raise EmptyClassError("empty test set")
    classes = sorted(set(y_true) | set(y_pred))
    pos = {c: i for i, c in enumerate(classes)}
    confusion = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        confusion[pos[t], pos[p]] += 1

    per_class = {}
    for c in classes:
        i = pos[c]
        tp = confusion[i, i]
        fp = confusion[:, i].sum() - tp
        fn = confusion[i, :].sum() - tp
        precision = tp / (tp + fp) if (tp + fp) > 0 else 0.0
        recall = tp / (tp + fn) if (tp + fn) > 0 else 0.0
        f1 = (
            2 * precision * recall / (precision + recall)
            if (precision + recall) > 0
            else 0.0
        )
        per_class[c] = {
            "precision": float(precision),
            "recall": float(recall),
            "f1": float(f1),
            "support": int(confusion[i, :].sum()),
        }

    supports = np.array([per_class[c]["support"] for c in classes], dtype=np.float64)
    total = supports.sum()

    def _agg(metric):
        vals = np.array([per_class[c][metric] for c in classes])
        return float(vals.mean()), float((vals * supports).sum() / total)

    macro_p, weighted_p = _agg("precision")
    macro_r, weighted_r = _agg("recall")
    macro_f, weighted_f = _agg("f1")
    return EvalReport(
        classes=tuple(classes),
        confusion=confusion,
        per_class=per_class,
        macro_precision=macro_p,
        macro_recall=macro_r,
        macro_f1=macro_f,
        weighted_precision=weighted_p,
        weighted_recall=weighted_r,
        weighted_f1=weighted_f,
    )


def evaluate(clf, features, labels) -> EvalReport:
    preds, _ = predict_many(clf, features)
    return compute_scores(list(labels), list(preds))


def save_model(clf, path):
    payload = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "algorithm": clf.algorithm,
        "model": clf.to_dict(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != MODEL_FORMAT:
        raise DataError("not a classifier model file: %s" % path)
    if payload.get("version") != MODEL_VERSION:
        raise DataError("unsupported model version %r" % payload.get("version"))
    return _MODEL_TYPES[payload["algorithm"]].from_dict(payload["model"])


@dataclass
class FeatureResources:
    """Shared feature inputs for training runs and the benchmark matrix."""

    vocab: object = None
    pretrained_embeddings: object = None
    corpus_embeddings: object = None
    lexicon: object = None


def build_design_matrix(docs, vocab, config: TrainConfig, resources: FeatureResources):
    """Assemble the feature matrix a config asks for.

    Unigram counts stay raw for Naive Bayes and are sublinear-scaled
    (1 + log count) for the other algorithms; combination sets are plain
    concatenations.
    """
    sublinear = config.algorithm != "naive_bayes"
    blocks = []
    if config.feature_set in ("unigram", "unigram_embedding", "unigram_lexicon"):
        blocks.append(bow_matrix(vocab, docs, sublinear=sublinear))
    if config.feature_set in ("unigram_embedding", "embedding"):
        table = (
            resources.pretrained_embeddings
            if config.embedding_source == "pretrained"
            else resources.corpus_embeddings
        )
        if table is None:
            raise ConfigError(
                "feature set %r needs %s embeddings, none provided"
                % (config.feature_set, config.embedding_source)
            )
        blocks.append(embedding_matrix(table, docs))
    if config.feature_set == "unigram_lexicon":
        if resources.lexicon is None:
            raise ConfigError("feature set 'unigram_lexicon' needs a lexicon")
        blocks.append(lexicon_matrix(resources.lexicon, docs))
    if len(blocks) == 1:
        return blocks[0]
    return sp.hstack([sp.csr_matrix(b) for b in blocks], format="csr")


def default_matrix_configs(seed, sgd: SgdParams = SgdParams(),
                           test_fraction=0.1) -> list:
    """The ten-row benchmark: baseline, NB, and LR/SVM feature variants."""
    base = TrainConfig(seed=seed, sgd=sgd, test_fraction=test_fraction)
    rows = [
        ("dummy", "unigram", "corpus"),
        ("naive_bayes", "unigram", "corpus"),
        ("logistic_regression", "unigram", "corpus"),
        ("logistic_regression", "unigram_embedding", "pretrained"),
        ("logistic_regression", "unigram_embedding", "corpus"),
        ("logistic_regression", "unigram_lexicon", "corpus"),
        ("linear_svm", "unigram", "corpus"),
        ("linear_svm", "unigram_embedding", "pretrained"),
        ("linear_svm", "unigram_embedding", "corpus"),
        ("linear_svm", "unigram_lexicon", "corpus"),
    ]
    return [
        replace(base, algorithm=algo, feature_set=fs, embedding_source=src)
        for algo, fs, src in rows
    ]


def run_classifier_matrix(docs, labels, configs, resources: FeatureResources,
                          vocab=None):
    """Train and score every config on one shared stratified split.

    The split comes from the first config's test_fraction and seed, so
    rows are comparable. Returns [(config, EvalReport), ...] in config
    order.
    """
    if not configs:
        raise ValueError("no configs given")
    labels = list(labels)
    if len(docs) != len(labels):
        raise DimensionMismatchError("docs/labels length mismatch")
    if vocab is None:
        vocab = resources.vocab
    if vocab is None:
        raise ConfigError("run_classifier_matrix needs a vocabulary")

    test_idx = stratified_indices(
        labels, configs[0].test_fraction, configs[0].seed
    )
    train_rows = [i for i in range(len(docs)) if i not in test_idx]
    test_rows = [i for i in range(len(docs)) if i in test_idx]
    train_docs = [docs[i] for i in train_rows]
    test_docs = [docs[i] for i in test_rows]
    train_labels = [labels[i] for i in train_rows]
    test_labels = [labels[i] for i in test_rows]

    cache = {}
    results = []
    for config in configs:
        key = (
            config.feature_set,
            config.embedding_source,
            config.algorithm == "naive_bayes",
        )
        if key not in cache:
            cache[key] = (
                build_design_matrix(train_docs, vocab, config, resources),
                build_design_matrix(test_docs, vocab, config, resources),
            )
        x_train, x_test = cache[key]
        clf = train(config, x_train, train_labels)
        results.append((config, evaluate(clf, x_test, test_labels)))
    return results


def write_matrix_csv(results, path):
    """Benchmark results as CSV, one row per config."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            "algorithm,features,embedding_source,"
            "f1,precision,recall,macro_f1,macro_precision,macro_recall\n"
        )
        for config, report in results:
            source = (
                config.embedding_source
                if "embedding" in config.feature_set
                else ""
            )
            fh.write(
                "%s,%s,%s,%.3f,%.3f,%.3f,%.3f,%.3f,%.3f\n"
                % (
                    config.algorithm,
                    config.feature_set,
                    source,
                    report.weighted_f1,
                    report.weighted_precision,
                    report.weighted_recall,
                    report.macro_f1,
                    report.macro_precision,
                    report.macro_recall,
                )
            )
