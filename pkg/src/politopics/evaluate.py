"""Model evaluation: topic coherence, inter-model agreement, label mapping.

The label map is a human-authored CSV (``topic_id,label,code``) assigning
each raw topic id a readable label and a code: a policy code 1-23, an
extended non-policy code 24-35, or 0 for uninterpretable. Several topic
ids may share a code; that is how related topics merge under one parent
label. The tool never invents labels.

Coherence follows the windowed NPMI convention: probabilities come from
sliding token windows over a reference corpus (documents shorter than
the window form a single window), and

    npmi(i, j) = log((P(i,j) + eps) / (P(i) P(j))) / -log(P(i,j) + eps)

with a small eps so never-co-occurring pairs score -1. Values are
clamped to [-1, 1]; a pair present in every window scores exactly 1.

Agreement is Cohen's kappa over paired code lists, restricted upstream
to tweets where both models emit a policy code.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from itertools import combinations
from math import log

import numpy as np

from .corpus import CAP_CODES, NOT_POLICY_CODE, VALID_MAP_CODES
from .errors import (
    EmptyReferenceError,
    LengthMismatchError,
    SchemaError,
    UnmappedTopicError,
)

SENTINEL_TOPIC = -1  # marks tweets excluded from fitting (empty after preprocessing)


@dataclass(frozen=True)
class MapEntry:
    label: str
    code: int


@dataclass(frozen=True)
class LabelMap:
    entries: dict  # topic id -> MapEntry

    def code(self, topic):
        return self.entries[topic].code

    def label(self, topic):
        return self.entries[topic].label

    @property
    def topics(self):
        return frozenset(self.entries)

    def topics_for_code(self, code):
        return sorted(t for t, e in self.entries.items() if e.code == code)


def load_labelmap(path) -> LabelMap:
    entries = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        expected = {"topic_id", "label", "code"}
        if reader.fieldnames is None or not expected.issubset(reader.fieldnames):
            raise SchemaError("label map must have header topic_id,label,code")
        for row in reader:
            try:
                topic = int(row["topic_id"])
                code = int(row["code"])
            except (TypeError, ValueError) as exc:
                raise SchemaError("bad label map row %r" % (row,)) from exc
            if topic in entries:
                raise SchemaError("topic id %d mapped twice" % topic)
            if code not in VALID_MAP_CODES:
                raise SchemaError("label map code %d is not a valid code" % code)
            entries[topic] = MapEntry(label=row["label"], code=code)
    return LabelMap(entries=entries)


def apply_label_map(assignments, label_map: LabelMap):
    """Translate (tweet_id, topic1, topic2) rows into coded rows.

    Every topic id present must be covered by the map; the sentinel
    topic for excluded tweets maps to code 0 (uninterpretable).
    """
    present = {t for _, t1, t2 in assignments for t in (t1, t2)}
    missing = {t for t in present if t != SENTINEL_TOPIC and t not in label_map.entries}
    if missing:
        raise UnmappedTopicError(missing)
    out = []
    for tweet_id, t1, t2 in assignments:
        c1 = NOT_POLICY_CODE if t1 == SENTINEL_TOPIC else label_map.code(t1)
        c2 = NOT_POLICY_CODE if t2 == SENTINEL_TOPIC else label_map.code(t2)
        out.append((tweet_id, c1, c2))
    return out


@dataclass(frozen=True)
class AgreementResult:
    kappa: float
    p_observed: float
    p_expected: float
    classes: tuple
    confusion: np.ndarray
    n: int


def cohens_kappa(labels_a, labels_b) -> AgreementResult:
    """Chance-corrected agreement between two equally long label lists.

    kappa = (p_o - p_e) / (1 - p_e) with p_e the product-marginal chance
    agreement. When p_e = 1 (both raters constant and equal marginals),
    kappa is 1 if the lists agree everywhere, else 0.
    """
    labels_a = list(labels_a)
    labels_b = list(labels_b)
    if len(labels_a) != len(labels_b):
        raise LengthMismatchError(
            "label lists differ in length: %d vs %d" % (len(labels_a), len(labels_b))
        )
    if not labels_a:
        raise LengthMismatchError("need at least one paired label")
    classes = sorted(set(labels_a) | set(labels_b))
    pos = {c: i for i, c in enumerate(classes)}
    confusion = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for a, b in zip(labels_a, labels_b):
        confusion[pos[a], pos[b]] += 1
    n = len(labels_a)
    p_o = float(np.trace(confusion)) / n
    marg_a = confusion.sum(axis=1) / n
    marg_b = confusion.sum(axis=0) / n
    p_e = float(marg_a @ marg_b)
    if p_e >= 1.0:
        kappa = 1.0 if p_o == 1.0 else 0.0
    else:
        kappa = (p_o - p_e) / (1.0 - p_e)
    return AgreementResult(
        kappa=float(kappa),
        p_observed=p_o,
        p_expected=p_e,
        classes=tuple(classes),
        confusion=confusion,
        n=n,
    )


def align_for_comparison(su, un1, label_map: LabelMap):
    """Join supervised and unsupervised assignments for agreement scoring.

    su is (tweet_id, code) pairs, un1 is (tweet_id, topic) pairs. Only
    tweets present on both sides survive, and only where the supervised
    code is a policy code and the mapped topic lands on a policy code.
    Returns (su_codes, un_codes, exclusions) where exclusions counts the
    discarded tweets by reason.
    """
    un_by_id = dict(un1)
    exclusions = {"unmatched": 0, "su_not_policy": 0, "un_not_cap": 0}
    su_codes = []
    un_codes = []
    for tweet_id, su_code in su:
        if tweet_id not in un_by_id:
            exclusions["unmatched"] += 1
            continue
        topic = un_by_id[tweet_id]
        if su_code not in CAP_CODES:
            exclusions["su_not_policy"] += 1
            continue
        if topic == SENTINEL_TOPIC:
            exclusions["un_not_cap"] += 1
            continue
        if topic not in label_map.entries:
            raise UnmappedTopicError([topic])
        un_code = label_map.code(topic)
        if un_code not in CAP_CODES:
            exclusions["un_not_cap"] += 1
            continue
        su_codes.append(su_code)
        un_codes.append(un_code)
    return su_codes, un_codes, exclusions


@dataclass(frozen=True)
class CoherenceResult:
    per_topic: dict  # topic id -> mean NPMI over top-word pairs
    mean: float
    n_windows: int
    reference_label: str


def _window_counts(reference, window, relevant):
    """Occurrence and co-occurrence window counts for the relevant words."""
    n_windows = 0
    occur = {w: 0 for w in relevant}
    co_occur = {}
    for doc in reference:
        tokens = doc.tokens
        if len(tokens) <= window:
            spans = [tokens]
        else:
            spans = [tokens[i : i + window] for i in range(len(tokens) - window + 1)]
        for span in spans:
            n_windows += 1
            present = sorted({t for t in span if t in relevant})
            for w in present:
                occur[w] += 1
            for a, b in combinations(present, 2):
                co_occur[(a, b)] = co_occur.get((a, b), 0) + 1
    return n_windows, occur, co_occur


def npmi_pair(p_joint, p_a, p_b, epsilon):
    """NPMI of one word pair from window probabilities, clamped to [-1, 1]."""
    if p_a == 0.0 or p_b == 0.0:
        return -1.0
    joint = p_joint + epsilon
    if joint >= 1.0:
        return 1.0
    value = log(joint / (p_a * p_b)) / -log(joint)
    return max(-1.0, min(1.0, value))


def npmi_coherence(topics, reference, window=10, epsilon=1e-12,
                   reference_label="reference") -> CoherenceResult:
    """Mean NPMI over the top-word pairs of each topic.

    Probabilities are estimated from size-`window` sliding windows over
    the reference corpus. A topic with fewer than two top words scores 0.
    """
    reference = list(reference)
    if not reference:
        raise EmptyReferenceError("empty reference corpus")
    relevant = set()
    for summary in topics:
        relevant.update(summary.tokens)
    n_windows, occur, co_occur = _window_counts(reference, window, relevant)
    if n_windows == 0:
        raise EmptyReferenceError("reference corpus contains no windows")

    per_topic = {}
    for summary in topics:
        words = summary.tokens
        if len(words) < 2:
            per_topic[summary.topic] = 0.0
            continue
        values = []
        for a, b in combinations(words, 2):
            key = (a, b) if a <= b else (b, a)
            values.append(
                npmi_pair(
                    co_occur.get(key, 0) / n_windows,
                    occur.get(a, 0) / n_windows,
                    occur.get(b, 0) / n_windows,
                    epsilon,
                )
            )
        per_topic[summary.topic] = float(np.mean(values))
    mean = float(np.mean(list(per_topic.values()))) if per_topic else 0.0
    return CoherenceResult(
        per_topic=per_topic,
        mean=mean,
        n_windows=n_windows,
        reference_label=reference_label,
    )


def write_coherence_csv(result: CoherenceResult, summaries, path):
    """Coherence report: topic_id,npmi_mean,top_words."""
    by_topic = {s.topic: s for s in summaries}
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("topic_id,npmi_mean,top_words\n")
        for topic in sorted(result.per_topic):
            words = " ".join(by_topic[topic].tokens) if topic in by_topic else ""
            fh.write("%d,%.6f,%s\n" % (topic, result.per_topic[topic], words))
