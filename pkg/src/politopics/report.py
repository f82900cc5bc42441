"""Analytical outputs: code distributions, group breakdowns, feature lists.

Rendered CSV tables round proportions to 3 decimals and mark codes a
model never assigned with a literal ``-``; the JSON variants keep full
precision and use null for the absent marker. The distinction matters:
an absent marker means the model never emitted that code, which is not
the same claim as a proportion of zero.

Output files
------------
distribution.csv  ``code,label,su,un1,un2``
breakdown.csv     ``code,label,group,share``
features.csv      ``code,label,features``
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .corpus import CAP_CODES, NOT_POLICY_CODE
from .errors import EmptyCorpusError, UnknownAccountError
from .evaluate import LabelMap
from .supervised import (
    DummyModel,
    LinearSvmModel,
    LogisticRegressionModel,
    NaiveBayesModel,
)
from .topicmodel import top_words

GROUP_FIELDS = ("party", "chamber", "gender")


@dataclass(frozen=True)
class DistributionTable:
    codes: tuple  # row order
    columns: tuple  # column names, e.g. ("su", "un1", "un2")
    cells: dict  # (code, column) -> float proportion, or None when absent

    def column_sum(self, column):
        return sum(
            v for (code, col), v in self.cells.items()
            if col == column and v is not None
        )


def _column(codes, all_codes):
    counts = Counter(codes)
    total = len(codes)
    return {
        code: (counts[code] / total if counts.get(code) else None)
        for code in all_codes
    }


def distribution_table(su_codes, un1_codes, un2_codes,
                       codebook=None) -> DistributionTable:
    """Per-code proportions for the three labelings, side by side.

    Row set is the codebook when given (so rows no model touched still
    render, with absent markers all the way across), else the union of
    observed codes.
    """
    su_codes = list(su_codes)
    un1_codes = list(un1_codes)
    un2_codes = list(un2_codes)
    if not su_codes or not un1_codes or not un2_codes:
        raise EmptyCorpusError("distribution table needs non-empty code lists")
    observed = set(su_codes) | set(un1_codes) | set(un2_codes)
    if codebook is not None:
        all_codes = tuple(sorted(set(codebook.codes) | observed))
    else:
        all_codes = tuple(sorted(observed))
    cells = {}
    for column, codes in (("su", su_codes), ("un1", un1_codes), ("un2", un2_codes)):
        col = _column(codes, all_codes)
        for code in all_codes:
            cells[(code, column)] = col[code]
    return DistributionTable(codes=all_codes, columns=("su", "un1", "un2"), cells=cells)


def write_distribution_csv(table: DistributionTable, path, codebook=None):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("code,label,su,un1,un2\n")
        for code in table.codes:
            label = codebook.label(code) if codebook is not None else str(code)
            rendered = [
                "-" if table.cells[(code, col)] is None
                else "%.3f" % table.cells[(code, col)]
                for col in table.columns
            ]
            fh.write("%d,%s,%s\n" % (code, label, ",".join(rendered)))


def write_distribution_json(table: DistributionTable, path, codebook=None):
    rows = []
    for code in table.codes:
        row = {"code": code}
        if codebook is not None:
            row["label"] = codebook.label(code)
        for col in table.columns:
            row[col] = table.cells[(code, col)]
        rows.append(row)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(rows, fh, sort_keys=True)


@dataclass(frozen=True)
class GroupBreakdown:
    group_by: str
    shares: dict  # code -> {group value -> share of that code's tweets}
    counts: dict  # code -> total tweets with that code
    omitted_codes: tuple  # codebook codes with zero tweets, when known


def group_breakdown(codes, corpus, accounts, group_by,
                    codebook=None) -> GroupBreakdown:
    """Per-code composition by party, chamber, or gender.

    codes is (tweet_id, code) pairs; every tweet id must resolve through
    the corpus to a known account. Codes with no tweets are omitted from
    the shares and listed in omitted_codes when a codebook names them.
    """
    if group_by not in GROUP_FIELDS:
        raise ValueError("group_by must be one of %s" % (GROUP_FIELDS,))
    unknown = set()
    tallies = {}
    totals = Counter()
    for tweet_id, code in codes:
        tweet = corpus.get(tweet_id)
        account = accounts.get(tweet.account_handle) if tweet is not None else None
        if account is None:
            unknown.add(tweet.account_handle if tweet is not None else tweet_id)
            continue
        group = getattr(account, group_by)
        tallies.setdefault(code, Counter())[group] += 1
        totals[code] += 1
    if unknown:
        raise UnknownAccountError(unknown)
    shares = {
        code: {group: n / totals[code] for group, n in sorted(groups.items())}
        for code, groups in tallies.items()
    }
    if codebook is not None:
        omitted = tuple(sorted(set(codebook.codes) - set(shares)))
    else:
        omitted = ()
    return GroupBreakdown(
        group_by=group_by,
        shares=shares,
        counts={code: int(n) for code, n in totals.items()},
        omitted_codes=omitted,
    )


def write_breakdown_csv(breakdown: GroupBreakdown, path, codebook=None):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("code,label,group,share\n")
        for code in sorted(breakdown.shares):
            label = codebook.label(code) if codebook is not None else str(code)
            for group, share in breakdown.shares[code].items():
                fh.write("%d,%s,%s,%r\n" % (code, label, group, share))


def classifier_feature_table(clf, vocab, top_n=10):
    """Highest-signal unigrams per class for a trained classifier.

    Linear models rank by weight; Naive Bayes ranks by the likelihood
    ratio of each token under the class against the prior-weighted rest.
    The dummy baseline has no features to rank.
    """
    tokens = vocab.tokens
    rows = {}
    if isinstance(clf, DummyModel):
        return rows
    if isinstance(clf, (LogisticRegressionModel, LinearSvmModel)):
        scores = clf.weights
    elif isinstance(clf, NaiveBayesModel):
        lik = np.exp(clf.log_lik)
        prior = np.exp(clf.log_prior)
        scores = np.empty_like(lik)
        for i in range(lik.shape[0]):
            others = [j for j in range(lik.shape[0]) if j != i]
            if others:
                rest_prior = prior[others] / prior[others].sum()
                rest = (rest_prior[:, None] * lik[others]).sum(axis=0)
            else:
                rest = np.ones(lik.shape[1])
            scores[i] = np.log(lik[i]) - np.log(rest)
    else:
        raise TypeError("unsupported model type %r" % type(clf).__name__)

    limit = min(top_n, min(len(tokens), scores.shape[1]))
    for i, code in enumerate(clf.classes):
        row = scores[i][: len(tokens)]
        order = sorted(range(len(tokens)), key=lambda w: (-row[w], tokens[w]))
        rows[code] = [tokens[w] for w in order[:limit]]
    return rows


def lda_feature_table(state, config, label_map: LabelMap, top_n=10):
    """Top words per mapped code, one word group per constituent topic.

    Codes whose parent label merges several topics get one group per
    topic in topic-id order; groups are kept separate so merged parents
    stay readable.
    """
    rows = {}
    codes = sorted({entry.code for entry in label_map.entries.values()})
    for code in codes:
        topic_ids = label_map.topics_for_code(code)
        groups = []
        for topic in topic_ids:
            summary = top_words(state, config, topic, top_n)
            groups.append(" ".join(summary.tokens))
        rows[code] = {
            "label": label_map.label(topic_ids[0]),
            "groups": groups,
        }
    return rows


def write_features_csv(rows, path, codebook=None):
    """Per-code feature lists as ``code,label,features``.

    Accepts either model's table: classifier rows are token lists, topic
    rows carry their map label and one word group per merged topic
    (groups joined with semicolons).
    """
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("code,label,features\n")
        for code in sorted(rows):
            value = rows[code]
            if isinstance(value, dict):
                label = value["label"]
                features = "; ".join(value["groups"])
            else:
                label = codebook.label(code) if codebook is not None else str(code)
                features = " ".join(value)
            fh.write('%d,%s,"%s"\n' % (code, label, features))


def uninterpretable_share(codes) -> float:
    """Fraction of tweets whose code is 0."""
    codes = list(codes)
    if not codes:
        return 0.0
    return sum(1 for c in codes if c == NOT_POLICY_CODE) / len(codes)


def noncap_share(codes) -> float:
    """Fraction of tweets coded outside the policy taxonomy (0 and 24-35)."""
    codes = list(codes)
    if not codes:
        return 0.0
    return sum(1 for c in codes if c not in CAP_CODES) / len(codes)
