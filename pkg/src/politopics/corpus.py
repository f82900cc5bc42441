"""Tweet archives, account metadata, and the labeled training corpus.

File formats
------------
tweets.jsonl   one JSON object per line:
               {"id": str, "account_handle": str, "posted_at": ISO-8601 str,
                "text": str, "is_retweet": bool}
accounts.csv   header ``handle,party,chamber,gender`` with
               party in {Dem, GOP}, chamber in {House, Senate},
               gender in {Man, Woman}; there is no Independent value,
               so independents are recorded under the party they
               caucus with
codebook.csv   header ``code,label,extended`` with extended in {0, 1}
labeled.jsonl  tweet fields plus an integer "code" field

Codes 11 and 22 do not exist in the policy codebook and are rejected
wherever a code is read. Code 0 marks not-policy / uninterpretable
content; codes 24-35 are non-policy extensions discovered by the
unsupervised model and are flagged as such in the codebook.
"""

from __future__ import annotations

import csv
import json
import math
import random
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .errors import (
    DuplicateIdError,
    EmptyClassError,
    SchemaError,
    TargetTooLargeError,
    UnknownAccountError,
)

PARTIES = ("Dem", "GOP")
CHAMBERS = ("House", "Senate")
GENDERS = ("Man", "Woman")

NOT_POLICY_CODE = 0
CAP_CODES = frozenset(range(1, 11)) | frozenset(range(12, 22)) | {23}
EXTENDED_CODES = frozenset(range(24, 36))
VALID_LABEL_CODES = CAP_CODES | {NOT_POLICY_CODE}
VALID_MAP_CODES = CAP_CODES | EXTENDED_CODES | {NOT_POLICY_CODE}

_TWEET_FIELDS = ("id", "account_handle", "posted_at", "text", "is_retweet")


@dataclass(frozen=True)
class Account:
    handle: str
    party: str
    chamber: str
    gender: str

    def __post_init__(self):
        if not self.handle:
            raise SchemaError("account handle must be non-empty")
        if self.party not in PARTIES:
            raise SchemaError("bad party %r for %s" % (self.party, self.handle))
        if self.chamber not in CHAMBERS:
            raise SchemaError("bad chamber %r for %s" % (self.chamber, self.handle))
        if self.gender not in GENDERS:
            raise SchemaError("bad gender %r for %s" % (self.gender, self.handle))


@dataclass(frozen=True)
class Tweet:
    id: str
    account_handle: str
    posted_at: datetime
    text: str
    is_retweet: bool


@dataclass(frozen=True)
class LabeledTweet:
    tweet: Tweet
    code: int

    def __post_init__(self):
        if self.code not in VALID_LABEL_CODES:
            raise SchemaError(
                "code %r is not a valid policy code (11 and 22 do not exist)"
                % (self.code,)
            )


class Corpus:
    """An ordered, immutable collection of tweets with unique ids."""

    def __init__(self, tweets):
        tweets = tuple(tweets)
        seen = set()
        for t in tweets:
            if t.id in seen:
                raise DuplicateIdError("duplicate tweet id %r" % t.id)
            seen.add(t.id)
        self._tweets = tweets
        self._by_id = {t.id: t for t in tweets}

    @property
    def tweets(self):
        return self._tweets

    def __len__(self):
        return len(self._tweets)

    def __iter__(self):
        return iter(self._tweets)

    def __getitem__(self, i):
        return self._tweets[i]

    def get(self, tweet_id):
        return self._by_id.get(tweet_id)

    def __eq__(self, other):
        return isinstance(other, Corpus) and self._tweets == other._tweets


class AccountSet:
    """Accounts keyed by handle."""

    def __init__(self, accounts):
        self._by_handle = {}
        for a in accounts:
            if a.handle in self._by_handle:
                raise DuplicateIdError("duplicate account handle %r" % a.handle)
            self._by_handle[a.handle] = a

    def __len__(self):
        return len(self._by_handle)

    def __contains__(self, handle):
        return handle in self._by_handle

    def __iter__(self):
        return iter(self._by_handle.values())

    def get(self, handle):
        return self._by_handle.get(handle)


@dataclass(frozen=True)
class CapCodebook:
    """Code -> label mapping, with extended (non-policy) codes flagged."""

    labels: dict
    extended: frozenset

    def __post_init__(self):
        seen_labels = set()
        for code, label in self.labels.items():
            if code not in VALID_MAP_CODES:
                raise SchemaError("codebook contains invalid code %r" % (code,))
            if label in seen_labels:
                raise SchemaError("codebook label %r is not unique" % label)
            seen_labels.add(label)
        for code in self.extended:
            if code not in self.labels:
                raise SchemaError("extended flag on unknown code %r" % (code,))

    @property
    def codes(self):
        return frozenset(self.labels)

    def label(self, code):
        return self.labels.get(code, str(code))


def _parse_timestamp(value, line):
    if not isinstance(value, str):
        raise SchemaError("line %d: posted_at must be a string" % line, line=line)
    try:
        dt = datetime.fromisoformat(value.replace("Z", "+00:00"))
    except ValueError as exc:
        raise SchemaError("line %d: bad posted_at %r" % (line, value), line=line) from exc
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def _parse_tweet(obj, line):
    for field in _TWEET_FIELDS:
        if field not in obj:
            raise SchemaError(
                "line %d: missing field %r" % (line, field), line=line, field=field
            )
    if not isinstance(obj["id"], str) or not obj["id"]:
        raise SchemaError("line %d: id must be a non-empty string" % line, line=line)
    if not isinstance(obj["text"], str):
        raise SchemaError("line %d: text must be a string" % line, line=line)
    if not isinstance(obj["account_handle"], str):
        raise SchemaError("line %d: account_handle must be a string" % line, line=line)
    if not isinstance(obj["is_retweet"], bool):
        raise SchemaError("line %d: is_retweet must be a boolean" % line, line=line)
    return Tweet(
        id=obj["id"],
        account_handle=obj["account_handle"],
        posted_at=_parse_timestamp(obj["posted_at"], line),
        text=obj["text"],
        is_retweet=obj["is_retweet"],
    )


def _iter_jsonl(path):
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise SchemaError(
                    "line %d: invalid JSON (%s)" % (line_no, exc), line=line_no
                ) from exc
            yield line_no, obj


def load_tweets(path) -> Corpus:
    """Read a JSONL tweet archive, preserving file order.

    Raises SchemaError naming the offending line on malformed records and
    DuplicateIdError when two lines share an id.
    """
    tweets = []
    seen = set()
    for line_no, obj in _iter_jsonl(path):
        tweet = _parse_tweet(obj, line_no)
        if tweet.id in seen:
            raise DuplicateIdError(
                "line %d: duplicate tweet id %r" % (line_no, tweet.id)
            )
        seen.add(tweet.id)
        tweets.append(tweet)
    return Corpus(tweets)


def write_tweets(corpus: Corpus, path):
    with open(path, "w", encoding="utf-8") as fh:
        for t in corpus:
            fh.write(
                json.dumps(
                    {
                        "id": t.id,
                        "account_handle": t.account_handle,
                        "posted_at": t.posted_at.isoformat(),
                        "text": t.text,
                        "is_retweet": t.is_retweet,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def load_labeled(path) -> list:
    """Read labeled tweets (tweet fields plus an integer ``code``)."""
    labeled = []
    seen = set()
    for line_no, obj in _iter_jsonl(path):
        if "code" not in obj:
            raise SchemaError(
                "line %d: missing field 'code'" % line_no, line=line_no, field="code"
            )
        code = obj["code"]
        if not isinstance(code, int) or code not in VALID_LABEL_CODES:
            raise SchemaError(
                "line %d: code %r is not a valid policy code" % (line_no, code),
                line=line_no,
            )
        tweet = _parse_tweet(obj, line_no)
        if tweet.id in seen:
            raise DuplicateIdError(
                "line %d: duplicate tweet id %r" % (line_no, tweet.id)
            )
        seen.add(tweet.id)
        labeled.append(LabeledTweet(tweet=tweet, code=code))
    return labeled


def write_labeled(labeled, path):
    with open(path, "w", encoding="utf-8") as fh:
        for item in labeled:
            t = item.tweet
            fh.write(
                json.dumps(
                    {
                        "id": t.id,
                        "account_handle": t.account_handle,
                        "posted_at": t.posted_at.isoformat(),
                        "text": t.text,
                        "is_retweet": t.is_retweet,
                        "code": item.code,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def load_accounts(path) -> AccountSet:
    accounts = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        expected = {"handle", "party", "chamber", "gender"}
        if reader.fieldnames is None or not expected.issubset(reader.fieldnames):
            raise SchemaError(
                "accounts file must have header handle,party,chamber,gender"
            )
        for row_no, row in enumerate(reader, start=2):
            accounts.append(
                Account(
                    handle=row["handle"],
                    party=row["party"],
                    chamber=row["chamber"],
                    gender=row["gender"],
                )
            )
    return AccountSet(accounts)


def load_codebook(path) -> CapCodebook:
    labels = {}
    extended = set()
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        expected = {"code", "label", "extended"}
        if reader.fieldnames is None or not expected.issubset(reader.fieldnames):
            raise SchemaError("codebook file must have header code,label,extended")
        for row in reader:
            try:
                code = int(row["code"])
                ext = int(row["extended"])
            except (TypeError, ValueError) as exc:
                raise SchemaError("bad codebook row %r" % (row,)) from exc
            if code in labels:
                raise SchemaError("duplicate codebook code %d" % code)
            if ext not in (0, 1):
                raise SchemaError("extended must be 0 or 1, got %r" % (row["extended"],))
            labels[code] = row["label"]
            if ext:
                extended.add(code)
    return CapCodebook(labels=labels, extended=frozenset(extended))


def bundled_codebook() -> CapCodebook:
    """The policy codebook shipped with the package (codes 0-35, minus 11/22)."""
    return load_codebook(Path(__file__).parent / "data" / "codebook.csv")


def filter_originals(corpus: Corpus) -> Corpus:
    """Drop retweets, preserving order. Idempotent."""
    return Corpus(t for t in corpus if not t.is_retweet)


def stratified_indices(labels, test_fraction, seed):
    """Per-class test index selection behind stratified_split.

    Remainders go to train; the per-class test count is
    floor(test_fraction * n_class). Deterministic given seed.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must be in (0, 1)")
    if not labels:
        raise EmptyClassError("no instances to split")
    by_class = {}
    for i, code in enumerate(labels):
        by_class.setdefault(code, []).append(i)
    rng = random.Random(seed)
    test_idx = set()
    for code in sorted(by_class):
        members = by_class[code]
        n_test = math.floor(test_fraction * len(members) + 1e-9)
        shuffled = members[:]
        rng.shuffle(shuffled)
        test_idx.update(shuffled[:n_test])
    return test_idx


def stratified_split(labeled, test_fraction, seed):
    """Split labeled tweets so each class keeps its proportion of the data.

    Returns (train, test) in original input order; train and test are
    disjoint and their union is the input.
    """
    labels = [item.code for item in labeled]
    test_idx = stratified_indices(labels, test_fraction, seed)
    train = [item for i, item in enumerate(labeled) if i not in test_idx]
    test = [item for i, item in enumerate(labeled) if i in test_idx]
    return train, test


def rebalance_subsample(labeled, class_code, target_count, seed):
    """Subsample one class down to target_count instances, seeded.

    All other classes pass through untouched; the input order of the
    surviving instances is preserved.
    """
    member_idx = [i for i, item in enumerate(labeled) if item.code == class_code]
    if target_count > len(member_idx):
        raise TargetTooLargeError(
            "class %r has %d instances, cannot subsample to %d"
            % (class_code, len(member_idx), target_count)
        )
    rng = random.Random(seed)
    keep = set(rng.sample(member_idx, target_count))
    return [
        item
        for i, item in enumerate(labeled)
        if item.code != class_code or i in keep
    ]


def group_counts(corpus: Corpus, accounts: AccountSet):
    """Tweet counts keyed by (party, chamber, gender).

    Raises UnknownAccountError listing every handle that fails to resolve.
    """
    unknown = set()
    counts = {}
    for t in corpus:
        account = accounts.get(t.account_handle)
        if account is None:
            unknown.add(t.account_handle)
            continue
        key = (account.party, account.chamber, account.gender)
        counts[key] = counts.get(key, 0) + 1
    if unknown:
        raise UnknownAccountError(unknown)
    return counts


def marginal_counts(table, axis):
    """Collapse a (party, chamber, gender)-keyed table along one axis.

    axis is "party", "chamber", or "gender"; the returned table is keyed
    by the value of that axis alone.
    """
    positions = {"party": 0, "chamber": 1, "gender": 2}
    if axis not in positions:
        raise ValueError("axis must be one of party, chamber, gender")
    pos = positions[axis]
    out = {}
    for key, n in table.items():
        out[key[pos]] = out.get(key[pos], 0) + n
    return out
