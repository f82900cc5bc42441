"""Raw tweet text to the unigram token lists both models consume.

The pipeline applies, in order:

1. lowercase the text
2. strip @-handles: a literal ``@`` followed by one or more word characters
3. remove URLs: ``http(s)://...``, bare ``t.co/...``, bare ``www....``
4. collapse any run of one character longer than ``max_repeat`` down to
   exactly ``max_repeat`` (default 3, so "heeeeeeeey" becomes "heeey")
5. split on whitespace
6. drop tokens containing any digit
7. strip every character outside the Unicode Letter categories (this
   removes punctuation, emoji, and the ``#`` of hashtags while keeping
   the tag body), dropping tokens that become empty
8. re-cap character runs inside the stripped token (stripping "aaa.aaa"
   would otherwise manufacture a six-long run)
9. drop tokens shorter than ``min_token_len`` (default 2)
10. drop stoplisted tokens

No stemming or lemmatization is applied anywhere: "running" and "run"
stay distinct. The exact regexes are part of the external interface so
golden tests stay portable:

    handles:  @\\w+
    urls:     https?://\\S+  |  \\bt\\.co/\\S+  |  \\bwww\\.\\S+
"""

from __future__ import annotations

import functools
import json
import re
import unicodedata
from dataclasses import dataclass
from pathlib import Path

_HANDLE_RE = re.compile(r"@\w+")
_URL_RE = re.compile(r"https?://\S+|\bt\.co/\S+|\bwww\.\S+")

DATA_DIR = Path(__file__).parent / "data"
BUNDLED_STOPLISTS = (DATA_DIR / "stoplist_en.txt", DATA_DIR / "stoplist_es.txt")


@dataclass(frozen=True)
class TokenPipeline:
    stoplist: frozenset = frozenset()
    max_repeat: int = 3
    min_token_len: int = 2

    def __post_init__(self):
        if self.max_repeat < 1:
            raise ValueError("max_repeat must be >= 1")
        if self.min_token_len < 1:
            raise ValueError("min_token_len must be >= 1")
        for entry in self.stoplist:
            if not entry or entry != entry.lower() or entry.split() != [entry]:
                raise ValueError(
                    "stoplist entries must be lowercase, non-empty and "
                    "whitespace-free: %r" % entry
                )


@dataclass(frozen=True)
class TokenizedDoc:
    tweet_id: str
    tokens: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))


@functools.lru_cache(maxsize=8)
def _collapse_re(max_repeat):
    return re.compile(r"(.)\1{%d,}" % max_repeat, re.DOTALL)


def _has_digit(token):
    return any(unicodedata.category(c).startswith("N") for c in token)


def _letters_only(token):
    return "".join(c for c in token if unicodedata.category(c).startswith("L"))


def tokenize(pipeline: TokenPipeline, text: str) -> list:
    """Apply the full token pipeline to one piece of text."""
    collapse = _collapse_re(pipeline.max_repeat)
    cap = lambda m: m.group(1) * pipeline.max_repeat  # noqa: E731
    text = text.lower()
    text = _HANDLE_RE.sub("", text)
    text = _URL_RE.sub("", text)
    text = collapse.sub(cap, text)
    out = []
    for raw in text.split():
        if _has_digit(raw):
            continue
        token = collapse.sub(cap, _letters_only(raw))
        if len(token) < pipeline.min_token_len:
            continue
        if token in pipeline.stoplist:
            continue
        out.append(token)
    return out


def preprocess_corpus(pipeline: TokenPipeline, corpus):
    """Tokenize every tweet, reporting the ones that end up empty.

    Returns (docs, dropped_ids). The docs list has one entry per input
    tweet in order, including the empty ones; dropped_ids names the
    tweets whose token list came out empty. Those are excluded from LDA
    fitting downstream but still get a supervised prediction (the
    not-policy code, flagged as degenerate input).
    """
    docs = []
    dropped = []
    for tweet in corpus:
        tokens = tokenize(pipeline, tweet.text)
        docs.append(TokenizedDoc(tweet_id=tweet.id, tokens=tuple(tokens)))
        if not tokens:
            dropped.append(tweet.id)
    return docs, dropped


def load_stoplist(paths) -> set:
    """Union of stop word files: one token per line, '#' starts a comment."""
    words = set()
    for path in paths:
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                words.add(line.lower())
    return words


def default_pipeline(max_repeat=3, min_token_len=2) -> TokenPipeline:
    """Pipeline with the bundled English + Spanish stop word snapshots."""
    return TokenPipeline(
        stoplist=frozenset(load_stoplist(BUNDLED_STOPLISTS)),
        max_repeat=max_repeat,
        min_token_len=min_token_len,
    )


def write_tokenized(docs, path):
    """Write the tokenized cache: JSONL of {"tweet_id", "tokens"}."""
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(
                json.dumps(
                    {"tweet_id": doc.tweet_id, "tokens": list(doc.tokens)},
                    ensure_ascii=False,
                )
                + "\n"
            )


def read_tokenized(path) -> list:
    docs = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            docs.append(
                TokenizedDoc(tweet_id=obj["tweet_id"], tokens=tuple(obj["tokens"]))
            )
    return docs
