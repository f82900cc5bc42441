import json
import random
from datetime import datetime, timedelta, timezone

import pytest

from politopics.corpus import (
    Account,
    AccountSet,
    Corpus,
    LabeledTweet,
    Tweet,
    bundled_codebook,
    filter_originals,
    group_counts,
    load_accounts,
    load_codebook,
    load_labeled,
    load_tweets,
    marginal_counts,
    rebalance_subsample,
    stratified_split,
    write_labeled,
    write_tweets,
)
from politopics.errors import (
    DuplicateIdError,
    EmptyClassError,
    SchemaError,
    TargetTooLargeError,
    UnknownAccountError,
)

EPOCH = datetime(2017, 1, 3, tzinfo=timezone.utc)


def make_tweet(i, handle="mc000", text="hello world", is_retweet=False):
    return Tweet(
        id="t%06d" % i,
        account_handle=handle,
        posted_at=EPOCH + timedelta(minutes=i),
        text=text,
        is_retweet=is_retweet,
    )


def make_labeled(n_per_code):
    items = []
    i = 0
    for code, n in sorted(n_per_code.items()):
        for _ in range(n):
            items.append(LabeledTweet(tweet=make_tweet(i), code=code))
            i += 1
    return items


class TestLoadTweets:
    def test_three_valid_lines(self, tmp_path):
        path = tmp_path / "tweets.jsonl"
        corpus = Corpus([make_tweet(i) for i in range(3)])
        write_tweets(corpus, path)
        assert len(load_tweets(path)) == 3

    def test_missing_field_names_line(self, tmp_path):
        path = tmp_path / "tweets.jsonl"
        good = {
            "id": "a", "account_handle": "h",
            "posted_at": "2017-01-03T00:00:00+00:00",
            "text": "x", "is_retweet": False,
        }
        bad = {k: v for k, v in good.items() if k != "text"}
        bad["id"] = "b"
        with open(path, "w") as fh:
            fh.write(json.dumps(good) + "\n")
            fh.write(json.dumps(bad) + "\n")
        with pytest.raises(SchemaError) as excinfo:
            load_tweets(path)
        assert excinfo.value.line == 2
        assert "text" in str(excinfo.value)

    def test_duplicate_id_rejected(self, tmp_path):
        path = tmp_path / "tweets.jsonl"
        write_tweets(Corpus([make_tweet(1)]), path)
        with open(path, "a") as fh:
            record = {
                "id": "t000001", "account_handle": "h",
                "posted_at": "2017-01-03T00:00:00+00:00",
                "text": "again", "is_retweet": False,
            }
            fh.write(json.dumps(record) + "\n")
        with pytest.raises(DuplicateIdError):
            load_tweets(path)

    def test_invalid_json_names_line(self, tmp_path):
        path = tmp_path / "tweets.jsonl"
        path.write_text("not json\n")
        with pytest.raises(SchemaError) as excinfo:
            load_tweets(path)
        assert excinfo.value.line == 1

    def test_missing_file_raises_ioerror(self, tmp_path):
        with pytest.raises(IOError):
            load_tweets(tmp_path / "absent.jsonl")

    def test_thousand_line_roundtrip_preserves_fields(self, tmp_path):
        rng = random.Random(4)
        tweets = []
        for i in range(1000):
            tweets.append(
                Tweet(
                    id="id%06d" % i,
                    account_handle="mc%03d" % rng.randrange(40),
                    posted_at=EPOCH + timedelta(seconds=rng.randrange(10**7)),
                    text="".join(rng.choice("abc éñ#@!9") for _ in range(30)),
                    is_retweet=rng.random() < 0.3,
                )
            )
        corpus = Corpus(tweets)
        path = tmp_path / "tweets.jsonl"
        write_tweets(corpus, path)
        loaded = load_tweets(path)
        assert len(loaded) == 1000
        assert loaded == corpus

    def test_write_then_load_is_identity_on_random_corpora(self, tmp_path):
        rng = random.Random(9)
        for trial in range(10):
            tweets = [
                make_tweet(i, text="x" * rng.randrange(1, 50),
                           is_retweet=bool(rng.getrandbits(1)))
                for i in range(rng.randrange(1, 30))
            ]
            corpus = Corpus(tweets)
            path = tmp_path / ("t%d.jsonl" % trial)
            write_tweets(corpus, path)
            assert load_tweets(path) == corpus


class TestFilterOriginals:
    def test_all_originals_identity(self):
        corpus = Corpus([make_tweet(i) for i in range(5)])
        assert filter_originals(corpus) == corpus

    def test_all_retweets_empty(self):
        corpus = Corpus([make_tweet(i, is_retweet=True) for i in range(5)])
        assert len(filter_originals(corpus)) == 0

    def test_idempotent(self):
        corpus = Corpus(
            [make_tweet(i, is_retweet=(i % 3 == 0)) for i in range(30)]
        )
        once = filter_originals(corpus)
        assert filter_originals(once) == once

    def test_labeled_corpus_sizes_match_published_arithmetic(self):
        # 68,398 labeled tweets minus 8,572 retweets leaves 59,826
        total, retweets = 68398, 8572
        corpus = Corpus(
            make_tweet(i, is_retweet=(i < retweets)) for i in range(total)
        )
        assert len(filter_originals(corpus)) == 59826


class TestStratifiedSplit:
    def test_single_class_90_10(self):
        labeled = make_labeled({3: 100})
        train, test = stratified_split(labeled, 0.1, seed=1)
        assert len(train) == 90 and len(test) == 10

    def test_two_class_80_20(self):
        labeled = make_labeled({1: 80, 2: 20})
        train, test = stratified_split(labeled, 0.1, seed=1)
        test_codes = [item.code for item in test]
        assert test_codes.count(1) == 8
        assert test_codes.count(2) == 2

    def test_same_seed_same_partition(self):
        labeled = make_labeled({1: 37, 2: 12, 3: 51})
        first = stratified_split(labeled, 0.25, seed=42)
        second = stratified_split(labeled, 0.25, seed=42)
        assert first == second

    def test_union_and_disjointness(self):
        labeled = make_labeled({1: 23, 5: 17})
        train, test = stratified_split(labeled, 0.3, seed=0)
        ids = lambda items: {item.tweet.id for item in items}  # noqa: E731
        assert ids(train) | ids(test) == ids(labeled)
        assert not (ids(train) & ids(test))

    def test_test_size_bound_over_random_inputs(self):
        rng = random.Random(7)
        for _ in range(25):
            n_classes = rng.randrange(1, 6)
            counts = {c: rng.randrange(1, 40) for c in range(n_classes)}
            labeled = make_labeled(counts)
            fraction = rng.uniform(0.05, 0.5)
            _, test = stratified_split(labeled, fraction, seed=rng.randrange(99))
            n = len(labeled)
            lo = int(fraction * n) - n_classes
            hi = int(fraction * n) + 1 + n_classes
            assert lo <= len(test) <= hi

    def test_empty_input_raises(self):
        with pytest.raises(EmptyClassError):
            stratified_split([], 0.1, seed=0)


class TestRebalance:
    def test_published_rebalance_arithmetic(self):
        # 39,704 policy + 20,122 not-policy; subsample class 0 to 2,012
        labeled = make_labeled({0: 20122, 1: 39704})
        out = rebalance_subsample(labeled, 0, 2012, seed=3)
        assert len(out) == 41716
        codes = [item.code for item in out]
        assert codes.count(0) == 2012
        assert codes.count(1) == 39704

    def test_target_equal_to_count_is_identity(self):
        labeled = make_labeled({0: 10, 2: 5})
        out = rebalance_subsample(labeled, 0, 10, seed=0)
        assert out == labeled

    def test_target_zero_removes_class(self):
        labeled = make_labeled({0: 10, 2: 5})
        out = rebalance_subsample(labeled, 0, 0, seed=0)
        assert all(item.code != 0 for item in out)
        assert len(out) == 5

    def test_target_too_large(self):
        labeled = make_labeled({0: 4})
        with pytest.raises(TargetTooLargeError):
            rebalance_subsample(labeled, 0, 5, seed=0)

    def test_other_classes_untouched_and_order_kept(self):
        labeled = make_labeled({0: 50, 7: 20, 9: 30})
        out = rebalance_subsample(labeled, 0, 10, seed=5)
        kept_other = [item for item in out if item.code != 0]
        assert kept_other == [item for item in labeled if item.code != 0]


class TestGroupCounts:
    def accounts(self):
        return AccountSet(
            [
                Account("mc000", "GOP", "House", "Man"),
                Account("mc001", "Dem", "Senate", "Woman"),
                Account("mc002", "Dem", "House", "Man"),
            ]
        )

    def test_single_tweet_single_cell(self):
        corpus = Corpus([make_tweet(0, handle="mc000")])
        table = group_counts(corpus, self.accounts())
        assert table == {("GOP", "House", "Man"): 1}

    def test_known_cell_counts(self):
        plan = [("mc000", 4), ("mc001", 2), ("mc002", 3)]
        tweets = []
        i = 0
        for handle, n in plan:
            for _ in range(n):
                tweets.append(make_tweet(i, handle=handle))
                i += 1
        table = group_counts(Corpus(tweets), self.accounts())
        assert table[("GOP", "House", "Man")] == 4
        assert table[("Dem", "Senate", "Woman")] == 2
        assert table[("Dem", "House", "Man")] == 3

    def test_unknown_handle_listed(self):
        corpus = Corpus([make_tweet(0, handle="ghost")])
        with pytest.raises(UnknownAccountError) as excinfo:
            group_counts(corpus, self.accounts())
        assert excinfo.value.handles == ["ghost"]

    def test_total_equals_corpus_size_on_random_corpora(self):
        rng = random.Random(13)
        accounts = self.accounts()
        for _ in range(20):
            corpus = Corpus(
                make_tweet(i, handle="mc%03d" % rng.randrange(3))
                for i in range(rng.randrange(1, 60))
            )
            table = group_counts(corpus, accounts)
            assert sum(table.values()) == len(corpus)

    def test_published_marginals_are_consistent(self):
        # the per-cell tweet counts reported for the 115th Congress
        table = {
            ("Dem", "Senate", "Man"): 143522,
            ("GOP", "Senate", "Man"): 171083,
            ("Dem", "House", "Man"): 441890,
            ("GOP", "House", "Man"): 356870,
            ("Dem", "Senate", "Woman"): 74905,
            ("GOP", "Senate", "Woman"): 19867,
            ("Dem", "House", "Woman"): 212457,
            ("GOP", "House", "Woman"): 65240,
        }
        by_gender = marginal_counts(table, "gender")
        assert by_gender["Man"] == 1113365
        assert by_gender["Woman"] == 372469
        assert sum(by_gender.values()) == 1485834
        assert sum(marginal_counts(table, "party").values()) == 1485834


class TestLabeledIO:
    def test_roundtrip(self, tmp_path):
        labeled = make_labeled({0: 3, 3: 2, 23: 1})
        path = tmp_path / "labeled.jsonl"
        write_labeled(labeled, path)
        assert load_labeled(path) == labeled

    def test_codes_11_and_22_rejected(self, tmp_path):
        path = tmp_path / "labeled.jsonl"
        record = {
            "id": "a", "account_handle": "h",
            "posted_at": "2017-01-03T00:00:00+00:00",
            "text": "x", "is_retweet": False, "code": 11,
        }
        path.write_text(json.dumps(record) + "\n")
        with pytest.raises(SchemaError):
            load_labeled(path)
        with pytest.raises(SchemaError):
            LabeledTweet(tweet=make_tweet(0), code=22)


class TestAccountsAndCodebook:
    def test_load_accounts(self, tmp_path):
        path = tmp_path / "accounts.csv"
        path.write_text(
            "handle,party,chamber,gender\nmc000,Dem,House,Woman\nmc001,GOP,Senate,Man\n"
        )
        accounts = load_accounts(path)
        assert len(accounts) == 2
        assert accounts.get("mc000").gender == "Woman"

    def test_bad_party_rejected(self, tmp_path):
        path = tmp_path / "accounts.csv"
        path.write_text("handle,party,chamber,gender\nmc000,Whig,House,Man\n")
        with pytest.raises(SchemaError):
            load_accounts(path)

    def test_bundled_codebook_shape(self):
        codebook = bundled_codebook()
        assert 11 not in codebook.codes
        assert 22 not in codebook.codes
        assert codebook.label(3) == "health"
        assert codebook.label(26) == "district affairs"
        assert all(24 <= c <= 35 for c in codebook.extended)
        assert set(range(24, 36)) == set(codebook.extended)
        # 0, the 21 policy codes, and the 12 extended codes
        assert len(codebook.codes) == 34

    def test_duplicate_code_rejected(self, tmp_path):
        path = tmp_path / "codebook.csv"
        path.write_text("code,label,extended\n3,health,0\n3,again,0\n")
        with pytest.raises(SchemaError):
            load_codebook(path)
