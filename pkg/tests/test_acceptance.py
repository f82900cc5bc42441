"""Acceptance suite: one test per release criterion.

Each test prints a final ``[ACCEPTANCE] <name>: PASS`` / ``FAIL`` line so
a plain ``pytest -s tests/test_acceptance.py`` reads as a checklist.
Expected values come from independent oracles computed inside each test
(brute-force counting, finite differences, simulation), never from the
code paths under check.
"""

import functools
import json
import math
import random
import time
from fractions import Fraction

import numpy as np

import synthfix
from politopics import cli
from politopics.corpus import (
    LabeledTweet,
    Tweet,
    rebalance_subsample,
    stratified_indices,
)
from politopics.evaluate import cohens_kappa, npmi_coherence
from politopics.features import build_vocab
from politopics.preprocess import TokenizedDoc, default_pipeline, tokenize
from politopics.supervised import (
    FeatureResources,
    SgdParams,
    TrainConfig,
    build_design_matrix,
    compute_scores,
    evaluate,
    softmax_loss_grad,
    train,
)
from politopics.topicmodel import (
    LdaConfig,
    LdaState,
    TopicSummary,
    fit,
    heldout_perplexity,
)
from politopics.features import Vocabulary


def criterion(name):
    """Print the checklist line after the wrapped test runs."""

    def decorate(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                result = fn(*args, **kwargs)
            except BaseException:
                print("[ACCEPTANCE] %s: FAIL" % name)
                raise
            print("[ACCEPTANCE] %s: PASS" % name)
            return result

        return wrapper

    return decorate


@criterion("tokenizer golden suite (bit-exact, under 1 s)")
def test_tokenizer_golden_suite():
    pipeline = default_pipeline()
    cases = [
        ("Heeeeeeeey", ["heeey"]),
        ("Heeeey", ["heeey"]),
        ("heeey stays", ["heeey", "stays"]),
        ("", []),
        ("@RepX Vote NOW!! https://t.co/ab 2020 healthcare",
         ["vote", "healthcare"]),
        ("@handle_only", []),
        ("@a @b @c", []),
        ("see https://example.com/x now", ["see"]),
        ("t.co/short link", ["link"]),
        ("www.site.gov pages", ["pages"]),
        ("budget2019 vote", ["vote"]),
        ("19 votes in 2019", ["votes"]),
        ("covid19 response", ["response"]),
        ("#MedicareForAll passes", ["medicareforall", "passes"]),
        ("great \U0001F44D\U0001F44D work", ["great", "work"]),
        ("\U0001F389 party \U0001F389", ["party"]),
        ("the and of", []),
        ("la de los y", []),
        ("salud educación más fuerte", ["salud", "educación", "fuerte"]),
        ("bill!!! passed...", ["bill", "passed"]),
        ("a I x yz", ["yz"]),
        ("MiXeD CaSe", ["mixed", "case"]),
        ("soooooo good", ["sooo", "good"]),
        ("running run", ["running", "run"]),
        ("aaa.aaa", ["aaa"]),
    ]
    assert len(cases) >= 20
    start = time.monotonic()
    for text, expected in cases:
        assert tokenize(pipeline, text) == expected, text
    assert time.monotonic() - start < 1.0


@criterion("Cohen's kappa vs brute-force contingency oracle (1e-12)")
def test_kappa_against_brute_force_oracle():
    def oracle(a, b):
        table = {}
        for x, y in zip(a, b):
            table[(x, y)] = table.get((x, y), 0) + 1
        n = len(a)
        p_o = sum(v for (x, y), v in table.items() if x == y) / n
        p_e = 0.0
        for c in sorted(set(a) | set(b)):
            row = sum(v for (x, _), v in table.items() if x == c) / n
            col = sum(v for (_, y), v in table.items() if y == c) / n
            p_e += row * col
        if p_e >= 1.0:
            return 1.0 if p_o == 1.0 else 0.0
        return (p_o - p_e) / (1.0 - p_e)

    rng = random.Random(2024)
    for _ in range(100):
        n = rng.randint(10, 1000)
        n_classes = rng.randint(2, 30)
        a = [rng.randrange(n_classes) for _ in range(n)]
        b = [rng.randrange(n_classes) for _ in range(n)]
        assert abs(cohens_kappa(a, b).kappa - oracle(a, b)) < 1e-12
    hand = cohens_kappa([1, 1, 2, 2], [1, 2, 1, 2])
    assert hand.kappa == 0.0


@criterion("LR gradient vs central finite differences (rel err < 1e-4)")
def test_lr_gradient_finite_differences():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(3, 10))
        d = int(rng.integers(2, 7))
        c = int(rng.integers(2, 6))
        x = rng.normal(size=(n, d))
        y = rng.integers(0, c, size=n)
        weights = rng.normal(size=(c, d)) * 0.7
        biases = rng.normal(size=c) * 0.7
        l2 = float(rng.uniform(0, 0.1))
        _, grad_w, grad_b = softmax_loss_grad(weights, biases, x, y, l2)
        h = 1e-6
        for arr, grad in ((weights, grad_w), (biases, grad_b)):
            it = np.nditer(arr, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                orig = arr[idx]
                arr[idx] = orig + h
                up, _, _ = softmax_loss_grad(weights, biases, x, y, l2)
                arr[idx] = orig - h
                down, _, _ = softmax_loss_grad(weights, biases, x, y, l2)
                arr[idx] = orig
                numeric = (up - down) / (2 * h)
                rel = abs(numeric - grad[idx]) / max(
                    abs(numeric) + abs(grad[idx]), 1e-8
                )
                worst = max(worst, rel)
    assert worst < 1e-4


@criterion("classifier ordering on separable corpus (< 30 s)")
def test_classifier_ordering():
    start = time.monotonic()
    docs, labels = synthfix.separable_class_corpus(
        seed=21, vocab_size=200, n_docs=1000
    )
    vocab = build_vocab(docs, min_df=1)
    resources = FeatureResources(vocab=vocab)

    test_idx = stratified_indices(labels, 0.1, 5)
    train_docs = [d for i, d in enumerate(docs) if i not in test_idx]
    test_docs = [d for i, d in enumerate(docs) if i in test_idx]
    train_y = [c for i, c in enumerate(labels) if i not in test_idx]
    test_y = [c for i, c in enumerate(labels) if i in test_idx]

    scores = {}
    for algorithm in ("naive_bayes", "logistic_regression", "linear_svm"):
        config = TrainConfig(algorithm=algorithm, seed=5, sgd=SgdParams())
        x_train = build_design_matrix(train_docs, vocab, config, resources)
        x_test = build_design_matrix(test_docs, vocab, config, resources)
        clf = train(config, x_train, train_y)
        scores[algorithm] = evaluate(clf, x_test, test_y).weighted_f1

    assert scores["logistic_regression"] >= 0.95
    assert scores["linear_svm"] >= 0.95
    assert scores["naive_bayes"] >= 0.85

    # dummy measured over the full corpus against a simulated expectation
    config = TrainConfig(algorithm="dummy", seed=5)
    x_all = build_design_matrix(docs, vocab, config, resources)
    dummy = train(config, x_all, labels)
    dummy_f1 = evaluate(dummy, x_all, labels).weighted_f1
    classes = sorted(set(labels))
    priors = np.array([labels.count(c) for c in classes], dtype=float)
    priors /= priors.sum()
    sim_rng = np.random.default_rng(9001)
    simulated = np.mean(
        [
            compute_scores(
                labels,
                list(sim_rng.choice(classes, size=len(labels), p=priors)),
            ).weighted_f1
            for _ in range(100)
        ]
    )
    assert abs(dummy_f1 - simulated) < 0.05
    # qualitative ordering: LR and SVM >= NB, and everything far above dummy
    assert scores["logistic_regression"] >= scores["naive_bayes"]
    assert scores["linear_svm"] >= scores["naive_bayes"]
    assert scores["naive_bayes"] > dummy_f1 + 0.2
    assert time.monotonic() - start < 30.0


def greedy_match_cosines(planted, recovered):
    sims = np.zeros((planted.shape[0], recovered.shape[0]))
    for i in range(planted.shape[0]):
        for j in range(recovered.shape[0]):
            sims[i, j] = planted[i] @ recovered[j] / (
                np.linalg.norm(planted[i]) * np.linalg.norm(recovered[j])
            )
    taken = sims.copy()
    out = []
    for _ in range(planted.shape[0]):
        i, j = np.unravel_index(np.argmax(taken), taken.shape)
        out.append(taken[i, j])
        taken[i, :] = -np.inf
        taken[:, j] = -np.inf
    return out


@criterion("LDA recovers planted topics (mean cosine >= 0.8, < 5 min)")
def test_lda_recovery():
    start = time.monotonic()
    docs, planted = synthfix.planted_lda_corpus(
        seed=42, k=10, vocab_size=500, n_docs=2000, doc_len=15, alpha=0.1
    )
    config = LdaConfig(k=10, seed=7, alpha=0.1, beta=0.01,
                       iterations=200, burn_in=50)
    state = fit(config, docs)
    recovered = state.phi(config)
    # line the recovered columns up with the planted vocabulary order
    columns = np.array([int(t[1:]) for t in state.vocab.tokens])
    aligned = np.zeros((10, 500))
    aligned[:, columns] = recovered
    cosines = greedy_match_cosines(planted, aligned)
    assert float(np.mean(cosines)) >= 0.8
    assert time.monotonic() - start < 300.0


@criterion("LDA count conservation each 10th sweep; replay byte-identical")
def test_lda_conservation_and_replay():
    rng = np.random.default_rng(3)
    words = ["w%02d" % i for i in range(50)]
    docs = [
        TokenizedDoc(str(i), tuple(rng.choice(words, size=rng.integers(2, 15))))
        for i in range(80)
    ]
    total_tokens = sum(len(d.tokens) for d in docs)
    for sweeps in range(10, 101, 10):
        config = LdaConfig(k=6, seed=11, iterations=sweeps, burn_in=0)
        state = fit(config, docs)
        state.check_counts()
        assert int(state.n_k.sum()) == total_tokens
        for d, doc in enumerate(state.docs):
            assert int(state.n_dk[d].sum()) == len(doc)
        assert np.array_equal(state.n_kw.sum(axis=1), state.n_k)
    config = LdaConfig(k=6, seed=11, iterations=100, burn_in=0)
    first = fit(config, docs)
    second = fit(config, docs)
    for z1, z2 in zip(first.z, second.z):
        assert np.array_equal(z1, z2)


@criterion("NPMI: hand corpus 1e-9; co-occurring pair 1.0; independent ~0")
def test_npmi_oracles():
    # five documents expanded by hand into 6 windows of size 3
    reference = [
        TokenizedDoc("r1", ("health", "care", "bill")),
        TokenizedDoc("r2", ("health", "care", "vote", "senate")),
        TokenizedDoc("r3", ("tax", "cut", "vote")),
        TokenizedDoc("r4", ("health", "tax")),
        TokenizedDoc("r5", ("care",)),
    ]

    def manual(joint, p_a, p_b, epsilon=1e-12):
        joint = float(joint) + epsilon
        if float(p_a) == 0.0 or float(p_b) == 0.0:
            return -1.0
        if joint >= 1.0:
            return 1.0
        value = math.log(joint / (float(p_a) * float(p_b))) / -math.log(joint)
        return max(-1.0, min(1.0, value))

    n = Fraction(6)
    topics = [
        TopicSummary(0, (("health", 1.0), ("care", 0.9), ("tax", 0.8))),
        TopicSummary(1, (("tax", 1.0), ("cut", 0.9))),
    ]
    result = npmi_coherence(topics, reference, window=3)
    expected0 = (
        manual(Fraction(2) / n, Fraction(3) / n, Fraction(4) / n)
        + manual(Fraction(1) / n, Fraction(3) / n, Fraction(2) / n)
        + manual(Fraction(0) / n, Fraction(4) / n, Fraction(2) / n)
    ) / 3
    expected1 = manual(Fraction(1) / n, Fraction(2) / n, Fraction(1) / n)
    assert result.n_windows == 6
    assert abs(result.per_topic[0] - expected0) < 1e-9
    assert abs(result.per_topic[1] - expected1) < 1e-9

    # a pair that always appears together and never separately
    always = [TokenizedDoc(str(i), ("aa", "bb")) for i in range(6)]
    always += [TokenizedDoc("f%d" % i, ("xx", "yy")) for i in range(6)]
    score = npmi_coherence(
        [TopicSummary(0, (("aa", 1.0), ("bb", 0.9)))], always, window=4
    )
    assert score.per_topic[0] == 1.0

    # independently planted words over a 50k-window reference
    rng = np.random.default_rng(0)
    filler = ["f%02d" % i for i in range(50)]
    reference_big = []
    for i in range(50000):
        tokens = [str(rng.choice(filler)), str(rng.choice(filler))]
        if rng.random() < 0.3:
            tokens.append("aa")
        if rng.random() < 0.3:
            tokens.append("bb")
        reference_big.append(TokenizedDoc(str(i), tuple(tokens)))
    independent = npmi_coherence(
        [TopicSummary(0, (("aa", 1.0), ("bb", 0.9)))], reference_big, window=10
    )
    assert independent.n_windows == 50000
    assert abs(independent.per_topic[0]) <= 0.05


@criterion("held-out perplexity: uniform model = V; true K beats K=1")
def test_perplexity_oracles():
    tokens = ["w%d" % i for i in range(10)]
    vocab = Vocabulary(
        index={t: i for i, t in enumerate(tokens)},
        doc_freq={t: 1 for t in tokens},
        n_docs=1,
    )
    empty_state = LdaState(doc_ids=(), docs=[], z=[], k=3, vocab=vocab)
    config = LdaConfig(k=3, seed=1, alpha=0.4, iterations=1, burn_in=0)
    heldout = [
        TokenizedDoc("h1", ("w0", "w3", "w9", "w4")),
        TokenizedDoc("h2", ("w2", "w2", "w7")),
    ]
    ppl = heldout_perplexity(empty_state, config, heldout)
    assert abs(ppl - 10.0) < 1e-6

    docs, _ = synthfix.planted_lda_corpus(seed=5, k=5, vocab_size=100,
                                          n_docs=400, doc_len=12)
    train_docs, heldout_docs = docs[:360], docs[360:]
    vocab = build_vocab(train_docs, min_df=1)
    true_config = LdaConfig(k=5, seed=3, alpha=0.1, iterations=80, burn_in=0)
    flat_config = LdaConfig(k=1, seed=3, alpha=0.1, iterations=80, burn_in=0)
    ppl_true = heldout_perplexity(
        fit(true_config, train_docs, vocab=vocab), true_config, heldout_docs
    )
    ppl_flat = heldout_perplexity(
        fit(flat_config, train_docs, vocab=vocab), flat_config, heldout_docs
    )
    assert ppl_true >= 1.0
    assert ppl_true < ppl_flat


@criterion("end-to-end CLI on 10k-tweet fixture (< 60 s, byte-identical rerun)")
def test_end_to_end_cli(tmp_path):
    fixture = tmp_path / "fixture"
    synthfix.build_cli_fixture(fixture, n_tweets=10000, n_labeled=1500,
                               k=8, iterations=120)
    config = str(fixture / "config.json")

    def run_chain(out_dir):
        for command in ("preprocess", "train-supervised", "fit-lda",
                        "compare", "report"):
            code = cli.main(
                [command, "--config", config, "--out-dir", str(out_dir)]
            )
            assert code == 0, command

    start = time.monotonic()
    out_a = tmp_path / "out_a"
    run_chain(out_a)
    elapsed = time.monotonic() - start
    assert elapsed < 60.0, "pipeline took %.1f s" % elapsed

    for name in (cli.DIST_CSV_FILE, cli.BREAKDOWN_FILE, cli.FEATURES_SU_FILE,
                 cli.FEATURES_UN_FILE, cli.KAPPA_FILE):
        assert (out_a / name).exists(), name

    with open(out_a / cli.DIST_JSON_FILE) as fh:
        rows = json.load(fh)
    for column in ("su", "un1", "un2"):
        total = sum(r[column] for r in rows if r[column] is not None)
        assert abs(total - 1.0) < 1e-6, column

    with open(out_a / cli.KAPPA_FILE) as fh:
        payload = json.load(fh)
    assert payload["n_compared"] > 0

    out_b = tmp_path / "out_b"
    run_chain(out_b)
    names_a = sorted(p.name for p in out_a.iterdir())
    names_b = sorted(p.name for p in out_b.iterdir())
    assert names_a == names_b
    for name in names_a:
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes(), name


@criterion("rebalancing arithmetic: 20,122 -> 2,012 leaves 41,716")
def test_rebalancing_fixture():
    from datetime import datetime, timezone

    stamp = datetime(2017, 1, 3, tzinfo=timezone.utc)

    def mk(i, code):
        return LabeledTweet(
            tweet=Tweet(
                id="t%06d" % i, account_handle="mc", posted_at=stamp,
                text="x", is_retweet=False,
            ),
            code=code,
        )

    labeled = [mk(i, 0) for i in range(20122)]
    policy_codes = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 12, 13, 14, 15, 16, 17,
                    18, 19, 20, 21, 23]
    labeled += [mk(20122 + i, policy_codes[i % len(policy_codes)])
                for i in range(39704)]
    assert len(labeled) == 59826
    rebalanced = rebalance_subsample(labeled, 0, 2012, seed=1)
    assert len(rebalanced) == 41716
    codes = [item.code for item in rebalanced]
    assert codes.count(0) == 2012
    assert sum(1 for c in codes if c != 0) == 39704
