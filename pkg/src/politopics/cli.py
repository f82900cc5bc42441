"""Command-line pipeline: archived tweets in, report CSVs out.

Subcommands mirror the workflow stages so partial reruns are cheap:

    preprocess        tweets.jsonl -> tokenized.jsonl + dropped.json
    train-supervised  labeled corpus -> model, eval, full-corpus predictions
    fit-lda           tokenized cache -> state file + top-1/top-2 assignments
    sweep-k           one fit per K with perplexity/coherence diagnostics
    coherence         NPMI report for a fitted state
    compare           Cohen's kappa between the two models' policy codes
    report            distribution, breakdown, and feature tables

Every subcommand takes --config (JSON) plus flag overrides; --seed wins
over the config seed, and with neither given the documented default
seed 7 applies, so nothing is ever silently random. Outputs are
deterministic: rerunning a command with unchanged inputs and seed
produces byte-identical files.

Exit codes: 0 ok, 2 configuration problem, 3 data problem, 4 internal.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from pathlib import Path

from . import corpus as corpus_mod
from . import evaluate as evaluate_mod
from . import features as features_mod
from . import preprocess as preprocess_mod
from . import report as report_mod
from . import supervised as supervised_mod
from . import topicmodel as topicmodel_mod
from .errors import ConfigError, DataError

log = logging.getLogger("politopics")

DEFAULT_SEED = 7

TOKENIZED_FILE = "tokenized.jsonl"
DROPPED_FILE = "dropped.json"
SU_MODEL_FILE = "su_model.json"
SU_VOCAB_FILE = "su_vocab.json"
SU_EVAL_CSV = "su_eval.csv"
SU_EVAL_JSON = "su_eval.json"
SU_PRED_FILE = "su_predictions.csv"
SU_MATRIX_FILE = "su_matrix.csv"
LDA_STATE_FILE = "lda_state.json"
LDA_TOPICS_FILE = "lda_topics.csv"
UN_ASSIGN_FILE = "un_assignments.csv"
SWEEP_DIAG_FILE = "sweep_diagnostics.csv"
COHERENCE_FILE = "coherence.csv"
KAPPA_FILE = "kappa.json"
DIST_CSV_FILE = "distribution.csv"
DIST_JSON_FILE = "distribution.json"
BREAKDOWN_FILE = "breakdown.csv"
BREAKDOWN_UN2_FILE = "breakdown_un2.csv"
FEATURES_SU_FILE = "features_su.csv"
FEATURES_UN_FILE = "features_un.csv"
SUMMARY_FILE = "report_summary.json"

DEFAULTS = {
    "seed": DEFAULT_SEED,
    "out_dir": "out",
    "paths": {
        "tweets": None,
        "accounts": None,
        "codebook": None,
        "stoplists": None,  # None -> bundled English + Spanish snapshots
        "labeled": None,
        "labelmap": None,
        "embeddings": None,
        "lexicon": None,
    },
    "preprocess": {"max_repeat": 3, "min_token_len": 2},
    "supervised": {
        "algorithm": "logistic_regression",
        "feature_set": "unigram",
        "embedding_source": "corpus",
        "test_fraction": 0.1,
        "min_df": 5,
        "rebalance_class": 0,
        "rebalance_target": None,
        "sgd": {
            "learning_rate": 0.1,
            "epochs": 20,
            "l2_penalty": 1e-4,
            "batch_size": 64,
        },
        "sgns": {"dim": 100, "window": 5, "negatives": 5, "epochs": 5},
        "top_features": 10,
    },
    "lda": {
        "k": 50,
        "alpha": None,
        "beta": 0.01,
        "iterations": 1000,
        "burn_in": 200,
        "min_df": 2,
        "top_words": 10,
    },
    "sweep": {"k_values": list(topicmodel_mod.DEFAULT_SWEEP_KS),
              "heldout_fraction": 0.1},
    "coherence": {"window": 10, "epsilon": 1e-12, "top_n": 10},
    "report": {"group_by": "party"},
}


def _merge(base, override):
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


@dataclasses.dataclass
class RunConfig:
    raw: dict
    base_dir: Path

    @property
    def seed(self):
        return int(self.raw["seed"])

    @property
    def out_dir(self):
        out = Path(self.raw["out_dir"])
        return out if out.is_absolute() else self.base_dir / out

    def section(self, name):
        return self.raw[name]

    def path(self, key):
        value = self.raw["paths"].get(key)
        if value is None:
            return None
        p = Path(value)
        return p if p.is_absolute() else self.base_dir / p

    def stoplist_paths(self):
        value = self.raw["paths"].get("stoplists")
        if value is None:
            return list(preprocess_mod.BUNDLED_STOPLISTS)
        return [
            Path(v) if Path(v).is_absolute() else self.base_dir / v for v in value
        ]

    def require_path(self, key, what=None):
        p = self.path(key)
        if p is None:
            raise ConfigError("config is missing the %r path" % (what or key))
        if not p.exists():
            raise ConfigError("%s file not found: %s" % (what or key, p))
        return p

    def out_file(self, name):
        return self.out_dir / name

    def require_artifact(self, name, hint):
        p = self.out_file(name)
        if not p.exists():
            raise ConfigError("%s not found at %s (run `%s` first)" % (name, p, hint))
        return p


def load_config(config_path, overrides=None) -> RunConfig:
    if config_path is not None:
        config_path = Path(config_path)
        if not config_path.exists():
            raise ConfigError("config file not found: %s" % config_path)
        try:
            with open(config_path, encoding="utf-8") as fh:
                user = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError("config is not valid JSON: %s" % exc) from exc
        base_dir = config_path.parent
    else:
        user = {}
        base_dir = Path.cwd()
    raw = _merge(DEFAULTS, user)
    if overrides:
        raw = _merge(raw, overrides)
    return RunConfig(raw=raw, base_dir=base_dir)


def _build_pipeline(cfg: RunConfig):
    paths = cfg.stoplist_paths()
    for p in paths:
        if not Path(p).exists():
            raise ConfigError("stoplist file not found: %s" % p)
    params = cfg.section("preprocess")
    return preprocess_mod.TokenPipeline(
        stoplist=frozenset(preprocess_mod.load_stoplist(paths)),
        max_repeat=int(params["max_repeat"]),
        min_token_len=int(params["min_token_len"]),
    )


def cmd_preprocess(cfg: RunConfig):
    tweets_path = cfg.require_path("tweets")
    pipeline = _build_pipeline(cfg)
    corpus = corpus_mod.load_tweets(tweets_path)
    originals = corpus_mod.filter_originals(corpus)
    log.info("loaded %d tweets, %d originals", len(corpus), len(originals))
    docs, dropped = preprocess_mod.preprocess_corpus(pipeline, originals)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    preprocess_mod.write_tokenized(docs, cfg.out_file(TOKENIZED_FILE))
    with open(cfg.out_file(DROPPED_FILE), "w", encoding="utf-8") as fh:
        json.dump(sorted(dropped), fh)
    log.info(
        "wrote %s (%d docs) and %s (%d empty after preprocessing)",
        TOKENIZED_FILE, len(docs), DROPPED_FILE, len(dropped),
    )
    return 0


def _load_feature_resources(cfg: RunConfig, config, train_docs, vocab):
    """Embeddings and lexicon as the configured feature set demands."""
    sup = cfg.section("supervised")
    resources = supervised_mod.FeatureResources(vocab=vocab)
    needs_embeddings = "embedding" in config.feature_set
    needs_lexicon = config.feature_set == "unigram_lexicon"
    if needs_embeddings and config.embedding_source == "pretrained":
        resources.pretrained_embeddings = features_mod.load_embeddings(
            cfg.require_path("embeddings")
        )
    if needs_embeddings and config.embedding_source == "corpus":
        sgns = sup["sgns"]
        resources.corpus_embeddings, _ = features_mod.train_sgns(
            train_docs,
            dim=int(sgns["dim"]),
            window=int(sgns["window"]),
            negatives=int(sgns["negatives"]),
            epochs=int(sgns["epochs"]),
            seed=cfg.seed,
        )
    if needs_lexicon:
        resources.lexicon = features_mod.load_lexicon(cfg.require_path("lexicon"))
    return resources


def _matrix_resources(cfg: RunConfig, train_docs, vocab):
    """The full benchmark needs every feature family at once."""
    sup = cfg.section("supervised")
    sgns = sup["sgns"]
    corpus_table, _ = features_mod.train_sgns(
        train_docs,
        dim=int(sgns["dim"]),
        window=int(sgns["window"]),
        negatives=int(sgns["negatives"]),
        epochs=int(sgns["epochs"]),
        seed=cfg.seed,
    )
    return supervised_mod.FeatureResources(
        vocab=vocab,
        pretrained_embeddings=features_mod.load_embeddings(
            cfg.require_path("embeddings")
        ),
        corpus_embeddings=corpus_table,
        lexicon=features_mod.load_lexicon(cfg.require_path("lexicon")),
    )


def _report_to_dict(report):
    return {
        "classes": list(report.classes),
        "confusion": report.confusion.tolist(),
        "per_class": {str(c): report.per_class[c] for c in report.classes},
        "macro_precision": report.macro_precision,
        "macro_recall": report.macro_recall,
        "macro_f1": report.macro_f1,
        "weighted_precision": report.weighted_precision,
        "weighted_recall": report.weighted_recall,
        "weighted_f1": report.weighted_f1,
    }


def cmd_train_supervised(cfg: RunConfig, run_matrix=False):
    labeled_path = cfg.require_path("labeled")
    cache_path = cfg.require_artifact(TOKENIZED_FILE, "politopics preprocess")
    pipeline = _build_pipeline(cfg)
    sup = cfg.section("supervised")

    labeled = corpus_mod.load_labeled(labeled_path)
    labeled = [item for item in labeled if not item.tweet.is_retweet]
    if sup.get("rebalance_target") is not None:
        labeled = corpus_mod.rebalance_subsample(
            labeled,
            int(sup["rebalance_class"]),
            int(sup["rebalance_target"]),
            cfg.seed,
        )
        log.info("rebalanced to %d labeled tweets", len(labeled))

    docs = [
        preprocess_mod.TokenizedDoc(
            tweet_id=item.tweet.id,
            tokens=tuple(preprocess_mod.tokenize(pipeline, item.tweet.text)),
        )
        for item in labeled
    ]
    labels = [item.code for item in labeled]

    config = supervised_mod.TrainConfig(
        algorithm=sup["algorithm"],
        feature_set=sup["feature_set"],
        embedding_source=sup["embedding_source"],
        test_fraction=float(sup["test_fraction"]),
        seed=cfg.seed,
        sgd=supervised_mod.SgdParams(
            learning_rate=float(sup["sgd"]["learning_rate"]),
            epochs=int(sup["sgd"]["epochs"]),
            l2_penalty=float(sup["sgd"]["l2_penalty"]),
            batch_size=int(sup["sgd"]["batch_size"]),
        ),
    )

    test_idx = corpus_mod.stratified_indices(labels, config.test_fraction, cfg.seed)
    train_docs = [d for i, d in enumerate(docs) if i not in test_idx]
    test_docs = [d for i, d in enumerate(docs) if i in test_idx]
    train_labels = [c for i, c in enumerate(labels) if i not in test_idx]
    test_labels = [c for i, c in enumerate(labels) if i in test_idx]
    log.info("training on %d tweets, testing on %d", len(train_docs), len(test_docs))

    vocab = features_mod.build_vocab(train_docs, min_df=int(sup["min_df"]))
    resources = _load_feature_resources(cfg, config, train_docs, vocab)

    x_train = supervised_mod.build_design_matrix(train_docs, vocab, config, resources)
    x_test = supervised_mod.build_design_matrix(test_docs, vocab, config, resources)
    clf = supervised_mod.train(config, x_train, train_labels)
    report = supervised_mod.evaluate(clf, x_test, test_labels)
    log.info(
        "%s weighted F1 %.3f (precision %.3f, recall %.3f)",
        config.algorithm, report.weighted_f1,
        report.weighted_precision, report.weighted_recall,
    )

    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    supervised_mod.save_model(clf, cfg.out_file(SU_MODEL_FILE))
    with open(cfg.out_file(SU_VOCAB_FILE), "w", encoding="utf-8") as fh:
        json.dump(
            {
                "tokens": vocab.tokens,
                "doc_freq": [vocab.doc_freq[t] for t in vocab.tokens],
                "n_docs": vocab.n_docs,
            },
            fh,
            sort_keys=True,
        )
    supervised_mod.write_matrix_csv([(config, report)], cfg.out_file(SU_EVAL_CSV))
    with open(cfg.out_file(SU_EVAL_JSON), "w", encoding="utf-8") as fh:
        json.dump(_report_to_dict(report), fh, sort_keys=True)

    # predictions for the whole preprocessed corpus
    cached = preprocess_mod.read_tokenized(cache_path)
    nonempty = [d for d in cached if d.tokens]
    rows = {}
    if nonempty:
        x_all = supervised_mod.build_design_matrix(nonempty, vocab, config, resources)
        codes, scores = supervised_mod.predict_many(clf, x_all)
        for doc, code, score_row in zip(nonempty, codes, scores):
            rows[doc.tweet_id] = (int(code), float(score_row.max()))
    with open(cfg.out_file(SU_PRED_FILE), "w", encoding="utf-8") as fh:
        fh.write("tweet_id,su_code,su_score\n")
        for doc in cached:
            if doc.tweet_id in rows:
                code, score = rows[doc.tweet_id]
            else:
                # emptied by preprocessing: forced not-policy, degenerate input
                code, score = corpus_mod.NOT_POLICY_CODE, 1.0
            fh.write("%s,%d,%r\n" % (doc.tweet_id, code, score))
    log.info("wrote %s (%d tweets)", SU_PRED_FILE, len(cached))

    if run_matrix:
        matrix_resources = _matrix_resources(cfg, train_docs, vocab)
        configs = supervised_mod.default_matrix_configs(
            cfg.seed, sgd=config.sgd, test_fraction=config.test_fraction
        )
        results = supervised_mod.run_classifier_matrix(
            docs, labels, configs, matrix_resources
        )
        supervised_mod.write_matrix_csv(results, cfg.out_file(SU_MATRIX_FILE))
        log.info("wrote %s (%d rows)", SU_MATRIX_FILE, len(results))
    return 0


def _lda_config(cfg: RunConfig, k=None):
    lda = cfg.section("lda")
    return topicmodel_mod.LdaConfig(
        k=int(k if k is not None else lda["k"]),
        seed=cfg.seed,
        alpha=None if lda["alpha"] is None else float(lda["alpha"]),
        beta=float(lda["beta"]),
        iterations=int(lda["iterations"]),
        burn_in=int(lda["burn_in"]),
    )


def _lda_documents(cfg: RunConfig):
    """Tokenized cache restricted to the LDA vocabulary.

    Returns (vocab, kept_docs, excluded_ids) where excluded tweets were
    empty after preprocessing or lost every token to vocabulary pruning.
    """
    cache_path = cfg.require_artifact(TOKENIZED_FILE, "politopics preprocess")
    cached = preprocess_mod.read_tokenized(cache_path)
    nonempty = [d for d in cached if d.tokens]
    excluded = [d.tweet_id for d in cached if not d.tokens]
    if not nonempty:
        raise DataError("every document is empty after preprocessing")
    vocab = features_mod.build_vocab(nonempty, min_df=int(cfg.section("lda")["min_df"]))
    kept = []
    for doc in nonempty:
        tokens = tuple(t for t in doc.tokens if t in vocab.index)
        if tokens:
            kept.append(preprocess_mod.TokenizedDoc(doc.tweet_id, tokens))
        else:
            excluded.append(doc.tweet_id)
    return vocab, kept, excluded, [d.tweet_id for d in cached]


def cmd_fit_lda(cfg: RunConfig):
    vocab, kept, excluded, order = _lda_documents(cfg)
    config = _lda_config(cfg)
    log.info("fitting LDA: k=%d over %d docs (%d excluded)",
             config.k, len(kept), len(excluded))
    state = topicmodel_mod.fit(config, kept, vocab=vocab)

    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    topicmodel_mod.save_state(state, config, cfg.out_file(LDA_STATE_FILE))

    top_n = int(cfg.section("lda")["top_words"])
    with open(cfg.out_file(LDA_TOPICS_FILE), "w", encoding="utf-8") as fh:
        fh.write("topic_id,top_words\n")
        for topic in range(state.k):
            summary = topicmodel_mod.top_words(state, config, topic, top_n)
            fh.write("%d,%s\n" % (topic, " ".join(summary.tokens)))

    assigned = {}
    for d in range(state.n_docs):
        doc = topicmodel_mod.doc_topics(state, config, d)
        if state.k >= 2:
            first, second = topicmodel_mod.top2_assign(doc)
            assigned[doc.tweet_id] = (
                first, float(doc.theta[first]), second, float(doc.theta[second])
            )
        else:
            assigned[doc.tweet_id] = (0, 1.0, evaluate_mod.SENTINEL_TOPIC, 0.0)
    with open(cfg.out_file(UN_ASSIGN_FILE), "w", encoding="utf-8") as fh:
        fh.write("tweet_id,un1_topic,un1_prob,un2_topic,un2_prob\n")
        sentinel = evaluate_mod.SENTINEL_TOPIC
        for tweet_id in order:
            t1, p1, t2, p2 = assigned.get(tweet_id, (sentinel, 0.0, sentinel, 0.0))
            fh.write("%s,%d,%r,%d,%r\n" % (tweet_id, t1, p1, t2, p2))
    log.info("wrote %s, %s, %s", LDA_STATE_FILE, LDA_TOPICS_FILE, UN_ASSIGN_FILE)
    return 0


def cmd_sweep(cfg: RunConfig, k_values=None):
    vocab, kept, _, _ = _lda_documents(cfg)
    sweep = cfg.section("sweep")
    ks = [int(k) for k in (k_values if k_values is not None else sweep["k_values"])]
    base = _lda_config(cfg, k=max(ks))
    coh = cfg.section("coherence")
    results = topicmodel_mod.sweep_k(
        kept,
        ks,
        base,
        heldout_fraction=float(sweep["heldout_fraction"]),
        coherence_top_n=int(coh["top_n"]),
        window=int(coh["window"]),
        epsilon=float(coh["epsilon"]),
        vocab=vocab,
    )
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    for result in results:
        topicmodel_mod.save_state(
            result.state, result.config, cfg.out_file("lda_state_k%d.json" % result.k)
        )
    with open(cfg.out_file(SWEEP_DIAG_FILE), "w", encoding="utf-8") as fh:
        fh.write("k,heldout_perplexity,mean_npmi\n")
        for result in results:
            fh.write("%d,%r,%r\n" % (result.k, result.perplexity, result.mean_npmi))
    log.info("swept %d values of k; diagnostics in %s", len(results), SWEEP_DIAG_FILE)
    return 0


def cmd_coherence(cfg: RunConfig):
    state_path = cfg.require_artifact(LDA_STATE_FILE, "politopics fit-lda")
    cache_path = cfg.require_artifact(TOKENIZED_FILE, "politopics preprocess")
    state, config = topicmodel_mod.load_state(state_path)
    coh = cfg.section("coherence")
    reference = [d for d in preprocess_mod.read_tokenized(cache_path) if d.tokens]
    summaries = [
        topicmodel_mod.top_words(state, config, t, int(coh["top_n"]))
        for t in range(state.k)
    ]
    result = evaluate_mod.npmi_coherence(
        summaries,
        reference,
        window=int(coh["window"]),
        epsilon=float(coh["epsilon"]),
        reference_label="tokenized corpus",
    )
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    evaluate_mod.write_coherence_csv(result, summaries, cfg.out_file(COHERENCE_FILE))
    log.info("mean NPMI %.4f over %d topics", result.mean, state.k)
    return 0


def _read_su_predictions(path):
    pairs = []
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            pairs.append((row["tweet_id"], int(row["su_code"])))
    return pairs


def _read_un_assignments(path):
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append(
                (row["tweet_id"], int(row["un1_topic"]), int(row["un2_topic"]))
            )
    return rows


def _load_labelmap_for_run(cfg: RunConfig):
    path = cfg.path("labelmap")
    if path is None or not path.exists():
        raise DataError("label map not found: %s" % (path or "(not configured)"))
    return evaluate_mod.load_labelmap(path)


def cmd_compare(cfg: RunConfig):
    su_path = cfg.require_artifact(SU_PRED_FILE, "politopics train-supervised")
    un_path = cfg.require_artifact(UN_ASSIGN_FILE, "politopics fit-lda")
    label_map = _load_labelmap_for_run(cfg)
    su = _read_su_predictions(su_path)
    un1 = [(tweet_id, t1) for tweet_id, t1, _ in _read_un_assignments(un_path)]

    su_codes, un_codes, exclusions = evaluate_mod.align_for_comparison(
        su, un1, label_map
    )
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    payload = {"n_compared": len(su_codes), "exclusions": exclusions}
    if su_codes:
        agreement = evaluate_mod.cohens_kappa(su_codes, un_codes)
        payload.update(
            {
                "kappa": agreement.kappa,
                "p_observed": agreement.p_observed,
                "p_expected": agreement.p_expected,
            }
        )
        print("Cohen's kappa: %.3f (n=%d)" % (agreement.kappa, agreement.n))
    else:
        payload["kappa"] = None
        print("Cohen's kappa: undefined (no comparable policy tweets)")
    with open(cfg.out_file(KAPPA_FILE), "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)
    return 0


def cmd_report(cfg: RunConfig):
    su_path = cfg.require_artifact(SU_PRED_FILE, "politopics train-supervised")
    un_path = cfg.require_artifact(UN_ASSIGN_FILE, "politopics fit-lda")
    state_path = cfg.require_artifact(LDA_STATE_FILE, "politopics fit-lda")
    model_path = cfg.require_artifact(SU_MODEL_FILE, "politopics train-supervised")
    vocab_path = cfg.require_artifact(SU_VOCAB_FILE, "politopics train-supervised")
    label_map = _load_labelmap_for_run(cfg)
    codebook = (
        corpus_mod.load_codebook(cfg.require_path("codebook"))
        if cfg.path("codebook") is not None
        else corpus_mod.bundled_codebook()
    )

    su = _read_su_predictions(su_path)
    assignments = _read_un_assignments(un_path)
    mapped = evaluate_mod.apply_label_map(assignments, label_map)

    su_codes = [code for _, code in su]
    un1_codes = [c1 for _, c1, _ in mapped]
    un2_codes = [c2 for _, _, c2 in mapped]

    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    table = report_mod.distribution_table(su_codes, un1_codes, un2_codes, codebook)
    report_mod.write_distribution_csv(table, cfg.out_file(DIST_CSV_FILE), codebook)
    report_mod.write_distribution_json(table, cfg.out_file(DIST_JSON_FILE), codebook)

    group_by = cfg.section("report")["group_by"]
    tweets = corpus_mod.load_tweets(cfg.require_path("tweets"))
    accounts = corpus_mod.load_accounts(cfg.require_path("accounts"))
    breakdown = report_mod.group_breakdown(su, tweets, accounts, group_by, codebook)
    report_mod.write_breakdown_csv(breakdown, cfg.out_file(BREAKDOWN_FILE), codebook)
    if breakdown.omitted_codes:
        log.info(
            "codes with no tweets omitted from %s: %s",
            BREAKDOWN_FILE,
            ", ".join(str(c) for c in breakdown.omitted_codes),
        )
    un2_pairs = [(tweet_id, c2) for tweet_id, _, c2 in mapped]
    breakdown_un2 = report_mod.group_breakdown(
        un2_pairs, tweets, accounts, group_by, codebook
    )
    report_mod.write_breakdown_csv(
        breakdown_un2, cfg.out_file(BREAKDOWN_UN2_FILE), codebook
    )

    clf = supervised_mod.load_model(model_path)
    with open(vocab_path, encoding="utf-8") as fh:
        vocab_payload = json.load(fh)
    vocab = features_mod.Vocabulary(
        index={t: i for i, t in enumerate(vocab_payload["tokens"])},
        doc_freq=dict(zip(vocab_payload["tokens"], vocab_payload["doc_freq"])),
        n_docs=vocab_payload["n_docs"],
    )
    state, lda_config = topicmodel_mod.load_state(state_path)
    top_n = int(cfg.section("supervised")["top_features"])
    su_features = report_mod.classifier_feature_table(clf, vocab, top_n)
    un_features = report_mod.lda_feature_table(
        state, lda_config, label_map, int(cfg.section("lda")["top_words"])
    )
    report_mod.write_features_csv(
        su_features, cfg.out_file(FEATURES_SU_FILE), codebook
    )
    report_mod.write_features_csv(
        un_features, cfg.out_file(FEATURES_UN_FILE), codebook
    )

    summary = {
        "uninterpretable_share_un1": report_mod.uninterpretable_share(un1_codes),
        "uninterpretable_share_un2": report_mod.uninterpretable_share(un2_codes),
        "noncap_share_un1": report_mod.noncap_share(un1_codes),
        "noncap_share_un2": report_mod.noncap_share(un2_codes),
        "noncap_share_su": report_mod.noncap_share(su_codes),
    }
    with open(cfg.out_file(SUMMARY_FILE), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, sort_keys=True)
    log.info(
        "wrote %s, %s, %s, %s, %s",
        DIST_CSV_FILE, BREAKDOWN_FILE, FEATURES_SU_FILE, FEATURES_UN_FILE,
        SUMMARY_FILE,
    )
    return 0


def _path_override(args, overrides, flag, key):
    value = getattr(args, flag, None)
    if value is not None:
        overrides.setdefault("paths", {})[key] = value


def build_parser():
    parser = argparse.ArgumentParser(
        prog="politopics",
        description="Label political tweets by policy topic with supervised "
        "and unsupervised models and report their agreement.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out-dir", help="override the output directory")
        p.add_argument("--tweets", help="tweet archive (JSONL)")
        p.add_argument("--accounts", help="account metadata CSV")
        p.add_argument("--codebook", help="policy codebook CSV")
        p.add_argument("--stoplists", nargs="+", help="stop word files")
        p.add_argument("--labeled", help="labeled tweet corpus (JSONL)")
        p.add_argument("--labelmap", help="topic label map CSV")
        p.add_argument("--embeddings", help="pretrained embeddings file")
        p.add_argument("--lexicon", help="lexicon CSV")

    p = sub.add_parser("preprocess", help="tokenize the tweet archive")
    common(p)
    p.add_argument("--max-repeat", type=int)
    p.add_argument("--min-token-len", type=int)

    p = sub.add_parser("train-supervised", help="train and apply a classifier")
    common(p)
    p.add_argument("--algorithm", choices=supervised_mod.ALGORITHMS)
    p.add_argument("--feature-set", choices=supervised_mod.FEATURE_SETS)
    p.add_argument("--embedding-source", choices=supervised_mod.EMBEDDING_SOURCES)
    p.add_argument("--test-fraction", type=float)
    p.add_argument("--min-df", type=int)
    p.add_argument("--rebalance-class", type=int)
    p.add_argument("--rebalance-target", type=int)
    p.add_argument(
        "--matrix",
        action="store_true",
        help="also run the full classifier-by-feature benchmark matrix",
    )

    p = sub.add_parser("fit-lda", help="fit the topic model")
    common(p)
    p.add_argument("--k", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--iterations", type=int)
    p.add_argument("--burn-in", type=int)
    p.add_argument("--lda-min-df", type=int)

    p = sub.add_parser("sweep-k", help="fit one model per candidate K")
    common(p)
    p.add_argument("--k-values", help="comma-separated K values, e.g. 5,10,15")
    p.add_argument("--heldout-fraction", type=float)

    p = sub.add_parser("coherence", help="NPMI coherence for a fitted state")
    common(p)
    p.add_argument("--window", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--top-n", type=int)

    p = sub.add_parser("compare", help="Cohen's kappa between the two models")
    common(p)

    p = sub.add_parser("report", help="distribution, breakdown, feature tables")
    common(p)
    p.add_argument("--group-by", choices=report_mod.GROUP_FIELDS)

    return parser


def _overrides_from_args(args):
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out_dir is not None:
        overrides["out_dir"] = args.out_dir
    for flag, key in (
        ("tweets", "tweets"),
        ("accounts", "accounts"),
        ("codebook", "codebook"),
        ("labeled", "labeled"),
        ("labelmap", "labelmap"),
        ("embeddings", "embeddings"),
        ("lexicon", "lexicon"),
    ):
        _path_override(args, overrides, flag, key)
    if getattr(args, "stoplists", None) is not None:
        overrides.setdefault("paths", {})["stoplists"] = args.stoplists

    def put(section, key, value):
        if value is not None:
            overrides.setdefault(section, {})[key] = value

    put("preprocess", "max_repeat", getattr(args, "max_repeat", None))
    put("preprocess", "min_token_len", getattr(args, "min_token_len", None))
    put("supervised", "algorithm", getattr(args, "algorithm", None))
    put("supervised", "feature_set", getattr(args, "feature_set", None))
    put("supervised", "embedding_source", getattr(args, "embedding_source", None))
    put("supervised", "test_fraction", getattr(args, "test_fraction", None))
    put("supervised", "min_df", getattr(args, "min_df", None))
    put("supervised", "rebalance_class", getattr(args, "rebalance_class", None))
    put("supervised", "rebalance_target", getattr(args, "rebalance_target", None))
    put("lda", "k", getattr(args, "k", None))
    put("lda", "alpha", getattr(args, "alpha", None))
    put("lda", "beta", getattr(args, "beta", None))
    put("lda", "iterations", getattr(args, "iterations", None))
    put("lda", "burn_in", getattr(args, "burn_in", None))
    put("lda", "min_df", getattr(args, "lda_min_df", None))
    put("sweep", "heldout_fraction", getattr(args, "heldout_fraction", None))
    if getattr(args, "k_values", None) is not None:
        overrides.setdefault("sweep", {})["k_values"] = [
            int(v) for v in args.k_values.split(",") if v.strip()
        ]
    put("coherence", "window", getattr(args, "window", None))
    put("coherence", "epsilon", getattr(args, "epsilon", None))
    put("coherence", "top_n", getattr(args, "top_n", None))
    put("report", "group_by", getattr(args, "group_by", None))
    return overrides


def main(argv=None) -> int:
    logging.basicConfig(
        level=logging.INFO, format="%(levelname)s %(message)s", stream=sys.stderr
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, _overrides_from_args(args))
        if args.command == "preprocess":
            return cmd_preprocess(cfg)
        if args.command == "train-supervised":
            return cmd_train_supervised(cfg, run_matrix=args.matrix)
        if args.command == "fit-lda":
            return cmd_fit_lda(cfg)
        if args.command == "sweep-k":
            return cmd_sweep(cfg)
        if args.command == "coherence":
            return cmd_coherence(cfg)
        if args.command == "compare":
            return cmd_compare(cfg)
        if args.command == "report":
            return cmd_report(cfg)
        raise ConfigError("unknown command %r" % args.command)
    except ConfigError as exc:
        log.error("%s", exc)
        return 2
    except DataError as exc:
        log.error("%s", exc)
        return 3
    except Exception:  # anything else is an internal failure
        log.exception("internal error")
        return 4


if __name__ == "__main__":
    sys.exit(main())
