"""Policy-topic labeling for congressional tweets.

Two independent models over one preprocessing pipeline: a supervised
multi-class classifier trained on policy-codebook labels, and an
unsupervised LDA topic model whose topics humans label and map onto
codes. The evaluate and report modules quantify their agreement,
coherence, and group-level attention distributions.
"""

from .corpus import (
    Account,
    AccountSet,
    CapCodebook,
    Corpus,
    LabeledTweet,
    Tweet,
    filter_originals,
    group_counts,
    load_accounts,
    load_codebook,
    load_labeled,
    load_tweets,
    rebalance_subsample,
    stratified_split,
    write_tweets,
)
from .errors import ConfigError, DataError, PolitopicsError
from .evaluate import (
    LabelMap,
    align_for_comparison,
    apply_label_map,
    cohens_kappa,
    load_labelmap,
    npmi_coherence,
)
from .features import (
    EmbeddingTable,
    Lexicon,
    Vocabulary,
    build_vocab,
    embed_document,
    lexicon_features,
    load_embeddings,
    load_lexicon,
    train_sgns,
    vectorize_bow,
)
from .preprocess import (
    TokenizedDoc,
    TokenPipeline,
    default_pipeline,
    load_stoplist,
    preprocess_corpus,
    tokenize,
)
from .report import (
    distribution_table,
    group_breakdown,
    noncap_share,
    uninterpretable_share,
)
# supervised.evaluate is not re-exported at the top level: the bare name
# would shadow the politopics.evaluate submodule
from .supervised import (
    EvalReport,
    SgdParams,
    TrainConfig,
    predict,
    predict_many,
    run_classifier_matrix,
    train,
)
from .topicmodel import (
    DocTopics,
    LdaConfig,
    LdaState,
    TopicSummary,
    doc_topics,
    fit,
    heldout_perplexity,
    sweep_k,
    top2_assign,
    top_words,
)

__version__ = "0.1.0"
