"""Topic-partitioned static word vectors from contextual encoders."""

from .aggregate import (
    PCAModel,
    VariantMatrix,
    WordVector,
    aggregate_mentions,
    build_variant,
    build_variant_matrix,
    nearest_neighbors,
    pca_reduce,
)
from .corpus import (
    CorpusStore,
    Mention,
    MentionIndex,
    Vocabulary,
    build_mention_index,
    build_vocabulary,
    ingest_corpus,
)
from .encoding import (
    EncodeRequest,
    LayerVectors,
    Mode,
    ReferenceEncoder,
    VectorStore,
    emit_manifest,
    read_manifest,
    read_store,
    write_store,
)
from .probe import (
    Grid,
    LayerCombiner,
    PropertyDataset,
    PropertyProbe,
    TopicCombiner,
    TrainConfig,
    combine_layers,
    combine_topics,
    f1_score,
    load_property_dataset,
    train_probe,
    tune_and_evaluate,
)
from .topics import (
    GibbsSampler,
    MentionSample,
    RelevantTopics,
    TopicImportance,
    TopicModel,
    fit_lda,
    select_random_mentions,
    select_relevant_topics,
    select_topic_mentions,
    word_topic_importance,
)

__version__ = "0.1.0"
