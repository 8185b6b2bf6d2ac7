"""sensewsi: joint sense-embedding training and word sense induction.

Trains per-word sense centroids over a whole vocabulary with skip-gram
negative sampling (fixed-K or CRP sense allocation), labels occurrences of
polysemous words by nearest sense centroid, and scores induced senses with
V-measure, paired F-score and 80-20 supervised recall.
"""

__version__ = "0.1.0"

from .corpus import (
    EmptyCorpusError,
    EncodedCorpus,
    Vocabulary,
    Window,
    build_vocab,
    extract_windows,
    load_vocab,
    save_vocab,
    subsample_keep_prob,
    tokenize,
)
from .evaluation import (
    Clustering,
    SplitPlan,
    avg_clusters,
    evaluate,
    make_splits,
    paired_fscore,
    supervised_eval,
    v_measure,
)
from .induction import (
    SenseLabel,
    TrainingConfig,
    TrainLog,
    context_vec_train,
    crp_pretrain_init,
    sense_label_crp,
    sense_label_fix,
    train,
    train_word_embeddings,
)
from .sgns import NegativeSampler, draw_negatives, sgns_loss, sgns_step
from .vectors import (
    ContextVector,
    SenseTable,
    WordTable,
    cosine,
    load_tables,
    save_tables,
)
from .wsi import (
    Instance,
    Stoplist,
    context_vec_test,
    label_dataset,
    label_instance,
    read_instances,
    read_key_file,
    select_context_words,
    write_key_file,
)

__all__ = [
    "__version__",
    "EmptyCorpusError", "EncodedCorpus", "Vocabulary", "Window",
    "build_vocab", "extract_windows", "load_vocab", "save_vocab",
    "subsample_keep_prob", "tokenize",
    "Clustering", "SplitPlan", "avg_clusters", "evaluate", "make_splits",
    "paired_fscore", "supervised_eval", "v_measure",
    "SenseLabel", "TrainingConfig", "TrainLog", "context_vec_train",
    "crp_pretrain_init", "sense_label_crp", "sense_label_fix", "train",
    "train_word_embeddings",
    "NegativeSampler", "draw_negatives", "sgns_loss", "sgns_step",
    "ContextVector", "SenseTable", "WordTable", "cosine", "load_tables",
    "save_tables",
    "Instance", "Stoplist", "context_vec_test", "label_dataset",
    "label_instance", "read_instances", "read_key_file",
    "select_context_words", "write_key_file",
]
