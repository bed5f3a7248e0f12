"""Gazetteer-free keyphrase boundary classification.

A multi-task bidirectional-LSTM sequence tagger with hard parameter
sharing: all tasks share the embeddings and recurrent layers, each task
owns its softmax head.  Ships with corpus ingestion (two-column CoNLL and
brat standoff), a momentum-SGD training loop, token-level micro-averaged
evaluation and a CLI (``kbc``).
"""

from .data import (
    Corpus,
    Sentence,
    SpanAnnotation,
    TaskSpec,
    Vocabulary,
    bio_to_spans,
    build_vocab,
    read_conll,
    spans_to_bio,
    split_corpus,
    write_conll,
)
from .brat import read_brat, read_brat_dir
from .checkpoint import load_checkpoint, save_checkpoint
from .embeddings import EmbeddingTable, load_embeddings
from .estimator import KeyphraseTagger
from .evaluation import (
    CorpusStats,
    EvalReport,
    corpus_stats,
    length_stratified_report,
    results_table,
    token_prf,
)
from .network import TaggerConfig, TaggerModel
from .training import TrainConfig, TrainRun, train

__version__ = "0.1.0"

__all__ = [
    "Corpus",
    "CorpusStats",
    "EmbeddingTable",
    "EvalReport",
    "KeyphraseTagger",
    "Sentence",
    "SpanAnnotation",
    "TaggerConfig",
    "TaggerModel",
    "TaskSpec",
    "TrainConfig",
    "TrainRun",
    "Vocabulary",
    "bio_to_spans",
    "build_vocab",
    "corpus_stats",
    "length_stratified_report",
    "load_checkpoint",
    "load_embeddings",
    "read_brat",
    "read_brat_dir",
    "read_conll",
    "results_table",
    "save_checkpoint",
    "spans_to_bio",
    "split_corpus",
    "token_prf",
    "train",
    "write_conll",
]
