"""Scikit-learn style estimator wrapping the multi-task tagger.

X is a list of tokenized sentences (sequences of strings), y a parallel
list of BIO tag sequences, as in sequence-labelling estimators like
sklearn_crfsuite.  ``fit`` accepts an optional auxiliary task whose
sentences share the encoder but use their own classification head.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator

from .data import Corpus, Sentence, TaskSpec, build_vocab, infer_tagset, repair_bio
from .embeddings import load_embeddings
from .errors import DataError
from .evaluation import token_prf
from .network import TaggerConfig, TaggerModel
from .training import TrainConfig, TrainRun, train
from .validation import check_tag_sequences, check_token_sequences


def _make_corpus(X, y, name, task_id, is_main):
    repaired = []
    for tags in y:
        fixed, _ = repair_bio(tags)
        repaired.append(fixed)
    task = TaskSpec(
        task_id=task_id,
        name=name,
        tagset=infer_tagset(repaired),
        is_main=is_main,
    )
    sentences = [(Sentence(tokens), tags) for tokens, tags in zip(X, repaired)]
    return Corpus(task=task, sentences=sentences)


class KeyphraseTagger(BaseEstimator):
    """Bidirectional-LSTM sequence tagger with optional auxiliary task.

    Parameters mirror the training setup: 50-dim embeddings and hidden
    layers, 3 stacked bidirectional layers, input dropout 0.1, momentum SGD
    (lr 0.001, momentum 0.9) for 10 epochs.
    """

    def __init__(
        self,
        embed_dim=50,
        hidden_dim=50,
        layers=3,
        input_dropout=0.1,
        learning_rate=0.001,
        momentum=0.9,
        epochs=10,
        seed=0,
        task_sampling="uniform",
        embeddings_path=None,
        freeze_embeddings=False,
    ):
        self.embed_dim = embed_dim
        self.hidden_dim = hidden_dim
        self.layers = layers
        self.input_dropout = input_dropout
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.epochs = epochs
        self.seed = seed
        self.task_sampling = task_sampling
        self.embeddings_path = embeddings_path
        self.freeze_embeddings = freeze_embeddings

    def fit(self, X, y, aux_X=None, aux_y=None, aux_name="aux"):
        """Train on (X, y); optionally train jointly on one auxiliary task."""
        X = check_token_sequences(X)
        y = check_tag_sequences(X, y)
        main_corpus = _make_corpus(X, y, "main", task_id=0, is_main=True)

        aux_corpus = None
        if (aux_X is None) != (aux_y is None):
            raise DataError("aux_X and aux_y must be given together")
        if aux_X is not None:
            aux_X = check_token_sequences(aux_X)
            aux_y = check_tag_sequences(aux_X, aux_y)
            aux_corpus = _make_corpus(aux_X, aux_y, aux_name, task_id=1, is_main=False)

        config = TaggerConfig(
            embed_dim=self.embed_dim,
            hidden_dim=self.hidden_dim,
            layers=self.layers,
            input_dropout=self.input_dropout,
            seed=self.seed,
            freeze_embeddings=self.freeze_embeddings,
        )
        corpora = [main_corpus] + ([aux_corpus] if aux_corpus else [])
        vocab = build_vocab(corpora)
        table = None
        if self.embeddings_path is not None:
            table = load_embeddings(
                self.embeddings_path, vocab, self.embed_dim, seed=self.seed
            )

        tasks = [c.task for c in corpora]
        model = TaggerModel(config, vocab, tasks, embeddings=table)
        run = TrainRun(model=model, main_corpus=main_corpus, aux_corpus=aux_corpus)
        train_cfg = TrainConfig(
            learning_rate=self.learning_rate,
            momentum=self.momentum,
            epochs=self.epochs,
            seed=self.seed,
            task_sampling=self.task_sampling,
        )
        train(run, train_cfg)

        self.model_ = model
        self.vocab_ = vocab
        self.tasks_ = tasks
        self.train_log_ = run.log
        return self

    def predict(self, X, task=None):
        """Tag sequences for X (main task unless ``task`` names another)."""
        self._check_fitted()
        X = check_token_sequences(X)
        return [self.model_.predict(tokens, task_name=task) for tokens in X]

    def score(self, X, y):
        """Labelled token-level micro F1 against gold tags."""
        self._check_fitted()
        X = check_token_sequences(X)
        y = check_tag_sequences(X, y)
        pred = [self.model_.predict(tokens) for tokens in X]
        return token_prf(y, pred, mode="labelled").micro.f1

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise DataError("estimator is not fitted; call fit first")
