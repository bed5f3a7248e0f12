"""The shared-encoder tagging network.

Architecture: trainable embedding lookup with inverted input dropout,
a stack of bidirectional LSTM layers (forward and backward states
concatenated at every position, the concatenation feeding the next layer),
and one affine + softmax classification head per task reading the top
layer.  All tasks share the embeddings and the LSTM stack; only the heads
are task-specific.

LSTM cell: forget-gate formulation without peephole connections,
    i = sigmoid(W_i x + U_i h + b_i)      f = sigmoid(W_f x + U_f h + b_f)
    o = sigmoid(W_o x + U_o h + b_o)      g = tanh(W_g x + U_g h + b_g)
    c' = f * c + i * g                    h' = o * tanh(c')
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .data import TaskSpec, Vocabulary, repair_bio
from .embeddings import EmbeddingTable
from .errors import (
    ConfigError,
    ContractError,
    DataError,
    LabelError,
    TaskError,
    VocabError,
)

GATES = ("input", "forget", "output", "candidate")
SUPPORTED_CELLS = ("no-peephole",)


@dataclass
class TaggerConfig:
    embed_dim: int = 50
    hidden_dim: int = 50
    layers: int = 3
    input_dropout: float = 0.1
    seed: int = 0
    freeze_embeddings: bool = False
    cell_variant: str = "no-peephole"

    def __post_init__(self):
        if self.embed_dim < 1 or self.hidden_dim < 1 or self.layers < 1:
            raise ConfigError("embed_dim, hidden_dim and layers must be positive")
        if not 0.0 <= self.input_dropout < 1.0:
            raise ConfigError("input_dropout must lie in [0, 1)")
        if self.cell_variant not in SUPPORTED_CELLS:
            raise ConfigError(
                f"unsupported cell variant {self.cell_variant!r}; "
                f"supported: {SUPPORTED_CELLS}"
            )

    def to_dict(self) -> dict:
        return {
            "embed_dim": self.embed_dim,
            "hidden_dim": self.hidden_dim,
            "layers": self.layers,
            "input_dropout": self.input_dropout,
            "seed": self.seed,
            "freeze_embeddings": self.freeze_embeddings,
            "cell_variant": self.cell_variant,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TaggerConfig":
        return cls(**data)


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


class LstmCellParams:
    """Per-gate weights of one directional LSTM cell.

    Matrices start Glorot-uniform, biases at zero except the forget gate,
    whose bias starts at 1.0 so early training does not flush cell state.
    """

    def __init__(self, d_in: int, d_hidden: int, rng: np.random.Generator, name: str):
        self.d_in = d_in
        self.d_hidden = d_hidden
        self.name = name
        self.w = {}
        self.u = {}
        self.b = {}
        for gate in GATES:
            self.w[gate] = ad.parameter(_glorot(rng, d_in, d_hidden), f"{name}.W_{gate}")
            self.u[gate] = ad.parameter(
                _glorot(rng, d_hidden, d_hidden), f"{name}.U_{gate}"
            )
            bias = np.ones(d_hidden) if gate == "forget" else np.zeros(d_hidden)
            self.b[gate] = ad.parameter(bias, f"{name}.b_{gate}")

    def parameters(self) -> list[tuple[str, ad.Node]]:
        out = []
        for gate in GATES:
            out.append((self.w[gate].name, self.w[gate]))
            out.append((self.u[gate].name, self.u[gate]))
            out.append((self.b[gate].name, self.b[gate]))
        return out


def lstm_cell_step(params: LstmCellParams, x, h_prev, c_prev):
    """One LSTM step on vector nodes; returns (h, c) nodes."""

    def gate(name):
        return ad.add(
            ad.add(ad.matmul(x, params.w[name]), ad.matmul(h_prev, params.u[name])),
            params.b[name],
        )

    i = ad.sigmoid(gate("input"))
    f = ad.sigmoid(gate("forget"))
    o = ad.sigmoid(gate("output"))
    g = ad.tanh(gate("candidate"))
    c = ad.add(ad.mul(f, c_prev), ad.mul(i, g))
    h = ad.mul(o, ad.tanh(c))
    return h, c


class TaggerModel:
    """Parameters plus forward passes for every task sharing the encoder."""

    def __init__(
        self,
        config: TaggerConfig,
        vocab: Vocabulary,
        tasks: list[TaskSpec],
        embeddings: EmbeddingTable | None = None,
    ):
        mains = [t for t in tasks if t.is_main]
        if len(mains) != 1:
            raise DataError(f"exactly one main task required, got {len(mains)}")
        names = [t.name for t in tasks]
        if len(set(names)) != len(names):
            raise DataError("task names must be unique")

        self.config = config
        self.vocab = vocab
        self.tasks = list(tasks)
        self.main_task = mains[0]
        self._task_by_name = {t.name: t for t in tasks}

        rng = np.random.default_rng(config.seed)
        if embeddings is not None:
            if embeddings.matrix.shape != (len(vocab), config.embed_dim):
                raise ConfigError(
                    f"embedding matrix shape {embeddings.matrix.shape} does not "
                    f"match (|V|={len(vocab)}, d={config.embed_dim})"
                )
            emb = embeddings.matrix.copy()
        else:
            emb = rng.uniform(-0.1, 0.1, size=(len(vocab), config.embed_dim))
        self.embeddings = ad.parameter(emb, "embeddings")

        self.layers = []
        d_in = config.embed_dim
        for layer in range(config.layers):
            fwd = LstmCellParams(d_in, config.hidden_dim, rng, f"layer{layer}.fwd")
            bwd = LstmCellParams(d_in, config.hidden_dim, rng, f"layer{layer}.bwd")
            self.layers.append((fwd, bwd))
            d_in = 2 * config.hidden_dim

        self.heads = {}
        for task in self.tasks:
            k = len(task.tagset)
            w = ad.parameter(_glorot(rng, 2 * config.hidden_dim, k), f"head.{task.name}.W")
            b = ad.parameter(np.zeros(k), f"head.{task.name}.b")
            self.heads[task.name] = (w, b)

    # ---- parameter views ------------------------------------------------

    def parameters(self) -> list[tuple[str, ad.Node]]:
        """All parameters, in a stable order (embeddings, layers, heads)."""
        out = [("embeddings", self.embeddings)]
        for fwd, bwd in self.layers:
            out.extend(fwd.parameters())
            out.extend(bwd.parameters())
        for task in self.tasks:
            w, b = self.heads[task.name]
            out.append((w.name, w))
            out.append((b.name, b))
        return out

    def shared_parameters(self) -> list[tuple[str, ad.Node]]:
        """Encoder parameters updated on every step, any task; honors the
        embedding freeze switch."""
        out = [] if self.config.freeze_embeddings else [("embeddings", self.embeddings)]
        for fwd, bwd in self.layers:
            out.extend(fwd.parameters())
            out.extend(bwd.parameters())
        return out

    def head_parameters(self, task_name: str) -> list[tuple[str, ad.Node]]:
        if task_name not in self.heads:
            raise TaskError(f"model has no head for task {task_name!r}")
        w, b = self.heads[task_name]
        return [(w.name, w), (b.name, b)]

    def get_task(self, task_name: str | None) -> TaskSpec:
        if task_name is None:
            return self.main_task
        task = self._task_by_name.get(task_name)
        if task is None:
            raise TaskError(f"unknown task {task_name!r}")
        return task

    # ---- forward passes --------------------------------------------------

    def token_ids(self, tokens) -> list[int]:
        return [self.vocab.index_of(t) for t in tokens]

    def encode(self, token_ids, train_mode: bool = False, rng=None) -> ad.Node:
        """Top-layer bidirectional encoding, one (2*hidden) row per token."""
        if len(token_ids) == 0:
            raise ContractError("encode requires at least one token")
        size = len(self.vocab)
        for idx in token_ids:
            if not 0 <= idx < size:
                raise VocabError(f"token index {idx} out of range [0, {size})")
        if train_mode and self.config.input_dropout > 0.0 and rng is None:
            raise ContractError("train_mode with dropout requires an rng stream")

        inputs = [ad.row(self.embeddings, idx) for idx in token_ids]
        if train_mode and self.config.input_dropout > 0.0:
            p = self.config.input_dropout
            masks = (rng.random((len(inputs), self.config.embed_dim)) >= p) / (1.0 - p)
            inputs = [ad.mul(vec, ad.parameter(masks[i])) for i, vec in enumerate(inputs)]

        d_h = self.config.hidden_dim
        for fwd, bwd in self.layers:
            h = ad.parameter(np.zeros(d_h))
            c = ad.parameter(np.zeros(d_h))
            fwd_states = []
            for vec in inputs:
                h, c = lstm_cell_step(fwd, vec, h, c)
                fwd_states.append(h)
            h = ad.parameter(np.zeros(d_h))
            c = ad.parameter(np.zeros(d_h))
            bwd_states = [None] * len(inputs)
            for i in range(len(inputs) - 1, -1, -1):
                h, c = lstm_cell_step(bwd, inputs[i], h, c)
                bwd_states[i] = h
            inputs = [ad.concat([f, b]) for f, b in zip(fwd_states, bwd_states)]
        return ad.stack_rows(inputs)

    def task_logits(self, token_ids, task: TaskSpec, train_mode=False, rng=None) -> ad.Node:
        encoding = self.encode(token_ids, train_mode=train_mode, rng=rng)
        w, b = self.heads[task.name]
        return ad.affine(encoding, w, b)

    def forward(self, tokens, task_name=None, train_mode=False, rng=None) -> np.ndarray:
        """Per-token tag probabilities, shape (n, |tagset|); rows sum to 1."""
        task = self.get_task(task_name)
        logits = self.task_logits(
            self.token_ids(tokens), task, train_mode=train_mode, rng=rng
        )
        return ad.softmax(logits.value)

    def sentence_loss(self, tokens, tags, task_name=None, train_mode=True, rng=None) -> ad.Node:
        """Sum of per-token cross-entropies against the gold tags."""
        task = self.get_task(task_name)
        if len(tags) != len(tokens):
            raise LabelError(
                f"gold length {len(tags)} does not match sentence length {len(tokens)}"
            )
        try:
            gold = [task.tag_index(t) for t in tags]
        except ValueError:
            bad = sorted(set(tags) - set(task.tagset))
            raise LabelError(f"tags {bad} outside tagset of task {task.name!r}") from None
        logits = self.task_logits(self.token_ids(tokens), task, train_mode, rng)
        total = ad.softmax_cross_entropy(ad.row(logits, 0), gold[0])
        for i in range(1, len(gold)):
            total = ad.add(total, ad.softmax_cross_entropy(ad.row(logits, i), gold[i]))
        return total

    def predict(self, tokens, task_name=None) -> tuple[str, ...]:
        """Greedy per-token argmax (dropout off) followed by BIO repair."""
        task = self.get_task(task_name)
        probs = self.forward(tokens, task.name, train_mode=False)
        raw = tuple(task.tagset[int(i)] for i in probs.argmax(axis=1))
        repaired, _ = repair_bio(raw)
        return repaired
