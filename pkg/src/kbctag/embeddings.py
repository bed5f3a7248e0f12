"""Pretrained word embedding loading (plain text: token + d reals per line)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Vocabulary
from .errors import ParseError


@dataclass
class EmbeddingTable:
    """|V| x d embedding matrix plus the fraction of vocab rows found on disk."""

    matrix: np.ndarray
    dim: int
    coverage: float = 0.0

    def __post_init__(self):
        if self.matrix.ndim != 2 or self.matrix.shape[1] != self.dim:
            raise ParseError(
                f"embedding matrix shape {self.matrix.shape} does not match dim "
                f"{self.dim}"
            )


def random_embeddings(vocab: Vocabulary, dim: int, seed: int = 0) -> EmbeddingTable:
    """Uniform [-0.1, 0.1] rows for every vocabulary entry."""
    rng = np.random.default_rng(seed)
    matrix = rng.uniform(-0.1, 0.1, size=(len(vocab), dim))
    return EmbeddingTable(matrix=matrix, dim=dim, coverage=0.0)


def read_embedding_vocab(path) -> list[str]:
    """Just the tokens of an embedding file, in file order."""
    tokens = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            parts = line.split()
            if parts:
                tokens.append(parts[0])
    return tokens


def load_embeddings(path, vocab: Vocabulary, dim: int, seed: int = 0) -> EmbeddingTable:
    """Build the embedding matrix for ``vocab`` from a text file.

    Rows present in the file are copied (falling back to the lowercased
    token); all other rows, including the unknown token, are drawn uniform
    in [-0.1, 0.1] from ``seed``.  Lines must hold exactly ``dim`` reals
    after the token.
    """
    path = str(path)
    wanted = set()
    for token in vocab.tokens():
        wanted.add(token)
        wanted.add(token.lower())

    entries: dict[str, np.ndarray] = {}
    try:
        handle = open(path, encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    with handle:
        for lineno, line in enumerate(handle, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != dim + 1:
                raise ParseError(
                    f"{path}:{lineno}: expected token + {dim} values, got "
                    f"{len(parts)} fields"
                )
            token = parts[0]
            if token not in wanted or token in entries:
                continue
            try:
                entries[token] = np.array([float(v) for v in parts[1:]], dtype=np.float64)
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: non-numeric value") from exc

    rng = np.random.default_rng(seed)
    matrix = rng.uniform(-0.1, 0.1, size=(len(vocab), dim))
    covered = 0
    for idx, token in enumerate(vocab.tokens()):
        if idx == 0:  # unknown token keeps its random row
            continue
        vector = entries.get(token)
        if vector is None:
            vector = entries.get(token.lower())
        if vector is not None:
            matrix[idx] = vector
            covered += 1
    denom = max(1, len(vocab) - 1)
    return EmbeddingTable(matrix=matrix, dim=dim, coverage=covered / denom)
