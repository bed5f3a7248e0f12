"""Input validation helpers for the estimator-facing API."""

from __future__ import annotations

from .errors import DataError


def check_token_sequences(X) -> list[tuple[str, ...]]:
    """Coerce X to a list of non-empty tuples of non-empty token strings."""
    if isinstance(X, str):
        raise DataError("X must be a sequence of token sequences, not a string")
    try:
        rows = list(X)
    except TypeError as exc:
        raise DataError("X must be an iterable of token sequences") from exc
    if not rows:
        raise DataError("X contains no sentences")
    out = []
    for i, row in enumerate(rows):
        if isinstance(row, str):
            raise DataError(
                f"sentence {i} is a string; pass tokenized sentences "
                "(lists of tokens)"
            )
        tokens = tuple(row)
        if not tokens:
            raise DataError(f"sentence {i} is empty")
        if any(not isinstance(t, str) or not t for t in tokens):
            raise DataError(f"sentence {i} contains a non-string or empty token")
        out.append(tokens)
    return out


def check_tag_sequences(X, y) -> list[tuple[str, ...]]:
    """Validate y against already-checked X; returns tag tuples."""
    rows = list(y) if y is not None else []
    if len(rows) != len(X):
        raise DataError(f"X has {len(X)} sentences but y has {len(rows)}")
    out = []
    for i, (tokens, tags) in enumerate(zip(X, rows)):
        tags = tuple(tags)
        if len(tags) != len(tokens):
            raise DataError(
                f"sentence {i}: {len(tokens)} tokens but {len(tags)} tags"
            )
        if any(not isinstance(t, str) or not t for t in tags):
            raise DataError(f"sentence {i} contains a non-string or empty tag")
        out.append(tags)
    return out
