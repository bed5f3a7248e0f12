"""Shared test utilities: finite-difference oracle, brute-force scorers."""

from __future__ import annotations

import numpy as np


def max_rel_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-4) -> float:
    """Worst elementwise |a - b| / max(|a|, |b|, floor).

    The floor keeps finite-difference noise (~1e-10 for O(1) losses) from
    blowing up ratios on near-zero gradients while still catching errors of
    the gradient's own magnitude.
    """
    a = np.asarray(analytic, dtype=np.float64)
    b = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / denom)) if a.size else 0.0


def central_difference(loss_fn, array: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Numerical gradient of loss_fn() w.r.t. every entry of array.

    loss_fn must read the array in place (it is perturbed and restored).
    """
    grad = np.zeros_like(array)
    it = np.nditer(array, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        original = array[idx]
        array[idx] = original + step
        plus = loss_fn()
        array[idx] = original - step
        minus = loss_fn()
        array[idx] = original
        grad[idx] = (plus - minus) / (2.0 * step)
    return grad


def oracle_token_prf(gold, pred, mode):
    """Brute-force token-level counts, kept deliberately independent of the
    package implementation: plain nested loops, no shared helpers.

    Returns (tp, predicted, gold) pooled over all sentences (and, for the
    labelled mode, over all types).
    """
    tp = n_pred = n_gold = 0
    if mode == "unlabelled":
        for g_tags, p_tags in zip(gold, pred):
            for g, p in zip(g_tags, p_tags):
                if g != "O":
                    n_gold += 1
                if p != "O":
                    n_pred += 1
                if g != "O" and p != "O":
                    tp += 1
        return tp, n_pred, n_gold

    def kind(tag):
        if tag == "O":
            return None
        if tag[:2] in ("B-", "I-"):
            return tag[2:]
        return tag

    types = set()
    for seqs in (gold, pred):
        for tags in seqs:
            for tag in tags:
                if kind(tag) is not None:
                    types.add(kind(tag))
    for x in types:
        for g_tags, p_tags in zip(gold, pred):
            for g, p in zip(g_tags, p_tags):
                if kind(g) == x:
                    n_gold += 1
                if kind(p) == x:
                    n_pred += 1
                if kind(g) == x and kind(p) == x:
                    tp += 1
    return tp, n_pred, n_gold


def random_tag_pair(rng, types=("Task", "Process"), max_sentences=10, max_tokens=8):
    """A random aligned (gold, pred) pair of BIO-ish tag sequences.

    Sequences are drawn tag-by-tag without well-formedness constraints so
    the scorer sees ill-formed input too.
    """
    alphabet = ["O"]
    for t in types:
        alphabet += [f"B-{t}", f"I-{t}"]
    n_sentences = int(rng.integers(1, max_sentences + 1))
    gold, pred = [], []
    for _ in range(n_sentences):
        n = int(rng.integers(1, max_tokens + 1))
        gold.append(tuple(alphabet[int(rng.integers(len(alphabet)))] for _ in range(n)))
        pred.append(tuple(alphabet[int(rng.integers(len(alphabet)))] for _ in range(n)))
    return gold, pred


def random_span_set(rng, n_tokens: int, types=("Task", "Process", "Material")):
    """Random non-overlapping typed spans over n_tokens positions."""
    spans = []
    i = 0
    while i < n_tokens:
        if rng.random() < 0.4:
            length = int(rng.integers(1, min(4, n_tokens - i) + 1))
            spans.append((i, i + length, types[int(rng.integers(len(types)))]))
            i += length
        else:
            i += 1
    return spans
