"""brat standoff ingestion: parallel .txt/.ann files with typed char spans.

Only "T" lines are consumed; relations, events and notes are skipped.
Each non-empty line of the .txt file becomes one sentence (segmentation of
raw documents is out of scope).  Tokenization is deterministic: maximal
runs of word characters, or single non-space punctuation characters.
"""

from __future__ import annotations

import os
import re

from .errors import AnnotationError, ParseError
from .data import (
    Corpus,
    IngestReport,
    Sentence,
    SpanAnnotation,
    TaskSpec,
    infer_tagset,
    spans_to_bio,
)

_TOKEN_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)


def tokenize_with_offsets(text: str) -> list[tuple[str, int, int]]:
    """Split text into (token, start, end) triples with char offsets."""
    return [(m.group(0), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


def _parse_ann_spans(ann_path: str, text_length: int, report: IngestReport):
    """(tid, label, start, end) for every T line, in file order."""
    spans = []
    with open(ann_path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, 1):
            line = line.rstrip("\n")
            if not line or not line.startswith("T"):
                continue
            fields = line.split("\t")
            if len(fields) < 2:
                raise AnnotationError(
                    f"{ann_path}:{lineno}: malformed T line {line!r}"
                )
            tid = fields[0]
            head = fields[1]
            # discontinuous spans ("Type s1 e1;s2 e2") are merged to their hull
            if ";" in head:
                report.merged_fragments += 1
                head = head.replace(";", " ")
            parts = head.split()
            if len(parts) < 3:
                raise AnnotationError(
                    f"{ann_path}:{lineno}: malformed span header in {tid}"
                )
            label = parts[0]
            try:
                start = int(parts[1])
                end = int(parts[-1])
            except ValueError as exc:
                raise AnnotationError(
                    f"{ann_path}:{lineno}: non-integer offsets in {tid}"
                ) from exc
            if start < 0 or end > text_length or start >= end:
                raise AnnotationError(
                    f"{ann_path}: annotation {tid} offsets ({start}, {end}) "
                    f"fall outside text of length {text_length}"
                )
            spans.append((tid, label, start, end))
    return spans


def read_brat(txt_path, ann_path, task_name=None, task_id=0, is_main=True) -> Corpus:
    """Read one .txt/.ann pair into a BIO-tagged corpus.

    Character spans are expanded to whole-token boundaries, overlapping
    spans resolved longest-first, and spans crossing sentence (line)
    boundaries dropped; every adjustment is counted in the corpus report.
    """
    txt_path, ann_path = str(txt_path), str(ann_path)
    try:
        with open(txt_path, encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise ParseError(f"cannot read {txt_path}: {exc}") from exc

    report = IngestReport()
    doc_id = os.path.splitext(os.path.basename(txt_path))[0]

    # sentence per non-empty line, with global char offsets
    sentence_rows = []  # (line_start, line_end, [(token, gstart, gend)])
    offset = 0
    for line in text.split("\n"):
        tokens = [
            (tok, offset + s, offset + e) for tok, s, e in tokenize_with_offsets(line)
        ]
        if tokens:
            sentence_rows.append((offset, offset + len(line), tokens))
        offset += len(line) + 1

    raw_spans = _parse_ann_spans(ann_path, len(text), report)

    # map char spans to (sentence index, token start, token end, label)
    mapped = []
    for tid, label, start, end in raw_spans:
        sent_idx = None
        for i, (lo, hi, _) in enumerate(sentence_rows):
            if start >= lo and end <= hi:
                sent_idx = i
                break
        if sent_idx is None:
            report.dropped_cross_sentence += 1
            continue
        tokens = sentence_rows[sent_idx][2]
        tok_start = None
        tok_end = None
        for j, (_, gs, ge) in enumerate(tokens):
            if ge > start and gs < end:  # token overlaps the span
                if tok_start is None:
                    tok_start = j
                tok_end = j + 1
        if tok_start is None:
            report.dropped_empty += 1
            continue
        if tokens[tok_start][1] != start or tokens[tok_end - 1][2] != end:
            report.boundary_expansions += 1
        mapped.append((sent_idx, tok_start, tok_end, label))

    # resolve overlaps per sentence: longest kept, ties to the earlier ann line
    per_sentence = {}
    for order, (sent_idx, s, e, label) in enumerate(mapped):
        per_sentence.setdefault(sent_idx, []).append((s, e, label, order))
    kept = {i: [] for i in range(len(sentence_rows))}
    for sent_idx, cands in per_sentence.items():
        cands.sort(key=lambda c: (-(c[1] - c[0]), c[3]))
        occupied = set()
        for s, e, label, _ in cands:
            if any(j in occupied for j in range(s, e)):
                report.dropped_overlaps += 1
                continue
            occupied.update(range(s, e))
            kept[sent_idx].append(SpanAnnotation(s, e, label))

    sentences = []
    for i, (_, _, tokens) in enumerate(sentence_rows):
        sentence = Sentence(
            tokens=tuple(t for t, _, _ in tokens),
            doc_id=doc_id,
            char_offsets=tuple((s, e) for _, s, e in tokens),
        )
        tags = spans_to_bio(len(tokens), sorted(kept[i], key=lambda sp: sp.start))
        sentences.append((sentence, tags))

    if task_name is None:
        task_name = doc_id
    task = TaskSpec(
        task_id=task_id,
        name=task_name,
        tagset=infer_tagset(tags for _, tags in sentences),
        is_main=is_main,
    )
    return Corpus(task=task, sentences=sentences, report=report)


def read_brat_dir(directory, task_name=None, task_id=0, is_main=True) -> Corpus:
    """Read every .txt/.ann pair under a directory (sorted by file name)."""
    directory = str(directory)
    stems = sorted(
        os.path.splitext(name)[0]
        for name in os.listdir(directory)
        if name.endswith(".txt")
    )
    if not stems:
        raise ParseError(f"no .txt files under {directory}")

    all_sentences = []
    report = IngestReport()
    for stem in stems:
        txt = os.path.join(directory, stem + ".txt")
        ann = os.path.join(directory, stem + ".ann")
        if not os.path.exists(ann):
            raise ParseError(f"missing annotation file {ann}")
        corpus = read_brat(txt, ann, task_name="_tmp", task_id=task_id, is_main=is_main)
        all_sentences.extend(corpus.sentences)
        for key, value in corpus.report.as_dict().items():
            setattr(report, key, getattr(report, key) + value)

    if task_name is None:
        task_name = os.path.basename(os.path.normpath(directory))
    task = TaskSpec(
        task_id=task_id,
        name=task_name,
        tagset=infer_tagset(tags for _, tags in all_sentences),
        is_main=is_main,
    )
    return Corpus(task=task, sentences=all_sentences, report=report)
