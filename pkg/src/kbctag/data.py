"""Corpus model: sentences, typed spans, BIO tag sequences, tasks, vocabulary.

A tag sequence is a plain tuple of strings over the alphabet
``{O} | {B-X, I-X}``; auxiliary corpora may additionally carry bare tags
(e.g. chunk or super-sense labels without a prefix), which the span decoder
treats as run-merged typed tags.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .errors import ContractError, DataError, ParseError, SplitError

OUTSIDE = "O"


@dataclass(frozen=True)
class Sentence:
    """A tokenized sentence; char_offsets (into the source text) are optional."""

    tokens: tuple[str, ...]
    doc_id: str = ""
    char_offsets: tuple[tuple[int, int], ...] | None = None

    def __post_init__(self):
        if len(self.tokens) == 0:
            raise DataError("Sentence requires at least one token")
        if any(not t for t in self.tokens):
            raise DataError("Sentence tokens must be non-empty strings")
        if self.char_offsets is not None:
            if len(self.char_offsets) != len(self.tokens):
                raise DataError("char_offsets length does not match tokens")
            prev_end = -1
            for start, end in self.char_offsets:
                if start < prev_end or end <= start:
                    raise DataError("char_offsets must be increasing and non-overlapping")
                prev_end = end

    def __len__(self):
        return len(self.tokens)


@dataclass(frozen=True)
class SpanAnnotation:
    """Token-indexed typed span; end is exclusive."""

    start: int
    end: int
    label: str

    def __post_init__(self):
        if not 0 <= self.start < self.end:
            raise ContractError(f"invalid span bounds ({self.start}, {self.end})")

    def __len__(self):
        return self.end - self.start


@dataclass
class TaskSpec:
    """A tagging task: its id, name, ordered tagset and main/auxiliary role."""

    task_id: int
    name: str
    tagset: tuple[str, ...]
    is_main: bool = False

    def __post_init__(self):
        if OUTSIDE not in self.tagset:
            raise DataError(f"task {self.name!r}: tagset must contain {OUTSIDE!r}")
        if len(set(self.tagset)) != len(self.tagset):
            raise DataError(f"task {self.name!r}: tagset contains duplicates")

    def tag_index(self, tag: str) -> int:
        return self.tagset.index(tag)


@dataclass
class IngestReport:
    """Counts of repairs/drops applied while reading a corpus."""

    bio_repairs: int = 0
    boundary_expansions: int = 0
    dropped_overlaps: int = 0
    dropped_cross_sentence: int = 0
    dropped_empty: int = 0
    merged_fragments: int = 0

    def as_dict(self) -> dict:
        return {
            "bio_repairs": self.bio_repairs,
            "boundary_expansions": self.boundary_expansions,
            "dropped_overlaps": self.dropped_overlaps,
            "dropped_cross_sentence": self.dropped_cross_sentence,
            "dropped_empty": self.dropped_empty,
            "merged_fragments": self.merged_fragments,
        }


@dataclass
class Corpus:
    """Sentences of one task, each paired with its tag sequence."""

    task: TaskSpec
    sentences: list[tuple[Sentence, tuple[str, ...]]] = field(default_factory=list)
    report: IngestReport = field(default_factory=IngestReport)

    def __post_init__(self):
        allowed = set(self.task.tagset)
        for i, (sentence, tags) in enumerate(self.sentences):
            if len(tags) != len(sentence):
                raise DataError(f"sentence {i}: tag sequence length mismatch")
            bad = set(tags) - allowed
            if bad:
                raise DataError(
                    f"sentence {i}: tags {sorted(bad)} outside tagset of task "
                    f"{self.task.name!r}"
                )

    def __len__(self):
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)


class Vocabulary:
    """Token-to-index map; index 0 is the shared unknown token.

    Lookups optionally fall back to the lowercased form before mapping to
    the unknown index.
    """

    unk_token = "<unk>"

    def __init__(self, tokens=(), lowercase_fallback: bool = True):
        self.lowercase_fallback = lowercase_fallback
        self._index = {self.unk_token: 0}
        self._tokens = [self.unk_token]
        for token in tokens:
            self.add(token)

    def add(self, token: str) -> int:
        idx = self._index.get(token)
        if idx is None:
            idx = len(self._tokens)
            self._index[token] = idx
            self._tokens.append(token)
        return idx

    def index_of(self, token: str) -> int:
        idx = self._index.get(token)
        if idx is not None:
            return idx
        if self.lowercase_fallback:
            idx = self._index.get(token.lower())
            if idx is not None:
                return idx
        return 0

    def tokens(self) -> list[str]:
        """All tokens in index order, including the unknown token at 0."""
        return list(self._tokens)

    @classmethod
    def from_ordered_tokens(cls, tokens, lowercase_fallback: bool = True):
        tokens = list(tokens)
        if not tokens or tokens[0] != cls.unk_token:
            raise DataError("ordered token list must start with the unknown token")
        return cls(tokens[1:], lowercase_fallback=lowercase_fallback)

    def __len__(self):
        return len(self._tokens)

    def __contains__(self, token):
        return token in self._index


def tag_type(tag: str) -> str | None:
    """Type carried by a tag: None for O, X for B-X/I-X, the tag itself if bare."""
    if tag == OUTSIDE:
        return None
    if tag.startswith("B-") or tag.startswith("I-"):
        return tag[2:]
    return tag


def is_well_formed(tags) -> bool:
    """True iff every I-X is preceded by B-X or I-X of the same type."""
    prev = OUTSIDE
    for tag in tags:
        if tag.startswith("I-"):
            if not (prev == "B-" + tag[2:] or prev == tag):
                return False
        prev = tag
    return True


def repair_bio(tags) -> tuple[tuple[str, ...], int]:
    """Rewrite ill-formed I-X tags to B-X; returns (repaired, repair count)."""
    repaired = []
    count = 0
    prev = OUTSIDE
    for tag in tags:
        if tag.startswith("I-") and not (prev == "B-" + tag[2:] or prev == tag):
            tag = "B-" + tag[2:]
            count += 1
        repaired.append(tag)
        prev = tag
    return tuple(repaired), count


def spans_to_bio(sentence_length: int, spans) -> tuple[str, ...]:
    """Encode non-overlapping typed spans as a BIO tag sequence."""
    tags = [OUTSIDE] * sentence_length
    occupied = [False] * sentence_length
    for span in sorted(spans, key=lambda s: s.start):
        if span.end > sentence_length:
            raise ContractError(
                f"span ({span.start}, {span.end}) exceeds sentence length "
                f"{sentence_length}"
            )
        if any(occupied[span.start:span.end]):
            raise ContractError(
                f"span ({span.start}, {span.end}, {span.label}) overlaps another span"
            )
        tags[span.start] = "B-" + span.label
        for i in range(span.start + 1, span.end):
            tags[i] = "I-" + span.label
        for i in range(span.start, span.end):
            occupied[i] = True
    return tuple(tags)


def bio_to_spans(tags) -> list[SpanAnnotation]:
    """Decode a tag sequence into typed spans; total on ill-formed input.

    An I-X continuing nothing opens a new span (the repair rule); bare tags
    behave like I-tags of their own type, so equal-tag runs merge.
    """
    spans = []
    start = None
    cur_type = None

    def close(end):
        nonlocal start, cur_type
        if start is not None:
            spans.append(SpanAnnotation(start, end, cur_type))
        start, cur_type = None, None

    for i, tag in enumerate(tags):
        if tag == OUTSIDE:
            close(i)
        elif tag.startswith("B-"):
            close(i)
            start, cur_type = i, tag[2:]
        else:
            t = tag[2:] if tag.startswith("I-") else tag
            if cur_type != t:
                close(i)
                start, cur_type = i, t
    close(len(tags))
    return spans


def infer_tagset(tag_sequences) -> tuple[str, ...]:
    """Deterministic tagset over observed tags: O first, then B-X/I-X pairs
    per sorted type (both members included), then bare tags sorted."""
    types = set()
    bare = set()
    for tags in tag_sequences:
        for tag in tags:
            if tag == OUTSIDE:
                continue
            if tag.startswith("B-") or tag.startswith("I-"):
                types.add(tag[2:])
            else:
                bare.add(tag)
    tagset = [OUTSIDE]
    for t in sorted(types):
        tagset.extend(["B-" + t, "I-" + t])
    tagset.extend(sorted(bare))
    return tuple(tagset)


def read_conll(path, task_name=None, task_id=0, is_main=True) -> Corpus:
    """Read a two-column CoNLL file: ``TOKEN<TAB>TAG``, blank line between
    sentences, optional ``# doc = ID`` comment lines carrying document ids.

    Ill-formed I-tags are repaired to B-tags; the count lands in the report.
    """
    path = str(path)
    try:
        with open(path, encoding="utf-8") as handle:
            lines = handle.read().split("\n")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc

    report = IngestReport()
    raw_sentences = []
    tokens, tags = [], []
    doc_id = ""

    def flush():
        nonlocal tokens, tags
        if tokens:
            fixed, repairs = repair_bio(tags)
            report.bio_repairs += repairs
            raw_sentences.append((Sentence(tuple(tokens), doc_id=doc_id), fixed))
            tokens, tags = [], []

    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            flush()
            continue
        if line.startswith("# doc = "):
            flush()
            doc_id = line[len("# doc = "):].strip()
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise ParseError(
                f"{path}:{lineno}: expected TOKEN<TAB>TAG, got {line!r}"
            )
        tokens.append(parts[0])
        tags.append(parts[1])
    flush()

    if task_name is None:
        task_name = path.rsplit("/", 1)[-1].rsplit(".", 1)[0]
    task = TaskSpec(
        task_id=task_id,
        name=task_name,
        tagset=infer_tagset(tags for _, tags in raw_sentences),
        is_main=is_main,
    )
    return Corpus(task=task, sentences=raw_sentences, report=report)


def write_conll(corpus: Corpus, path) -> None:
    """Write the canonical two-column form read back by :func:`read_conll`."""
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(conll_string(corpus))


def conll_string(corpus: Corpus) -> str:
    blocks = []
    prev_doc = ""
    for sentence, tags in corpus.sentences:
        lines = []
        if sentence.doc_id and sentence.doc_id != prev_doc:
            lines.append(f"# doc = {sentence.doc_id}")
        prev_doc = sentence.doc_id
        lines.extend(f"{tok}\t{tag}" for tok, tag in zip(sentence.tokens, tags))
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n" if blocks else ""


def build_vocab(corpora, embedding_vocab=None, lowercase_fallback=True) -> Vocabulary:
    """Shared vocabulary: union of tokens over all corpora in first-occurrence
    order, then any extra tokens from a pretrained embedding vocabulary."""
    if not corpora:
        raise DataError("build_vocab requires at least one corpus")
    vocab = Vocabulary(lowercase_fallback=lowercase_fallback)
    for corpus in corpora:
        for sentence, _ in corpus.sentences:
            for token in sentence.tokens:
                vocab.add(token)
    if embedding_vocab:
        for token in embedding_vocab:
            vocab.add(token)
    return vocab


def split_corpus(corpus: Corpus, test_fraction: float, seed: int) -> tuple[Corpus, Corpus]:
    """Document-level split: shuffle documents by seed, then move whole
    documents into the test side until it holds ~test_fraction of sentences.

    Sentences with an empty doc_id count as one-sentence documents.
    """
    if not 0.0 < test_fraction < 1.0:
        raise SplitError(f"test_fraction must be in (0, 1), got {test_fraction}")

    doc_keys = []
    doc_sizes = {}
    for i, (sentence, _) in enumerate(corpus.sentences):
        key = sentence.doc_id if sentence.doc_id else f"\x00anon{i}"
        if key not in doc_sizes:
            doc_keys.append(key)
            doc_sizes[key] = 0
        doc_sizes[key] += 1
    if len(doc_keys) < 2:
        raise SplitError("split_corpus requires at least two documents")

    shuffled = list(doc_keys)
    random.Random(seed).shuffle(shuffled)

    total = len(corpus.sentences)
    target = test_fraction * total
    test_docs = set()
    count = 0
    for key in shuffled:
        if count >= target:
            break
        test_docs.add(key)
        count += doc_sizes[key]
    # never swallow the whole corpus
    if len(test_docs) == len(doc_keys):
        test_docs.discard(shuffled[len(shuffled) - 1])

    train_rows, test_rows = [], []
    for i, pair in enumerate(corpus.sentences):
        key = pair[0].doc_id if pair[0].doc_id else f"\x00anon{i}"
        (test_rows if key in test_docs else train_rows).append(pair)
    train = Corpus(task=corpus.task, sentences=train_rows)
    test = Corpus(task=corpus.task, sentences=test_rows)
    return train, test
