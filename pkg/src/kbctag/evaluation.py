"""Token-level micro-averaged evaluation plus corpus statistics.

Two modes: ``unlabelled`` counts any non-O token as positive (boundary
identification only); ``labelled`` compares the type carried by the tag,
ignoring the B/I prefix, and pools per-type counts into the micro average.
Note the prefix-insensitive match changes absolute labelled scores relative
to scorers that compare full tags.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .data import Corpus, OUTSIDE, bio_to_spans, tag_type
from .errors import AlignmentError, ConfigError

MODES = ("labelled", "unlabelled")
DEFAULT_BUCKETS = ((1, 1), (2, 2), (3, 4), (5, None))


@dataclass
class Counts:
    """Token confusion counts: true positive, predicted positive, gold positive."""

    tp: int = 0
    predicted: int = 0
    gold: int = 0

    @property
    def precision(self) -> float:
        return self.tp / self.predicted if self.predicted else 0.0

    @property
    def recall(self) -> float:
        return self.tp / self.gold if self.gold else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    def to_dict(self) -> dict:
        return {
            "tp": self.tp,
            "predicted": self.predicted,
            "gold": self.gold,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }


@dataclass
class EvalReport:
    mode: str
    micro: Counts = field(default_factory=Counts)
    per_type: dict[str, Counts] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "micro": self.micro.to_dict(),
            "per_type": {t: c.to_dict() for t, c in sorted(self.per_type.items())},
        }


def _check_aligned(gold, pred):
    if len(gold) != len(pred):
        raise AlignmentError(
            f"gold has {len(gold)} sentences, predictions {len(pred)}"
        )
    for i, (g, p) in enumerate(zip(gold, pred)):
        if len(g) != len(p):
            raise AlignmentError(
                f"sentence {i}: gold length {len(g)} != predicted length {len(p)}"
            )


def token_prf(gold, pred, mode: str = "labelled") -> EvalReport:
    """Micro-averaged token-level precision/recall/F1 over tag sequences."""
    if mode not in MODES:
        raise ConfigError(f"unknown evaluation mode {mode!r}; choose from {MODES}")
    _check_aligned(gold, pred)
    report = EvalReport(mode=mode)

    if mode == "unlabelled":
        for g_tags, p_tags in zip(gold, pred):
            for g, p in zip(g_tags, p_tags):
                g_pos = g != OUTSIDE
                p_pos = p != OUTSIDE
                report.micro.gold += g_pos
                report.micro.predicted += p_pos
                report.micro.tp += g_pos and p_pos
        return report

    for g_tags, p_tags in zip(gold, pred):
        for g, p in zip(g_tags, p_tags):
            gt, pt = tag_type(g), tag_type(p)
            if gt is not None:
                report.per_type.setdefault(gt, Counts()).gold += 1
            if pt is not None:
                report.per_type.setdefault(pt, Counts()).predicted += 1
            if gt is not None and gt == pt:
                report.per_type[gt].tp += 1
    for counts in report.per_type.values():
        report.micro.tp += counts.tp
        report.micro.predicted += counts.predicted
        report.micro.gold += counts.gold
    return report


@dataclass
class CorpusStats:
    """Keyphrase mention statistics of a tagged corpus (training-set view)."""

    n_keyphrases: int = 0
    prop_singleton: float = 0.0
    prop_len_1: float = 0.0
    prop_len_ge2: float = 0.0
    prop_len_ge3: float = 0.0
    prop_len_ge5: float = 0.0

    def to_dict(self) -> dict:
        return {
            "n_keyphrases": self.n_keyphrases,
            "prop_singleton": self.prop_singleton,
            "prop_len_1": self.prop_len_1,
            "prop_len_ge2": self.prop_len_ge2,
            "prop_len_ge3": self.prop_len_ge3,
            "prop_len_ge5": self.prop_len_ge5,
        }

    def format_rows(self) -> str:
        rows = [
            ("Number all keyphrases", f"{self.n_keyphrases}"),
            ("Proportion singleton keyphrases", f"{100 * self.prop_singleton:.1f}%"),
            ("Proportion single-word mentions", f"{100 * self.prop_len_1:.1f}%"),
            ("Proportion mentions with word length >= 2", f"{100 * self.prop_len_ge2:.1f}%"),
            ("Proportion mentions with word length >= 3", f"{100 * self.prop_len_ge3:.1f}%"),
            ("Proportion mentions with word length >= 5", f"{100 * self.prop_len_ge5:.1f}%"),
        ]
        width = max(len(label) for label, _ in rows)
        return "\n".join(f"{label:<{width}}  {value}" for label, value in rows)


def corpus_stats(corpus: Corpus) -> CorpusStats:
    """Mention counts, singleton share and length distribution of a corpus.

    A singleton is a mention whose case-folded surface form occurs exactly
    once; proportions are over all mentions and are 0 for an empty corpus.
    """
    surfaces = Counter()
    lengths = []
    for sentence, tags in corpus.sentences:
        for span in bio_to_spans(tags):
            surfaces[" ".join(sentence.tokens[span.start:span.end]).casefold()] += 1
            lengths.append(len(span))
    n = len(lengths)
    if n == 0:
        return CorpusStats()
    singles = sum(1 for count in surfaces.values() if count == 1)
    return CorpusStats(
        n_keyphrases=n,
        prop_singleton=singles / n,
        prop_len_1=sum(1 for k in lengths if k == 1) / n,
        prop_len_ge2=sum(1 for k in lengths if k >= 2) / n,
        prop_len_ge3=sum(1 for k in lengths if k >= 3) / n,
        prop_len_ge5=sum(1 for k in lengths if k >= 5) / n,
    )


@dataclass
class BucketRecall:
    label: str
    n_spans: int
    strict_recalled: int
    tokens_total: int
    tokens_recalled: int

    @property
    def strict_recall(self) -> float:
        return self.strict_recalled / self.n_spans if self.n_spans else 0.0

    @property
    def token_recall(self) -> float:
        return self.tokens_recalled / self.tokens_total if self.tokens_total else 0.0

    def to_dict(self) -> dict:
        return {
            "bucket": self.label,
            "n_spans": self.n_spans,
            "strict_recall": self.strict_recall,
            "token_recall": self.token_recall,
        }


def _bucket_label(lo: int, hi: int | None) -> str:
    if hi is None:
        return f">={lo}"
    if lo == hi:
        return str(lo)
    return f"{lo}-{hi}"


def length_stratified_report(gold, pred, buckets=DEFAULT_BUCKETS) -> list[BucketRecall]:
    """Recall of gold spans grouped by token length.

    Strict recall requires an identical predicted span (boundaries + type);
    token recall counts gold-span tokens whose predicted tag carries the
    gold type.
    """
    _check_aligned(gold, pred)
    rows = {
        (lo, hi): BucketRecall(_bucket_label(lo, hi), 0, 0, 0, 0) for lo, hi in buckets
    }
    for g_tags, p_tags in zip(gold, pred):
        pred_spans = {(s.start, s.end, s.label) for s in bio_to_spans(p_tags)}
        pred_types = [tag_type(t) for t in p_tags]
        for span in bio_to_spans(g_tags):
            for (lo, hi), record in rows.items():
                if len(span) < lo or (hi is not None and len(span) > hi):
                    continue
                record.n_spans += 1
                record.strict_recalled += (span.start, span.end, span.label) in pred_spans
                record.tokens_total += len(span)
                record.tokens_recalled += sum(
                    1
                    for i in range(span.start, span.end)
                    if pred_types[i] == span.label
                )
    return [rows[b] for b in buckets]


def results_table(rows) -> str:
    """Aligned text table over (name, unlabelled report, labelled report) rows.

    Values render as percentages with two decimals; the best F1 per block is
    flagged with ``*``; a missing report renders as dashes.
    """
    if not rows:
        raise ConfigError("results_table requires at least one row")

    def f1(report):
        return report.micro.f1 if report is not None else None

    best_unlab = max((f1(u) for _, u, _ in rows if u is not None), default=None)
    best_lab = max((f1(lab) for _, _, lab in rows if lab is not None), default=None)

    def cells(report, best):
        if report is None:
            return ["-", "-", "-"]
        m = report.micro
        flag = "*" if best is not None and m.f1 == best else ""
        return [
            f"{100 * m.precision:.2f}",
            f"{100 * m.recall:.2f}",
            f"{100 * m.f1:.2f}{flag}",
        ]

    name_width = max(len("Method"), max(len(name) for name, _, _ in rows))
    header = (
        f"{'Method':<{name_width}} | {'Unlabelled':^26} | {'Labelled':^26}\n"
        f"{'':<{name_width}} | {'P':>8} {'R':>8} {'F1':>8} | {'P':>8} {'R':>8} {'F1':>8}"
    )
    lines = [header, "-" * len(header.split("\n")[1])]
    for name, unlab, lab in rows:
        u = cells(unlab, best_unlab)
        v = cells(lab, best_lab)
        lines.append(
            f"{name:<{name_width}} | {u[0]:>8} {u[1]:>8} {u[2]:>8} "
            f"| {v[0]:>8} {v[1]:>8} {v[2]:>8}"
        )
    return "\n".join(lines)
