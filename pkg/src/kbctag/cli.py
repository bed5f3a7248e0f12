"""Command line interface: convert, train, eval, predict, stats.

One experiment = one declarative JSON config file (one per results-table
row).  All artifacts land in the config's output directory: a config
snapshot, checkpoints, a line-delimited training log and evaluation
reports.  Output files carry no timestamps, so a rerun with the same
(config, seed, data) reproduces them byte for byte.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numerical
abort.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass

from .brat import read_brat, read_brat_dir, tokenize_with_offsets
from .checkpoint import load_checkpoint, save_checkpoint
from .data import (
    Corpus,
    build_vocab,
    conll_string,
    read_conll,
    split_corpus,
    write_conll,
)
from .embeddings import load_embeddings, read_embedding_vocab
from .errors import CompatibilityError, ConfigError, KbcError, NumericalError
from .evaluation import (
    corpus_stats,
    length_stratified_report,
    results_table,
    token_prf,
)
from .network import TaggerConfig, TaggerModel
from .training import TrainConfig, TrainRun, train

FORMATS = ("conll", "brat")


@dataclass
class DatasetConfig:
    name: str
    format: str
    train: str
    test: str | None = None
    test_fraction: float | None = None
    split_seed: int = 0

    def validate(self, role: str) -> None:
        if self.format not in FORMATS:
            raise ConfigError(f"{role}: unknown format {self.format!r}")
        if not os.path.exists(self.train):
            raise ConfigError(f"{role}: train path {self.train!r} does not exist")
        if self.test is not None and not os.path.exists(self.test):
            raise ConfigError(f"{role}: test path {self.test!r} does not exist")
        if self.test is not None and self.test_fraction is not None:
            raise ConfigError(f"{role}: give either test or test_fraction, not both")


@dataclass
class ExperimentConfig:
    main_task: DatasetConfig
    output_dir: str
    aux_task: DatasetConfig | None = None
    embeddings_path: str | None = None
    include_embedding_vocab: bool = False
    tagger: TaggerConfig = None
    training: TrainConfig = None
    eval_mode: str = "both"

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        try:
            with open(path, encoding="utf-8") as handle:
                raw = json.load(handle)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        try:
            main = DatasetConfig(**raw["main_task"])
        except KeyError:
            raise ConfigError("config requires a main_task section") from None
        except TypeError as exc:
            raise ConfigError(f"main_task: {exc}") from exc
        aux = None
        if raw.get("aux_task"):
            aux_raw = raw["aux_task"]
            if isinstance(aux_raw, list):
                raise ConfigError("at most one auxiliary task is supported")
            try:
                aux = DatasetConfig(**aux_raw)
            except TypeError as exc:
                raise ConfigError(f"aux_task: {exc}") from exc
        emb = raw.get("embeddings") or {}
        output_dir = raw.get("output_dir")
        if not output_dir:
            raise ConfigError("config requires output_dir")
        try:
            tagger = TaggerConfig.from_dict(raw.get("tagger", {}))
            training = TrainConfig.from_dict(raw.get("training", {}))
        except TypeError as exc:
            raise ConfigError(f"bad tagger/training section: {exc}") from exc
        mode = raw.get("eval_mode", "both")
        if mode not in ("labelled", "unlabelled", "both"):
            raise ConfigError(f"eval_mode must be labelled|unlabelled|both, got {mode!r}")
        return cls(
            main_task=main,
            aux_task=aux,
            embeddings_path=emb.get("path"),
            include_embedding_vocab=bool(emb.get("include_vocab", False)),
            tagger=tagger,
            training=training,
            output_dir=output_dir,
            eval_mode=mode,
        )

    def validate(self) -> None:
        self.main_task.validate("main_task")
        if self.aux_task is not None:
            self.aux_task.validate("aux_task")
            if self.aux_task.test or self.aux_task.test_fraction:
                raise ConfigError("aux_task never carries a test split")
        if self.embeddings_path and not os.path.exists(self.embeddings_path):
            raise ConfigError(f"embeddings path {self.embeddings_path!r} does not exist")

    def to_dict(self) -> dict:
        out = {
            "main_task": vars(self.main_task).copy(),
            "aux_task": vars(self.aux_task).copy() if self.aux_task else None,
            "embeddings": (
                {"path": self.embeddings_path, "include_vocab": self.include_embedding_vocab}
                if self.embeddings_path
                else None
            ),
            "tagger": self.tagger.to_dict(),
            "training": self.training.to_dict(),
            "output_dir": self.output_dir,
            "eval_mode": self.eval_mode,
        }
        return out


def _read_dataset(path: str, fmt: str, name: str, task_id: int, is_main: bool) -> Corpus:
    if fmt == "brat":
        if os.path.isdir(path):
            return read_brat_dir(path, task_name=name, task_id=task_id, is_main=is_main)
        stem = os.path.splitext(path)[0]
        return read_brat(
            stem + ".txt", stem + ".ann", task_name=name, task_id=task_id, is_main=is_main
        )
    return read_conll(path, task_name=name, task_id=task_id, is_main=is_main)


class _RunLock:
    """Exclusive marker so two runs never share one output directory."""

    def __init__(self, directory: str):
        self.path = os.path.join(directory, ".lock")
        self.fd = None

    def __enter__(self):
        try:
            self.fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise ConfigError(
                f"output directory {os.path.dirname(self.path)!r} is locked by "
                "another run (remove .lock if that run is dead)"
            ) from None
        os.write(self.fd, str(os.getpid()).encode("ascii"))
        return self

    def __exit__(self, *exc_info):
        if self.fd is not None:
            os.close(self.fd)
            os.remove(self.path)
        return False


def _write_json(path: str, payload) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


# ---- subcommands ----------------------------------------------------------


def cmd_convert(args) -> int:
    if args.format == "brat":
        if args.dir:
            corpus = read_brat_dir(args.dir)
        else:
            if not (args.txt and args.ann):
                raise ConfigError("brat conversion needs --txt and --ann (or --dir)")
            corpus = read_brat(args.txt, args.ann)
    else:
        if not args.input:
            raise ConfigError("conll conversion needs --in")
        corpus = read_conll(args.input)
    text = conll_string(corpus)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)
    print(f"conversion report: {json.dumps(corpus.report.as_dict())}", file=sys.stderr)
    return 0


def _prepare_corpora(cfg: ExperimentConfig):
    """Ingest everything the config names; returns (train, test, aux)."""
    main = _read_dataset(
        cfg.main_task.train, cfg.main_task.format, cfg.main_task.name, 0, True
    )
    test = None
    if cfg.main_task.test:
        test = _read_dataset(
            cfg.main_task.test, cfg.main_task.format, cfg.main_task.name, 0, True
        )
        # share the training task spec so head and tagset line up
        test = Corpus(task=main.task, sentences=test.sentences, report=test.report)
    elif cfg.main_task.test_fraction:
        main, test = split_corpus(
            main, cfg.main_task.test_fraction, cfg.main_task.split_seed
        )
    aux = None
    if cfg.aux_task is not None:
        aux = _read_dataset(
            cfg.aux_task.train, cfg.aux_task.format, cfg.aux_task.name, 1, False
        )
    return main, test, aux


def cmd_train(args) -> int:
    cfg = ExperimentConfig.from_file(args.config)
    if args.seed is not None:
        cfg.training = TrainConfig.from_dict(
            {**cfg.training.to_dict(), "seed": args.seed}
        )
        cfg.tagger = TaggerConfig.from_dict({**cfg.tagger.to_dict(), "seed": args.seed})
    if args.out:
        cfg.output_dir = args.out
    cfg.validate()

    os.makedirs(cfg.output_dir, exist_ok=True)
    with _RunLock(cfg.output_dir):
        main_train, main_test, aux = _prepare_corpora(cfg)

        corpora = [main_train] + ([aux] if aux else [])
        embedding_vocab = None
        if cfg.embeddings_path and cfg.include_embedding_vocab:
            embedding_vocab = read_embedding_vocab(cfg.embeddings_path)
        vocab = build_vocab(corpora, embedding_vocab=embedding_vocab)

        table = None
        if cfg.embeddings_path:
            table = load_embeddings(
                cfg.embeddings_path, vocab, cfg.tagger.embed_dim, seed=cfg.tagger.seed
            )
            print(f"embedding coverage: {table.coverage:.3f}", file=sys.stderr)

        tasks = [c.task for c in corpora]
        model = TaggerModel(cfg.tagger, vocab, tasks, embeddings=table)
        run = TrainRun(model=model, main_corpus=main_train, aux_corpus=aux)

        ckpt_dir = os.path.join(cfg.output_dir, "checkpoints")
        if cfg.training.checkpoint_every:
            os.makedirs(ckpt_dir, exist_ok=True)
        log = train(
            run,
            cfg.training,
            checkpoint_dir=ckpt_dir if cfg.training.checkpoint_every else None,
        )

        save_checkpoint(model, os.path.join(cfg.output_dir, "model.ckpt"))
        _write_json(os.path.join(cfg.output_dir, "config.json"), cfg.to_dict())
        with open(
            os.path.join(cfg.output_dir, "train_log.jsonl"),
            "w",
            encoding="utf-8",
            newline="\n",
        ) as handle:
            for record in log:
                handle.write(json.dumps(record.to_dict(), sort_keys=True) + "\n")
        ingest = {c.task.name: c.report.as_dict() for c in corpora}
        _write_json(os.path.join(cfg.output_dir, "run_report.json"), {"ingestion": ingest})

        if main_test is not None:
            data_dir = os.path.join(cfg.output_dir, "data")
            os.makedirs(data_dir, exist_ok=True)
            write_conll(main_train, os.path.join(data_dir, "train.conll"))
            write_conll(main_test, os.path.join(data_dir, "test.conll"))

        for record in log:
            print(
                f"epoch {record.epoch} task {record.task}: steps={record.steps} "
                f"mean_loss={record.mean_loss}",
                file=sys.stderr,
            )
    return 0


def _eval_reports(model: TaggerModel, corpus: Corpus, mode: str, gold_as_pred: bool):
    gold = [tags for _, tags in corpus.sentences]
    if gold_as_pred:
        pred = list(gold)
    else:
        pred = [model.predict(s.tokens) for s, _ in corpus.sentences]
    reports = {}
    if mode in ("unlabelled", "both"):
        reports["unlabelled"] = token_prf(gold, pred, mode="unlabelled")
    if mode in ("labelled", "both"):
        reports["labelled"] = token_prf(gold, pred, mode="labelled")
    length = length_stratified_report(gold, pred)
    return reports, length


def _check_tag_cover(model: TaggerModel, corpus: Corpus) -> None:
    seen = set()
    for _, tags in corpus.sentences:
        seen.update(tags)
    missing = seen - set(model.main_task.tagset)
    if missing:
        raise CompatibilityError(
            f"test data carries tags {sorted(missing)} absent from the "
            "checkpoint's main tagset"
        )


def cmd_eval(args) -> int:
    model = load_checkpoint(args.checkpoint)
    corpus = _read_dataset(args.data, args.format, "eval", 0, True)
    _check_tag_cover(model, corpus)

    reports, length = _eval_reports(model, corpus, args.mode, args.gold_as_pred)
    row_name = args.name or os.path.basename(args.checkpoint)
    table = results_table(
        [(row_name, reports.get("unlabelled"), reports.get("labelled"))]
    )
    print(table)
    print()
    print("gold-span recall by span length (strict / token):")
    for bucket in length:
        print(
            f"  length {bucket.label:>3}: n={bucket.n_spans:<5} "
            f"strict={bucket.strict_recall:.4f} token={bucket.token_recall:.4f}"
        )

    if args.out:
        os.makedirs(args.out, exist_ok=True)
        for mode, report in reports.items():
            _write_json(os.path.join(args.out, f"report_{mode}.json"), report.to_dict())
        _write_json(
            os.path.join(args.out, "report_length.json"),
            [b.to_dict() for b in length],
        )
        with open(
            os.path.join(args.out, "results_table.txt"),
            "w",
            encoding="utf-8",
            newline="\n",
        ) as handle:
            handle.write(table + "\n")
    return 0


def cmd_predict(args) -> int:
    model = load_checkpoint(args.checkpoint)
    with open(args.input, encoding="utf-8") as handle:
        lines = [line.rstrip("\n") for line in handle]
    blocks = []
    for line in lines:
        tokens = [t for t, _, _ in tokenize_with_offsets(line)]
        if not tokens:
            continue
        tags = model.predict(tokens)
        blocks.append("\n".join(f"{tok}\t{tag}" for tok, tag in zip(tokens, tags)))
    text = "\n\n".join(blocks) + "\n" if blocks else ""
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_stats(args) -> int:
    corpus = _read_dataset(args.data, args.format, "stats", 0, True)
    stats = corpus_stats(corpus)
    print(stats.format_rows())
    return 0


# ---- argument parsing ------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors -> exit code 1, not argparse's 2
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kbc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="convert brat or conll input to canonical conll")
    p.add_argument("--format", choices=FORMATS, required=True, dest="format")
    p.add_argument("--in", dest="input", help="conll input file")
    p.add_argument("--txt", help="brat text file")
    p.add_argument("--ann", help="brat annotation file")
    p.add_argument("--dir", help="directory of brat .txt/.ann pairs")
    p.add_argument("--out", help="output file (default: stdout)")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("train", help="train a model from an experiment config")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, help="override the config seeds")
    p.add_argument("--out", help="override the config output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a tagged dataset")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--format", choices=FORMATS, default="conll")
    p.add_argument("--mode", choices=("labelled", "unlabelled", "both"), default="both")
    p.add_argument("--out", help="directory for report files")
    p.add_argument("--name", help="row label in the results table")
    p.add_argument(
        "--gold-as-pred",
        action="store_true",
        help="debug: score gold against itself (must give 100.00 everywhere)",
    )
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="tag raw text (one sentence per line)")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", help="output file (default: stdout)")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("stats", help="print corpus statistics")
    p.add_argument("--data", required=True)
    p.add_argument("--format", choices=FORMATS, default="conll")
    p.set_defaults(func=cmd_stats)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return 3
    except KbcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
