import os

import pytest

from kbctag.data import TaskSpec, Vocabulary, read_conll
from kbctag.network import TaggerConfig, TaggerModel

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")


@pytest.fixture(scope="session")
def data_dir():
    return DATA_DIR


@pytest.fixture(scope="session")
def synthetic_corpus():
    return read_conll(os.path.join(DATA_DIR, "synthetic_train.conll"), task_name="synth")


@pytest.fixture(scope="session")
def aux_corpus():
    return read_conll(
        os.path.join(DATA_DIR, "synthetic_aux.conll"),
        task_name="chunks",
        task_id=1,
        is_main=False,
    )


@pytest.fixture
def tiny_model():
    """A 2-task model small enough for per-test gradient probes."""
    vocab = Vocabulary(["we", "use", "an", "oracle", "method"])
    main = TaskSpec(0, "kp", ("O", "B-Task", "I-Task"), is_main=True)
    aux = TaskSpec(1, "chunk", ("O", "B-NP", "I-NP"), is_main=False)
    config = TaggerConfig(embed_dim=3, hidden_dim=3, layers=3, input_dropout=0.0, seed=11)
    return TaggerModel(config, vocab, [main, aux])


def write_brat_pair(tmp_path, text, ann_lines, stem="doc"):
    txt = tmp_path / f"{stem}.txt"
    ann = tmp_path / f"{stem}.ann"
    txt.write_text(text, encoding="utf-8")
    ann.write_text("\n".join(ann_lines) + ("\n" if ann_lines else ""), encoding="utf-8")
    return str(txt), str(ann)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL/SKIP line per acceptance criterion at the end of a run."""
    rows = []
    for outcome in ("passed", "failed", "skipped"):
        for report in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py::test_criterion" not in nodeid:
                continue
            if outcome != "skipped" and report.when != "call":
                continue
            rows.append((nodeid.split("::", 1)[1], outcome.upper()))
    if rows:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name, outcome in sorted(rows):
            terminalreporter.write_line(f"{outcome:<7} {name}")
