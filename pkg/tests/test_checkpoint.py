import numpy as np
import pytest

from kbctag.checkpoint import load_checkpoint, save_checkpoint
from kbctag.errors import CompatibilityError


def test_roundtrip_restores_everything(tiny_model, tmp_path):
    path = tmp_path / "model.ckpt"
    save_checkpoint(tiny_model, path)
    loaded = load_checkpoint(path)

    assert loaded.config == tiny_model.config
    assert loaded.vocab.tokens() == tiny_model.vocab.tokens()
    assert [t.name for t in loaded.tasks] == [t.name for t in tiny_model.tasks]
    assert [t.tagset for t in loaded.tasks] == [t.tagset for t in tiny_model.tasks]
    assert loaded.main_task.name == tiny_model.main_task.name
    for (name_a, node_a), (name_b, node_b) in zip(
        tiny_model.parameters(), loaded.parameters()
    ):
        assert name_a == name_b
        assert np.array_equal(node_a.value, node_b.value), name_a


def test_roundtrip_is_bitwise_stable(tiny_model, tmp_path):
    first = tmp_path / "a.ckpt"
    second = tmp_path / "b.ckpt"
    save_checkpoint(tiny_model, first)
    save_checkpoint(load_checkpoint(first), second)
    assert first.read_bytes() == second.read_bytes()


def test_loaded_model_predicts_identically(tiny_model, tmp_path):
    path = tmp_path / "model.ckpt"
    save_checkpoint(tiny_model, path)
    loaded = load_checkpoint(path)
    tokens = ["we", "use", "an", "oracle"]
    assert loaded.predict(tokens) == tiny_model.predict(tokens)
    np.testing.assert_array_equal(loaded.forward(tokens), tiny_model.forward(tokens))


def test_bad_magic_rejected(tmp_path):
    path = tmp_path / "junk.ckpt"
    path.write_bytes(b"not a checkpoint at all")
    with pytest.raises(CompatibilityError):
        load_checkpoint(path)


def test_truncated_payload_rejected(tiny_model, tmp_path):
    path = tmp_path / "model.ckpt"
    save_checkpoint(tiny_model, path)
    data = path.read_bytes()
    path.write_bytes(data[:-16])
    with pytest.raises(CompatibilityError):
        load_checkpoint(path)
