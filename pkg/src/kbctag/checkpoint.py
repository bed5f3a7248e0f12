"""Model checkpoint container.

Layout (all bytes deterministic for a given model, no timestamps):

    line 1: magic + format version        b"KBCTAG-CKPT 1\\n"
    line 2: decimal header length         b"<n>\\n"
    n bytes: JSON header (config, vocab, tasks, tensor manifest)
    rest:   concatenated little-endian float64 tensor payloads, C order,
            in manifest order

Write then read restores every tensor bit for bit.
"""

from __future__ import annotations

import json

import numpy as np

from .data import TaskSpec, Vocabulary
from .errors import CompatibilityError
from .network import TaggerConfig, TaggerModel

MAGIC = b"KBCTAG-CKPT 1\n"


def save_checkpoint(model: TaggerModel, path) -> None:
    named = model.parameters()
    header = {
        "config": model.config.to_dict(),
        "vocab": model.vocab.tokens(),
        "lowercase_fallback": model.vocab.lowercase_fallback,
        "tasks": [
            {
                "task_id": t.task_id,
                "name": t.name,
                "tagset": list(t.tagset),
                "is_main": t.is_main,
            }
            for t in model.tasks
        ],
        "tensors": [{"name": name, "shape": list(node.value.shape)} for name, node in named],
    }
    payload = json.dumps(header, ensure_ascii=False, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as handle:
        handle.write(MAGIC)
        handle.write(str(len(payload)).encode("ascii") + b"\n")
        handle.write(payload)
        for _, node in named:
            handle.write(np.ascontiguousarray(node.value, dtype="<f8").tobytes())


def load_checkpoint(path) -> TaggerModel:
    with open(path, "rb") as handle:
        magic = handle.read(len(MAGIC))
        if magic != MAGIC:
            raise CompatibilityError(f"{path}: not a recognized checkpoint (bad magic)")
        length_line = handle.readline()
        try:
            header_len = int(length_line.strip())
        except ValueError:
            raise CompatibilityError(f"{path}: corrupt header length") from None
        header = json.loads(handle.read(header_len).decode("utf-8"))
        blob = handle.read()

    config = TaggerConfig.from_dict(header["config"])
    vocab = Vocabulary.from_ordered_tokens(
        header["vocab"], lowercase_fallback=header["lowercase_fallback"]
    )
    tasks = [
        TaskSpec(
            task_id=t["task_id"],
            name=t["name"],
            tagset=tuple(t["tagset"]),
            is_main=t["is_main"],
        )
        for t in header["tasks"]
    ]
    model = TaggerModel(config, vocab, tasks)

    by_name = dict(model.parameters())
    offset = 0
    for entry in header["tensors"]:
        name, shape = entry["name"], tuple(entry["shape"])
        node = by_name.get(name)
        if node is None:
            raise CompatibilityError(f"{path}: unknown tensor {name!r} in manifest")
        if node.value.shape != shape:
            raise CompatibilityError(
                f"{path}: tensor {name!r} shape {shape} does not match model "
                f"{node.value.shape}"
            )
        count = int(np.prod(shape)) if shape else 1
        end = offset + 8 * count
        if end > len(blob):
            raise CompatibilityError(f"{path}: truncated tensor payload at {name!r}")
        node.value = np.frombuffer(blob[offset:end], dtype="<f8").reshape(shape).copy()
        offset = end
    if offset != len(blob):
        raise CompatibilityError(f"{path}: {len(blob) - offset} trailing payload bytes")
    return model
