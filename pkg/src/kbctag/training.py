"""Multi-task training loop with momentum SGD.

Each step samples a task (uniformly by default), then an instance uniformly
from that task's corpus, computes the per-sentence cross-entropy loss with
input dropout, backpropagates, and updates all shared encoder/embedding
parameters plus only the sampled task's head.  An epoch is the combined
sentence count of all participating corpora; sampling is with replacement.

The whole run is a deterministic function of (seed, data, config): one
generator drives task choices, instance choices and dropout masks.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .data import Corpus
from .errors import ConfigError, DataError, DimensionError, NumericalError
from .network import TaggerModel

SAMPLING_POLICIES = ("uniform", "proportional")


@dataclass
class TrainConfig:
    learning_rate: float = 0.001
    momentum: float = 0.9
    epochs: int = 10
    seed: int = 0
    task_sampling: str = "uniform"
    checkpoint_every: int = 0  # epochs between checkpoints; 0 = final only
    clip_norm: float | None = None  # optional global max-norm on gradients

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError("momentum must lie in [0, 1)")
        if self.epochs < 1:
            raise ConfigError("epochs must be at least 1")
        if self.task_sampling not in SAMPLING_POLICIES:
            raise ConfigError(
                f"unknown task_sampling {self.task_sampling!r}; "
                f"choose from {SAMPLING_POLICIES}"
            )
        if self.checkpoint_every < 0:
            raise ConfigError("checkpoint_every must be >= 0")
        if self.clip_norm is not None and self.clip_norm <= 0:
            raise ConfigError("clip_norm must be positive when set")

    def to_dict(self) -> dict:
        return {
            "learning_rate": self.learning_rate,
            "momentum": self.momentum,
            "epochs": self.epochs,
            "seed": self.seed,
            "task_sampling": self.task_sampling,
            "checkpoint_every": self.checkpoint_every,
            "clip_norm": self.clip_norm,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        return cls(**data)


class OptimizerState:
    """One zero-initialized velocity buffer per named parameter."""

    def __init__(self, named_params):
        self.velocity = {name: np.zeros_like(node.value) for name, node in named_params}

    def velocity_for(self, name: str) -> np.ndarray:
        return self.velocity[name]


def sgd_momentum_step(named_params, named_grads, opt: OptimizerState, lr: float, mu: float):
    """v <- mu*v - lr*g; p <- p + v, elementwise per tensor (in place)."""
    for (name, param), (_, grad) in zip(named_params, named_grads):
        if grad.shape != param.shape:
            raise DimensionError(
                f"{name}: gradient shape {grad.shape} does not match parameter "
                f"{param.shape}"
            )
        v = opt.velocity[name]
        v *= mu
        v -= lr * grad
        param += v


@dataclass
class StepRecord:
    task: str
    instance: int
    loss: float


@dataclass
class EpochRecord:
    epoch: int
    task: str
    steps: int
    mean_loss: float | None

    def to_dict(self) -> dict:
        return {
            "epoch": self.epoch,
            "task": self.task,
            "steps": self.steps,
            "mean_loss": self.mean_loss,
        }


@dataclass
class TrainRun:
    """A training configuration instance: model, main corpus, at most one
    auxiliary corpus, optimizer state and the accumulated epoch log."""

    model: TaggerModel
    main_corpus: Corpus
    aux_corpus: Corpus | None = None
    optimizer: OptimizerState = None
    log: list[EpochRecord] = field(default_factory=list)

    def __post_init__(self):
        if not self.main_corpus.task.is_main:
            raise DataError("main_corpus task must have is_main=True")
        if self.aux_corpus is not None and self.aux_corpus.task.is_main:
            raise DataError("aux_corpus task must have is_main=False")
        if self.optimizer is None:
            self.optimizer = OptimizerState(self.model.parameters())

    def corpora(self) -> list[Corpus]:
        out = [self.main_corpus]
        if self.aux_corpus is not None:
            out.append(self.aux_corpus)
        return out


def _sample_task(run: TrainRun, rng: np.random.Generator, policy: str) -> Corpus:
    corpora = run.corpora()
    nonempty = [c for c in corpora if len(c) > 0]
    if not nonempty:
        raise DataError("all corpora are empty; nothing to sample")
    if policy == "proportional":
        sizes = np.array([len(c) for c in nonempty], dtype=np.float64)
        return nonempty[int(rng.choice(len(nonempty), p=sizes / sizes.sum()))]
    return nonempty[int(rng.integers(len(nonempty)))]


def training_step(
    run: TrainRun,
    rng: np.random.Generator,
    lr: float = 0.001,
    momentum: float = 0.9,
    task_sampling: str = "uniform",
    clip_norm: float | None = None,
) -> StepRecord:
    """One sampled update; returns the (task, instance, loss) record."""
    corpus = _sample_task(run, rng, task_sampling)
    task = corpus.task
    instance = int(rng.integers(len(corpus)))
    sentence, tags = corpus.sentences[instance]

    loss = run.model.sentence_loss(
        sentence.tokens, tags, task_name=task.name, train_mode=True, rng=rng
    )
    ad.backward(loss)

    updated = run.model.shared_parameters() + run.model.head_parameters(task.name)
    grads = [(name, node.grad) for name, node in updated]
    if clip_norm is not None:
        total = math.sqrt(sum(float((g * g).sum()) for _, g in grads))
        if total > clip_norm:
            factor = clip_norm / total
            grads = [(name, g * factor) for name, g in grads]
    params = [(name, node.value) for name, node in updated]
    sgd_momentum_step(params, grads, run.optimizer, lr, momentum)
    return StepRecord(task=task.name, instance=instance, loss=float(loss.value))


def train(run: TrainRun, cfg: TrainConfig, checkpoint_dir=None) -> list[EpochRecord]:
    """Run the full schedule; appends per-epoch per-task records to run.log.

    Aborts with NumericalError (naming step, task and instance) the moment
    a non-finite loss appears.
    """
    from .checkpoint import save_checkpoint  # local import to avoid a cycle

    rng = np.random.default_rng(cfg.seed)
    steps_per_epoch = sum(len(c) for c in run.corpora())
    if steps_per_epoch == 0:
        raise DataError("cannot train: all corpora are empty")
    task_names = [c.task.name for c in run.corpora()]

    step_index = 0
    for epoch in range(1, cfg.epochs + 1):
        sums = {name: 0.0 for name in task_names}
        counts = {name: 0 for name in task_names}
        for _ in range(steps_per_epoch):
            record = training_step(
                run,
                rng,
                lr=cfg.learning_rate,
                momentum=cfg.momentum,
                task_sampling=cfg.task_sampling,
                clip_norm=cfg.clip_norm,
            )
            step_index += 1
            if not math.isfinite(record.loss):
                raise NumericalError(
                    f"non-finite loss {record.loss} at step {step_index} "
                    f"(task {record.task!r}, instance {record.instance})",
                    step_index=step_index,
                    task=record.task,
                    instance=record.instance,
                )
            sums[record.task] += record.loss
            counts[record.task] += 1
        for name in task_names:
            mean = sums[name] / counts[name] if counts[name] else None
            run.log.append(
                EpochRecord(epoch=epoch, task=name, steps=counts[name], mean_loss=mean)
            )
        if checkpoint_dir and cfg.checkpoint_every and epoch % cfg.checkpoint_every == 0:
            save_checkpoint(
                run.model, os.path.join(checkpoint_dir, f"epoch_{epoch:03d}.ckpt")
            )
    return run.log
