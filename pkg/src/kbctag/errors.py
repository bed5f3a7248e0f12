"""Exception hierarchy shared across the package.

Everything derives from KbcError so callers (notably the CLI) can map
failures to exit codes in one place.
"""


class KbcError(Exception):
    """Base class for all package errors."""


class ConfigError(KbcError):
    """Invalid configuration value or experiment config file."""


class DimensionError(KbcError):
    """Tensor shapes do not conform for the requested operation."""


class ContractError(KbcError):
    """An API precondition was violated (e.g. backward on a non-scalar)."""


class LabelError(KbcError):
    """A gold label index or tag lies outside the task's tagset."""


class VocabError(KbcError):
    """A token index lies outside the vocabulary."""


class TaskError(KbcError):
    """Reference to a task the model has no head for."""


class ParseError(KbcError):
    """Malformed line in a CoNLL or embedding file; message carries file:line."""


class AnnotationError(KbcError):
    """Malformed or out-of-range standoff annotation; message names the T-id."""


class SplitError(KbcError):
    """Corpus cannot be split (fewer than two documents)."""


class AlignmentError(KbcError):
    """Gold and predicted sequences are not aligned."""


class DataError(KbcError):
    """Corpus-level problem (empty corpora, tag outside corpus tagset, ...)."""


class CompatibilityError(KbcError):
    """Checkpoint and dataset disagree (tagsets, dimensions)."""


class NumericalError(KbcError):
    """Training aborted on a non-finite loss."""

    def __init__(self, message, step_index=None, task=None, instance=None):
        super().__init__(message)
        self.step_index = step_index
        self.task = task
        self.instance = instance
