"""
Exception hierarchy shared by every visaflow app.

Each exception carries the exit code the management commands hand back to
the shell: 2 for validation problems, 3 for numeric failures, 4 for
version mismatches between artifacts.
"""

from django.core.exceptions import ImproperlyConfigured


class VisaFlowError(Exception):
    """Base class for all errors raised by the pipeline."""

    exit_code = 1


class ValidationFailure(VisaFlowError, ValueError):
    """An input violated a declared precondition."""

    exit_code = 2


class ConfigurationError(ValidationFailure, ImproperlyConfigured):
    """Unknown subtask, tracker, grounder or an invalid run configuration."""


class GroundingError(ValidationFailure):
    """An instruction noun could not be resolved to an entity."""

    def __init__(self, message: str, noun: str | None = None):
        super().__init__(message)
        self.noun = noun


class SamplingError(ValidationFailure):
    """Point sampling was asked to sample from an empty mask."""


class StageError(ValidationFailure):
    """A dataset does not fit the training stage it was given to."""


class DegenerateBatchError(ValidationFailure):
    """Every target in a batch is padding."""


class NumericError(VisaFlowError, ArithmeticError):
    """Non-finite activations or losses."""

    exit_code = 3

    def __init__(
        self,
        message: str,
        layer_index: int | None = None,
        batch_id: int | None = None,
        dump_path=None,
    ):
        super().__init__(message)
        self.layer_index = layer_index
        self.batch_id = batch_id
        self.dump_path = dump_path


class VersionMismatch(VisaFlowError):
    """Checkpoint, pipeline or metadata versions do not agree."""

    exit_code = 4
