"""Exception hierarchy shared across the toolkit.

Every error raised by the library derives from ToolkitError so callers
(and the CLI exit-code mapping) can distinguish toolkit failures from
programming errors.
"""


class ToolkitError(Exception):
    """Base class for all toolkit errors."""


class GridMismatchError(ToolkitError):
    """Two objects that must share dims/spacing do not."""


class TensorFormatError(ToolkitError):
    """A tensor or PNM file violates its format contract."""


class PriorsError(ToolkitError):
    """A priors table is malformed or missing a required class."""


class LexiconError(ToolkitError):
    """A lexicon file is malformed or violates its invariants."""


class PromptError(ToolkitError):
    """A prompt string cannot be parsed or canonicalized."""


class TransportError(ToolkitError):
    """A single LLM transport attempt failed (retryable)."""


class TransportExhaustedError(ToolkitError):
    """All LLM transport attempts failed."""

    def __init__(self, message: str, last_error: Exception | None = None):
        super().__init__(message)
        self.last_error = last_error


class UnparseableCompletionError(PromptError):
    """The LLM returned text that does not parse as canonical prompts."""

    def __init__(self, message: str, raw_response: str):
        super().__init__(message)
        self.raw_response = raw_response
