"""Exception hierarchy shared across the package."""

from __future__ import annotations


class AnalogyError(Exception):
    """Base class for all errors raised by this package."""


class PreconditionViolation(AnalogyError, ValueError):
    """An operation was called with arguments that break its contract."""


class ParseError(AnalogyError):
    """Text (model output or an input file) could not be parsed."""


# --- llm backend -----------------------------------------------------------


class BackendError(AnalogyError):
    """Any failure talking to a completion provider."""


class AuthError(BackendError):
    pass


class RateLimited(BackendError):
    pass


class BackendUnavailable(BackendError):
    """Transient provider failures persisted after all retries."""


class ContextOverflow(BackendError):
    """The provider rejected the prompt as too long.

    Usually means the memory assembly budget is set too high for the model.
    """


class ReplayMiss(BackendError):
    """No cassette entry matches a request digest.

    Usually means prompt construction is nondeterministic.
    """

    def __init__(self, digest: str):
        super().__init__(f"no cassette entry for request digest {digest}")
        self.digest = digest


# --- memory / internal state -----------------------------------------------


class ClockViolation(AnalogyError):
    pass


class BudgetTooSmall(AnalogyError):
    pass


class EmptyList(AnalogyError, ValueError):
    pass


class NoPeerStatements(AnalogyError):
    pass


# --- organization / dialogue / corpus / experiment -------------------------


class UnknownAgent(AnalogyError, KeyError):
    pass


class MissingVariable(AnalogyError, KeyError):
    pass


class MissingDomain(AnalogyError):
    pass


class InvalidSpec(AnalogyError, ValueError):
    pass


# --- evaluation --------------------------------------------------------------


class InvalidTranscript(AnalogyError):
    pass


class AwardOutOfRange(AnalogyError, ValueError):
    pass


class EmptyScores(AnalogyError, ValueError):
    pass
