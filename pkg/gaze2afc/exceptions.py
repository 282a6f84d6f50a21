"""
exceptions.py

Errors raised by the gaze2afc pipeline. Every error derives from
`Gaze2afcError` and from the builtin exception closest to its meaning,
so callers may catch either.
"""


class Gaze2afcError(Exception):
    """Base class for all pipeline errors."""


class InvalidConfig(Gaze2afcError, ValueError):
    pass


class MalformedHeader(Gaze2afcError, ValueError):
    pass


class MalformedRow(Gaze2afcError, ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message

    def __reduce__(self):
        return type(self), (self.line, self.message), self.__dict__


class NonMonotonicTimestamp(Gaze2afcError, ValueError):
    def __init__(self, line: int, previous: float, current: float):
        super().__init__(
            f"line {line}: timestamp {current!r} does not follow {previous!r}"
        )
        self.line = line
        self.previous = previous
        self.current = current

    def __reduce__(self):
        return type(self), (self.line, self.previous, self.current), self.__dict__


class UnknownLabel(Gaze2afcError, LookupError):
    pass


class DuplicateLabelInFrame(Gaze2afcError, ValueError):
    pass


class NoTemporalOverlap(Gaze2afcError, ValueError):
    pass


class NoIsiData(Gaze2afcError, LookupError):
    pass


class TooFewSamples(Gaze2afcError, ValueError):
    pass


class EmptyTrialWindow(Gaze2afcError, LookupError):
    pass


class NoSegments(Gaze2afcError, LookupError):
    pass


class ZeroVariance(Gaze2afcError, ArithmeticError):
    pass


class NonFiniteInput(Gaze2afcError, ArithmeticError):
    pass


class OutOfRange(Gaze2afcError, ValueError):
    pass


class InsufficientData(Gaze2afcError, ValueError):
    pass


class DivergenceRateTooHigh(Gaze2afcError, RuntimeError):
    pass


class NotConverged(Gaze2afcError, RuntimeError):
    pass


class BridgeNotConverged(Gaze2afcError, RuntimeError):
    pass


class ProposalMismatch(Gaze2afcError, RuntimeError):
    pass


class StageError(Gaze2afcError, RuntimeError):
    """An error that escaped a pipeline stage, tagged with where it happened."""

    def __init__(self, stage: str, participant_id: str | None, cause: BaseException | str):
        where = stage if participant_id is None else f"{stage}, participant {participant_id}"
        detail = cause if isinstance(cause, str) else f"{type(cause).__name__}: {cause}"
        super().__init__(f"[{where}] {detail}")
        self.stage = stage
        self.participant_id = participant_id
        self.detail = detail
        for note in getattr(cause, "__notes__", ()):
            self.add_note(note)

    def __reduce__(self):
        return type(self), (self.stage, self.participant_id, self.detail), self.__dict__
