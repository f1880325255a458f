"""Exception hierarchy shared by every module.

Errors fall in two families: ``ModelError`` signals a malformed or
incomplete model (bad tables, dangling references) and ``ExecutionError``
signals something that went wrong while running a well-formed model.
"""

from __future__ import annotations


class PurposeFrameError(Exception):
    """Base class for all package errors."""


class ModelError(PurposeFrameError):
    """The model violates a structural invariant."""


class ExecutionError(PurposeFrameError):
    """A well-formed model failed while being executed."""


class UnknownState(ModelError):
    pass


class UnknownAction(ModelError):
    pass


class UnknownObservation(ModelError):
    pass


class UnknownEncodingPoint(ModelError):
    pass


class UncoveredState(ModelError):
    pass


class MalformedRow(ModelError):
    """A probability row is not a distribution."""


class MixedSignSupport(ModelError):
    pass


class EmptySupport(ModelError):
    pass


class EmptyMission(ModelError):
    pass


class DimensionMismatch(ModelError):
    pass


class PointOutsideSupport(ModelError):
    pass


class DuplicateGoalKey(ModelError):
    pass


class IncompleteModel(ModelError):
    pass


class UnnormalizedDistribution(ModelError):
    pass


class SupportViolation(ModelError):
    pass


class UtilityOutOfRange(ModelError):
    pass


class EmptyIntentionSet(ExecutionError):
    pass


class UnpredictableCandidate(ExecutionError):
    pass


class Unsolvable(ExecutionError):
    pass


class SubgoalTimeout(ExecutionError):
    """A link of a subgoal chain was not achieved within its timeout.

    ``index`` is the zero-based position of the failed link; the final goal
    has index ``len(chain)``. ``result`` carries the partial execution.
    """

    def __init__(self, index: int, goal_id: str, result=None):
        super().__init__(f"link {index} ({goal_id}) not achieved within timeout")
        self.index = index
        self.goal_id = goal_id
        self.result = result


class HorizonTooShort(ExecutionError):
    pass


class TraceDidNotSucceed(ExecutionError):
    pass


class ValidationError(ModelError):
    """A scenario file parsed but violates an invariant.

    ``element`` names the offending element id when one is known.
    """

    def __init__(self, message: str, element: str | None = None):
        super().__init__(message if element is None else f"{element}: {message}")
        self.element = element


class ParseError(PurposeFrameError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = "" if line is None else f" (line {line}, column {column})"
        super().__init__(message + where)
        self.line = line
        self.column = column
