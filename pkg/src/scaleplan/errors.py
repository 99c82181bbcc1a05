"""Exception hierarchy shared across the toolkit."""

from __future__ import annotations


class ScalePlanError(Exception):
    """Base class for every error raised by this package."""


# -- PDDL ------------------------------------------------------------------


class PDDLSyntaxError(ScalePlanError):
    def __init__(self, message: str, line: int = 0, col: int = 0, expected: str | None = None):
        self.line = line
        self.col = col
        self.expected = expected
        where = f"{line}:{col}: " if line else ""
        suffix = f" (expected {expected})" if expected else ""
        super().__init__(f"{where}{message}{suffix}")


class UnsupportedFeature(ScalePlanError):
    def __init__(self, keyword: str, line: int = 0, col: int = 0):
        self.keyword = keyword
        self.line = line
        self.col = col
        where = f"{line}:{col}: " if line else ""
        super().__init__(f"{where}unsupported PDDL feature {keyword}")


class PDDLTypeError(ScalePlanError, TypeError):
    """Undeclared type/predicate/object, arity mismatch, or ill-typed argument."""

    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line = line
        self.col = col
        where = f"{line}:{col}: " if line else ""
        super().__init__(f"{where}{message}")


class DomainMismatch(ScalePlanError):
    pass


class UnknownSchema(ScalePlanError, KeyError):
    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown schema"


class NotApplicable(ScalePlanError):
    def __init__(self, action, missing):
        self.action = action
        self.missing = missing
        super().__init__(f"{action} is not applicable: precondition {missing} does not hold")


# -- action graph / filtering -------------------------------------------------


class ArityMismatch(ScalePlanError):
    pass


class UnknownTerminal(ScalePlanError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"terminal {name!r} is not a node of the action graph")


class EmptySeeds(ScalePlanError):
    pass


class FilterTooAggressive(ScalePlanError):
    def __init__(self, message: str, goal_atoms=()):
        self.goal_atoms = tuple(goal_atoms)
        super().__init__(message)


# -- seeding -------------------------------------------------------------------


class NoSeedsFound(ScalePlanError):
    pass


class TransportError(ScalePlanError):
    pass


class MalformedResponse(ScalePlanError):
    def __init__(self, message: str, attempts: int = 0):
        self.attempts = attempts
        super().__init__(message)


class HallucinationRejected(ScalePlanError):
    def __init__(self, message: str, violations=(), attempts: int = 0):
        self.violations = list(violations)
        self.attempts = attempts
        super().__init__(message)


# -- search --------------------------------------------------------------------


class Unsolvable(ScalePlanError):
    def __init__(self, message: str = "search space exhausted without reaching the goal", stats=None):
        self.stats = stats
        super().__init__(message)


class Exhausted(ScalePlanError):
    def __init__(self, message: str = "expansion limit reached", stats=None):
        self.stats = stats
        super().__init__(message)


# -- multi-robot ---------------------------------------------------------------


class EmptyGoal(ScalePlanError):
    pass


class NoCapableRobot(ScalePlanError):
    def __init__(self, subtask: str, uncovered):
        self.subtask = subtask
        self.uncovered = frozenset(uncovered)
        super().__init__(
            f"no robot can execute subtask {subtask!r}; uncovered schemas: {sorted(self.uncovered)}"
        )


# -- benchmark -----------------------------------------------------------------


class UnknownActionKind(ScalePlanError):
    pass


class UnknownObject(ScalePlanError, KeyError):
    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown object"


class LengthMismatch(ScalePlanError):
    pass


class BenchmarkParseError(ScalePlanError):
    pass


class SchemaError(ScalePlanError):
    def __init__(self, message: str, index: int | None = None, path: str = ""):
        self.index = index
        self.path = path
        loc = f"record {index}" if index is not None else "benchmark"
        if path:
            loc += f" at {path}"
        super().__init__(f"{loc}: {message}")
