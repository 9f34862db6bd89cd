"""Exception hierarchy shared across the package."""


class QrefineError(Exception):
    """Base class for all package-specific errors."""


class ParseError(QrefineError):
    """Malformed input line; carries the source label and 1-based line number."""

    def __init__(self, source: str, line_no: int, message: str):
        super().__init__(f"{source}:{line_no}: {message}")
        self.source = source
        self.line_no = line_no


class CycleError(QrefineError):
    """The type hierarchy contains a directed cycle."""

    def __init__(self, cycle: list[str]):
        super().__init__("cycle in type hierarchy: " + " -> ".join(cycle + cycle[:1]))
        self.cycle = cycle


class UnknownTypeError(QrefineError, KeyError):
    pass


class UnknownEntityError(QrefineError, KeyError):
    pass


class ContractViolationError(QrefineError):
    """A refinement-set member is not a subtype of its query."""


class InstanceSizeError(QrefineError):
    """Exhaustive enumeration refused: the subset count exceeds the cap."""


class ConfigurationError(QrefineError):
    """Invalid or incomplete configuration (e.g. category rule without gazetteer)."""


class AlignmentError(QrefineError):
    """Paired record streams cover different query sets."""

    def __init__(self, only_a: list[str], only_b: list[str]):
        parts = []
        if only_a:
            parts.append(f"only in first input: {sorted(only_a)}")
        if only_b:
            parts.append(f"only in second input: {sorted(only_b)}")
        super().__init__("query sets differ; " + "; ".join(parts))
        self.only_a = only_a
        self.only_b = only_b


class StateError(QrefineError):
    """Operation not valid in the session's current state."""


class InvalidChoiceError(QrefineError):
    """Drill target is not among the currently offered refinements."""


class PreconditionError(QrefineError, ValueError):
    """A documented operation precondition does not hold."""


class DomainError(QrefineError, ValueError):
    """Argument outside the mathematical domain of a statistic."""


class DegenerateVectorError(QrefineError, ValueError):
    """Cosine similarity requested against a zero-norm vector."""


class EmptyInputError(QrefineError, ValueError):
    """An aggregate operation received no data."""
