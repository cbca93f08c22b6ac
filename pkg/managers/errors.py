"""Exceptions raised by the managers. The CLI maps them to exit codes."""


class GraphError(ValueError):
    """Malformed graph, bad edge id or invalid subgraph selection."""


class GraphParseError(GraphError):
    """Graph text that cannot be parsed; carries the offending line number."""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class NormalizationError(ValueError):
    """Zero-entropy input, or an input that is required to have unit entropy and does not."""


class PreconditionError(ValueError):
    """Hypotheses of a checker or of the blow-up are not met."""


class EnumerationCapError(RuntimeError):
    """Brute-force circuit search visited more partial paths than allowed."""


class ConvergenceError(RuntimeError):
    """An iteration cap or quadrature horizon was exhausted."""
