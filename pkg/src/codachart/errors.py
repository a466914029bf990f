"""Exception hierarchy shared by the package.

Every error carries a short machine code so the CLI can turn it into a
structured ``{code, message, context}`` object.
"""


class CodaChartError(Exception):
    code = "error"
    exit_code = 1

    def __init__(self, message, **context):
        super().__init__(message)
        self.message = message
        self.context = context

    def to_dict(self):
        return {"code": self.code, "message": self.message, "context": self.context}


class DomainError(CodaChartError, ValueError):
    """Invalid numerical input (nonpositive part, wrong dimension, ...)."""

    code = "domain_error"
    exit_code = 3


class DesignError(CodaChartError, ValueError):
    """A chart design or problem definition violates its invariants."""

    code = "invalid_design"
    exit_code = 4


class ChartStateError(CodaChartError, RuntimeError):
    code = "chart_state"
    exit_code = 4


class InfeasibleError(CodaChartError, ValueError):
    """No parameter value satisfies the requested constraints."""

    code = "infeasible"
    exit_code = 5


class NumericalError(CodaChartError, ArithmeticError):
    code = "numerical_error"
    exit_code = 6
