class QEPFError(Exception):
    """Base class for library errors."""


class DomainError(QEPFError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class InfiniteMeanError(DomainError):
    """The model has no finite mean, so V(u) and P(u) diverge."""


class TailEmptyError(DomainError):
    """ceil(n*u) >= n: no order statistics remain above the threshold."""


class InfeasibleError(DomainError):
    """A requested configuration admits no solution."""


class ConvergenceError(QEPFError, ArithmeticError):
    """An iterative routine hit its iteration cap."""
