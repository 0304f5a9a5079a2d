"""Exception hierarchy shared across the package."""


class ShrinkTGError(Exception):
    """Base class for all package errors."""


class DomainError(ShrinkTGError, ValueError):
    """An argument lies outside the domain where a function is defined."""


class UnsupportedCaseError(ShrinkTGError, ValueError):
    """The requested computation is not available for this prior configuration."""


class NumericalAccuracyError(ShrinkTGError, ArithmeticError):
    """A numerical routine failed to reach its accuracy target."""


class SamplerError(ShrinkTGError, RuntimeError):
    """A sampler step failed; carries the location where it happened."""

    def __init__(self, message, *, sweep=None, step=None, equation=None, time_index=None):
        super().__init__(message)
        self.message = message
        self.sweep = sweep
        self.step = step
        self.equation = equation
        self.time_index = time_index

    def __str__(self):
        where = []
        if self.equation is not None:
            where.append(f"equation={self.equation}")
        if self.step is not None:
            where.append(f"step={self.step}")
        if self.sweep is not None:
            where.append(f"sweep={self.sweep}")
        if self.time_index is not None:
            where.append(f"t={self.time_index}")
        suffix = f" [{', '.join(where)}]" if where else ""
        return self.message + suffix


class ConfigError(ShrinkTGError, ValueError):
    """Invalid configuration; may aggregate several problems."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class DataError(ShrinkTGError, ValueError):
    """Malformed input data."""
