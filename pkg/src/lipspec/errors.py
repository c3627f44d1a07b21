"""Exception hierarchy shared by all modules."""


class LipSpecError(Exception):
    """Base class for every error raised by lipspec."""


class StructuralError(LipSpecError, ValueError):
    """Inconsistent shapes or indices (distance matrix vs point list, etc.)."""


class ParameterError(LipSpecError, ValueError):
    """A generator or routine received parameters outside its domain."""


class AdmissibilityError(LipSpecError, ValueError):
    """Both f(0) != 0 and w(0) != 0, so the weighted operator is not defined."""


class PreconditionError(LipSpecError, ValueError):
    pass


class NumericalError(LipSpecError, RuntimeError):
    """An iterative numerical method failed to converge.

    ``diagnostics`` carries whatever state is useful for a bug report.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class OracleMismatch(LipSpecError, AssertionError):
    """Cycle-formula spectrum and dense eigensolver disagree.

    ``dump`` is a problem-file dict that replays the failing instance.
    """

    def __init__(self, message, dump=None, details=None):
        super().__init__(message)
        self.dump = dump
        self.details = details or {}


class ProblemFileError(LipSpecError, ValueError):
    """Malformed problem file (parse or schema error)."""
