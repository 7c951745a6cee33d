"""Exception hierarchy.

Every error raised by the library derives from :class:`QSMarkovError`, and
input-validation failures additionally derive from :class:`ValueError` so
callers can treat them as ordinary bad arguments.
"""


class QSMarkovError(Exception):
    """Base class for all library errors."""


class ValidationError(QSMarkovError, ValueError):
    """Input data violates a structural requirement."""


class AlphabetMismatch(ValidationError):
    pass


class WordRangeError(ValidationError):
    pass


class EnumerationCapExceeded(QSMarkovError):
    def __init__(self, count, cap):
        super().__init__(f"enumeration of {count} items exceeds cap {cap}")
        self.count = count
        self.cap = cap


class NonPositiveEntry(ValidationError):
    def __init__(self, i, j, value=None):
        super().__init__(f"entry ({i}, {j}) is not strictly positive: {value!r}")
        self.i = i
        self.j = j
        self.value = value


class RowSumOff(ValidationError):
    def __init__(self, i, total):
        super().__init__(f"row {i} sums to {total!r}, not 1")
        self.i = i
        self.sum = total


class NoConvergence(QSMarkovError):
    def __init__(self, iterations, residual=None):
        super().__init__(
            f"no convergence after {iterations} iterations (residual {residual!r})"
        )
        self.iterations = iterations
        self.residual = residual


class DepthCapExceeded(QSMarkovError):
    pass


class HorizonExceeded(QSMarkovError):
    """A finite explicit sequence was evaluated beyond its listed matrices."""


class MissingTailCertificate(QSMarkovError):
    pass


class NotQuasiStationary(QSMarkovError):
    def __init__(self, which=None, detail=""):
        msg = "sequence is not (certified) quasi-stationary"
        if which is not None:
            msg = f"{which}: {msg}"
        if detail:
            msg = f"{msg} ({detail})"
        super().__init__(msg)
        self.which = which


class ConfigError(ValidationError):
    """Malformed experiment configuration."""
