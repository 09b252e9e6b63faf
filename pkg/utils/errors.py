# Erreurs typées - SybilEdge
"""
Exception hierarchy shared by the library and the command line.

Every error carries the exit code app.py uses when it reaches the top:
1 for usage/configuration problems, 2 for bad data.
"""


class SybilEdgeError(Exception):
    """Root of every error raised by the toolkit."""
    exit_code = 2


# -------------------- Configuration errors --------------------

class ConfigError(SybilEdgeError):
    """Configuration or usage problem (missing key, malformed value...)."""
    exit_code = 1

    def __init__(self, message, key=None, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.key = key
        self.line = line


class InvalidParameter(ConfigError, ValueError):
    """A numeric parameter lies outside its legal range."""


# -------------------- Data errors --------------------

class DataError(SybilEdgeError, ValueError):
    """Input data violates an invariant of the model."""
    exit_code = 2


class _EdgeError(DataError):
    def __init__(self, message, edge):
        self.edge = tuple(int(v) for v in edge)
        super().__init__(f"{message}: {self.edge}")


class DuplicateEdge(_EdgeError):
    """The same ordered (source, target) pair appears twice."""


class SelfLoop(_EdgeError):
    """A node sends a request to itself."""


class NodeOutOfRange(_EdgeError):
    """An edge endpoint is not a valid dense node id."""


class InvalidResponse(_EdgeError):
    """A response is neither 0 (rejected) nor 1 (accepted)."""


class InvalidLabel(DataError):
    """A label lies outside [0, 1]."""


class NonBinaryLabel(DataError):
    """A binary-only operation met a fractional label."""


class EmptyTrainingSet(DataError):
    """No request was sent by a labeled user."""


class UnknownNode(DataError):
    """A node id does not exist in the graph."""


class EmptySeedSet(DataError):
    """Trust propagation needs at least one trusted seed."""


class DegenerateSequence(DataError):
    """A degree sequence has no stubs to match."""


class InsufficientTargets(DataError):
    """A sender cannot draw k distinct eligible targets."""


class SingleClass(DataError):
    """AUC needs at least one positive and one negative."""


class ProductFormOverflow(ArithmeticError, SybilEdgeError):
    """The extended-precision product form left its representable range."""
