"""Exception taxonomy shared across the package.

Every error raised on purpose by this package derives from MnnError, so
callers can catch one base class. The CLI maps subclasses to exit codes:
numerical failures exit 3, file-format and I/O failures exit 4.
"""


class MnnError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(MnnError):
    """Shape or axis mismatch between arrays that must be compatible."""


class ConfigError(MnnError):
    """A configuration value is outside its documented domain."""


class NumericsError(MnnError):
    """A numerical routine produced or received non-finite values."""


class DegenerateKernelError(MnnError):
    """Kernel cannot be used, e.g. all-zero taps cannot be normalized."""


class DegenerateInputError(MnnError):
    """Input is degenerate for the requested quantity (e.g. zero truth)."""


class DivergenceError(MnnError):
    """An iterative solver produced non-finite iterates."""


class InnerSolveError(MnnError):
    """An inner linear solve (conjugate gradient) failed to converge."""


class FormatError(MnnError):
    """A tensor file is malformed (bad magic, version, or structure)."""


class TruncationError(FormatError):
    """A tensor file header declares more payload than the file holds."""
