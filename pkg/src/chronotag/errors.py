"""Exception types shared across the package.

ValueError is used for invalid arguments (bad shapes, bad ranges); the
classes here cover data problems (malformed corpus or embedding files)
and numerical failures (divergence, degenerate inputs), which the CLI
maps to distinct exit codes.
"""


class ChronotagError(Exception):
    """Base class for package-specific errors."""


class DataError(ChronotagError):
    """A corpus, embedding, or checkpoint file is missing or malformed."""


class ParseError(DataError):
    """A file failed to parse; carries the offending line number."""

    def __init__(self, message, path=None, line=None):
        loc = ""
        if path is not None:
            loc += str(path)
        if line is not None:
            loc += f":{line}"
        super().__init__(f"{loc}: {message}" if loc else message)
        self.path = path
        self.line = line


class NumericalError(ChronotagError):
    """A numerical routine diverged or received degenerate input."""
