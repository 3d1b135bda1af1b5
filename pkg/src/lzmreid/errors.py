"""Exception hierarchy shared by all modules."""


class LZMError(Exception):
    """Base class for errors raised by lzmreid."""


class InvalidArgumentError(LZMError, ValueError):
    pass


class DegenerateInputError(LZMError, ValueError):
    pass


class FormatError(LZMError, ValueError):
    """Malformed file contents (bad magic, truncated payload, bad CSV row)."""


class JoinError(LZMError, KeyError):
    """An id could not be matched between a feature file and a manifest."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class ProtocolError(LZMError, ValueError):
    """The evaluation protocol cannot be carried out on the given data."""
