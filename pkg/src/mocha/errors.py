"""Exception hierarchy shared by every layer of the package."""


class MochaError(Exception):
    """Base class for all package errors."""


class HeaderError(MochaError, ValueError):
    pass


class WrongLength(HeaderError):
    pass


class InvalidMillis(HeaderError):
    pass


class ConfigError(MochaError, ValueError):
    """A team configuration, scenario or sweep file failed validation."""

    def __init__(self, message: str, diagnostics: list | None = None):
        super().__init__(message)
        self.diagnostics = list(diagnostics or [])


class UnknownTopic(MochaError, KeyError):
    pass


class Throttled(MochaError):
    """A local insert was dropped by the topic's rate limiter."""


class NotFound(MochaError, KeyError):
    pass


class ConsistencyFault(MochaError):
    """Two messages share a header but carry different payload bytes."""


class ClockOverflow(MochaError, ValueError):
    """Node-local time no longer fits in the 16-bit seconds field."""


class FrameError(MochaError, ValueError):
    """A wire frame could not be decoded."""


class ProtocolViolation(MochaError):
    pass


class ConnectFailed(MochaError, OSError):
    pass


class OutOfOrder(MochaError, ValueError):
    pass


class Unreachable(MochaError):
    pass
