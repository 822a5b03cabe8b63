"""Exception hierarchy shared by every simulation app."""


class SpoqcError(Exception):
    """Base class for errors raised by the simulator."""


class DomainError(SpoqcError, ValueError):
    """A physical or combinatorial parameter is outside its valid range."""


class CodeConstructionError(DomainError):
    """A code or Tanner graph cannot be built or split as requested."""


class CircuitError(SpoqcError):
    """A syndrome circuit cannot be compiled."""


class OpticsError(SpoqcError):
    """Invalid operation on the linear-optics oracle state."""


class DecoderError(SpoqcError):
    """The decoding problem is not graph-like or has no perfect matching."""
