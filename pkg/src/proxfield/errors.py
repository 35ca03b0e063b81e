"""Exception hierarchy shared by all proxfield modules."""


class ProxfieldError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(ProxfieldError, ValueError):
    """A vector, matrix, or atom list does not conform to its field."""


class AtomError(ProxfieldError, RuntimeError):
    """A per-atom oracle failed numerically.

    Carries the index of the offending atom so blockwise failures can be
    attributed.
    """

    def __init__(self, atom_index: int, message: str):
        self.atom_index = atom_index
        super().__init__(f"atom {atom_index}: {message}")


class CapabilityError(ProxfieldError, RuntimeError):
    """An operation needs an oracle the atom does not provide."""


class PreconditionError(ProxfieldError, ValueError):
    """A documented precondition of an operation is violated."""


class DomainViolationError(ProxfieldError, RuntimeError):
    """An iterative estimate grew beyond its configured bound.

    Signals that the query point lies outside the effective domain of the
    object being probed (or next to a nondifferentiability).
    """


class OracleError(ProxfieldError, RuntimeError):
    """A brute-force test oracle could not produce a value."""
