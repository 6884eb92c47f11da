"""Exception types raised by chshmagic."""


class VerificationError(AssertionError):
    """A theorem check, enumeration count or other exact invariant failed."""


class ResourceInconsistency(ArithmeticError):
    """A resource quantity came out negative beyond round-off (e.g. M_LOC < 0)."""
