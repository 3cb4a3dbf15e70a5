"""Exception types shared across the package.

Everything user-facing derives from DomainError so the CLI can map the
whole family to exit code 1, keeping exit code 2 for usage mistakes.
"""


class DomainError(Exception):
    """Base class for all domain-level failures."""


class ParseError(DomainError):
    """Syntax or symbol error in a text expression; carries the offset."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at offset {position}")
        self.position = position


class UnknownSymbolError(ParseError):
    pass


class DivisionByZeroError(DomainError):
    pass


class NotDivisibleError(DomainError):
    """Polynomial division requested but the quotient is not exact."""


class DegenerateRadicalError(DomainError):
    """A conjugate-rationalization step produced an identically zero norm."""


class RadicalDeclarationError(DomainError):
    """Rejected square-root relation (perfect square, duplicate, or t-dependent)."""


class ConstraintError(DomainError):
    """Family parameter constraint violated (wrong names or linear relation)."""


class NotReducibleError(DomainError):
    """Parameter reduction is undefined for these values (e.g. gamma*delta = 0)."""


class BranchDisagreementError(DomainError):
    """Sign branches of a parameter reduction classify differently."""


class SearchCapExceededError(DomainError):
    """Darboux search bounds exceed the configured matrix-size cap."""


class MapInverseError(DomainError):
    """A supplied variable-map inverse failed its identity check."""


class PathError(DomainError):
    """Integration path touches a fixed singularity or is malformed."""


class NonNumericError(DomainError):
    """Numeric routine received symbolic (non-rational) parameters."""


class InsufficientSamplesError(DomainError):
    """Relation probe needs at least twice as many samples as monomials."""
