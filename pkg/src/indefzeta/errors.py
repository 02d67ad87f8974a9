"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class IndefZetaError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(IndefZetaError, ValueError):
    """Input failed a structural check (shape, symmetry, signature, admissibility)."""


class SignatureError(ValidationError):
    pass


class DegenerateError(ValidationError):
    """Matrix too close to singular at the working precision."""

    def __init__(self, message: str, smallest_eigenvalue=None):
        super().__init__(message)
        self.smallest_eigenvalue = smallest_eigenvalue


class AdmissibilityError(ValidationError):
    """A direction vector c fails conj(c)^T M c < 0."""

    def __init__(self, message: str, certificate=None):
        super().__init__(message)
        self.certificate = certificate


class DomainError(IndefZetaError, ValueError):
    """Argument outside the domain of a function."""


class PoleError(DomainError):
    def __init__(self, message: str, residue_hint=None):
        super().__init__(message)
        self.residue_hint = residue_hint


class BranchError(DomainError):
    """Evaluation point too close to a branch point or branch cut."""


class PrecisionError(IndefZetaError, ArithmeticError):
    """The requested working precision cannot resolve the input."""


class ConvergenceError(IndefZetaError, ArithmeticError):
    """A series or quadrature failed to converge within its caps."""

    def __init__(self, message: str, last_increment=None):
        super().__init__(message)
        self.last_increment = last_increment
