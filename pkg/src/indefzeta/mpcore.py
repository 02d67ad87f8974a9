"""Precision handling, small symmetric matrices and quadratic forms.

Scalars are plain mpmath ``mpf``/``mpc`` values.  Working precision is a
number of decimal digits ``P``; internally every evaluation runs with
``ceil(P * log2(10)) + 32`` bits.
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import mpmath
from mpmath import mp, mpc, mpf

from .errors import (
    AdmissibilityError,
    DegenerateError,
    DomainError,
    PrecisionError,
    SignatureError,
    ValidationError,
)

GUARD_BITS = 32


def bits_for_digits(digits: int) -> int:
    """Binary precision used for a target of ``digits`` decimal digits."""
    if digits < 1:
        raise DomainError("precision must be a positive number of digits")
    return int(math.ceil(digits * math.log2(10))) + GUARD_BITS


@contextmanager
def working_precision(digits: int | None):
    """Run a block at ``digits`` decimal digits plus guard bits.

    ``None`` keeps the ambient mpmath precision.
    """
    if digits is None:
        yield
        return
    with mp.workprec(bits_for_digits(digits)):
        yield


def current_digits() -> int:
    return int((mp.prec - GUARD_BITS) / math.log2(10))


def parse_rational(text: str) -> Fraction:
    """Parse ``"676/3"``, ``"-2"`` or ``"0.125"`` exactly."""
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ValidationError(f"not an exact rational: {text!r}") from exc


def to_mp(x):
    """Convert an int, Fraction, rational string, float or complex to mpmath.

    Exact inputs are rounded once, at the current precision.
    """
    if isinstance(x, (mpf, mpc)):
        return x
    if isinstance(x, bool):
        raise ValidationError("booleans are not numbers here")
    if isinstance(x, int):
        return mpf(x)
    if isinstance(x, Fraction):
        return mpf(x.numerator) / x.denominator
    if isinstance(x, str):
        return to_mp(parse_rational(x))
    if isinstance(x, complex):
        return mpc(x)
    if isinstance(x, (tuple, list)) and len(x) == 2:
        return mpc(to_mp(x[0]), to_mp(x[1]))
    return mpmath.mpmathify(x)


def as_vector(v: Iterable) -> tuple:
    return tuple(to_mp(x) for x in v)


def is_real(x) -> bool:
    return not isinstance(x, mpc) or x.imag == 0


def real_part(x):
    return x.real if isinstance(x, mpc) else x


def frac(x):
    """Fractional part in [0, 1); exact for Fractions."""
    if isinstance(x, (Fraction, int)):
        return x - math.floor(x)
    x = to_mp(x)
    return x - mp.floor(x)


def is_integral(x, tol=None) -> bool:
    if isinstance(x, (int, Fraction)):
        return Fraction(x).denominator == 1
    x = to_mp(x)
    if tol is None:
        tol = mpf(2) ** (-mp.prec + 8)
    return abs(x - mp.nint(x)) <= tol


def dot(u: Sequence, v: Sequence):
    if len(u) != len(v):
        raise ValidationError("dimension mismatch")
    return mp.fsum(a * b for a, b in zip(u, v))


@dataclass(frozen=True)
class SymMatrix:
    """Symmetric g x g matrix with entries stored as given.

    Entries may be ints, Fractions, rational strings or mpmath numbers; they
    are converted at the precision active when they are read.
    """

    rows: tuple

    def __init__(self, rows):
        rows = tuple(tuple(r) for r in rows)
        g = len(rows)
        if g == 0 or any(len(r) != g for r in rows):
            raise ValidationError("matrix must be square and non-empty")
        parsed = tuple(tuple(_keep_exact(x) for x in r) for r in rows)
        for i in range(g):
            for j in range(i):
                if parsed[i][j] != parsed[j][i]:
                    a, b = to_mp(parsed[i][j]), to_mp(parsed[j][i])
                    if abs(a - b) > mpf(2) ** (-mp.prec + 4) * (1 + abs(a)):
                        raise ValidationError("matrix is not symmetric")
                    parsed = _symmetrize(parsed, i, j)
        object.__setattr__(self, "rows", parsed)

    @property
    def g(self) -> int:
        return len(self.rows)

    def __getitem__(self, ij):
        i, j = ij
        return to_mp(self.rows[i][j])

    def entries(self) -> list[list]:
        return [[self[i, j] for j in range(self.g)] for i in range(self.g)]

    def is_real(self) -> bool:
        return all(is_real(to_mp(x)) for r in self.rows for x in r)

    def matvec(self, v: Sequence) -> tuple:
        if len(v) != self.g:
            raise ValidationError("dimension mismatch")
        return tuple(dot([self[i, j] for j in range(self.g)], v) for i in range(self.g))

    def bilinear(self, u: Sequence, v: Sequence):
        return dot(u, self.matvec(v))

    def det(self):
        if self.g == 2:
            return self[0, 0] * self[1, 1] - self[0, 1] ** 2
        return mp.det(mp.matrix(self.entries()))

    def inverse(self) -> "SymMatrix":
        if self.g == 2:
            d = self.det()
            if d == 0:
                raise DegenerateError("singular matrix", 0)
            return SymMatrix([[self[1, 1] / d, -self[0, 1] / d], [-self[0, 1] / d, self[0, 0] / d]])
        inv = mp.inverse(mp.matrix(self.entries()))
        return SymMatrix([[inv[i, j] for j in range(self.g)] for i in range(self.g)])

    def map(self, f) -> "SymMatrix":
        return SymMatrix([[f(self[i, j]) for j in range(self.g)] for i in range(self.g)])

    def __add__(self, other: "SymMatrix") -> "SymMatrix":
        return SymMatrix([[self[i, j] + other[i, j] for j in range(self.g)] for i in range(self.g)])

    def scale(self, t) -> "SymMatrix":
        return self.map(lambda x: t * x)

    def conjugate(self) -> "SymMatrix":
        return self.map(mp.conj)

    def real(self) -> "SymMatrix":
        return self.map(lambda x: real_part(x))

    def imag(self) -> "SymMatrix":
        return self.map(lambda x: x.imag if isinstance(x, mpc) else mpf(0))

    def norm(self):
        return max(abs(self[i, j]) for i in range(self.g) for j in range(self.g))


def _keep_exact(x):
    if isinstance(x, str):
        return parse_rational(x)
    if isinstance(x, bool):
        raise ValidationError("booleans are not numbers here")
    return x


def _symmetrize(rows, i, j):
    rows = [list(r) for r in rows]
    rows[i][j] = rows[j][i]
    return tuple(tuple(r) for r in rows)


def identity(g: int) -> SymMatrix:
    return SymMatrix([[1 if i == j else 0 for j in range(g)] for i in range(g)])


def diag(*d) -> SymMatrix:
    g = len(d)
    return SymMatrix([[d[i] if i == j else 0 for j in range(g)] for i in range(g)])


def matmul(A, B) -> list[list]:
    """Product of two square matrices given as SymMatrix or nested lists."""
    A = A.entries() if isinstance(A, SymMatrix) else A
    B = B.entries() if isinstance(B, SymMatrix) else B
    n = len(A)
    return [[mp.fsum(A[i][k] * B[k][j] for k in range(n)) for j in range(n)] for i in range(n)]


def q_form(M: SymMatrix, v: Sequence):
    """Q_M(v) = v^T M v / 2 (bilinear, no conjugation)."""
    v = as_vector(v)
    if len(v) != M.g:
        raise ValidationError(f"vector of length {len(v)} against a {M.g}x{M.g} matrix")
    return M.bilinear(v, v) / 2


def _near_singular(M: SymMatrix) -> bool:
    d = M.det()
    tol = mpf(10) ** (-current_digits() / 2) * M.norm() ** M.g
    return abs(d) < tol


def _smallest_eig_2x2(M: SymMatrix):
    a, b, c = M[0, 0], M[0, 1], M[1, 1]
    r = mp.sqrt(((a - c) / 2) ** 2 + b * b)
    return min(abs((a + c) / 2 - r), abs((a + c) / 2 + r))


def signature2(M: SymMatrix) -> tuple[int, int]:
    """Inertia (n_plus, n_minus) of a real symmetric 2x2 matrix from its minors."""
    if M.g != 2:
        raise ValidationError("signature2 needs a 2x2 matrix")
    if not M.is_real():
        raise ValidationError("signature2 needs a real matrix")
    if _near_singular(M):
        raise DegenerateError("matrix is singular at this precision", _smallest_eig_2x2(M))
    d = M.det()
    if d < 0:
        return (1, 1)
    # d > 0: definite; the sign of the trace decides which way
    return (2, 0) if M[0, 0] + M[1, 1] > 0 else (0, 2)


def inertia(M: SymMatrix) -> tuple[int, int]:
    """Inertia of a real symmetric matrix of any size.

    2x2 goes through signature2; larger sizes use a symmetric eigen solver.
    """
    if M.g == 2:
        return signature2(M)
    if M.g == 1:
        x = M[0, 0]
        if x == 0:
            raise DegenerateError("zero 1x1 matrix", 0)
        return (1, 0) if x > 0 else (0, 1)
    ev = mp.eigsy(mp.matrix(M.entries()), eigvals_only=True)
    small = min(abs(e) for e in ev)
    if small < mpf(10) ** (-current_digits() / 2) * M.norm():
        raise DegenerateError("matrix is singular at this precision", small)
    pos = sum(1 for e in ev if e > 0)
    return (pos, M.g - pos)


@dataclass(frozen=True)
class OmegaPoint:
    """Omega = N + iM with real symmetric N, M and im(Omega) of signature (g-k, k)."""

    M: SymMatrix
    N: SymMatrix
    k: int = 1

    def __post_init__(self):
        if self.M.g != self.N.g:
            raise ValidationError("real and imaginary parts differ in size")
        if not (self.M.is_real() and self.N.is_real()):
            raise ValidationError("M and N must be real")
        sig = inertia(self.M)
        if sig != (self.M.g - self.k, self.k):
            raise SignatureError(
                f"im(Omega) has signature {sig}, expected {(self.M.g - self.k, self.k)}")

    @classmethod
    def from_complex(cls, Omega, k: int = 1) -> "OmegaPoint":
        S = Omega if isinstance(Omega, SymMatrix) else SymMatrix(Omega)
        return cls(S.imag(), S.real(), k)

    @classmethod
    def pure_imaginary(cls, M, k: int = 1) -> "OmegaPoint":
        M = M if isinstance(M, SymMatrix) else SymMatrix(M)
        g = M.g
        return cls(M, SymMatrix([[0] * g for _ in range(g)]), k)

    @property
    def g(self) -> int:
        return self.M.g

    def matrix(self) -> SymMatrix:
        return SymMatrix([[mpc(self.N[i, j], self.M[i, j]) for j in range(self.g)]
                          for i in range(self.g)])

    def is_pure_imaginary(self) -> bool:
        return all(self.N[i, j] == 0 for i in range(self.g) for j in range(self.g))

    def scaled(self, t) -> "OmegaPoint":
        return OmegaPoint(self.M.scale(t), self.N.scale(t), self.k)

    def det(self):
        return self.matrix().det()

    def inverse_negated(self) -> "OmegaPoint":
        """-Omega^{-1}, which again lies in the half-space of the same index."""
        inv = self.matrix().inverse()
        return OmegaPoint.from_complex(inv.map(lambda x: -x), self.k)


@dataclass(frozen=True)
class AdmissibleVector:
    """Direction c with conj(c)^T M c < 0.

    ``sigma`` is the chosen square root of -Q_M(c); by default the principal
    one.  Transported vectors carry the branch picked by continuity.
    """

    c: tuple
    M: SymMatrix
    certificate: object = field(default=None, compare=False)
    _sigma: object = field(default=None, compare=False, repr=False)
    _sigma_prec: int = field(default=0, compare=False, repr=False)

    def __init__(self, c, M: SymMatrix | OmegaPoint, sigma=None):
        if isinstance(M, OmegaPoint):
            M = M.M
        c = as_vector(c)
        if len(c) != M.g:
            raise ValidationError("dimension mismatch between c and M")
        cert = real_part(M.bilinear([mp.conj(x) for x in c], c))
        if not cert < 0:
            raise AdmissibilityError(f"conj(c)^T M c = {mp.nstr(cert, 8)} is not negative", cert)
        qc = q_form(M, c)
        if sigma is None:
            sigma = mp.sqrt(-qc)
        else:
            # the supplied root only selects the branch; it may come from a
            # lower working precision and is refined on demand
            sigma = to_mp(sigma)
            if abs(sigma * sigma + qc) > mpf(10) ** -10 * (1 + abs(qc)):
                raise ValidationError("sigma is not a square root of -Q_M(c)")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "certificate", cert)
        object.__setattr__(self, "_sigma", sigma)
        object.__setattr__(self, "_sigma_prec", 0)

    @property
    def sigma(self):
        """sqrt(-Q_M(c)) on the stored branch, at the current precision."""
        if self._sigma_prec < mp.prec:
            sig = self._sigma
            target = -q_form(self.M, self.c)
            for _ in range(200):
                step = (sig * sig - target) / (2 * sig)
                sig = sig - step
                if abs(step) <= mpf(2) ** (-mp.prec) * abs(sig):
                    break
            sig = sig - (sig * sig - target) / (2 * sig)
            object.__setattr__(self, "_sigma", sig)
            object.__setattr__(self, "_sigma_prec", mp.prec)
        return self._sigma

    def is_real(self) -> bool:
        return all(is_real(x) for x in self.c)

    def Mc(self) -> tuple:
        return self.M.matvec(self.c)

    def rescaled(self, factor) -> "AdmissibleVector":
        """Same direction for the form ``factor * M`` (factor > 0)."""
        return AdmissibleVector(self.c, self.M.scale(factor), self.sigma * mp.sqrt(factor))


@dataclass(frozen=True)
class Characteristics:
    """Pair (p, q) of real g-vectors, kept exact when given exactly."""

    p: tuple
    q: tuple

    def __init__(self, p, q):
        p = tuple(_keep_exact(x) for x in p)
        q = tuple(_keep_exact(x) for x in q)
        if len(p) != len(q):
            raise ValidationError("p and q differ in length")
        for x in p + q:
            if not is_real(to_mp(x)):
                raise ValidationError("characteristics must be real")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @property
    def g(self) -> int:
        return len(self.p)

    def p_mp(self) -> tuple:
        return as_vector(self.p)

    def q_mp(self) -> tuple:
        return as_vector(self.q)

    @property
    def p_integral(self) -> tuple[bool, ...]:
        return tuple(is_integral(x) for x in self.p)

    @property
    def q_integral(self) -> tuple[bool, ...]:
        return tuple(is_integral(x) for x in self.q)

    def p_in_lattice(self) -> bool:
        return all(self.p_integral)

    def q_in_lattice(self) -> bool:
        return all(self.q_integral)


def quadratic_roots_split(Lam: OmegaPoint) -> tuple:
    """Roots of Q_Lambda((xi, 1)) = 0 ordered as (upper, lower) half-plane.

    For Lambda in the Siegel upper half-space the two roots are separated by
    the real axis; they are sorted by the sign of their imaginary parts.
    """
    if Lam.g != 2:
        raise ValidationError("need a 2x2 matrix")
    L = Lam.matrix()
    a, b, c = L[0, 0], L[0, 1], L[1, 1]
    if a == 0:
        raise DomainError("leading entry vanishes")
    # det(-i Lambda) = -det(Lambda) for g = 2
    disc = mp.sqrt(-(a * c - b * b))
    r1 = (-b + disc) / a
    r2 = (-b - disc) / a
    up, down = (r1, r2) if mp.im(r1) > mp.im(r2) else (r2, r1)
    guard = mpf(10) ** (-current_digits() + Lam.g)
    if not (mp.im(up) > guard and mp.im(down) < -guard):
        raise PrecisionError("root too close to real axis at this precision")
    return up, down


def check_toomuch(Om: OmegaPoint) -> bool:
    """im(-1/w11) * im(det(Omega)/w11) > (im(w12/w11))**2 for Omega in H_2^(0)."""
    W = Om.matrix()
    w11 = W[0, 0]
    if w11 == 0:
        raise DomainError("leading entry vanishes")
    lhs = mp.im(-1 / w11) * mp.im(W.det() / w11)
    return lhs > mp.im(W[0, 1] / w11) ** 2
