"""Derivatives at s = 0 of differenced ray class zeta functions and Stark units.

Z'(0) is a sum of s = 0 zeta values zeta^{c,Pc}_{0,q_j}(iM, 0), one per
supplied characteristic q_j, each evaluated with the pure imaginary limit
formula.  The characteristics come from ideal-theoretic data that is not
computed here; ``verify_piece_identity`` checks a supplied list numerically.

J-differences are reported in the normalization where kappa is taken twice
as large as its defining integral (the normalization of the published
rational-function kappa for the real quadratic example), so that
Z'(0) = im(sum_j J_j) / sqrt|det M|.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from mpmath import mp, mpf

from .errors import ValidationError
from .klf import klf_s0_pure_imaginary
from .mpcore import (
    AdmissibleVector,
    Characteristics,
    OmegaPoint,
    SymMatrix,
    current_digits,
    is_integral,
    to_mp,
    working_precision,
)
from .zeta import ZetaRequest, zeta_direct

# x^8 - (8+5r)x^7 + (53+30r)x^6 - (156+90r)x^5 + (225+130r)x^4 - ... + 1, r = sqrt(3);
# coefficients from the leading one down, as (a, b) meaning a + b sqrt(3)
SQRT3_CONDUCTOR5_OCTIC = (
    (1, 0), (-8, -5), (53, 30), (-156, -90), (225, 130),
    (-156, -90), (53, 30), (-8, -5), (1, 0),
)


def _int_matrix(P) -> tuple:
    rows = tuple(tuple(int(x) for x in row) for row in P)
    if len(rows) != 2 or any(len(r) != 2 for r in rows):
        raise ValidationError("P must be a 2x2 integer matrix")
    return rows


def _apply(P, c) -> tuple:
    return tuple(P[i][0] * c[0] + P[i][1] * c[1] for i in range(2))


def _power(P, k: int) -> tuple:
    out = ((1, 0), (0, 1))
    for _ in range(k):
        out = tuple(tuple(sum(out[i][m] * P[m][j] for m in range(2)) for j in range(2)) for i in range(2))
    return out


@dataclass
class StarkInstance:
    """Input of a Z'(0) computation: M, c, P and the characteristics q_j."""

    M: SymMatrix
    qs: Sequence
    c: tuple
    P: tuple

    def __post_init__(self):
        if not isinstance(self.M, SymMatrix):
            self.M = SymMatrix(self.M)
        if self.M.g != 2 or not self.M.is_real():
            raise ValidationError("M must be a real symmetric 2x2 matrix")
        if not self.M.det() < 0:
            raise ValidationError("M must have det < 0")
        self.P = _int_matrix(self.P)
        self.c = tuple(self.c)
        self.qs = [tuple(q) for q in self.qs]
        # P^T M P = M
        PtMP = [[sum(self.P[k][i] * self.M[k, l] * self.P[l][j] for k in range(2) for l in range(2))
                 for j in range(2)] for i in range(2)]
        tol = mpf(10) ** (-current_digits() + 5)
        for i in range(2):
            for j in range(2):
                if abs(PtMP[i][j] - self.M[i, j]) > tol * (1 + abs(self.M[i, j])):
                    raise ValidationError("P does not preserve the form M")
        for q in self.qs:
            if all(is_integral(x) for x in q):
                raise ValidationError(f"characteristic {q} lies in Z^2")
        self.c1 = AdmissibleVector(self.c, self.M)
        self.c2 = AdmissibleVector(_apply(self.P, self.c), self.M)

    @property
    def Omega(self) -> OmegaPoint:
        return OmegaPoint.pure_imaginary(self.M)

    @property
    def m(self) -> int:
        return len(self.qs)


def sqrt3_conductor5_instance(c=(-1, 1)) -> StarkInstance:
    """Principal ray class of Q(sqrt 3) modulo 5 times the second infinite place."""
    return StarkInstance(
        SymMatrix([[2, 0], [0, -6]]),
        [(Fraction(1, 5), 0), (Fraction(2, 5), Fraction(1, 5)), (Fraction(2, 5), Fraction(4, 5))],
        c,
        ((2, 3), (1, 2)),
    )


@dataclass
class StarkResult:
    z_prime: object
    unit: object
    j_differences: list
    pieces: list
    imaginary_part: object
    polynomial_residual: object = None
    diagnostics: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)


def _piece(args):
    M, q, c1, c2, digits, tol = args
    with working_precision(digits):
        return klf_s0_pure_imaginary(M, q, c1, c2, tol=tol)


def z_prime(instance: StarkInstance, precision: int | None = None,
            polynomial: Sequence | None = None, D: int = 3, tol=None, jobs: int = 1) -> StarkResult:
    """Z'(0) = sum_j zeta^{c,Pc}_{0,q_j}(iM, 0) and the unit exp(Z'(0)).

    With ``jobs > 1`` the pieces run in worker processes; the sum is always
    taken in the order of ``instance.qs``.
    """
    with working_precision(precision):
        P = current_digits()
        work = [(instance.M, q, instance.c1, instance.c2, P, tol) for q in instance.qs]
        if jobs > 1 and len(work) > 1:
            from concurrent.futures import ProcessPoolExecutor

            with ProcessPoolExecutor(max_workers=min(jobs, len(work))) as ex:
                results = list(ex.map(_piece, work))
        else:
            results = [_piece(w) for w in work]
        pieces, jdiffs, plans = [], [], []
        total = mpf(0)
        imag = mpf(0)
        for r in results:
            pieces.append(r.value)
            jdiffs.append(2 * r.pieces["J(c2)-J(c1)"])
            plans.append(r.diagnostics["max_phi_factors"])
            total += r.value
            imag += r.diagnostics["imaginary_part"]
        # same value assembled from the J-differences
        alt = mp.im(mp.fsum(jdiffs)) / mp.sqrt(-instance.M.det()) if jdiffs else mpf(0)
        warnings = []
        if abs(alt - total) > mpf(10) ** (-P + 8):
            warnings.append("J-difference assembly disagrees with the summed pieces")
        with mp.workdps(P + 10):
            unit = mp.exp(total)
        res = StarkResult(+total, unit, jdiffs, pieces, imag,
                          diagnostics={"max_phi_factors": max(plans, default=0),
                                       "assembly_difference": abs(alt - total)},
                          warnings=warnings)
        if polynomial is not None:
            res.polynomial_residual = verify_unit_polynomial(unit, polynomial, D)
        return res


def verify_piece_identity(instance: StarkInstance, j: int, precision: int | None = None,
                          eps=None):
    """|zeta^{P^j c, P^{j+1} c}_{0,q_0} - zeta^{c,Pc}_{0,q_j}| at s = 0, both by direct integration."""
    if not 0 <= j < instance.m:
        raise ValidationError("piece index out of range")
    with working_precision(precision):
        if j == 0:
            return mpf(0)
        if eps is None:
            eps = mpf(10) ** (-current_digits() + 10)
        M = instance.M
        Om = instance.Omega
        Pj = _power(instance.P, j)
        a = AdmissibleVector(_apply(Pj, instance.c), M)
        b = AdmissibleVector(_apply(instance.P, a.c), M)
        lhs = zeta_direct(ZetaRequest(Om, Characteristics((0, 0), instance.qs[0]), a, b, 0, eps))
        rhs = zeta_direct(ZetaRequest(Om, Characteristics((0, 0), instance.qs[j]),
                                      instance.c1, instance.c2, 0, eps))
        return abs(lhs.value - rhs.value)


@dataclass
class PolynomialCheck:
    residual: object
    reciprocal_residual: object

    def __float__(self):
        return float(self.residual)


def verify_unit_polynomial(x, coeffs: Sequence, D: int = 3, precision: int | None = None) -> PolynomialCheck:
    """|f(x)| and |f(1/x)| for f with coefficients a + b sqrt(D), leading first."""
    with working_precision(precision):
        x = to_mp(x)
        r = mp.sqrt(D)
        cs = [to_mp(a) + to_mp(b) * r for a, b in coeffs]
        return PolynomialCheck(abs(mp.polyval(cs, x)), abs(mp.polyval(cs, 1 / x)))
