"""Completed indefinite zeta functions by direct Mellin transform.

    zeta^{c1,c2}_{p,q}(Omega, s) = int_0^oo Theta^{c1,c2}_{p,q}(t Omega) t^s dt/t

With t = e^x the integrand is analytic in a strip around the real axis and
decays doubly exponentially at both ends, so the plain trapezoid rule in x
converges exponentially in 1/h.  Theta values are cached per node and shared
between all requested s.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

from mpmath import mp, mpc, mpf

from .errors import AdmissibilityError, DomainError, ValidationError
from .mpcore import (
    AdmissibleVector,
    Characteristics,
    OmegaPoint,
    SymMatrix,
    as_vector,
    current_digits,
    dot,
    to_mp,
    working_precision,
)
from .quadrature import NestedTrapezoid
from .special import e
from .theta import ThetaKernel


@dataclass(frozen=True)
class ZetaRequest:
    Omega: OmegaPoint
    chars: Characteristics
    c1: AdmissibleVector
    c2: AdmissibleVector
    s: object = 0
    eps: object = mpf(10) ** -25

    def __post_init__(self):
        if self.Omega.g != 2:
            raise ValidationError("zeta functions are provided for g = 2")
        if self.chars.g != 2:
            raise ValidationError("characteristics must have length 2")
        for c in (self.c1, self.c2):
            if len(c.c) != 2:
                raise ValidationError("c must have length 2")

    def with_s(self, s) -> "ZetaRequest":
        return replace(self, s=s)


@dataclass
class ZetaResult:
    values: list
    svals: list
    error_estimate: object
    diagnostics: dict = field(default_factory=dict)

    @property
    def value(self):
        return self.values[0]


def _check_decay_condition(chars: Characteristics):
    if chars.p_in_lattice() and chars.q_in_lattice():
        raise DomainError("the direct integral needs p or q outside Z^2")


def zeta_direct_many(req: ZetaRequest, svals: Sequence, precision: int | None = None,
                     max_level: int = 9) -> ZetaResult:
    """Evaluate the Mellin integral at several s from one set of theta samples."""
    with working_precision(precision):
        _check_decay_condition(req.chars)
        svals = [to_mp(s) for s in svals]
        eps = mpf(req.eps)
        kernel = ThetaKernel(req.Omega, req.chars.p_mp(), req.chars.q_mp(), req.c1, req.c2)
        if kernel.same:
            return ZetaResult([mpc(0)] * len(svals), svals, mpf(0), {"nodes": 0})
        reports = []
        smax = max(mp.re(s) for s in svals)
        smin = min(mp.re(s) for s in svals)
        extent = 80

        def node_eps(x):
            w = max(mp.exp(smax * x), mp.exp(smin * x))
            return eps / (20 * extent * w)

        def f(x):
            val, rep = kernel(mp.exp(x), node_eps(x))
            reports.append(rep)
            return val

        weights = [(lambda x, s=s: mp.exp(s * x)) for s in svals]
        quad = NestedTrapezoid(f, weights, eps, max_level=max_level)
        res = quad.run()
        diag = {
            "nodes": res.nodes,
            "levels": res.levels,
            "step": str(res.step),
            "range": [str(res.lo), str(res.hi)],
            "last_level_change": mp.nstr(res.last_change, 5),
            "max_radius": max((r.radius for r in reports), default=0),
            "max_terms": max((r.terms for r in reports), default=0),
            "theta_terms_mp": sum(r.terms_mp for r in reports),
            "theta_terms_float": sum(r.terms_float for r in reports),
        }
        err = res.last_change + eps / 10
        return ZetaResult([+v for v in res.values], svals, err, diag)


def zeta_direct(req: ZetaRequest, precision: int | None = None) -> ZetaResult:
    """Completed zeta value at ``req.s`` (see ``zeta_direct_many``)."""
    return zeta_direct_many(req, [req.s], precision)


def _continued_sqrt(f, start, steps: int = 64):
    """sqrt(f(1)) continued from the root ``start`` of f(0) along lam in [0, 1].

    Steps are halved until consecutive roots are unambiguous (the new root
    is much closer to the previous one than to its negative).
    """
    root = start
    lam = mpf(0)
    h = mpf(1) / steps
    while lam < 1:
        nxt = min(lam + h, mpf(1))
        val = f(nxt)
        if abs(val) < mpf(10) ** (-current_digits() / 2):
            raise DomainError("the continuation path meets a zero of the radicand")
        r = mp.sqrt(val)
        if abs(r - root) > abs(r + root):
            r = -r
        if abs(r - root) > abs(r) / 2:
            h /= 2
            if h < mpf(2) ** -40:
                raise DomainError("square root continuation stalled")
            continue
        root, lam = r, nxt
    return root


def _omega_path(Omega: OmegaPoint):
    """Omega_lam = iM + lam N as a function of lam (the matrix entries)."""
    M, N = Omega.M, Omega.N
    return lambda lam: SymMatrix([[1j * M[i, j] + lam * N[i, j] for j in range(2)] for i in range(2)])


def sqrt_det_minus_i(Omega: OmegaPoint):
    """sqrt(det(-i Omega)) continued from i sqrt|det M| at Omega = iM along iM + lam N.

    det(-i Omega) is negative on the pure imaginary locus, i.e. on the cut of
    the principal root, and takes every other value somewhere in the
    half-space, so no fixed cut gives a continuous root; this one agrees with
    the functional equation at Omega = iM.
    """
    path = _omega_path(Omega)
    detM = Omega.M.det()
    start = mp.sqrt(mpc(detM))
    if Omega.N.norm() == 0:
        return start
    return _continued_sqrt(lambda lam: -path(lam).det(), start)


def transport_sigma(Omega: OmegaPoint, c: AdmissibleVector):
    """Square root of -Q_{M'}(conj(Omega) c) continuing the branch of c.sigma.

    With r = (c^T M c - 2i (Mc)^T Omega^{-1} (Mc)) / c^T M c one has
    -Q_{M'}(c') = sigma^2 r.  At Omega = iM, r = -1 for every c and the root is
    i sigma; elsewhere sqrt(-r) is continued from 1 along iM + lam N, the
    same path as the root of det(-i Omega).
    """
    M = Omega.M
    Mc = c.Mc()
    cMc = dot(c.c, Mc)
    path = _omega_path(Omega)

    def minus_r(lam):
        inv = path(lam).inverse()
        return -(cMc - 2j * inv.bilinear(Mc, Mc)) / cMc

    if Omega.N.norm() == 0:
        return 1j * c.sigma
    return 1j * c.sigma * _continued_sqrt(minus_r, mpc(1))


@dataclass(frozen=True)
class Transport:
    request: ZetaRequest
    prefactor: object
    s_new: object


def functional_equation_transport(req: ZetaRequest) -> Transport:
    """Parameters of the right-hand side of the functional equation.

    zeta_{p,q}(Omega, 1 - s) = e(p.q) / sqrt(det(-i Omega)) * zeta'_{-q,p}(-Omega^{-1}, s)
    with c_j replaced by conj(Omega) c_j.  Nothing is evaluated here.
    """
    Om = req.Omega
    if Om.det() == 0:
        raise DomainError("Omega is not invertible")
    Om2 = Om.inverse_negated()
    Wbar = Om.matrix().conjugate()
    new_cs = []
    for c in (req.c1, req.c2):
        cp = Wbar.matvec(c.c)
        sig = transport_sigma(Om, c)
        try:
            new_cs.append(AdmissibleVector(cp, Om2.M, sig))
        except AdmissibilityError as exc:
            raise AdmissibilityError(
                "transported direction is not admissible (branch or convention error)",
                exc.certificate) from exc
    p, q = req.chars.p, req.chars.q
    chars2 = Characteristics(tuple(-x for x in q), p)
    pq = dot(as_vector(p), as_vector(q))
    pref = e(pq) / sqrt_det_minus_i(Om)
    s_new = 1 - to_mp(req.s)
    return Transport(ZetaRequest(Om2, chars2, new_cs[0], new_cs[1], s_new, req.eps), pref, s_new)
