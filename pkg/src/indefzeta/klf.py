"""Special values of completed indefinite zeta functions at s = 1 and s = 0.

At s = 1 the value is a combination of four terms I^{+-}(c_j), each a
dilogarithm multiple of kappa(1, 0) plus an integral along a vertical ray
starting at a branch point tau^{+-}(c) of kappa (a root of Q_Lambda(xi, 1)).
The s = 0 value is the s = 1 formula applied to the data moved by the
functional equation.

Conventions fixed here (all checked against the Mellin-transform oracle):

* p1 is reduced to [0, 1).  This changes nothing at q = 0, and it is the only
  range in which Log phi_{p1,p2} has a limit at i*infinity.
* sqrt(-2i Q_Lambda(xi, 1)) is continued from the real axis, where it is the
  principal root, as C sqrt_up(xi - tau+) sqrt_down(xi - tau-), with branch
  cuts running vertically up from tau+ and down from tau-.
* The "+" ray xi = tau+ + i t is read on the right of its cut; the "-" ray
  xi = tau- - i t on the left of its cut, with Log phi_{p1,-p2}(-xi).
* With t = u^2 the inverse square root at the branch point cancels against
  dt = 2u du, leaving an even integrand that is analytic near the real u-axis
  and is integrated with the trapezoid rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from mpmath import mp, mpc, mpf

from .errors import BranchError, DomainError, PoleError, ValidationError
from .mpcore import (
    AdmissibleVector,
    Characteristics,
    OmegaPoint,
    as_vector,
    current_digits,
    dot,
    frac,
    q_form,
    quadratic_roots_split,
    to_mp,
    working_precision,
    SymMatrix,
)
from .quadrature import even_trapezoid
from .special import KappaParams, LogPhiTracker, dilog_e, kappa_closed
from .zeta import ZetaRequest, functional_equation_transport

def _sqrt_up(w):
    """Square root with its cut on the positive imaginary axis."""
    return mp.exp((mp.log(1j * w) - 0.5j * mp.pi) / 2)


def _sqrt_down(w):
    """Square root with its cut on the negative imaginary axis."""
    return mp.exp((mp.log(-1j * w) + 0.5j * mp.pi) / 2)


@dataclass
class RayIntegralPlan:
    """How one ray integral was (or will be) evaluated."""

    tau: object
    sign: int
    p1: object
    p2: object
    step: object = None
    nodes: int = 0
    factors: int = 0
    tail_rate: object = None
    value: object = None

    def as_dict(self) -> dict:
        return {
            "branch_point": mp.nstr(self.tau, 20),
            "sign": "+" if self.sign > 0 else "-",
            "step": str(self.step),
            "nodes": self.nodes,
            "phi_factors": self.factors,
        }


class KappaOnCuts:
    """kappa^c_Omega((xi, 1)) continued off the real axis with vertical cuts."""

    def __init__(self, Omega: OmegaPoint, c: AdmissibleVector):
        self.params = KappaParams(Omega, c)
        L = self.params.Lam.matrix()
        self.lam11 = L[0, 0]
        self.tau_plus, self.tau_minus = quadratic_roots_split(self.params.Lam)
        self.W = Omega.matrix()
        self.Mc = c.Mc()
        self.sigma = c.sigma
        # fix the overall sign of C against the principal root on the real axis
        C = mp.sqrt(-1j * self.lam11)
        votes = 0
        for x in (mpf(0), mpf(1) + mp.re(self.tau_plus)):
            principal = mp.sqrt(-2j * q_form(L, (x, 1)))
            mine = C * _sqrt_up(x - self.tau_plus) * _sqrt_down(x - self.tau_minus)
            votes += 1 if abs(principal - mine) < abs(principal + mine) else -1
        if votes == 0:
            raise BranchError("could not match the square root on the real axis")
        self.C = C if votes > 0 else -C
        self.kappa_sign = self.params.calibrate()

    def prefactor(self, xi):
        """c^T M v / (4 pi i sigma Q_Omega(v)) at v = (xi, 1)."""
        num = self.Mc[0] * xi + self.Mc[1]
        Q = (self.W[0, 0] * xi * xi + 2 * self.W[0, 1] * xi + self.W[1, 1]) / 2
        if abs(Q) < mpf(10) ** (-current_digits() / 2) * (1 + abs(xi) ** 2):
            raise PoleError("ray passes through a pole of kappa")
        return self.kappa_sign * num / (4j * mp.pi * self.sigma * Q)

    def at(self, xi):
        return self.prefactor(xi) / (self.C * _sqrt_up(xi - self.tau_plus) * _sqrt_down(xi - self.tau_minus))

    def at_10(self):
        return kappa_closed(self.params, (1, 0))


def _reduce_p(p) -> tuple:
    p1 = frac(p[0])
    return p1, p[1]


def ray_integral(kc: KappaOnCuts, p1, p2, sign: int, tol) -> tuple:
    """int_0^oo Log phi(+-tau + it) kappa(...) dt along one ray; returns (value, plan)."""
    p1m, p2m = to_mp(p1), to_mp(p2)
    tracker = LogPhiTracker(p1m, p2m if sign > 0 else -p2m, tol=tol / 100)
    tau = kc.tau_plus if sign > 0 else kc.tau_minus
    plan = RayIntegralPlan(tau, sign, p1m, p2m)
    rot = mp.expjpi(mpf(1) / 4) if sign > 0 else mp.expjpi(mpf(3) / 4)
    const = tracker.limit_value() if p1m == 0 else None

    def kappa_reduced(u):
        # kappa on the ray times u, with the sqrt(i u^2) factor taken out
        if sign > 0:
            xi = tau + 1j * u * u
            other = _sqrt_down(xi - kc.tau_minus)
        else:
            xi = tau - 1j * u * u
            other = _sqrt_up(xi - kc.tau_plus)
        return xi, kc.prefactor(xi) / (kc.C * rot * other)

    def h(u):
        xi, k = kappa_reduced(u)
        arg = xi if sign > 0 else -xi
        L = tracker(arg)
        if const is not None:
            L = L - const
        return 2 * L * k

    total, nodes, step = even_trapezoid(h, tol / 10)
    val = total / 2
    if const is not None:
        # Log phi tends to a constant: integrate that part separately,
        # kappa alone decays only algebraically along the ray
        kap = mp.quad(lambda u: 2 * kappa_reduced(u)[1], [0, 1, 4, mp.inf])
        val += const * kap
    plan.step = step
    plan.nodes = nodes
    plan.factors = tracker.max_factors
    plan.value = val
    return val, plan


def I_pm(Omega: OmegaPoint, p, c: AdmissibleVector, sign: int, tol=None,
         kc: KappaOnCuts | None = None) -> tuple:
    """I^{+}(c) or I^{-}(c) of the s = 1 formula; returns (value, plan)."""
    if tol is None:
        tol = mpf(10) ** (-current_digits() - 3)
    p1, p2 = _reduce_p(p)
    if p1 == 0 and frac(p2) == 0:
        raise DomainError("p must lie outside Z^2")
    if kc is None:
        kc = KappaOnCuts(Omega, c)
    li = dilog_e(p1 if sign > 0 else -to_mp(p1))
    ray, plan = ray_integral(kc, p1, p2, sign, tol)
    return -li * kc.at_10() + 2j * ray, plan


@dataclass
class KLFResult:
    value: object
    pieces: dict = field(default_factory=dict)
    plans: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    def max_factors(self) -> int:
        return max((p.factors for p in self.plans), default=0)


def _check_cs(Omega, c1, c2):
    out = []
    for c in (c1, c2):
        if not isinstance(c, AdmissibleVector):
            c = AdmissibleVector(c, Omega.M)
        elif c.M != Omega.M:
            c = AdmissibleVector(c.c, Omega.M, c.sigma)
        out.append(c)
    return out


def klf_s1(Omega: OmegaPoint, p, c1, c2, precision: int | None = None, tol=None) -> KLFResult:
    """zeta^{c1,c2}_{p,0}(Omega, 1) = I+(c2) - I-(c2) - I+(c1) + I-(c1)."""
    with working_precision(precision):
        c1, c2 = _check_cs(Omega, c1, c2)
        p = as_vector(p) if not all(isinstance(x, (int, Fraction, str)) for x in p) else p
        if c1.c == c2.c and c1.sigma == c2.sigma:
            return KLFResult(mpc(0))
        if tol is None:
            tol = mpf(10) ** (-current_digits() - 3)
        pieces = {}
        plans = []
        total = mpc(0)
        for name, c, w in (("c2", c2, 1), ("c1", c1, -1)):
            kc = KappaOnCuts(Omega, c)
            ip, plan_p = I_pm(Omega, p, c, +1, tol, kc)
            im_, plan_m = I_pm(Omega, p, c, -1, tol, kc)
            pieces[f"I+({name})"] = ip
            pieces[f"I-({name})"] = im_
            plans += [plan_p, plan_m]
            total += w * (ip - im_)
        return KLFResult(+total, pieces, plans, {"max_phi_factors": max(pl.factors for pl in plans)})


def _pure_imaginary_check(Omega: OmegaPoint, c1, c2):
    if not Omega.is_pure_imaginary():
        raise ValidationError("the pure imaginary formula needs Omega = iM")
    for c in (c1, c2):
        if not c.is_real():
            raise ValidationError("the pure imaginary formula needs real c")


def klf_s1_pure_imaginary(M, p, c1, c2, precision: int | None = None, tol=None) -> KLFResult:
    """zeta^{c1,c2}_{p,0}(iM, 1) = 2i im(I(c2) - I(c1)) with I = I^+."""
    with working_precision(precision):
        Omega = M if isinstance(M, OmegaPoint) else OmegaPoint.pure_imaginary(M)
        c1, c2 = _check_cs(Omega, c1, c2)
        _pure_imaginary_check(Omega, c1, c2)
        if c1.c == c2.c:
            return KLFResult(mpc(0))
        if tol is None:
            tol = mpf(10) ** (-current_digits() - 3)
        I2, pl2 = I_pm(Omega, p, c2, +1, tol)
        I1, pl1 = I_pm(Omega, p, c1, +1, tol)
        val = 2j * mp.im(I2 - I1)
        return KLFResult(mpc(0, mp.re(val / 1j)), {"I(c2)": I2, "I(c1)": I1}, [pl2, pl1],
                         {"max_phi_factors": max(pl2.factors, pl1.factors)})


def transported_data(Omega: OmegaPoint, q, c1, c2):
    """(-Omega^{-1}, -q, conj(Omega) c1, conj(Omega) c2) and 1 / sqrt(det(-i Omega))."""
    c1, c2 = _check_cs(Omega, c1, c2)
    req = ZetaRequest(Omega, Characteristics((0,) * 2, tuple(q)), c1, c2, s=0)
    tr = functional_equation_transport(req)
    r = tr.request
    return r.Omega, r.chars.p, r.c1, r.c2, tr.prefactor


def klf_s0(Omega: OmegaPoint, q, c1, c2, precision: int | None = None, tol=None) -> KLFResult:
    """zeta^{c1,c2}_{0,q}(Omega, 0) from the s = 1 formula for the transported data."""
    with working_precision(precision):
        Om2, p2, d1, d2, pref = transported_data(Omega, q, c1, c2)
        res = klf_s1(Om2, p2, d1, d2, tol=tol)
        J = {k.replace("I", "J"): v for k, v in res.pieces.items()}
        diag = dict(res.diagnostics)
        diag["prefactor"] = pref
        return KLFResult(+(pref * res.value), J, res.plans, diag)


def klf_s0_pure_imaginary(M, q, c1, c2, precision: int | None = None, tol=None) -> KLFResult:
    """zeta^{c1,c2}_{0,q}(iM, 0) = (2i / sqrt(det M)) im(J(c2) - J(c1)).

    J(c) is I^+ for (-(iM)^{-1}, -q, conj(iM) c); sqrt(det M) is the principal
    root of the negative number det M.
    """
    with working_precision(precision):
        Omega = M if isinstance(M, OmegaPoint) else OmegaPoint.pure_imaginary(M)
        c1, c2 = _check_cs(Omega, c1, c2)
        _pure_imaginary_check(Omega, c1, c2)
        if c1.c == c2.c:
            return KLFResult(mpf(0))
        if tol is None:
            tol = mpf(10) ** (-current_digits() - 3)
        Om2, p2, d1, d2, _ = transported_data(Omega, q, c1, c2)
        J2, pl2 = I_pm(Om2, p2, d2, +1, tol)
        J1, pl1 = I_pm(Om2, p2, d1, +1, tol)
        pref = 2j / mp.sqrt(Omega.M.det())
        val = pref * mp.im(J2 - J1)
        return KLFResult(+mp.re(val), {"J(c2)": J2, "J(c1)": J1, "J(c2)-J(c1)": J2 - J1},
                         [pl2, pl1],
                         {"max_phi_factors": max(pl2.factors, pl1.factors),
                          "prefactor": pref, "imaginary_part": mp.im(val)})


@dataclass
class FactorBudget:
    """Cost of the phi-product along a ray that starts at ``branch_point``."""

    branch_point: object
    height: object
    pairs: int
    factors: int
    pairs_per_digit: object

    def as_dict(self) -> dict:
        return {
            "branch_point": mp.nstr(self.branch_point, 25),
            "height": mp.nstr(self.height, 15),
            "pairs": self.pairs,
            "factors": self.factors,
            "pairs_per_digit": mp.nstr(self.pairs_per_digit, 8),
        }


def factor_budget(Omega: OmegaPoint, c, p, digits: int) -> FactorBudget:
    """Number of phi factors needed at the lowest point of the "+" ray.

    The ray starts at tau+, so im(tau+) governs the geometric rate
    exp(-2 pi im(tau+)) of the product; one digit costs log(10)/(2 pi im tau+)
    more pairs.
    """
    c = _check_cs(Omega, c, c)[0]
    kc = KappaOnCuts(Omega, c)
    y = mp.im(kc.tau_plus)
    p1, p2 = _reduce_p(p)
    tracker = LogPhiTracker(to_mp(p1), to_mp(p2), tol=mpf(10) ** (-digits - 5))
    D = tracker.terms_needed(y)
    return FactorBudget(kc.tau_plus, y, D, 2 * D + 1, mp.log(10) / (2 * mp.pi * y))


def factor_budget_s0(Omega: OmegaPoint, q, c, digits: int) -> FactorBudget:
    """``factor_budget`` for the data of the s = 0 formula (after transport)."""
    Om2, p2, d1, _, _ = transported_data(Omega, q, c, c)
    return factor_budget(Om2, d1, p2, digits)
