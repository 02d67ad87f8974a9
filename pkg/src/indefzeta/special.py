"""Scalar special functions used by the theta sums and the limit formulas."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from mpmath import mp, mpc, mpf

from .errors import BranchError, ConvergenceError, DomainError, PoleError
from .mpcore import (
    AdmissibleVector,
    OmegaPoint,
    SymMatrix,
    as_vector,
    current_digits,
    dot,
    frac,
    q_form,
    to_mp,
)

SQRT_PI_CACHE: dict[int, mpf] = {}


def sqrt_pi():
    v = SQRT_PI_CACHE.get(mp.prec)
    if v is None:
        v = SQRT_PI_CACHE[mp.prec] = mp.sqrt(mp.pi)
    return v


def e(z):
    """exp(2 pi i z)."""
    return mp.expjpi(2 * z)


def eE(alpha):
    """E(alpha) = integral of exp(-pi u^2) from 0 to alpha, i.e. erf(sqrt(pi) alpha)/2."""
    alpha = to_mp(alpha)
    if alpha == 0:
        return mpf(0)
    return mp.erf(sqrt_pi() * alpha) / 2


def erfcx(z):
    """exp(z^2) erfc(z), accurate for large |z| with re(z) >= 0."""
    z = to_mp(z)
    if abs(z) < 4:
        return mp.exp(z * z) * mp.erfc(z)
    with mp.extraprec(20):
        # erfc underflows to tiny but exactly representable values in mpmath
        return mp.exp(z * z) * mp.erfc(z)


def _sigma(c: AdmissibleVector, M: SymMatrix | None):
    if M is None or M == c.M:
        return c.sigma
    return mp.sqrt(-q_form(M, c.c))


def rho(M: SymMatrix, c1: AdmissibleVector, c2: AdmissibleVector, v):
    """rho_M^{c1,c2}(v) = E(c2^T M v / sigma2) - E(c1^T M v / sigma1).

    Each sigma is the branch stored on the AdmissibleVector (principal unless
    the vector came out of a transport).
    """
    v = as_vector(v)
    Mv = M.matvec(v)
    out = mpf(0)
    for sign, c in ((1, c2), (-1, c1)):
        out += sign * eE(dot(c.c, Mv) / _sigma(c, M))
    return out


def dilog(z):
    """Li_2(z) on the closed unit disc."""
    z = to_mp(z)
    r = abs(z)
    if r > 1 + mpf(2) ** (-mp.prec + 8):
        raise DomainError("dilog is only provided on the closed unit disc")
    if z == 1:
        return mp.pi ** 2 / 6
    if abs(r - 1) <= mpf(2) ** (-mp.prec + 8):
        # on the circle: Bernoulli polynomial for the real part, Clausen for the imaginary
        x = mp.arg(z) / (2 * mp.pi)
        x = x - mp.floor(x)
        return mpc(mp.pi ** 2 * (x * x - x + mpf(1) / 6), mp.clsin(2, 2 * mp.pi * x))
    return mp.polylog(2, z)


def dilog_e(x):
    """Li_2(e(x)) for real x, exact reduction of x modulo 1 when x is rational."""
    f = frac(x)
    f = to_mp(f)
    if f == 0:
        return mpc(mp.pi ** 2 / 6, 0)
    return mpc(mp.pi ** 2 * (f * f - f + mpf(1) / 6), mp.clsin(2, 2 * mp.pi * f))


# ---------------------------------------------------------------------------
# Log phi


@dataclass
class LogPhiTracker:
    """Continuous logarithm of phi_{p1,p2}(xi) on the upper half-plane.

    phi_{p1,p2}(xi) = (1 - e(p1 xi + p2)) prod_{d>=1} (1 - e((d+p1) xi + p2)) / (1 - e((d-p1) xi - p2)).

    For 0 <= p1 < 1 every factor 1 - w has |w| < 1 (apart from the constant
    d = 0 factor when p1 = 0), so the sum of principal logarithms is continuous
    on the whole half-plane and tends to the required limit at i*infinity:
    log(1 - e(p2)) if p1 = 0 and 0 otherwise.  Other p1 admit no such limit and
    are rejected; callers reduce p1 modulo 1 first.
    """

    p1: object
    p2: object
    tol: object = None
    max_factors: int = 0
    last_terms: int = 0
    _path: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.p1 = to_mp(self.p1)
        self.p2 = to_mp(self.p2)
        if not (0 <= self.p1 < 1):
            raise DomainError("p1 must lie in [0, 1); reduce it modulo 1 first")
        if self.p1 == 0 and (self.p2 - mp.floor(self.p2)) == 0:
            raise DomainError("phi_{0,0} vanishes identically")
        if self.tol is None:
            self.tol = mpf(10) ** (-current_digits() - 5)

    def limit_value(self):
        if self.p1 == 0:
            return mp.log(1 - e(self.p2))
        return mpc(0)

    def terms_needed(self, y) -> int:
        """Number D of (numerator, denominator) pairs so that the tail is below tol."""
        y = to_mp(y)
        if y <= 0:
            raise DomainError("im(xi) must be positive")
        # |log(1 - w)| <= 2|w| once |w| <= 1/2; tail of two geometric series
        q = mp.exp(-2 * mp.pi * y)
        lo = min(self.p1, 1 - self.p1) if self.p1 > 0 else mpf(1)
        # smallest exponent among the tail factors d > D is (D + 1 - max(p1, 1 - p1))
        hi = 1 - lo if self.p1 > 0 else mpf(0)
        bound_const = 4 / (1 - q)
        # solve bound_const * q^(D+1-hi) < tol
        D = (mp.log(bound_const / self.tol) / (2 * mp.pi * y)) - 1 + hi
        return max(1, int(mp.ceil(D)))

    def tail_bound(self, y, D: int):
        q = mp.exp(-2 * mp.pi * to_mp(y))
        hi = max(self.p1, 1 - self.p1) if self.p1 > 0 else mpf(0)
        return 4 * q ** (D + 1 - hi) / (1 - q)

    def __call__(self, xi, D: int | None = None):
        xi = to_mp(xi)
        y = mp.im(xi)
        if y <= 0:
            raise DomainError("log phi needs im(xi) > 0")
        if D is None:
            D = self.terms_needed(y)
        total = self.limit_value() if self.p1 == 0 else mpc(0)
        p1, p2 = self.p1, self.p2
        if p1 != 0:
            total += self._log1m(e(p1 * xi + p2))
        q = e(xi)
        a = e(p1 * xi + p2)
        b = e(-p1 * xi - p2)
        qa, qb = a, b
        for _ in range(D):
            qa *= q
            qb *= q
            total += self._log1m(qa) - self._log1m(qb)
        self.last_terms = 2 * D + 1
        self.max_factors = max(self.max_factors, self.last_terms)
        return total

    def _log1m(self, w):
        d = 1 - w
        if abs(d) < mpf(10) ** (-current_digits() / 2):
            raise BranchError("branch point hit: a factor of phi vanishes")
        return mp.log(d)

    def product(self, xi, D: int):
        """Truncated product itself (for checks against exp(log_phi))."""
        xi = to_mp(xi)
        p1, p2 = self.p1, self.p2
        out = 1 - e(p1 * xi + p2)
        for d in range(1, D + 1):
            out *= (1 - e((d + p1) * xi + p2)) / (1 - e((d - p1) * xi - p2))
        return out

    def track(self, path) -> list:
        """Evaluate along a path and check continuity between consecutive nodes."""
        out = []
        prev = None
        for xi in path:
            val = self(xi)
            if prev is not None and abs(mp.im(val - prev)) >= mp.pi:
                raise BranchError("path too coarse: jump of the tracked logarithm")
            out.append(val)
            prev = val
        self._path = list(path)
        return out


def log_phi(tracker: LogPhiTracker, xi):
    return tracker(xi)


# ---------------------------------------------------------------------------
# kappa


def eEe_transform(alpha, beta):
    """Closed form of the integral of E(alpha t^(1/2)) e(beta t) over t > 0.

    Equal to -alpha / (4 pi i beta sqrt(alpha^2 - 2 i beta)) with the principal
    square root.  Where the integral itself diverges this is its continuation.
    """
    alpha, beta = to_mp(alpha), to_mp(beta)
    w = alpha * alpha - 2j * beta
    if not mp.re(w) > 0:
        raise DomainError("need re(alpha^2 - 2 i beta) > 0")
    if beta == 0:
        raise PoleError("beta = 0 is a pole", residue_hint=None)
    return -alpha / (4j * mp.pi * beta * mp.sqrt(w))


def lambda_matrix(Om: OmegaPoint, c: AdmissibleVector) -> SymMatrix:
    """Lambda = Omega - (i / Q_M(c)) (Mc)(Mc)^T."""
    Mc = c.Mc()
    k = 1j / q_form(Om.M, c.c)
    W = Om.matrix()
    return SymMatrix([[W[i, j] - k * Mc[i] * Mc[j] for j in range(2)] for i in range(2)])


@dataclass
class KappaParams:
    """Data fixing kappa_Omega^c: Omega, c, and the derived Lambda.

    ``sign`` is +1 or -1 and multiplies the principal-branch closed form; it
    is calibrated once against the defining integral (``calibrate()``).
    """

    Omega: OmegaPoint
    c: AdmissibleVector
    Lam: OmegaPoint = field(init=False)
    sign: int | None = None

    def __post_init__(self):
        if self.Omega.g != 2:
            raise DomainError("kappa is defined for g = 2")
        if self.c.M != self.Omega.M:
            self.c = AdmissibleVector(self.c.c, self.Omega.M, self.c.sigma)
        self.Lam = OmegaPoint.from_complex(lambda_matrix(self.Omega, self.c), k=0)

    @property
    def sigma(self):
        return self.c.sigma

    def alpha_beta(self, v):
        v = as_vector(v)
        M = self.Omega.M
        alpha = dot(self.c.c, M.matvec(v)) / self.sigma
        beta = q_form(self.Omega.matrix(), v)
        return alpha, beta

    def calibration_point(self) -> tuple:
        """A real unit v with Q_M(v) > 0 where alpha is far from zero.

        alpha = c^T M v / sigma vanishes on the M-orthogonal line of c, which
        lies inside the positive cone, so a fixed point such as (1, 0) can
        make both sides of the calibration vanish.
        """
        M = self.Omega.M
        best, score = None, mpf(0)
        for k in range(24):
            th = mp.pi * k / 24
            v = (mp.cos(th), mp.sin(th))
            qm = q_form(M, v)
            if not qm > 0:
                continue
            alpha = abs(dot(self.c.c, M.matvec(v)) / self.sigma)
            # the quadrature converges at rate ~ min(Q_M(v), |alpha|^2 / 2)
            sc = min(alpha, mp.sqrt(qm))
            if sc > score:
                best, score = v, sc
        if best is None:
            raise DomainError("M has no positive direction")
        return best

    def calibrate(self) -> int:
        if self.sign is None:
            v = self.calibration_point()
            with mp.workdps(20):
                ref = kappa_integral(self, v, 1)
                val = _kappa_principal(self, v)
            if abs(val - ref) < abs(val + ref):
                self.sign = 1
            else:
                self.sign = -1
        return self.sign


def _kappa_principal(params: KappaParams, v):
    v = as_vector(v)
    M = params.Omega.M
    num = dot(params.c.c, M.matvec(v))
    qo = q_form(params.Omega.matrix(), v)
    ql = q_form(params.Lam.matrix(), v)
    return num / (4j * mp.pi * params.sigma * qo * mp.sqrt(-2j * ql))


def kappa_closed(params: KappaParams, v):
    """Closed form c^T M v / (4 pi i sigma Q_Omega(v) sqrt(-2i Q_Lambda(v)))."""
    v = as_vector(v)
    qo = q_form(params.Omega.matrix(), v)
    ql = q_form(params.Lam.matrix(), v)
    scale = max(abs(x) for x in v) ** 2
    if scale == 0:
        raise DomainError("kappa is undefined at v = 0")
    if abs(qo) < mpf(10) ** (-current_digits() / 2) * scale:
        W = params.Omega.matrix()
        hint = None
        if W[0, 0] != 0:
            disc = mp.sqrt(W[0, 1] ** 2 - W[0, 0] * W[1, 1])
            r1, r2 = (-W[0, 1] + disc) / W[0, 0], (-W[0, 1] - disc) / W[0, 0]
            hint = 1 / (2j * mp.pi * W[0, 0] * (r1 - r2))
        raise PoleError("Q_Omega(v) vanishes: pole of kappa", residue_hint=hint)
    if abs(ql) < mpf(10) ** (-current_digits() / 2) * scale:
        raise BranchError("v is on a branch point of kappa")
    return params.calibrate() * _kappa_principal(params, v)


def kappa_integral(params: KappaParams, v, s=1):
    """Defining integral -int_0^oo E(alpha t^(1/2)) e(beta t) t^(s-1) dt by quadrature."""
    s = to_mp(s)
    if not mp.re(s) > 0:
        raise DomainError("need re(s) > 0")
    alpha, beta = params.alpha_beta(v)
    return -_eE_mellin_quad(alpha, beta, s)


def _eE_mellin_quad(alpha, beta, s):
    """int_0^oo E(alpha u) e(beta u^2) 2 u^(2s-1) du on the real axis."""
    w = alpha * alpha - 2j * beta
    if not (mp.im(beta) > 0 and mp.re(w) > 0):
        raise ConvergenceError("the defining integral does not converge at this point")
    # both parts of the integrand decay like exp(-2 pi min(im beta, re w / 2) u^2)
    rate = 2 * mp.pi * min(mp.im(beta), mp.re(w) / 2)
    digits = current_digits() + 10
    U = mp.sqrt((digits * mp.log(10) + 20) / rate) + 1
    # split so each piece holds a bounded number of oscillations
    osc = abs(mp.re(beta)) * U + abs(mp.im(alpha)) + 1
    pieces = int(min(400, max(4, mp.ceil(4 * osc * U / 4))))
    nodes = [U * k / pieces for k in range(pieces + 1)]

    def f(u):
        if u == 0:
            return mpf(0)
        return eE(alpha * u) * e(beta * u * u) * 2 * u ** (2 * s - 1)

    return mp.quad(f, nodes)
