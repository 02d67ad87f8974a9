"""Indefinite theta functions with characteristics.

The summand of Theta_{p,q}(t Omega) at v = n + q is

    rho(sqrt(t) v) e(t Q_Omega(v) + p.v),   rho = E(x2) - E(x1),  x_k = sqrt(t) a_k.v,

with a_k = M c_k / sigma_k.  Writing E(x) = s/2 - (s/2) erfc(s sqrt(pi) x) for
s = sign(re x) and absorbing exp(-pi x^2) into the quadratic form gives

    (s2 - s1)/2 e(t Q_Omega(v))
      - (s2/2) erfcx(s2 sqrt(pi) x2) e(t Q_{Lambda_2}(v))
      + (s1/2) erfcx(s1 sqrt(pi) x1) e(t Q_{Lambda_1}(v)),

Lambda_k = Omega + i a_k a_k^T.  Every piece is then bounded by an explicit
Gaussian, so nothing overflows and magnitudes are cheap to screen in float.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from mpmath import mp, mpc, mpf
from scipy import special as sps

from .errors import ConvergenceError, ValidationError
from .mpcore import (
    AdmissibleVector,
    Characteristics,
    OmegaPoint,
    as_vector,
    bits_for_digits,
    current_digits,
    dot,
    working_precision,
)
from .special import e
from ._arb import acb, arb, flint_precision, from_acb, to_acb, to_arb

LOG_HALF = math.log(0.5)
# relative error of one float64 term (erfcx via Faddeeva plus exp/phase rounding)
FLOAT_REL = 1e-13
MAX_POINTS = 4_000_000


@dataclass(frozen=True)
class TruncationReport:
    radius: int
    terms: int
    terms_mp: int
    terms_float: int
    tail_bound: float
    error_estimate: float
    shell_masses: tuple = ()

    def as_dict(self) -> dict:
        return {
            "radius": self.radius,
            "terms": self.terms,
            "terms_mp": self.terms_mp,
            "terms_float": self.terms_float,
            "tail_bound": self.tail_bound,
            "error_estimate": self.error_estimate,
        }


@dataclass(frozen=True)
class ThetaRequest:
    """Theta^{c1,c2}(z, Omega), or the null form when ``chars`` is given."""

    Omega: OmegaPoint
    c1: AdmissibleVector
    c2: AdmissibleVector
    eps: object
    z: tuple | None = None
    chars: Characteristics | None = None

    def __post_init__(self):
        if (self.z is None) == (self.chars is None):
            raise ValidationError("give exactly one of z and chars")
        if not float(self.eps) > 0:
            raise ValidationError("eps must be positive")
        for c in (self.c1, self.c2):
            if len(c.c) != self.Omega.g:
                raise ValidationError("c has the wrong dimension")


def _logmag_erfcx(z: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(np.abs(sps.erfcx(z)))


def reduced_basis(B: np.ndarray) -> np.ndarray:
    """Integer unimodular U whose columns are a Lagrange-Gauss reduced basis for the form B.

    Boxes in the coordinates m with n = U m then fit the ellipses of B about
    as well as the lattice allows.  Only g = 2 is reduced; otherwise U = I.
    """
    g = B.shape[0]
    if g != 2:
        return np.eye(g, dtype=np.int64)
    b1 = np.array([1, 0], dtype=np.int64)
    b2 = np.array([0, 1], dtype=np.int64)
    norm = lambda v: float(v @ B @ v)
    if norm(b1) > norm(b2):
        b1, b2 = b2, b1
    for _ in range(200):
        mu = round(float(b1 @ B @ b2) / norm(b1))
        b2 = b2 - mu * b1
        if norm(b2) >= norm(b1):
            break
        b1, b2 = b2, b1
    return np.stack([b1, b2], axis=1)


class ThetaKernel:
    """Theta_{p,q}(t Omega) for fixed (Omega, p, q, c1, c2) and varying t > 0.

    Constants are converted once; each call picks lattice points from a float
    screen and evaluates the large ones in mpmath at just enough precision.
    """

    def __init__(self, Omega: OmegaPoint, p, q, c1: AdmissibleVector, c2: AdmissibleVector):
        self.Omega = Omega
        self.g = g = Omega.g
        self.p = as_vector(p)
        self.q = as_vector(q)
        if len(self.p) != g or len(self.q) != g:
            raise ValidationError("characteristics have the wrong dimension")
        self.cs = []
        for c in (c1, c2):
            if c.M != Omega.M:
                c = AdmissibleVector(c.c, Omega.M, c.sigma)
            self.cs.append(c)
        self.same = self.cs[0].c == self.cs[1].c and self.cs[0].sigma == self.cs[1].sigma
        self._prec_cache: dict[int, tuple] = {}
        W = Omega.matrix()
        self._W = W
        self._a = []
        self._L = []
        for c in self.cs:
            a = tuple(x / c.sigma for x in c.Mc())
            self._a.append(a)
            self._L.append([[W[i, j] + 1j * a[i] * a[j] for j in range(g)] for i in range(g)])
        self.f_W = np.array([[complex(W[i, j]) for j in range(g)] for i in range(g)])
        self.f_a = [np.array([complex(x) for x in a]) for a in self._a]
        self.f_L = [np.array([[complex(x) for x in row] for row in L]) for L in self._L]
        # enumeration basis adapted to the decay of the pieces
        self.U = reduced_basis(sum(L.imag for L in self.f_L))
        self.f_p = np.array([float(x) for x in self.p])
        self.f_q = np.array([float(x) for x in self.q])

    # -- float screen -------------------------------------------------------

    def _screen(self, pts: np.ndarray, t: float):
        """Log-magnitudes of the three pieces at v = pts + q (and of their sum bound)."""
        v = pts + self.f_q
        st = math.sqrt(t)
        x = [st * (v @ a) for a in self.f_a]
        s = [np.where(xi.real >= 0, 1.0, -1.0) for xi in x]
        zk = [s[k] * math.sqrt(math.pi) * x[k] for k in range(2)]
        qW = 0.5 * np.einsum("ni,ij,nj->n", v, self.f_W.imag, v)
        logA = np.where(s[0] != s[1], -2 * math.pi * t * qW, -np.inf)
        logB = []
        for k in range(2):
            qL = 0.5 * np.einsum("ni,ij,nj->n", v, self.f_L[k].imag, v)
            logB.append(LOG_HALF + _logmag_erfcx(zk[k]) - 2 * math.pi * t * qL)
        comps = np.stack([logA, logB[0], logB[1]], axis=1)
        logmag = np.logaddexp(np.logaddexp(logA, logB[0]), logB[1])
        return logmag, s, zk, comps

    def _box(self, R: int) -> np.ndarray:
        axes = [np.arange(-R, R + 1, dtype=np.float64)] * self.g
        grid = np.meshgrid(*axes, indexing="ij")
        return np.stack([gr.ravel() for gr in grid], axis=1)

    def select(self, t: float, eps: float, R0: int | None = None):
        """Grow the box by doubling until two consecutive shells carry less than eps/4.

        Boxes and shells are taken in the reduced coordinates m, n = U m.

        Only the new ring is screened at each doubling.  The two shells checked
        are the halves R/2 < |n| <= 3R/4 and 3R/4 < |n| <= R of the outer ring.
        """
        if R0 is None:
            R0 = 4
            while R0 * R0 * t < 4:
                R0 *= 2
        R = R0
        prev_R = -1
        chunks = []
        shells = []
        while True:
            if (2 * R + 1) ** self.g > MAX_POINTS:
                raise ConvergenceError(
                    "theta sum did not converge within the lattice cap",
                    last_increment=shells[-1] if shells else None)
            box = self._box(R)
            linf = np.max(np.abs(box), axis=1)
            ring = box[linf > prev_R]
            rl = np.max(np.abs(ring), axis=1)
            ring = ring @ self.U.T.astype(np.float64)
            logmag, s, zk, comps = self._screen(ring, t)
            chunks.append((ring, logmag, s, zk, comps))
            inner = (rl > R // 2) & (rl <= (3 * R) // 4)
            outer = rl > (3 * R) // 4
            with np.errstate(divide="ignore", over="ignore"):
                m1 = float(np.exp(np.logaddexp.reduce(logmag[inner]))) if inner.any() else 0.0
                m2 = float(np.exp(np.logaddexp.reduce(logmag[outer]))) if outer.any() else 0.0
            shells.extend([m1, m2])
            if m1 < eps / 4 and m2 < eps / 4:
                break
            prev_R = R
            R *= 2
        pts = np.concatenate([c[0] for c in chunks])
        logmag = np.concatenate([c[1] for c in chunks])
        s = [np.concatenate([c[2][k] for c in chunks]) for k in range(2)]
        zk = [np.concatenate([c[3][k] for c in chunks]) for k in range(2)]
        comps = np.concatenate([c[4] for c in chunks])
        return R, pts, logmag, s, zk, comps, tuple(shells)

    # -- evaluation ---------------------------------------------------------

    def __call__(self, t, eps):
        """Return (value, TruncationReport) for Theta_{p,q}(t Omega)."""
        t = mpf(t)
        if self.same:
            return mpc(0), TruncationReport(0, 0, 0, 0, 0.0, 0.0)
        tf = float(t)
        epsf = float(eps)
        R, pts, logmag, s, zk, comps, shells = self.select(tf, epsf)
        order = np.argsort(logmag, kind="stable")
        lm = logmag[order]
        acc = np.logaddexp.accumulate(lm)
        budget = math.log(epsf / 4)
        n_drop = int(np.searchsorted(acc, budget, side="right"))
        dropped = float(np.exp(acc[n_drop - 1])) if n_drop else 0.0
        kept = order[n_drop:]
        if kept.size == 0:
            return mpc(0), TruncationReport(R, 0, 0, 0, dropped + shells[-1], dropped + shells[-1])
        pts, s, zk, comps = pts[kept], [sk[kept] for sk in s], [z[kept] for z in zk], comps[kept]
        # float path for single pieces while the accumulated float error stays within eps/4
        v = pts + self.f_q
        phase_scale = 1.0 + 2 * math.pi * (np.abs(tf * 0.5 * np.einsum(
            "ni,ij,nj->n", v, np.abs(self.f_W), np.abs(v))) + np.abs(v @ self.f_p))
        ferr = (np.exp(comps) * (FLOAT_REL * 1e3) * phase_scale[:, None]).ravel()
        forder = np.argsort(ferr, kind="stable")
        cum = np.cumsum(ferr[forder])
        n_float = int(np.searchsorted(cum, epsf / 4, side="right"))
        in_float = np.zeros(ferr.size, dtype=bool)
        in_float[forder[:n_float]] = True
        in_float = in_float.reshape(comps.shape)
        total = self._float_sum(v, tf, s, zk, in_float)
        need_mp = ~in_float.all(axis=1)
        n_mp = int(need_mp.sum())
        if n_mp:
            per_term = epsf / (4 * n_mp)
            mp_comps = np.where(in_float, -np.inf, comps)[need_mp]
            mp_val, _ = self._mp_sum(pts[need_mp], t, mp_comps.max(axis=1),
                                     [sk[need_mp] for sk in s], ~in_float[need_mp], per_term)
            total += mp_val
        ferr_total = float(cum[n_float - 1]) if n_float else 0.0
        tail = dropped + shells[-1] + shells[-2]
        report = TruncationReport(
            radius=R, terms=int(kept.size), terms_mp=n_mp, terms_float=int(kept.size) - n_mp,
            tail_bound=tail, error_estimate=tail + ferr_total + (epsf / 4 if n_mp else 0.0),
            shell_masses=shells)
        return total, report

    def _float_sum(self, v, t, s, zk, mask):
        """Sum of the pieces selected by ``mask`` (n x 3) in float64."""
        ph = v @ self.f_p
        out = np.zeros(len(v), dtype=complex)
        diff = 0.5 * (s[1] - s[0])
        sel = mask[:, 0] & (diff != 0)
        if sel.any():
            qW = 0.5 * np.einsum("ni,ij,nj->n", v[sel], self.f_W, v[sel])
            out[sel] += diff[sel] * np.exp(2j * math.pi * (t * qW + ph[sel]))
        for k, sign in ((1, -1), (0, 1)):
            sel = mask[:, k + 1]
            if sel.any():
                qL = 0.5 * np.einsum("ni,ij,nj->n", v[sel], self.f_L[k], v[sel])
                out[sel] += sign * 0.5 * s[k][sel] * sps.erfcx(zk[k][sel]) * np.exp(
                    2j * math.pi * (t * qL + ph[sel]))
        # fsum keeps the order-independent rounding of a compensated sum
        return mpc(math.fsum(out.real.tolist()), math.fsum(out.imag.tolist()))

    def _consts(self, prec: int):
        c = self._prec_cache.get(prec)
        if c is None:
            with flint_precision(prec):
                g = self.g
                W = [[to_acb(self._W[i, j]) for j in range(g)] for i in range(g)]
                a = [[to_acb(x) for x in ak] for ak in self._a]
                p = [to_arb(x) for x in self.p]
                q = [to_arb(x) for x in self.q]
                real_a = [all(mp.im(x) == 0 for x in ak) for ak in self._a]
                a = [[x.real if real_a[k] else x for x in a[k]] for k in range(2)]
                c = (W, a, p, q, arb.const_sqrt_pi(), real_a)
            self._prec_cache[prec] = c
        return c

    def _mp_sum(self, pts, t, logmag, s, mask, per_term):
        """Pieces selected by ``mask`` (n x 3) in arb at per-term precision."""
        g = self.g
        log_tol = math.log(per_term)
        # bits needed so the absolute error of each term stays below per_term
        need_bits = np.ceil((logmag - log_tol) / math.log(2)).astype(int) + 24
        vmax = np.max(np.abs(pts), axis=1) + 1
        need_bits += np.ceil(np.log2(1 + float(t) * vmax ** 2 * 10)).astype(int)
        need_bits = np.clip((need_bits + 15) // 16 * 16, 64, mp.prec + 32)
        full = mp.prec + 16
        ip = [[int(x) for x in row] for row in pts]
        flags = mask.tolist()
        total = acb(0)
        for bits in sorted(set(need_bits.tolist())):
            idx = np.nonzero(need_bits == bits)[0]
            W, a, p, q, spi, real_a = self._consts(int(bits))
            with flint_precision(int(bits)):
                tt = to_arb(t)
                st = tt.sqrt()
                # exponent 2(t Q_W(n+q) + p.(n+q)) as a polynomial in the integers n
                Wq = [sum((W[i][j] * q[j] for j in range(1, g)), W[i][0] * q[0]) for i in range(g)]
                c0 = 2 * (tt * _qf_arb(W, q) + sum((p[j] * q[j] for j in range(1, g)), p[0] * q[0]))
                lin = [2 * (tt * Wq[j] + p[j]) for j in range(g)]
                quad = [(i, j, tt * W[i][j] * (1 if i == j else 2)) for i in range(g) for j in range(i, g)]
                # erfc arguments +-sqrt(pi t) a_k.(n+q)
                sa = [[spi * st * x for x in a[k]] for k in range(2)]
                s0 = [sum((sa[k][j] * q[j] for j in range(1, g)), sa[k][0] * q[0]) for k in range(2)]
                part = acb(0)
                for i in idx:
                    n = ip[i]
                    arg = c0
                    for j in range(g):
                        if n[j]:
                            arg = arg + lin[j] * n[j]
                    for (r, c, w) in quad:
                        m = n[r] * n[c]
                        if m:
                            arg = arg + w * m
                    E0 = acb.exp_pi_i(arg)
                    s1, s2 = int(s[0][i]), int(s[1][i])
                    fl = flags[i]
                    bracket = acb((s2 - s1) // 2 if fl[0] else 0)
                    for k, sk, sgn in ((1, s2, -1), (0, s1, 1)):
                        if not fl[k + 1]:
                            continue
                        z = s0[k]
                        for j in range(g):
                            if n[j]:
                                z = z + sa[k][j] * n[j]
                        ec = (z if sk > 0 else -z).erfc()
                        bracket += ec * (sgn * sk) / 2
                    part += E0 * bracket
            with flint_precision(full):
                total += part
        with flint_precision(full):
            return from_acb(total), float(total.rad()) if hasattr(total, "rad") else 0.0


def _qf_arb(W, v):
    g = len(v)
    out = W[0][0] * v[0] * v[0]
    for i in range(g):
        for j in range(g):
            if i or j:
                out += W[i][j] * v[i] * v[j]
    return out / 2


def theta_null(Omega: OmegaPoint, p, q, c1: AdmissibleVector, c2: AdmissibleVector, eps,
               precision: int | None = None, t=1):
    """Theta^{c1,c2}_{p,q}(t Omega) = e(Q_Omega(q) t + p.q) Theta^{c1,c2}(p + t Omega q; t Omega)."""
    with working_precision(precision):
        kernel = ThetaKernel(Omega, p, q, c1, c2)
        val, rep = kernel(t, eps)
        return +val, rep


def theta(req: ThetaRequest, precision: int | None = None):
    """Theta^{c1,c2}(z, Omega) or, with characteristics, the theta null."""
    with working_precision(precision):
        if req.chars is not None:
            return theta_null(req.Omega, req.chars.p_mp(), req.chars.q_mp(), req.c1, req.c2, req.eps)
        Om = req.Omega
        z = as_vector(req.z)
        g = Om.g
        # z = p + Omega q with real p, q
        y = Om.M.inverse().matvec([mp.im(x) for x in z])
        p = [mp.re(z[i]) - dot([Om.N[i, j] for j in range(g)], y) for i in range(g)]
        val, rep = theta_null(Om, p, y, req.c1, req.c2, req.eps)
        W = Om.matrix()
        pref = e(-(W.bilinear(y, y) / 2 + dot(p, y)))
        return pref * val, rep
