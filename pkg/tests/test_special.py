from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from mpmath import mp, mpc, mpf

from indefzeta.errors import BranchError, DomainError, PoleError
from indefzeta.mpcore import AdmissibleVector, OmegaPoint, SymMatrix, diag, q_form, working_precision
from indefzeta.special import (
    KappaParams,
    LogPhiTracker,
    dilog,
    dilog_e,
    e,
    eE,
    eEe_transform,
    kappa_closed,
    kappa_integral,
    lambda_matrix,
    log_phi,
    rho,
)

from instances import random_instance


def tol(shift: int = 5):
    return mpf(10) ** (-30 + shift)


def eE_oracle(alpha):
    # straight segment 0 -> alpha
    return alpha * mp.quad(lambda u: mp.exp(-mp.pi * (alpha * u) ** 2), [0, 1])


def test_eE_basic_values():
    assert eE(0) == 0
    a = mpc(1, 1)
    assert abs(eE(-a) + eE(a)) < tol()
    # erf(sqrt(pi)) / 2
    assert abs(eE(1) - mpf("0.4939055589075985565538058516664872413407")) < tol()


@settings(max_examples=40)
@given(st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False))
def test_eE_against_quadrature(a):
    a = mpc(a)
    with working_precision(25):
        assert abs(eE(a) - eE_oracle(a)) < mpf(10) ** -20 * (1 + abs(eE(a)))


def test_rho_trivial_cases():
    M = diag(2, -6)
    c1 = AdmissibleVector((0, 1), M)
    c2 = AdmissibleVector((-1, 1), M)
    assert rho(M, c1, c1, (0.3, 0.7)) == 0
    assert rho(M, c1, c2, (0, 0)) == 0


def test_rho_example():
    M = diag(2, -6)
    c1 = AdmissibleVector((0, 1), M)
    c2 = AdmissibleVector((-1, 1), M)
    # arguments c^T M v / sigma are -4 sqrt2 and -2 sqrt3
    oracle = eE_oracle(-4 * mp.sqrt(2)) - eE_oracle(-2 * mp.sqrt(3))
    val = rho(M, c1, c2, (1, 1))
    assert abs(val - oracle) < tol() * abs(oracle)
    assert abs(val - mpf("-1.923679877028256068120157938618291396072e-18")) < mpf(10) ** -38


def dilog_oracle(z):
    return -mp.quad(lambda t: mp.log(1 - z * t) / t, [0, 1])


def test_dilog_values():
    assert dilog(0) == 0
    assert abs(dilog(1) - mp.pi ** 2 / 6) < tol()
    z = e(mpf(1) / 5)
    assert abs(dilog(z) - dilog_oracle(z)) < tol()
    assert abs(dilog(mpc(0.3, 0.4)) - dilog_oracle(mpc(0.3, 0.4))) < tol()


def test_dilog_outside_disc():
    with pytest.raises(DomainError):
        dilog(mpc(1.2, 0))


@settings(max_examples=40)
@given(st.floats(0, 1, exclude_max=True))
def test_dilog_conjugate_symmetry(x):
    z = e(mpf(x))
    assert abs(mp.im(dilog(z) + dilog(mp.conj(z)))) < tol()
    assert abs(dilog_e(mpf(x)) - dilog(z)) < tol()


def test_log_phi_limits():
    tr = LogPhiTracker(0, mpf(2) / 5)
    xi = mpc(0, 10)
    # next correction is of size exp(-20 pi), about 5e-28
    assert abs(log_phi(tr, xi) - mp.log(1 - e(mpf(2) / 5))) < 2 * mp.exp(-20 * mp.pi)
    tr = LogPhiTracker(mpf(1) / 5, 0)
    val = log_phi(tr, xi)
    assert abs(val) < 2 * mp.exp(-4 * mp.pi)
    assert abs(val + e(xi / 5)) < 2 * mp.exp(-8 * mp.pi)


def factorwise_log(p1, p2, path, D=60):
    """Sum of logs of the individual factors, each unwrapped along the path."""
    def factors(xi):
        out = [(1 - e(p1 * xi + p2), 1)]
        for d in range(1, D + 1):
            out.append((1 - e((d + p1) * xi + p2), 1))
            out.append((1 - e((d - p1) * xi - p2), -1))
        return out

    logs = [s * mp.log(f) for f, s in factors(path[0])]
    for xi in path[1:]:
        new = []
        for old, (f, s) in zip(logs, factors(xi)):
            val = s * mp.log(f)
            k = mp.nint((mp.im(old) - mp.im(val)) / (2 * mp.pi))
            new.append(val + 2j * mp.pi * k)
        logs = new
    return mp.fsum(logs)


def test_log_phi_against_factorwise_continuation():
    xi = (3 + 1j * mp.sqrt(3)) / 6 + 1j
    path = [mp.re(xi) + 1j * (10 - (10 - mp.im(xi)) * k / 200) for k in range(201)]
    tr = LogPhiTracker(mpf(1) / 5, 0)
    vals = tr.track(path)
    oracle = factorwise_log(mpf(1) / 5, mpf(0), path)
    assert abs(vals[-1] - oracle) < tol()


def test_log_phi_continuity_vertical_path():
    tr = LogPhiTracker(mpf(3) / 10, mpf(7) / 10)
    with working_precision(20):
        xi0 = mpc(0.37, 0.05)
        path = [xi0 + 1j * mpf(10) * k / 999 for k in range(1000)]
        vals = tr.track(path)
        jumps = [abs(mp.im(b - a)) for a, b in zip(vals, vals[1:])]
        assert max(jumps) < mp.pi


@settings(max_examples=30)
@given(st.fractions(0, 1, max_denominator=30), st.fractions(0, 1, max_denominator=30),
       st.floats(-2, 2), st.floats(0.1, 2))
def test_exp_log_phi_is_product(p1, p2, x, y):
    if p1 == 1 or (p1 == 0 and p2 in (0, 1)):
        return
    tr = LogPhiTracker(p1, p2)
    xi = mpc(x, y)
    try:
        val = tr(xi)
    except BranchError:
        return
    D = tr.terms_needed(mp.im(xi))
    prod = tr.product(xi, D)
    assert abs(mp.exp(val) - prod) < tol() * max(1, abs(prod))


def test_log_phi_domain():
    with pytest.raises(DomainError):
        LogPhiTracker(mpf(6) / 5, 0)
    with pytest.raises(DomainError):
        LogPhiTracker(mpf(1) / 5, 0)(mpc(0.2, -0.1))


# --- kappa ---------------------------------------------------------------


def kappa_setup(seed):
    Om, c1, c2, _, _ = random_instance(seed)
    return Om, c1, c2


def positive_vector(Om):
    M = Om.M
    return (1, 0) if M[0, 0] > 0 else (0, 1)


@pytest.mark.parametrize("seed", range(6))
def test_kappa_closed_matches_integral(seed):
    with working_precision(25):
        Om, c1, _ = kappa_setup(seed)
        params = KappaParams(Om, c1)
        rng = random.Random(seed)
        for _ in range(3):
            v = (mpf(rng.uniform(-2, 2)), mpf(rng.uniform(-2, 2)))
            if not q_form(Om.M, v) > 0.2 * (v[0] ** 2 + v[1] ** 2):
                continue
            assert abs(kappa_closed(params, v) - kappa_integral(params, v)) < mpf(10) ** -20


def test_kappa_closed_at_basis_vector():
    Om = OmegaPoint.pure_imaginary(diag(2, -6))
    c = AdmissibleVector((-1, 1), Om.M)
    params = KappaParams(Om, c)
    v = (1, 0)
    W = Om.matrix()
    L = lambda_matrix(Om, c)
    expected = (-2) / (4j * mp.pi * c.sigma * W[0, 0] / 2 * mp.sqrt(-1j * L[0, 0]))
    assert abs(kappa_closed(params, v) - expected) < tol()
    assert abs(kappa_closed(params, v) - kappa_integral(params, v)) < mpf(10) ** -22


def test_kappa_sign_when_c_is_orthogonal_to_a_basis_vector():
    # c^T M (1, 0) = 0 exactly, so kappa((1, 0)) = 0 carries no sign information
    with working_precision(25):
        M = SymMatrix([[mpf(17) / 10, mpf(17) / 400], [mpf(17) / 400, mpf("-0.848937500")]])
        N = SymMatrix([[mpf(7) / 40, -mpf(1) / 5], [-mpf(1) / 5, -mpf(1) / 20]])
        Om = OmegaPoint(M, N)
        c = AdmissibleVector((-mpf(1) / 32, mpf(5) / 4), M)
        params = KappaParams(Om, c)
        assert dot_zero(c, M)
        for v in ((1, mpf("0.2")), (1, mpf("-0.3")), (mpf("0.8"), mpf("0.1"))):
            assert abs(kappa_closed(params, v) - kappa_integral(params, v)) < mpf(10) ** -20


def dot_zero(c, M):
    return abs(c.c[0] * M[0, 0] + c.c[1] * M[0, 1]) < mpf(10) ** -25


def test_kappa_scaling_lemma():
    """int E(alpha(lam v) t^(1/2)) e(beta(lam v) t) t^(s-1) dt = -sgn(lam)/|lam|^(2s) kappa(v, s)."""
    with working_precision(20):
        Om, c, _ = kappa_setup(3)
        params = KappaParams(Om, c)
        v = positive_vector(Om)
        s = mpf(3) / 4
        base = kappa_integral(params, v, s)
        for lam in (mpf(2), mpf(-1) / 3):
            alpha, beta = params.alpha_beta((lam * v[0], lam * v[1]))
            lhs = mp.quad(lambda t: eE(alpha * mp.sqrt(t)) * e(beta * t) * t ** (s - 1), [0, 1, mp.inf])
            rhs = -mp.sign(lam) / abs(lam) ** (2 * s) * base
            assert abs(lhs - rhs) < mpf(10) ** -15


def test_kappa_difference_vanishes_for_equal_c():
    Om, c, _ = kappa_setup(2)
    v = positive_vector(Om)
    a = KappaParams(Om, c)
    b = KappaParams(Om, AdmissibleVector(c.c, Om.M))
    assert kappa_closed(a, v) - kappa_closed(b, v) == 0


def test_kappa_pole_and_branch_errors():
    Om = OmegaPoint.pure_imaginary(diag(2, -6))
    params = KappaParams(Om, AdmissibleVector((-1, 1), Om.M))
    with pytest.raises(PoleError) as info:
        kappa_closed(params, (mp.sqrt(3), 1))
    # 1 / (2 pi i w11 (r1 - r2)) with w11 = 2i and r1 - r2 = 2 sqrt3
    assert abs(abs(info.value.residue_hint) - 1 / (8 * mp.pi * mp.sqrt(3))) < tol()
    L = params.Lam.matrix()
    a, b, cc = L[0, 0], L[0, 1], L[1, 1]
    root = (-b + mp.sqrt(b * b - a * cc)) / a
    with pytest.raises(BranchError):
        kappa_closed(params, (root, 1))


def test_lambda_matrix_definition_and_positivity():
    Om, c, _ = kappa_setup(5)
    L = lambda_matrix(Om, c)
    Mc = c.Mc()
    W = Om.matrix()
    Q = q_form(Om.M, c.c)
    for i in range(2):
        for j in range(2):
            assert abs(L[i, j] - (W[i, j] - 1j / Q * Mc[i] * Mc[j])) < tol()
    im = L.imag()
    assert im[0, 0] > 0 and im.det() > 0


# --- int E(alpha t^(1/2)) e(beta t) dt -------------------------------------


def eEe_oracle(alpha, beta):
    return mp.quad(lambda t: eE(alpha * mp.sqrt(t)) * e(beta * t), [0, 1, 4, mp.inf])


def test_eEe_examples():
    assert abs(eEe_transform(1, 1j) - 1 / (4 * mp.pi * mp.sqrt(3))) < tol()
    assert abs(eEe_transform(1, 1j) - eEe_oracle(mpf(1), mpc(0, 1))) < tol(8)
    assert abs(eEe_transform(mpf(10) ** -40, 1j)) < mpf(10) ** -40
    # -2 / (4 pi i (-i/2) sqrt3) = -1 / (pi sqrt3)
    assert abs(eEe_transform(2, -0.5j) + 1 / (mp.pi * mp.sqrt(3))) < tol()


def test_eEe_continuation_region():
    # for im(beta) < 0 the defining integral diverges; integrating by parts gives
    # -alpha / (4 pi i beta) int e^{-pi (alpha^2 - 2 i beta) t} t^{-1/2} dt, here with t = u^2
    alpha, beta = mpf(2), mpc(0, -0.5)
    w = alpha ** 2 - 2j * beta
    parts = -alpha / (4j * mp.pi * beta) * mp.quad(lambda u: 2 * mp.exp(-mp.pi * w * u * u), [0, 1, mp.inf])
    assert abs(eEe_transform(alpha, beta) - parts) < tol(8)


def test_eEe_errors():
    with pytest.raises(DomainError):
        eEe_transform(0.1, -1j)
    with pytest.raises(PoleError):
        eEe_transform(1, 0)


@settings(max_examples=12)
@given(st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False),
       st.floats(-1.5, 1.5), st.floats(0.2, 1.5))
def test_eEe_against_quadrature(a, br, bi):
    alpha, beta = mpc(a), mpc(br, bi)
    if not mp.re(alpha ** 2 - 2j * beta) > 0.25:
        return
    with working_precision(20):
        assert abs(eEe_transform(alpha, beta) - eEe_oracle(alpha, beta)) < mpf(10) ** -15
