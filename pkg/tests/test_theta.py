from __future__ import annotations

import pytest
from mpmath import mp, mpc, mpf

from indefzeta.errors import ValidationError
from indefzeta.mpcore import AdmissibleVector, Characteristics, OmegaPoint, SymMatrix, as_vector, diag, q_form, working_precision
from indefzeta.special import e
from indefzeta.theta import ThetaKernel, ThetaRequest, theta, theta_null

from instances import random_instance

# Kept as strings so they are parsed at the test's precision.
# Brute-force box sums of the defining series at 300 digits, radii 9 and 12
# agreeing to all printed digits.
SPOT_Z = "-0.2494323531737783058586776059825213428613"
NULL_CASES = [
    # (M, N, p, q, c1, c2, t, value)
    ([[2, 0], [0, -6]], None, (0, 0), ("1/5", 0), (-1, 1), (1, 1), 1,
     ("0.38800084487665515572936249019907", 0)),
    ([[2, 0], [0, -6]], None, ("0.3", "0.1"), ("1/5", "0.45"), (-1, 1), (1, 1), "0.3",
     ("-0.063193140391404505619370094460776", "0.33185250147316455396419012516036")),
    ([[2, "0.5"], ["0.5", -6]], [["0.3", "0.1"], ["0.1", "-0.2"]], ("0.3", "0.1"), ("0.2", "0.45"),
     ((-1, "0.1"), 1), (1, (1, "-0.2")), "0.5",
     ("-0.057629288226638336261804227908861", "0.09986680032187023613810363712721")),
]


def _cvec(x):
    return tuple(mpc(*[mpf(y) for y in v]) if isinstance(v, tuple) else mpf(v) for v in x)


def _mat(rows):
    return SymMatrix([[mpf(x) for x in r] for r in rows])


def test_theta_spot_value():
    with working_precision(35):
        M = diag(2, -6)
        Om = OmegaPoint.pure_imaginary(M)
        z = Om.matrix().matvec((mpf(1) / 5, 0))
        req = ThetaRequest(Om, AdmissibleVector((0, 1), M), AdmissibleVector((-1, 1), M), mpf(10) ** -32, z=z)
        val, rep = theta(req)
        assert abs(val - mpf(SPOT_Z)) < mpf(10) ** -30
        assert rep.tail_bound < 1e-32


@pytest.mark.parametrize("case", range(len(NULL_CASES)))
def test_theta_null_brute_force(case):
    Mrows, Nrows, p, q, c1, c2, t, expected = NULL_CASES[case]
    with working_precision(35):
        M = _mat(Mrows)
        Om = OmegaPoint(M, _mat(Nrows)) if Nrows else OmegaPoint.pure_imaginary(M)
        C1, C2 = AdmissibleVector(_cvec(c1), M), AdmissibleVector(_cvec(c2), M)
        val, _ = theta_null(Om, as_vector(p), as_vector(q), C1, C2, mpf(10) ** -32, t=mpf(t))
        assert abs(val - mpc(*expected)) < mpf(10) ** -30


def test_equal_directions_vanish():
    Om, c1, _, p, q = random_instance(4)
    val, rep = theta_null(Om, p, q, c1, c1, mpf(10) ** -25)
    assert val == 0
    z = (mpc(0.1, 0.2), mpc(-0.3, 0.05))
    val, _ = theta(ThetaRequest(Om, c1, c1, mpf(10) ** -25, z=z))
    assert val == 0


def test_zero_characteristics_is_theta_at_zero():
    Om, c1, c2, _, _ = random_instance(6)
    a, _ = theta_null(Om, (0, 0), (0, 0), c1, c2, mpf(10) ** -25)
    b, _ = theta(ThetaRequest(Om, c1, c2, mpf(10) ** -25, z=(0, 0)))
    assert abs(a - b) < mpf(10) ** -24


@pytest.mark.parametrize("seed", range(8))
def test_antisymmetry(seed):
    with working_precision(20):
        Om, c1, c2, p, q = random_instance(seed)
        eps = mpf(10) ** -18
        a, _ = theta_null(Om, p, q, c1, c2, eps)
        b, _ = theta_null(Om, p, q, c2, c1, eps)
        assert abs(a + b) < 2 * eps


@pytest.mark.parametrize("seed", range(6))
def test_z_periodicity(seed):
    with working_precision(20):
        Om, c1, c2, p, q = random_instance(seed)
        eps = mpf(10) ** -18
        W = Om.matrix()
        z = tuple(p[i] + W.matvec(q)[i] for i in range(2))
        base, _ = theta(ThetaRequest(Om, c1, c2, eps, z=z))
        shifted, _ = theta(ThetaRequest(Om, c1, c2, eps, z=(z[0] + 1, z[1] - 2)))
        assert abs(shifted - base) < 4 * eps
        m = (1, -1)
        Wm = W.matvec(m)
        lat, _ = theta(ThetaRequest(Om, c1, c2, eps, z=(z[0] + Wm[0], z[1] + Wm[1])))
        factor = e(-q_form(W, m) - (m[0] * z[0] + m[1] * z[1]))
        assert abs(lat - factor * base) < 4 * eps * (1 + abs(factor))


@pytest.mark.parametrize("seed", range(10))
def test_truncation_self_consistency(seed):
    with working_precision(20):
        Om, c1, c2, p, q = random_instance(seed)
        kernel = ThetaKernel(Om, p, q, c1, c2)
        for t in (mpf("0.4"), mpf(1), mpf(3)):
            val, rep = kernel(t, 1e-12)
            ref, rep2 = kernel(t, 1e-19)
            assert rep2.radius >= rep.radius
            assert abs(val - ref) < rep.error_estimate


def test_pure_imaginary_null_is_imaginary():
    with working_precision(25):
        for seed in range(4):
            Om, c1, c2, p, _ = random_instance(seed, complex_omega=False, complex_c=False)
            for t in (mpf("0.5"), mpf(2)):
                val, _ = theta_null(Om, p, (0, 0), c1, c2, mpf(10) ** -22, t=t)
                assert abs(val + mp.conj(val)) < mpf(10) ** -21
                assert abs(val) > mpf(10) ** -10


def test_request_validation():
    Om, c1, c2, _, _ = random_instance(1)
    with pytest.raises(ValidationError):
        ThetaRequest(Om, c1, c2, mpf(10) ** -10)
    with pytest.raises(ValidationError):
        ThetaRequest(Om, c1, c2, 0, z=(0, 0))
    with pytest.raises(ValidationError):
        ThetaRequest(Om, c1, c2, 1e-10, z=(0, 0), chars=Characteristics((0, 0), (0, 0)))
