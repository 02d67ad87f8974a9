"""Indefinite theta functions, completed indefinite zeta functions in genus 2,
and their values at s = 1 and s = 0 by Kronecker limit formulas."""

from __future__ import annotations

__version__ = "0.1.0"

from .errors import (
    AdmissibilityError,
    BranchError,
    ConvergenceError,
    DegenerateError,
    DomainError,
    IndefZetaError,
    PoleError,
    PrecisionError,
    SignatureError,
    ValidationError,
)
from .mpcore import (
    AdmissibleVector,
    Characteristics,
    OmegaPoint,
    SymMatrix,
    q_form,
    quadratic_roots_split,
    working_precision,
)
from .special import KappaParams, LogPhiTracker, dilog, eE, eEe_transform, kappa_closed, kappa_integral
from .theta import ThetaKernel, ThetaRequest, theta, theta_null
from .zeta import ZetaRequest, functional_equation_transport, zeta_direct, zeta_direct_many
from .klf import I_pm, klf_s0, klf_s0_pure_imaginary, klf_s1, klf_s1_pure_imaginary
from .stark import StarkInstance, sqrt3_conductor5_instance, verify_piece_identity, verify_unit_polynomial, z_prime
