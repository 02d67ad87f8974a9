"""Conversions between mpmath numbers and python-flint balls."""

from __future__ import annotations

from contextlib import contextmanager

from flint import acb, arb, ctx
from mpmath import mpc, mpf


@contextmanager
def flint_precision(bits: int):
    old = ctx.prec
    ctx.prec = bits
    try:
        yield
    finally:
        ctx.prec = old


def to_arb(x) -> arb:
    """Conversion of a real mpf (or int) to an arb ball, rounded to the flint precision."""
    if isinstance(x, int):
        return arb(x)
    x = mpf(x) if not isinstance(x, mpf) else x
    sign, man, exp, _ = x._mpf_
    if not man:
        return arb(0)
    return arb((-int(man) if sign else int(man), int(exp)))


def to_acb(z) -> acb:
    if isinstance(z, mpc):
        return acb(to_arb(z.real), to_arb(z.imag))
    return acb(to_arb(z))


def arb_mid_to_mpf(x: arb) -> mpf:
    man, exp = x.mid().man_exp()
    return mpf((int(man), int(exp)))


def from_acb(z: acb) -> mpc:
    return mpc(arb_mid_to_mpf(z.real), arb_mid_to_mpf(z.imag))
