"""Trapezoid rules for analytic integrands with fast decay at both ends.

Both rules halve the step until the error estimate is below tolerance.  For
integrands analytic in a strip the error squares with each halving, so with
c_k the change between levels k-1 and k the error of level k is about
c_k^2 / c_{k-1}; the plain change c_k is the fallback.  Function values are
cached on the dyadic grid so every level reuses the previous one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from mpmath import mp, mpf

from .errors import ConvergenceError


def level_error(changes: list):
    """Error estimate for the latest level from the changes between levels."""
    c = changes[-1]
    if len(changes) >= 2 and changes[-2] > 0 and c < changes[-2]:
        return min(c, c * c / changes[-2])
    return c


@dataclass
class TrapezoidResult:
    values: list
    step: object
    nodes: int
    levels: int
    last_change: object
    lo: Fraction = Fraction(0)
    hi: Fraction = Fraction(0)
    history: list = field(default_factory=list)


class NestedTrapezoid:
    """Integrate w_k(x) f(x) over the real line for several weights w_k at once.

    ``f`` is expensive and shared; ``weights`` are cheap.  ``node_tol(x)``
    gives the accuracy the caller asks of ``f`` at the node x, and
    ``negligible(x, fx)`` decides when the walk outwards may stop.
    """

    def __init__(self, f: Callable, weights: Sequence[Callable], tol, h0=Fraction(1, 2),
                 max_level: int = 9, max_extent: int = 40, min_levels: int = 2):
        self.f = f
        self.weights = list(weights)
        self.tol = mpf(tol)
        self.h0 = Fraction(h0)
        self.max_level = max_level
        self.max_extent = max_extent
        self.min_levels = min_levels
        self.cache: dict[Fraction, object] = {}

    def value(self, x: Fraction):
        v = self.cache.get(x)
        if v is None:
            v = self.cache[x] = self.f(mpf(x.numerator) / x.denominator)
        return v

    def _weighted_max(self, x: Fraction, fx):
        xm = mpf(x.numerator) / x.denominator
        return max(abs(w(xm) * fx) for w in self.weights)

    def _walk(self, direction: int, h: Fraction) -> Fraction:
        """Walk from 0 until three consecutive nodes are negligible."""
        quiet = 0
        x = Fraction(0)
        limit = self.tol / 100
        while True:
            x += direction * h
            if abs(x) > self.max_extent:
                raise ConvergenceError("integrand does not decay", last_increment=None)
            if self._weighted_max(x, self.value(x)) < limit:
                quiet += 1
                if quiet >= 3:
                    return x
            else:
                quiet = 0

    def run(self) -> TrapezoidResult:
        h = self.h0
        lo = self._walk(-1, h)
        hi = self._walk(+1, h)
        prev = None
        history = []
        for level in range(self.max_level + 1):
            xs = []
            x = lo
            while x <= hi:
                xs.append(x)
                x += h
            sums = []
            hm = mpf(h.numerator) / h.denominator
            for w in self.weights:
                acc = [w(mpf(x.numerator) / x.denominator) * self.value(x) for x in xs]
                sums.append(hm * mp.fsum(acc))
            if prev is not None:
                change = max(abs(a - b) for a, b in zip(sums, prev))
                history.append(change)
                err = level_error(history)
                if err < self.tol / 2 and level >= self.min_levels:
                    return TrapezoidResult(sums, h, len(self.cache), level + 1, err, lo, hi, history)
            prev = sums
            h /= 2
        raise ConvergenceError("trapezoid levels did not settle", last_increment=history[-1])


def even_trapezoid(f: Callable, tol, h0=Fraction(1, 4), max_level: int = 10,
                   min_levels: int = 2, max_extent: int = 60):
    """Integral of an even analytic f over the real line, i.e. 2 * int_0^oo f.

    Returns (value, nodes, step).
    """
    tol = mpf(tol)
    cache: dict[Fraction, object] = {}

    def val(x: Fraction):
        v = cache.get(x)
        if v is None:
            v = cache[x] = f(mpf(x.numerator) / x.denominator)
        return v

    h = Fraction(h0)
    # walk outward at the coarse step
    quiet = 0
    x = Fraction(0)
    while True:
        x += h
        if x > max_extent:
            raise ConvergenceError("ray integrand does not decay")
        if abs(val(x)) < tol / 100:
            quiet += 1
            if quiet >= 3:
                break
        else:
            quiet = 0
    hi = x
    prev = None
    changes = []
    for level in range(max_level + 1):
        n = int(hi / h)
        hm = mpf(h.numerator) / h.denominator
        s = hm * (val(Fraction(0)) + 2 * mp.fsum(val(k * h) for k in range(1, n + 1)))
        if prev is not None:
            changes.append(abs(s - prev))
            if level_error(changes) < tol / 2 and level >= min_levels:
                return s, len(cache), h
        prev = s
        h /= 2
    raise ConvergenceError("ray quadrature did not settle",
                           last_increment=changes[-1] if changes else None)
