"""Naive and canonical heights of rational points of quadratic maps over Q.

Orbits are computed exactly with Fractions, so cycles are detected by exact
equality. Once numerators pass ``height_cap`` bits the orbit continues on
homogeneous integer coordinates (Z, W, D) held as mpmath floats, where only
log-sizes matter. The last coordinate of the image is L D^2 with L the
coefficient denominator, so the common factor of an image vector only has
primes dividing L D, and those divide L D_0 for the starting denominator D_0.
For each such prime the coordinates are also carried modulo p^k; the common
p-power is read off the residues and divided out of both, which keeps the
float vector equal to the reduced vector up to rounding.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import mpmath
from sympy import factorint

from .errors import DomainError, Inconclusive

HEIGHT_CAP = 4096
# size of the p-adic residues carried for each bad prime; each step uses up
# the common p-power it divides out
PADIC_BITS = 8192
INCREMENT_TOL = 1e-6
# consecutive small increments required before stopping; a short cycle of
# height-0 points would otherwise pass the test before it closes
SETTLE_STEPS = 3


@dataclass(frozen=True)
class RationalPoint:
    coords: tuple

    def __init__(self, coords: Sequence):
        object.__setattr__(self, "coords", tuple(Fraction(x) for x in coords))

    @classmethod
    def of(cls, *xs) -> "RationalPoint":
        return cls(xs)

    @property
    def denominator(self) -> int:
        return math.lcm(*(x.denominator for x in self.coords))

    def integer_vector(self) -> tuple:
        """(p_1, ..., p_k, D) with x_i = p_i / D and D the common denominator."""
        D = self.denominator
        return tuple(int(x * D) for x in self.coords) + (D,)

    def naive_height(self) -> float:
        """log max(|p_i|, D); nonnegative since D >= 1."""
        return _log_int(max(abs(v) for v in self.integer_vector()))

    def max_bits(self) -> int:
        return max(abs(v).bit_length() for v in self.integer_vector())

    def __str__(self) -> str:
        return "(" + ", ".join(f"{x.numerator}/{x.denominator}" for x in self.coords) + ")"


def _log_int(n: int) -> float:
    if n <= 0:
        raise DomainError("log of a nonpositive integer")
    b = n.bit_length()
    if b < 1000:
        return math.log(n)
    shift = b - 64
    return math.log(n >> shift) + shift * math.log(2)


@dataclass(frozen=True)
class RationalSkewMap:
    """f(z, w) = (alpha z + eps w + beta z w + c z^2, a(w^2 - 1) + c w^2) over Q.

    With ``base_only`` the map is w -> a(w^2 - 1) on Q.
    """
    a: Fraction
    alpha: Fraction = Fraction(0)
    beta: Fraction = Fraction(0)
    epsilon: Fraction = Fraction(0)
    c: Fraction = Fraction(0)
    base_only: bool = False

    def __post_init__(self):
        for name in ("a", "alpha", "beta", "epsilon", "c"):
            object.__setattr__(self, name, Fraction(getattr(self, name)))

    @classmethod
    def base(cls, a) -> "RationalSkewMap":
        return cls(Fraction(a), base_only=True)

    @property
    def degree(self) -> int:
        return 2

    @property
    def dim(self) -> int:
        return 1 if self.base_only else 2

    def apply(self, x: RationalPoint) -> RationalPoint:
        if self.base_only:
            (w,) = x.coords
            return RationalPoint((self.a * (w * w - 1),))
        z, w = x.coords
        return RationalPoint((self.alpha * z + self.epsilon * w + self.beta * z * w + self.c * z * z,
                              self.a * (w * w - 1) + self.c * w * w))

    def integer_coefficients(self) -> tuple:
        """(a, alpha, beta, eps, c) times L, and L = lcm of their denominators."""
        coeffs = (self.a, self.alpha, self.beta, self.epsilon, self.c)
        L = math.lcm(*(x.denominator for x in coeffs))
        return tuple(int(x * L) for x in coeffs), L

    def apply_homogeneous(self, v: list, coeffs: tuple | None = None) -> list:
        """Degree-2 map on (Z, W, D) or (W, D) with coefficients cleared to integers.

        Entries may be ints or mpmath floats. An image of a reduced integer
        vector is the numerator-denominator vector of the image point times a
        common factor.
        """
        (a, al, be, ep, c), L = coeffs or self.integer_coefficients()
        if self.base_only:
            W, D = v
            return [a * (W * W - D * D), L * D * D]
        Z, W, D = v
        return [al * Z * D + ep * W * D + be * Z * W + c * Z * Z, a * (W * W - D * D) + c * W * W, L * D * D]


def _valuation(r: int, p: int, cap: int) -> int:
    v = 0
    while v < cap and r % p == 0:
        r //= p
        v += 1
    return v


class _Continuation:
    """Reduced homogeneous orbit: mpmath floats plus residues modulo p^k per bad prime."""

    def __init__(self, f: RationalSkewMap, start: RationalPoint, origin: RationalPoint):
        self.f = f
        coeffs, L = f.integer_coefficients()
        self.coeffs = (coeffs, L)
        self.mp_coeffs = (tuple(mpmath.mpf(c) for c in coeffs), mpmath.mpf(L))
        ints = list(start.integer_vector())
        self.vec = [mpmath.mpf(v) for v in ints]
        self.residues = []
        for p in sorted(factorint(L * origin.denominator)):
            k = max(1, math.ceil(PADIC_BITS / math.log2(p)))
            self.residues.append([p, k, [v % p ** k for v in ints]])

    def step(self) -> float:
        """Advance one step and return log max |reduced coordinate|."""
        f = self.f
        self.vec = f.apply_homogeneous(self.vec, self.mp_coeffs)
        for entry in self.residues:
            p, k, r = entry
            mod = p ** k
            r = [v % mod for v in f.apply_homogeneous(r, self.coeffs)]
            if not any(r):
                raise Inconclusive(f"{p}-adic precision exhausted after the floating switch")
            m = min(_valuation(v, p, k) for v in r if v)
            if m:
                scale = p ** m
                r = [v // scale for v in r]
                k -= m
                self.vec = [v / scale for v in self.vec]
            entry[1], entry[2] = k, r
        return float(mpmath.log(max(abs(v) for v in self.vec)))


@dataclass(frozen=True)
class HeightEstimate:
    estimate: float
    preperiodic: bool
    steps: int
    increment: float
    exact_steps: int


def canonical_height_rational(f: RationalSkewMap, x: RationalPoint, budget: int = 200,
                              height_cap: int = HEIGHT_CAP, tol: float = INCREMENT_TOL) -> HeightEstimate:
    """h^(x) = lim 2^-n h(f^n x), with exact cycle detection.

    Stops when 2^-n |h(f^{n+1} x)/2 - h(f^n x)| < tol on SETTLE_STEPS
    consecutive steps and returns the
    geometric-tail extrapolation 2^-(n+1) (2 h_{n+1} - 2 h_n), which is exact
    once h_{k+1} - 2 h_k has settled to a constant.
    """
    if len(x.coords) != f.dim:
        raise DomainError("point dimension does not match the map")
    seen = {x: 0}
    h_prev = x.naive_height()
    cur = x
    exact_steps = 0
    n = 0
    cont = None
    settled = 0
    while n < budget:
        if cont is None:
            nxt = f.apply(cur)
            n += 1
            if nxt in seen:
                return HeightEstimate(0.0, True, n, 0.0, n)
            seen[nxt] = n
            h_next = nxt.naive_height()
            exact_steps = n
            cur = nxt
            if nxt.max_bits() > height_cap:
                with mpmath.workprec(113):
                    cont = _Continuation(f, nxt, x)
        else:
            with mpmath.workprec(113):
                h_next = cont.step()
            n += 1
        inc = 2.0 ** (-(n - 1)) * abs(h_next / 2 - h_prev)
        settled = settled + 1 if inc < tol else 0
        if settled >= SETTLE_STEPS:
            est = 2.0 ** (-n) * (2 * h_next - 2 * h_prev) if h_next > 0 else 0.0
            est = max(est, 0.0)
            return HeightEstimate(est, False, n, inc, exact_steps)
        h_prev = h_next
    raise Inconclusive(f"no cycle and increment above {tol:g} after {budget} steps")
