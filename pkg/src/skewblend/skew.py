"""The blender skew product F(z, w) = (alpha z + eps w + beta z w, q_a(w)).

Over the base boxes V_+ and V_- the second iterate acts on fibers by the
affine map z -> c1(w) z + c0(w). As a -> infinity these maps tend to the
affine pair phi^+ and phi^-, whose inverses l_+ and l_- form the IFS at
infinity.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .base import (BaseParam, fixed_point_neg, pair_branch, param_value, q, two_cycle)
from .errors import DegenerateError, DivisionError, DomainError
from .words import SymbolWord

ZETA = cmath.exp(1j * math.pi / 4)
EPS0 = 1 / (20 * (ZETA - 1))
DEFAULT_APERTURE = 0.01


@dataclass(frozen=True)
class IFSParams:
    """The parameters (alpha, beta, eps) of the IFS at infinity."""

    alpha: complex
    beta: complex
    epsilon: complex

    def __post_init__(self):
        for name in ("alpha", "beta", "epsilon"):
            object.__setattr__(self, name, complex(getattr(self, name)))

    @property
    def mu(self) -> complex:
        return 1 / (self.alpha ** 2 - self.beta ** 2)

    @property
    def nu_plus(self) -> complex:
        return self.mu * self.epsilon * (self.beta + (1 - self.alpha))

    @property
    def nu_minus(self) -> complex:
        return self.mu * self.epsilon * (self.beta - (1 - self.alpha))

    def admissible(self, A: float = DEFAULT_APERTURE) -> bool:
        e = abs(self.epsilon)
        return (1 / 20 < e < 1 / 10 and abs(self.alpha - self.beta) < 1
                and abs(self.alpha) ** 2 - abs(self.beta) ** 2 > 1 + A)


@dataclass(frozen=True)
class SkewParams(IFSParams):
    a: complex = 100.0

    def __init__(self, a, alpha, beta, epsilon):
        object.__setattr__(self, "a", param_value(a))
        object.__setattr__(self, "alpha", complex(alpha))
        object.__setattr__(self, "beta", complex(beta))
        object.__setattr__(self, "epsilon", complex(epsilon))

    @property
    def hat(self) -> IFSParams:
        return IFSParams(self.alpha, self.beta, self.epsilon)

    def replace(self, **kw) -> "SkewParams":
        d = dict(a=self.a, alpha=self.alpha, beta=self.beta, epsilon=self.epsilon)
        d.update(kw)
        return SkewParams(**d)


def lambda_hat(A: float = DEFAULT_APERTURE) -> IFSParams:
    """Reference IFS parameters (zeta(1+A), 2A zeta, eps_0)."""
    return IFSParams(ZETA * (1 + A), 2 * A * ZETA, EPS0)


def lambda_0(A: float = DEFAULT_APERTURE, a: complex = 100.0) -> SkewParams:
    h = lambda_hat(A)
    return SkewParams(a, h.alpha, h.beta, h.epsilon)


def _unpack(lam):
    return lam.a, lam.alpha, lam.beta, lam.epsilon


def skew_apply(lam: SkewParams, z, w):
    a, al, be, ep = _unpack(lam)
    return al * z + ep * w + be * z * w, q(a, w)


def skew_apply2(lam: SkewParams, z, w):
    """Closed-form second iterate."""
    a, al, be, ep = _unpack(lam)
    qw = q(a, w)
    z2 = z * (al * al + al * be * (w + qw) + be * be * w * qw) + ep * (al * w + qw + be * w * qw)
    return z2, q(a, qw)


def fiber2_coeffs(a, al, be, ep, w):
    """(c1, c0) with F^2(z, w) = (c1(w) z + c0(w), q_a^2(w))."""
    qw = q(a, w)
    return (al + be * w) * (al + be * qw), ep * (al * w + qw + be * w * qw)


def fiber2_derivs(a, al, be, ep, w):
    """w-derivatives (c1', c0') of the fiber coefficients."""
    qw = q(a, w)
    dq = 2 * a * w
    d1 = be * (al + be * qw) + (al + be * w) * be * dq
    d0 = ep * (al + dq + be * qw + be * w * dq)
    return d1, d0


def skew_jacobian(lam: SkewParams, z, w) -> np.ndarray:
    a, al, be, ep = _unpack(lam)
    return np.array([[al + be * w, ep + be * z], [0.0, 2 * a * w]], dtype=complex)


@dataclass(frozen=True)
class SaddleData:
    point: tuple
    chi_p: complex
    chi_vert: complex
    is_saddle: bool


def saddle_point(lam: SkewParams) -> SaddleData:
    a, al, be, ep = _unpack(lam)
    wt = fixed_point_neg(a)
    lam_h = al + be * wt
    if abs(lam_h - 1) < 1e-9:
        raise DegenerateError("alpha + beta w~ is too close to 1")
    z = -ep * wt / (lam_h - 1)
    chi_v = 2 * a * wt
    return SaddleData((complex(z), wt), complex(lam_h), complex(chi_v), abs(lam_h) < 1 < abs(chi_v))


@dataclass(frozen=True)
class RepellingCycle:
    point: tuple
    chi_r: complex
    eigs: tuple
    A2: complex
    B2: complex
    orbit: tuple


def repelling_two_cycle(lam: SkewParams) -> RepellingCycle:
    a, al, be, ep = _unpack(lam)
    w0, w1 = two_cycle(a).points
    A2 = (al + be * w0) * (al + be * w1)
    B2 = (al + be * w1) * ep * w0 + ep * w1
    if abs(1 - A2) < 1e-9:
        raise DegenerateError("fiber factor A2 is too close to 1")
    z0 = B2 / (1 - A2)
    z1 = (al + be * w0) * z0 + ep * w0
    vert = 4 * a * a * w0 * w1
    if abs(abs(A2) - abs(vert)) < 1e-9:
        raise DegenerateError("eigenvalue moduli coincide; chi_r is ambiguous")
    chi = A2 if abs(A2) < abs(vert) else vert
    return RepellingCycle((complex(z0), w0), complex(chi), (complex(A2), complex(vert)),
                          complex(A2), complex(B2), ((complex(z0), w0), (complex(z1), w1)))


@dataclass(frozen=True)
class LambdaPoint:
    point: tuple
    bound: float


def _tail_cycle_base(a, tail, rounds: int = 60):
    # base points along the periodic tail, position 0 first
    p = len(tail)
    w = np.zeros(np.broadcast(a).shape, dtype=complex) if np.ndim(a) else 0j
    for _ in range(rounds):
        prev = w
        for k in range(p - 1, -1, -1):
            w = pair_branch(a, tail[k], w)
        if np.all(np.abs(w - prev) < 1e-17):
            break
    pts = [None] * p
    nxt = w
    for k in range(p - 1, -1, -1):
        nxt = pair_branch(a, tail[k], nxt)
        pts[k] = nxt
    return pts


def lambda_point_arrays(a, al, be, ep, word: SymbolWord, return_orbit: bool = False):
    """Vectorized x_omega over broadcast parameter arrays.

    The tail cycle is solved exactly: its base points are fixed points of the
    composed pair branches and its fiber coordinate is the fixed point of
    the composed affine fiber map. The head is then pulled back through the
    inverse fiber maps z = (z' - c0) / c1.
    """
    tail = word.tail
    tw = _tail_cycle_base(a, tail)
    M, K = 1.0, 0.0
    for w in tw:
        c1, c0 = fiber2_coeffs(a, al, be, ep, w)
        M, K = c1 * M, c1 * K + c0
    with np.errstate(divide="ignore", invalid="ignore"):
        z = K / (1 - M)
    w = tw[0]
    head_pts = []
    for s in reversed(word.head):
        w = pair_branch(a, s, w)
        c1, c0 = fiber2_coeffs(a, al, be, ep, w)
        if np.any(np.abs(c1) < 1e-9):
            raise DivisionError("fiber coefficient c1 vanished")
        z = (z - c0) / c1
        head_pts.append((z, w))
    if return_orbit:
        return z, w, head_pts[::-1], tw
    return z, w


def lambda_point(lam: SkewParams, word: SymbolWord, N: int | None = None) -> LambdaPoint:
    """The point x_omega of the hyperbolic set coded by ``word``.

    With N = None the eventually periodic word is evaluated exactly, and the
    bound only accounts for rounding. With an integer N the first N symbols
    are composed from the start point (0, 0), and the bound is the product of
    the fiber contraction factors times the start discrepancy.
    """
    a, al, be, ep = _unpack(lam)
    if N is None:
        z, w = lambda_point_arrays(a, al, be, ep, word)
        n_ops = len(word.head) + len(word.tail)
        bound = 64 * 2.2e-16 * (1 + abs(z)) * n_ops
        return LambdaPoint((complex(z), complex(w)), float(bound))
    if N < 1 or N > 500:
        raise DomainError("truncation N must lie in 1..500")
    z, w = 0j, 0j
    logprod = 0.0
    for k in range(N - 1, -1, -1):
        w = pair_branch(a, word[k], w)
        c1, c0 = fiber2_coeffs(a, al, be, ep, w)
        if abs(c1) < 1e-9:
            raise DivisionError("fiber coefficient c1 vanished")
        z = (z - c0) / c1
        logprod -= math.log(abs(c1))
    # fiber invariant disk radius for admissible parameters is below 2
    bound = 4.0 * math.exp(logprod) + 64 * 2.2e-16 * (1 + abs(z)) * N
    return LambdaPoint((complex(z), complex(w)), float(bound))


# affine maps of the fiber line

@dataclass(frozen=True)
class Affine:
    m: complex
    b: complex

    def __call__(self, z):
        return self.m * z + self.b

    def compose(self, other: "Affine") -> "Affine":
        """self o other."""
        return Affine(self.m * other.m, self.m * other.b + self.b)

    def inverse(self) -> "Affine":
        return Affine(1 / self.m, -self.b / self.m)

    def fixed_point(self) -> complex:
        return self.b / (1 - self.m)


def ifs_maps(h: IFSParams) -> tuple:
    """(l_+, l_-) with l_pm(z) = mu z + nu_pm."""
    d = h.alpha ** 2 - h.beta ** 2
    # the reference IFS at A = 0 sits exactly on |d| = 1 and is accepted
    if abs(d) < 1 - 1e-12:
        raise DegenerateError("|alpha^2 - beta^2| must be at least 1")
    return Affine(h.mu, h.nu_plus), Affine(h.mu, h.nu_minus)


def phi_maps(h: IFSParams) -> dict:
    """phi^+, phi^- and the four compositions phi_1..phi_4."""
    d = h.alpha ** 2 - h.beta ** 2
    pp = Affine(d, -h.epsilon * (h.beta + (1 - h.alpha)))
    pm = Affine(d, -h.epsilon * (h.beta - (1 - h.alpha)))
    return {"+": pp, "-": pm,
            1: pp.compose(pp), 2: pm.compose(pp), 3: pp.compose(pm), 4: pm.compose(pm)}


def h_series(word: SymbolWord, mu):
    """h_omega(mu) = sum omega_n mu^n in closed form."""
    H = len(word.head)
    head = sum(s * mu ** n for n, s in enumerate(word.head)) if H else 0
    p = len(word.tail)
    block = sum(s * mu ** k for k, s in enumerate(word.tail))
    return head + mu ** H * block / (1 - mu ** p)


def ifs_limit_point(h: IFSParams, word: SymbolWord):
    mu = h.mu
    # |mu| = 1 (the A = 0 reference IFS) is allowed as long as the periodic
    # closed form stays finite
    if np.any(np.abs(mu) > 1) or np.any(np.abs(1 - mu ** len(word.tail)) < 1e-12):
        raise DegenerateError("closed form needs |mu| <= 1 and mu^p != 1")
    return h.epsilon * mu * (h.beta / (1 - mu) + (1 - h.alpha) * h_series(word, mu))


def ifs_word_iterate(h: IFSParams, word: SymbolWord, n: int, start: complex = 0j) -> complex:
    """Direct affine iteration l_{w_0} o ... o l_{w_{n-1}}(start)."""
    lp, lm = ifs_maps(h)
    z = start
    for k in range(n - 1, -1, -1):
        z = (lp if word[k] > 0 else lm)(z)
    return z
