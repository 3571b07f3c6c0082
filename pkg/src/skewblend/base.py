"""The quadratic base family q_a(w) = a(w^2 - 1), |a| > 10.

For |a| > 10 the two branches g_+ and g_- of q_a^{-1} map the disk D_3
biholomorphically onto U_+ and U_-, tiny neighborhoods of +1 and -1. The
Julia set is a Cantor set coded by itineraries through U_+ and U_-.

Two alphabets appear. Single steps of q_a use the q-alphabet: symbol s means
the point lies in U_s. The second iterate uses the pair alphabet: symbol +
means V_+ = g_+(U_-) and symbol - means V_- = g_-(U_+), so the inverse
branch attached to s is G_s = g_s o g_{-s}.

Membership in U_s is decided by |q_a(w)| < 3, which is ill-conditioned for
points whose image sits on the circle |w| = 3: q_a amplifies the rounding of
w by about 2|a|. ``guarded`` membership tests use the radius GUARD_RADIUS
instead, so a point reported inside is inside with a margin of 1e-3 in the
image, far above that rounding for any |a| used here.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Number
from typing import Sequence

import numpy as np

from .disk import Disk
from .errors import BranchError, ConvergenceError, DegenerateError, DomainError, RootSolverError
from .polyroots import aberth, newton_polish
from .words import SymbolWord

BRANCH_RADIUS = 3.0
# conservative membership radius; see the module notes on D_3
GUARD_RADIUS = 2.999
CLASSIFY_BAND = 1e-9

# F^4 box index -> pair-alphabet symbols of its two F^2 steps
VJ_SYMBOLS = {1: (1, 1), 2: (1, -1), 3: (-1, 1), 4: (-1, -1)}


@dataclass(frozen=True)
class BaseParam:
    a: complex

    def __post_init__(self):
        a = complex(self.a)
        if not abs(a) > 10:
            raise DomainError(f"|a| must exceed 10, got |a| = {abs(a):.6g}")
        object.__setattr__(self, "a", a)


def param_value(a) -> complex:
    """Validate and unwrap a base parameter."""
    if isinstance(a, BaseParam):
        return a.a
    return BaseParam(a).a


def q(a, w):
    """q_a(w) = a(w^2 - 1); works on scalars, arrays and exact rationals."""
    return a * (w * w - 1)


@dataclass(frozen=True)
class Iterate:
    value: object
    escaped: bool
    steps: int


def q_iterate(a, w, n: int, escape: float = 1e150) -> Iterate:
    """Apply q_a n times.

    Exact inputs (int, Fraction) stay exact. For floating inputs an orbit
    exceeding ``escape`` in modulus stops early with ``escaped`` set and an
    infinite value carrying the sign of the real part.
    """
    if n < 0:
        raise DomainError("n must be non-negative")
    if isinstance(a, BaseParam):
        a = a.a
    exact = isinstance(a, (int, Fraction)) and isinstance(w, (int, Fraction))
    for k in range(n):
        w = a * (w * w - 1)
        if not exact and abs(w) > escape:
            sign = 1.0 if complex(w).real >= 0 else -1.0
            return Iterate(complex(sign * math.inf, 0.0), True, k + 1)
    return Iterate(w, False, n)


def _branch(a, s, w):
    return s * np.sqrt(1 + w / a)


def inverse_branch(a, sign, w):
    """g_sign(w) = sign * sqrt(1 + w/a) for |w| < 3.

    1 + w/a stays in D(1, 3/|a|), which never meets the negative axis, so the
    principal square root is the continuous branch equal to 1 at w = 0.
    """
    av = param_value(a)
    s = _sign(sign)
    warr = np.asarray(w, dtype=complex)
    if np.any(~(np.abs(warr) < BRANCH_RADIUS)):
        raise DomainError("inverse branches are defined on |w| < 3 only")
    out = _branch(av, s, warr)
    return complex(out) if out.ndim == 0 else out


def _sign(sign) -> int:
    if sign in (1, "+"):
        return 1
    if sign in (-1, "-"):
        return -1
    raise DomainError(f"sign must be + or -, got {sign!r}")


def pair_branch(a, s, w):
    """G_s = g_s o g_{-s}, the inverse of q_a^2 onto V_s."""
    return _branch(a, s, _branch(a, -s, w))


def branch_contraction(a) -> float:
    """Upper bound for |g_+'| = |g_-'| on D_3."""
    A = abs(param_value(a))
    return 1.0 / (2.0 * A * math.sqrt(1.0 - BRANCH_RADIUS / A))


def fixed_point_neg(a) -> complex:
    """The fixed point of q_a inside U_-, near -1 + 1/(2a)."""
    av = param_value(a)
    root = np.sqrt(1 + 4 * av * av)
    cands = [(1 - root) / (2 * av), (1 + root) / (2 * av)]
    inside = [w for w in cands if abs(w + 1) < 3 / abs(av)]
    if not inside:
        raise BranchError("no fixed point of q_a in D(-1, 3/|a|)")
    w = complex(inside[0])
    for _ in range(3):
        w -= (q(av, w) - w) / (2 * av * w - 1)
    return w


def fixed_point_pos(a) -> complex:
    av = param_value(a)
    root = np.sqrt(1 + 4 * av * av)
    cands = [(1 - root) / (2 * av), (1 + root) / (2 * av)]
    w = complex(min(cands, key=lambda z: abs(z - 1)))
    for _ in range(3):
        w -= (q(av, w) - w) / (2 * av * w - 1)
    return w


def classify(moduli: Sequence[float], band: float = CLASSIFY_BAND) -> str:
    moduli = list(moduli)
    if any(abs(m - 1.0) <= band for m in moduli):
        raise DegenerateError("a multiplier modulus lies within the classification band of 1")
    big = sum(m > 1 for m in moduli)
    if big == len(moduli):
        return "repelling"
    if big == 0:
        return "attracting"
    return "saddle"


@dataclass(frozen=True)
class PeriodicOrbit:
    points: tuple
    period: int
    multipliers: tuple
    classification: str
    word: tuple = field(default=())


def two_cycle(a) -> PeriodicOrbit:
    """The 2-cycle (w_0, w_1) with w_0 in V_- and w_1 in V_+."""
    av = param_value(a)
    x = np.array([-1.0 + 0j, 1.0 + 0j])
    for _ in range(100):
        F = np.array([q(av, x[0]) - x[1], q(av, x[1]) - x[0]])
        J = np.array([[2 * av * x[0], -1.0], [-1.0, 2 * av * x[1]]])
        dx = np.linalg.solve(J, F)
        x = x - dx
        if np.max(np.abs(dx)) < 1e-15:
            break
    else:
        raise ConvergenceError("two-cycle Newton iteration did not converge")
    w0, w1 = complex(x[0]), complex(x[1])
    if abs(w0 - w1) < 1e-8:
        raise ConvergenceError("Newton converged to a fixed point instead of the 2-cycle")
    regions = BaseRegions(av)
    if not (regions.in_V(-1, w0) and regions.in_V(1, w1)):
        raise ConvergenceError("two-cycle Newton left V_- x V_+")
    mult = 4 * av * av * w0 * w1
    return PeriodicOrbit((w0, w1), 2, (mult,), classify([abs(mult)]), word=(-1, 1))


class BaseRegions:
    """Membership predicates and disk enclosures for U_±, V_± and V_1..V_4."""

    def __init__(self, a):
        self.a = param_value(a)
        self.abs_a = abs(self.a)

    def in_U(self, s, w, guarded: bool = False):
        s = _sign(s)
        w = np.asarray(w, dtype=complex)
        radius = GUARD_RADIUS if guarded else BRANCH_RADIUS
        out = (np.abs(q(self.a, w)) < radius) & (s * w.real > 0)
        return bool(out) if out.ndim == 0 else out

    def in_V(self, s, w, guarded: bool = False):
        s = _sign(s)
        w = np.asarray(w, dtype=complex)
        out = np.asarray(self.in_U(s, w, guarded)) & np.asarray(self.in_U(-s, q(self.a, w), guarded))
        return bool(out) if out.ndim == 0 else out

    def in_Vj(self, j: int, w):
        s0, s1 = VJ_SYMBOLS[j]
        w = np.asarray(w, dtype=complex)
        w2 = q(self.a, q(self.a, w))
        out = np.asarray(self.in_V(s0, w)) & np.asarray(self.in_V(s1, w2))
        return bool(out) if out.ndim == 0 else out

    def U_outer(self, s) -> Disk:
        return Disk(complex(_sign(s)), BRANCH_RADIUS / self.abs_a)

    def U_inner(self, s) -> Disk:
        return Disk(complex(_sign(s)), 1.0 / self.abs_a)

    def U_disk(self, s) -> Disk:
        return branch_image_disk(self.a, (_sign(s),))

    def V_disk(self, s) -> Disk:
        s = _sign(s)
        return branch_image_disk(self.a, (s, -s))

    def Vj_disk(self, j: int) -> Disk:
        s0, s1 = VJ_SYMBOLS[j]
        return branch_image_disk(self.a, (s0, -s0, s1, -s1))


def branch_image_disk(a, symbols: Sequence[int], base: Disk = Disk(0j, BRANCH_RADIUS),
                      samples: int = 512) -> Disk:
    """Disk enclosing g_{s_0} o ... o g_{s_{k-1}} applied to the closed disk ``base``.

    The composition h is univalent, so by the maximum principle applied to
    h - h(c) the image lies in D(h(c), max over the boundary of |h - h(c)|).
    The boundary maximum is sampled and padded by the derivative bound times
    half the sample spacing.
    """
    av = complex(a)
    if not base.radius + abs(base.center) <= BRANCH_RADIUS:
        raise DomainError("base disk must lie in the closed branch disk")

    def h(t):
        for s in reversed(symbols):
            t = _branch(av, s, t)
        return t

    c = h(np.asarray(base.center))
    theta = 2 * np.pi * np.arange(samples) / samples
    ring = h(base.center + base.radius * np.exp(1j * theta))
    lip = branch_contraction(av) ** len(symbols)
    r = float(np.max(np.abs(ring - c))) + lip * math.pi * base.radius / samples
    return Disk(complex(c), r * (1 + 1e-12) + 1e-15)


@dataclass(frozen=True)
class CantorPoint:
    value: complex
    bound: float
    contraction: float


def cantor_point(a, word: SymbolWord, N: int = 30) -> CantorPoint:
    """Point of the Julia set coded by ``word`` in the pair alphabet.

    Composes G_{w_0} o ... o G_{w_{N-1}} applied to 0. Every G_s maps D_3
    into itself with Lipschitz constant kappa, so the truncation error is at
    most 6 kappa^N.
    """
    av = param_value(a)
    if N < 1:
        raise DomainError("truncation must be positive")
    w = 0j
    for k in range(N - 1, -1, -1):
        w = complex(pair_branch(av, word[k], w))
    kappa = branch_contraction(av) ** 2
    bound = 2 * BRANCH_RADIUS * kappa ** N + 8e-16 * (1 + abs(w))
    return CantorPoint(w, bound, kappa)


def _all_words(n: int) -> np.ndarray:
    # row i is the q-alphabet itinerary of the i-th point
    return np.array(list(itertools.product((1, -1), repeat=n)), dtype=int).reshape(-1, n)


def _iterate_with_derivative(a, w, n):
    v = np.array(w, dtype=complex)
    dv = np.ones_like(v)
    for _ in range(n):
        dv = 2 * a * v * dv
        v = q(a, v)
    return v, dv


def periodic_points_by_coding(a, n: int):
    """All 2^n solutions of q_a^n(w) = w as (points, itineraries, newton steps).

    Each point is the fixed point of g_{s_0} o ... o g_{s_{n-1}} for its
    itinerary s, reached by iterating that contraction and polished by Newton
    on q_a^n(w) - w.
    """
    av = param_value(a)
    if not 1 <= n <= 12:
        raise DomainError("period must be between 1 and 12")
    words = _all_words(n)
    w = np.zeros(len(words), dtype=complex)
    for _ in range(200):
        prev = w.copy()
        for k in range(n - 1, -1, -1):
            w = words[:, k] * np.sqrt(1 + w / av)
        if np.max(np.abs(w - prev)) < 1e-17:
            break

    def evaluate(x):
        v, dv = _iterate_with_derivative(av, x, n)
        return v - x, dv - 1

    w, step = newton_polish(evaluate, w, steps=2)
    return w, words, step


def _min_rotation(word: tuple) -> tuple:
    return min(word[i:] + word[:i] for i in range(len(word)))


def _primitive_period(word: tuple) -> int:
    n = len(word)
    for p in range(1, n + 1):
        if n % p == 0 and word[:p] * (n // p) == word:
            return p
    return n


def base_periodic_points(a, n: int, tol: float = 1e-8) -> list:
    """Periodic orbits of q_a with exact period dividing n.

    Returns PeriodicOrbit records sorted by (period, itinerary); every one of
    the 2^n roots of q_a^n(w) - w appears in exactly one orbit.
    """
    av = param_value(a)
    w, words, step = periodic_points_by_coding(av, n)
    if np.any(~(step < tol)):
        raise RootSolverError(f"Newton residual {float(np.max(step)):.3g} above {tol}")
    index = {tuple(int(s) for s in row): i for i, row in enumerate(words)}
    seen = set()
    orbits = []
    for row in words:
        key = tuple(int(s) for s in row)
        rep = _min_rotation(key)
        if rep in seen:
            continue
        seen.add(rep)
        p = _primitive_period(rep)
        pts = []
        for k in range(p):
            rot = rep[k:] + rep[:k]
            pts.append(complex(w[index[rot]]))
        mult = complex(np.prod([2 * av * z for z in pts]))
        orbits.append(PeriodicOrbit(tuple(pts), p, (mult,), classify([abs(mult)]), word=rep[:p]))
    orbits.sort(key=lambda o: (o.period, tuple(-s for s in o.word)))
    return orbits


def base_periodic_points_aberth(a, n: int, tol: float = 1e-13) -> np.ndarray:
    """Roots of q_a^n(w) - w by simultaneous iteration on the composed polynomial.

    Independent of the coding route; reliable up to n of about 6 in double
    precision, where neighbouring roots are still well separated.
    """
    av = param_value(a)
    deg = 2 ** n

    def evaluate(x):
        v, dv = _iterate_with_derivative(av, x, n)
        return v - x, dv - 1

    half = deg // 2
    k = np.arange(half)
    ring = (2.0 / abs(av)) * np.exp(2j * np.pi * (k + 0.3) / half)
    x0 = np.concatenate([1 + ring, -1 + ring]) if n > 1 else np.array([1.01, -0.99], dtype=complex)
    roots, _ = aberth(evaluate, x0, tol=tol, maxiter=2000)
    roots, _ = newton_polish(evaluate, roots, steps=2)
    return roots


def backward_orbit_samples(a, count: int, rng: np.random.Generator, burn_in: int = 50,
                           start: complex = 0j) -> np.ndarray:
    """Endpoints of ``count`` independent backward random orbits of q_a."""
    av = param_value(a)
    w = np.full(count, start, dtype=complex)
    for _ in range(burn_in):
        s = rng.choice((1, -1), size=count)
        w = s * np.sqrt(1 + w / av)
    return w


def base_lyapunov(a, method: str = "periodic", order: int = 10, seed: int = 0,
                  samples: int = 10_000, burn_in: int = 50, chains: int = 16) -> float:
    """Lyapunov exponent of the equilibrium measure of q_a.

    ``periodic``: average of log|(q^n)'(p)|/n over all period-n points, which
    equals the mean of log|2 a w| over that invariant set.
    ``birkhoff``: average of log|q'| along seeded backward random orbits.
    """
    av = param_value(a)
    if method == "periodic":
        if order > 12:
            raise DomainError("periodic method supports order <= 12")
        w, _, step = periodic_points_by_coding(av, order)
        if np.any(~(step < 1e-8)):
            raise RootSolverError("periodic point polish failed")
        return float(np.mean(np.log(np.abs(2 * av * w))))
    if method == "birkhoff":
        rng = np.random.default_rng(seed)
        w = backward_orbit_samples(av, chains, rng, burn_in)
        per_chain = -(-samples // chains)
        acc = np.zeros(chains)
        for _ in range(per_chain):
            s = rng.choice((1, -1), size=chains)
            w = s * np.sqrt(1 + w / av)
            acc += np.log(np.abs(2 * av * w))
        return float(acc.sum() / (per_chain * chains))
    raise DomainError(f"unknown method {method!r}")
