"""Escape-rate Green functions, equilibrium sampling and Lyapunov exponents.

The perturbed map is the regular quadratic endomorphism

    f(z, w) = (alpha z + eps w + beta z w + c z^2, a(w^2 - 1) + c w^2),

whose leading forms (c z^2 + beta z w, (a + c) w^2) vanish only at the origin
when c != 0 and a + c != 0. Escape rates are computed in normalized form: a
point is stored as exp(L) u with max-norm ||u|| = 1, so orbits never overflow.

Write f = H + Lin + K with H the quadratic part. For ||x|| >= R_esc the ratio
||f(x)|| / ||x||^2 stays in [m_H / 2, M_H + m_H / 2], which gives the explicit
tail bound 2^-n B on the telescoped escape-rate series.
"""
from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .base import BaseParam, base_lyapunov, param_value
from .errors import (BudgetExhausted, ConvergenceError, DomainError, GridError, PreimageError)
from .polyroots import aberth, circle_start
from .skew import SkewParams
from .words import SymbolWord

GREEN_BUDGET = 512
BURN_IN = 50
# pixels kept this many steps clear of child cylinders; closer in, the 5-point
# stencil error near the child mass shows up as spurious negative mass
EXCLUSION_MARGIN = 4


@dataclass(frozen=True)
class RegularSkewMap:
    lam: SkewParams
    c: complex
    d: int = 2

    def __post_init__(self):
        c = complex(self.c)
        if self.d != 2:
            raise DomainError("only degree d = 2 is implemented")
        if c == 0:
            raise DomainError("c must be nonzero for a regular map")
        if self.lam.a + c == 0:
            raise DomainError("a + c must be nonzero for a regular map")
        object.__setattr__(self, "c", c)

    @property
    def coeffs(self):
        lam = self.lam
        return lam.a, lam.alpha, lam.beta, lam.epsilon, self.c

    def apply(self, z, w):
        a, al, be, ep, c = self.coeffs
        return al * z + ep * w + be * z * w + c * z * z, a * (w * w - 1) + c * w * w

    def jacobian(self, z, w) -> np.ndarray:
        a, al, be, ep, c = self.coeffs
        return np.array([[al + be * w + 2 * c * z, ep + be * z], [0.0, 2 * (a + c) * w]], dtype=complex)

    def jacobian_det(self, z, w):
        a, al, be, ep, c = self.coeffs
        return (al + be * w + 2 * c * z) * 2 * (a + c) * w

    def critical_fiber(self, w):
        """z-coordinate of the critical curve z = -(alpha + beta w) / (2c)."""
        a, al, be, ep, c = self.coeffs
        return -(al + be * w) / (2 * c)

    @property
    def base_conjugate(self) -> complex:
        """a' with (a + c) w^2 - a affinely conjugate to a'(w^2 - 1)."""
        a, c = self.lam.a, self.c
        return complex(cmath.sqrt(a * (a + c)))

    @property
    def infinity_nu(self) -> complex:
        """nu in the monic form v -> v^2 + nu v of the map on the line at infinity."""
        return self.lam.beta / (self.lam.a + self.c)


class EscapeConstants(NamedTuple):
    m_low: float
    m_high: float
    coeff: float
    radius: float
    tail: float


def escape_constants(f) -> EscapeConstants:
    """Explicit constants (m_H, M_H, ||Lin|| + ||K||, R_esc, B) in the max norm."""
    if isinstance(f, RegularSkewMap):
        a, al, be, ep, c = f.coeffs
        A = abs(a + c)
        # |z| = 1, |w| = t: ||H|| >= max(|c| - |beta| t, |a + c| t^2)
        t = (-abs(be) + math.sqrt(abs(be) ** 2 + 4 * A * abs(c))) / (2 * A)
        m_low = A * min(1.0, t) ** 2
        m_high = max(abs(c) + abs(be), A)
        coeff = abs(al) + abs(ep) + abs(a)
    else:
        av = param_value(f)
        m_low = m_high = abs(av)
        coeff = abs(av)
    radius = 2 * max(1.0, (coeff + 1) / m_low)
    tail = max(abs(math.log(m_low / 2)), abs(math.log(m_high + m_low / 2)))
    return EscapeConstants(m_low, m_high, coeff, radius, tail)


def _step_normalized(f, L, uz, uw):
    """One step of the normalized orbit; returns (L', uz', uw')."""
    s = np.exp(-L)
    if uz is None:
        av = param_value(f)
        vw = av * uw * uw - av * s * s
        m = np.abs(vw)
        vz = None
    else:
        a, al, be, ep, c = f.coeffs
        vz = c * uz * uz + be * uz * uw + s * (al * uz + ep * uw)
        vw = (a + c) * uw * uw - a * s * s
        m = np.maximum(np.abs(vz), np.abs(vw))
    with np.errstate(divide="ignore"):
        nl = 2 * L + np.log(m)
    grow = nl > 0
    scale = np.where(grow, 1.0 / np.where(m > 0, m, 1.0), np.exp(2 * np.where(grow, 0.0, L)))
    Ln = np.where(grow, nl, 0.0)
    uzn = None if vz is None else vz * scale
    return Ln, uzn, vw * scale


def _normalize(z, w):
    if z is None:
        m = np.abs(w)
    else:
        m = np.maximum(np.abs(z), np.abs(w))
    big = m > 1
    L = np.where(big, np.log(np.where(big, m, 1.0)), 0.0)
    sc = np.where(big, 1.0 / np.where(big, m, 1.0), 1.0)
    return L, (None if z is None else z * sc), w * sc


class GreenArray(NamedTuple):
    values: np.ndarray
    verdict: np.ndarray      # 1 escaped and converged, 0 bounded, -1 escaped but tail above tol
    iterations: np.ndarray
    tail_bound: np.ndarray


def green_array(f, z, w=None, tol: float = 1e-9, budget: int = GREEN_BUDGET) -> GreenArray:
    """Vectorized escape rate. For a BaseParam pass the points as ``z``."""
    if not tol > 0:
        raise DomainError("tol must be positive")
    const = escape_constants(f)
    logR = math.log(const.radius)
    if isinstance(f, RegularSkewMap):
        zz = np.atleast_1d(np.asarray(z, dtype=complex)).ravel()
        ww = np.atleast_1d(np.asarray(w, dtype=complex)).ravel()
        shape = np.broadcast(np.asarray(z), np.asarray(w)).shape
        zz, ww = np.broadcast_arrays(zz, ww)
    else:
        param_value(f)
        ww = np.atleast_1d(np.asarray(z, dtype=complex)).ravel()
        shape = np.asarray(z).shape
        zz = None
    n_pts = ww.size
    values = np.zeros(n_pts)
    verdict = np.zeros(n_pts, dtype=int)
    iters = np.full(n_pts, budget)
    tails = np.full(n_pts, np.inf)
    L, uz, uw = _normalize(None if zz is None else zz.copy(), ww.copy())
    idx = np.arange(n_pts)
    esc_at = np.full(n_pts, -1)
    for n in range(budget + 1):
        # L is log||f^n(x)|| (or 0) for the active points
        escaped = L > logR
        esc_at = np.where((esc_at < 0) & escaped, n, esc_at)
        tb = np.where(escaped, const.tail * 2.0 ** (-n), np.inf)
        done = escaped & (tb <= tol / 4)
        if done.any():
            k = idx[done]
            values[k] = L[done] * 2.0 ** (-n)
            verdict[k] = 1
            iters[k] = n
            tails[k] = tb[done]
            keep = ~done
            idx, L, uw, esc_at = idx[keep], L[keep], uw[keep], esc_at[keep]
            if uz is not None:
                uz = uz[keep]
        if idx.size == 0 or n == budget:
            break
        L, uz, uw = _step_normalized(f, L, uz, uw)
    if idx.size:
        late = esc_at >= 0
        k = idx[late]
        values[k] = L[late] * 2.0 ** (-budget)
        verdict[k] = -1
        tails[k] = const.tail * 2.0 ** (-budget)
        tails[idx[~late]] = 0.0
    return GreenArray(values.reshape(shape), verdict.reshape(shape), iters.reshape(shape),
                      tails.reshape(shape))


def base_family_green(a, w, tol: float = 1e-9, budget: int = GREEN_BUDGET) -> GreenArray:
    """G_{q_a}(w) over arrays of parameters a (any a != 0) and points w.

    Same scheme as ``green_array`` with the escape constants of q_a taken per
    entry; used for parameter rasters that leave the |a| > 10 regime.
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    a, w = np.broadcast_arrays(np.asarray(a, dtype=complex), np.asarray(w, dtype=complex))
    shape = a.shape
    a = a.ravel().copy()
    if np.any(a == 0):
        raise DomainError("a must be nonzero")
    m = np.abs(a)
    logR = np.log(2 * np.maximum(1.0, (m + 1) / m))
    tail = np.maximum(np.abs(np.log(m / 2)), np.abs(np.log(1.5 * m)))
    n_pts = a.size
    values = np.zeros(n_pts)
    verdict = np.zeros(n_pts, dtype=int)
    iters = np.full(n_pts, budget)
    tails = np.zeros(n_pts)
    L, _, uw = _normalize(None, w.ravel().copy())
    idx = np.arange(n_pts)
    escaped_once = np.zeros(n_pts, bool)
    for n in range(budget + 1):
        escaped = L > logR[idx]
        escaped_once[idx] |= escaped
        tb = tail[idx] * 2.0 ** (-n)
        done = escaped & (tb <= tol / 4)
        if done.any():
            k = idx[done]
            values[k] = L[done] * 2.0 ** (-n)
            verdict[k] = 1
            iters[k] = n
            tails[k] = tb[done]
            keep = ~done
            idx, L, uw = idx[keep], L[keep], uw[keep]
        if idx.size == 0 or n == budget:
            break
        A = a[idx]
        sc = np.exp(-L)
        v = A * uw * uw - A * sc * sc
        mv = np.abs(v)
        with np.errstate(divide="ignore"):
            nl = 2 * L + np.log(mv)
        grow = nl > 0
        scale = np.where(grow, 1.0 / np.where(mv > 0, mv, 1.0), np.exp(2 * np.where(grow, 0.0, L)))
        L, uw = np.where(grow, nl, 0.0), v * scale
    late = idx[escaped_once[idx]]
    if late.size:
        sel = escaped_once[idx]
        values[late] = L[sel] * 2.0 ** (-budget)
        verdict[late] = -1
        tails[late] = tail[late] * 2.0 ** (-budget)
    return GreenArray(values.reshape(shape), verdict.reshape(shape), iters.reshape(shape),
                      tails.reshape(shape))


def base_family_lyapunov(a, tol: float = 1e-9, budget: int = GREEN_BUDGET) -> np.ndarray:
    """Exponent of q_a for arrays of a: log 2 + G_{q_a}(0), 0 the critical point."""
    return math.log(2) + base_family_green(a, 0j, tol, budget).values


@dataclass(frozen=True)
class GreenEvaluation:
    value: float
    iterations: int
    tail_bound: float
    verdict: str    # "escaped", "bounded" or "exhausted"

    @property
    def escaped(self) -> bool:
        return self.verdict != "bounded"


_VERDICTS = {1: "escaped", 0: "bounded", -1: "exhausted"}


def green(f, point, tol: float = 1e-9, budget: int = GREEN_BUDGET, strict: bool = False) -> GreenEvaluation:
    """G_f at a point: a complex number for q_a, a pair (z, w) for the regular map.

    A SymbolWord is read as the continuation of the coded point x_omega of the
    hyperbolic set, evaluated on its shadowing orbit (see ``green_coded``).
    With ``strict`` an orbit that escaped too late to meet tol raises
    BudgetExhausted instead of returning the "exhausted" verdict.
    """
    if isinstance(point, SymbolWord):
        return green_coded(f, point, budget=budget)
    if isinstance(f, RegularSkewMap):
        z, w = point
        r = green_array(f, z, w, tol, budget)
    else:
        r = green_array(f, point, None, tol, budget)
    v = int(r.verdict)
    out = GreenEvaluation(float(r.values), int(r.iterations), float(r.tail_bound), _VERDICTS[v])
    if strict and v == -1:
        raise BudgetExhausted(f"escape-rate tail {out.tail_bound:.3g} above tol after {budget} steps")
    return out


def green_approximants(f, point, n: int = 40) -> np.ndarray:
    """G_k = 2^-k log+ ||f^k(x)|| for k = 0..n."""
    if isinstance(f, RegularSkewMap):
        z, w = point
        L, uz, uw = _normalize(np.atleast_1d(np.complex128(z)), np.atleast_1d(np.complex128(w)))
    else:
        L, uz, uw = _normalize(None, np.atleast_1d(np.complex128(point)))
    out = np.empty(n + 1)
    for k in range(n + 1):
        out[k] = float(L[0]) * 2.0 ** (-k)
        L, uz, uw = _step_normalized(f, L, uz, uw)
    return out


def approximant_ratio(approx: np.ndarray, skip: int = 2) -> float:
    """Geometric rate of |G_{k+1} - G_k| fitted by least squares on the escaping part."""
    diffs = np.abs(np.diff(approx))
    k = np.arange(diffs.size)
    start = int(np.argmax(approx > 0)) + skip
    use = (k >= start) & (diffs > 1e-13 * max(1.0, abs(approx[-1])))
    if use.sum() < 3:
        raise ConvergenceError("too few escaping approximants to fit a rate")
    slope = np.polyfit(k[use], np.log(diffs[use]), 1)[0]
    return float(math.exp(slope))


# --- the hyperbolic set of the perturbed map ---------------------------------

def _fiber_roots(c, B, C):
    """Roots (near, far) of c z^2 + B z + C = 0, computed without cancellation."""
    disc = np.sqrt(B * B - 4 * c * C)
    sq = np.where(np.abs(B + disc) >= np.abs(B - disc), disc, -disc)
    den = B + sq
    with np.errstate(divide="ignore", invalid="ignore"):
        near = -2 * C / den
        far = -den / (2 * c) if np.all(c != 0) else np.full_like(den, np.inf)
    return near, far


def coded_orbit(lam: SkewParams, c: complex, word: SymbolWord, steps: int, settle: int = 2000):
    """Orbit x_0, ..., x_steps of the continuation of x_omega under the map with parameter c.

    Positions are single steps of f; pair symbol s of the word covers the two
    single steps with base itinerary (s, -s). The orbit is read off a long
    backward pull through inverse branches, whose start error is contracted
    away over ``settle`` extra pair steps. c = 0 gives the unperturbed skew
    product.
    """
    a, al, be, ep = lam.a, lam.alpha, lam.beta, lam.epsilon
    A = a + c
    pairs = (steps + 2) // 2 + settle
    z, w = 0j, 0j
    zs = np.empty(2 * pairs + 1, dtype=complex)
    ws = np.empty(2 * pairs + 1, dtype=complex)
    zs[-1], ws[-1] = z, w
    pos = 2 * pairs
    for k in range(pairs - 1, -1, -1):
        s = word[k]
        for sign in (-s, s):
            w_prev = sign * cmath.sqrt((w + a) / A)
            B = al + be * w_prev
            near, _ = _fiber_roots(c, np.complex128(B), np.complex128(ep * w_prev - z))
            z, w = complex(near), w_prev
            pos -= 1
            zs[pos], ws[pos] = z, w
    return zs[: steps + 1], ws[: steps + 1]


def green_coded(f: RegularSkewMap, word: SymbolWord, budget: int = GREEN_BUDGET,
                residual_tol: float = 1e-6) -> GreenEvaluation:
    """Bounded-orbit verdict for a point of the continued hyperbolic set.

    Plain forward iteration of a repelling point loses a digit per step and
    escapes numerically, so the verdict is taken on the shadowing orbit built
    from the coding. Each step is checked as a genuine orbit step of f.
    """
    zs, ws = coded_orbit(f.lam, f.c, word, budget)
    fz, fw = f.apply(zs[:-1], ws[:-1])
    res = np.max(np.maximum(np.abs(fz - zs[1:]), np.abs(fw - ws[1:])) / (1 + np.abs(zs[1:]) + np.abs(ws[1:])))
    if not res < residual_tol:
        raise ConvergenceError(f"shadowing orbit residual {res:.3g}")
    R = escape_constants(f).radius
    norm = np.maximum(np.abs(zs), np.abs(ws))
    if np.all(norm < R):
        return GreenEvaluation(0.0, budget, 0.0, "bounded")
    n = int(np.argmax(norm >= R))
    ge = green(f, (zs[n], ws[n]), budget=budget)
    return GreenEvaluation(ge.value * 2.0 ** (-n), n + ge.iterations, ge.tail_bound * 2.0 ** (-n), ge.verdict)


# --- equilibrium measure ------------------------------------------------------

def _backward_step(f, z, w, rng, redraws: int = 8):
    a, al, be, ep, c = f.coeffs
    count = w.size
    for _ in range(redraws):
        s = rng.choice((1, -1), size=count)
        wp = s * np.sqrt((w + a) / (a + c))
        B = al + be * wp
        C = ep * wp - z
        near, far = _fiber_roots(c, B, C)
        pick = rng.random(count) < 0.5
        zp = np.where(pick, near, far)
        collide = (B * B - 4 * c * C) == 0
        if not collide.any():
            break
    else:
        raise PreimageError("critical-value collision persisted after re-draws")
    if not (np.all(np.isfinite(zp)) and np.all(np.isfinite(wp))):
        raise PreimageError("non-finite preimage")
    return zp, wp


def equilibrium_samples(f, count: int, seed: int = 0, burn_in: int = BURN_IN) -> np.ndarray:
    """Endpoints of seeded backward random orbits.

    Returns a complex array of shape (count,) for q_a and (count, 2) with
    columns (z, w) for the regular map.
    """
    rng = np.random.default_rng(seed)
    if isinstance(f, RegularSkewMap):
        z = np.zeros(count, dtype=complex)
        w = np.zeros(count, dtype=complex)
        for _ in range(burn_in):
            z, w = _backward_step(f, z, w, rng)
        return np.stack([z, w], axis=1)
    av = param_value(f)
    w = np.zeros(count, dtype=complex)
    for _ in range(burn_in):
        s = rng.choice((1, -1), size=count)
        w = s * np.sqrt(1 + w / av)
    if not np.all(np.isfinite(w)):
        raise PreimageError("non-finite preimage")
    return w


def _chain_birkhoff(f, samples: int, seed: int, chains: int = 64, burn_in: int = BURN_IN):
    """Means of log|horizontal| and log|vertical| Jacobian factors.

    A backward chain read in reverse is a genuine forward orbit, so these
    are Birkhoff averages of forward orbits started at equilibrium samples.
    """
    rng = np.random.default_rng(seed)
    a, al, be, ep, c = f.coeffs
    z = np.zeros(chains, dtype=complex)
    w = np.zeros(chains, dtype=complex)
    for _ in range(burn_in):
        z, w = _backward_step(f, z, w, rng)
    steps = -(-samples // chains)
    h = np.zeros(chains)
    v = np.zeros(chains)
    for _ in range(steps):
        z, w = _backward_step(f, z, w, rng)
        h += np.log(np.abs(al + be * w + 2 * c * z))
        v += np.log(np.abs(2 * (a + c) * w))
    n = steps * chains
    return float(h.sum() / n), float(v.sum() / n)


class LyapunovSplit(NamedTuple):
    L_sum: float
    ell_base: float
    L_horizontal: float


def lyapunov_skew(obj, order: int = 10, seed: int = 0, samples: int = 100_000) -> LyapunovSplit:
    """(L, base exponent, horizontal exponent) for a skew product or the regular map."""
    if isinstance(obj, RegularSkewMap):
        h, v = _chain_birkhoff(obj, samples, seed)
        return LyapunovSplit(h + v, v, h)
    lam = obj
    ell = base_lyapunov(lam.a, "periodic", order)
    rng = np.random.default_rng(seed)
    w = np.zeros(samples, dtype=complex)
    for _ in range(BURN_IN):
        s = rng.choice((1, -1), size=samples)
        w = s * np.sqrt(1 + w / lam.a)
    if lam.beta == 0:
        horiz = math.log(abs(lam.alpha))
    else:
        horiz = float(np.mean(np.log(np.abs(lam.alpha + lam.beta * w))))
    return LyapunovSplit(ell + horiz, ell, horiz)


def lyapunov_routes(f: RegularSkewMap, order: int = 10, seed: int = 0, samples: int = 100_000):
    """(component sum, det Birkhoff) for the regular map.

    The component route uses the periodic-orbit exponent of the conjugate base
    map and a horizontal average from an independent seed.
    """
    ell = base_lyapunov(f.base_conjugate, "periodic", order)
    h, _ = _chain_birkhoff(f, samples, seed + 1)
    total = lyapunov_skew(f, order, seed, samples).L_sum
    return ell + h, total


class InfinityLyapunov(NamedTuple):
    backward: float
    periodic: float


def line_at_infinity_lyapunov(f: RegularSkewMap, order: int = 10, seed: int = 0,
                              samples: int = 100_000, chains: int = 64) -> InfinityLyapunov:
    """Lyapunov exponent of g_oo([z:w]) = [beta z w + c z^2 : (a + c) w^2].

    In the chart u = z/w the map is u -> (c u^2 + beta u)/(a + c), affinely
    conjugate to v -> v^2 + nu v; the exponent is a conjugacy invariant.
    """
    nu = f.infinity_nu
    rng = np.random.default_rng(seed)
    v = np.ones(chains, dtype=complex)
    for _ in range(BURN_IN):
        s = rng.choice((1, -1), size=chains)
        v = (-nu + s * np.sqrt(nu * nu + 4 * v)) / 2
    steps = -(-samples // chains)
    acc = np.zeros(chains)
    for _ in range(steps):
        s = rng.choice((1, -1), size=chains)
        v = (-nu + s * np.sqrt(nu * nu + 4 * v)) / 2
        acc += np.log(np.abs(2 * v + nu))
    backward = float(acc.sum() / (steps * chains))

    def evaluate(x):
        y = x.copy()
        dy = np.ones_like(x)
        for _ in range(order):
            dy = (2 * y + nu) * dy
            y = y * y + nu * y
        return y - x, dy - 1

    roots, _ = aberth(evaluate, circle_start(2 ** order, 1.05), tol=1e-13, maxiter=400)
    mult = np.ones_like(roots)
    y = roots.copy()
    for _ in range(order):
        mult = mult * (2 * y + nu)
        y = y * y + nu * y
    with np.errstate(divide="ignore"):
        lm = np.log(np.abs(mult))
    periodic = float(np.sum(np.maximum(lm, 0.0)) / (order * roots.size))
    return InfinityLyapunov(backward, periodic)


# --- critical slice integrals ------------------------------------------------

class SliceIntegral(NamedTuple):
    value: float
    mass: float
    step: float
    nodes: int


def laplacian_pairing(G: np.ndarray, keep: np.ndarray | None = None):
    """(sum G dd^c G, sum dd^c G) over interior pixels, 5-point stencil.

    The stencil sum is divided by 2 pi so dd^c log|t| has mass 1; h^2
    cancels between the Laplacian and the area element.
    """
    if G.ndim != 2 or min(G.shape) < 3:
        raise GridError("need a 2-D grid of at least 3x3 values")
    lap = G[2:, 1:-1] + G[:-2, 1:-1] + G[1:-1, 2:] + G[1:-1, :-2] - 4 * G[1:-1, 1:-1]
    if keep is not None:
        lap = lap * keep
    return float((G[1:-1, 1:-1] * lap).sum() / (2 * math.pi)), float(lap.sum() / (2 * math.pi))


def _square_grid(center: complex, half: float, n: int):
    if not (n >= 3 and half > 0 and math.isfinite(half)):
        raise GridError("degenerate grid")
    x = np.linspace(-half, half, n)
    X, Y = np.meshgrid(x, x)
    return center + X + 1j * Y, x[1] - x[0]


def slice_integral(G_fn, center: complex, half: float, n: int) -> SliceIntegral:
    """Pair a Green function restricted to a parametrized curve with its Laplacian."""
    T, h = _square_grid(center, half, n)
    G = G_fn(T)
    value, mass = laplacian_pairing(G)
    return SliceIntegral(value, mass, h, T.size)


CRITICAL_COMPONENTS = ("w=0", "critical-curve")


def critical_slice_integral(f: RegularSkewMap, component: str, grid: int = 257,
                            window: float | None = None, depth: int = 8, node_grid: int = 32,
                            tol: float = 1e-10) -> SliceIntegral:
    """Approximate the integral of G against the critical measure on one critical component.

    ``w=0``: the line t -> (t, 0) on a square window of half-width
    3 sqrt|a(a+c)| / |c| with ``grid`` points per side.

    ``critical-curve``: the curve w -> (-(alpha + beta w)/(2c), w). Its measure
    lives on a Cantor set at the scale of the base Julia set, so the curve is
    pulled back along base cylinders: at depth k the node for itinerary
    s_1..s_k is parametrized by the coordinate t = w_k in [-2, 2]^2 and
    G(x_0) = 2^-k G(f^k x_0). Inner nodes drop the pixels around the two child
    cylinders (with EXCLUSION_MARGIN pixels of clearance); leaves keep
    everything.
    """
    a, al, be, ep, c = f.coeffs
    if component == "w=0":
        half = window if window is not None else 3 * math.sqrt(abs(a * (a + c))) / abs(c)

        def G_fn(T):
            return green_array(f, T, np.zeros_like(T), tol).values
        return slice_integral(G_fn, 0j, half, grid)
    if component != "critical-curve":
        raise DomainError(f"unknown critical component {component!r}")
    A = a + c
    half = 2.0 if window is None else window
    T, h = _square_grid(0j, half, node_grid)
    t = T.ravel()

    def gb(s, x):
        return s * np.sqrt((x + a) / A)
    corners = np.array([half + half * 1j, half - half * 1j, -half + half * 1j, -half - half * 1j])
    rex = float(np.max(np.abs(gb(1, corners) - gb(1, 0j))))
    centers = [complex(gb(1, 0j)), complex(gb(-1, 0j))]
    inner = T[1:-1, 1:-1]
    keep_inner = np.ones(inner.shape, bool)
    for cc in centers:
        keep_inner &= np.abs(inner - cc) > rex + EXCLUSION_MARGIN * h
    total = mass = 0.0
    nodes = 0
    for k in range(depth + 1):
        for word in itertools.product((1, -1), repeat=k):
            ws = [t]
            for s in reversed(word):
                ws.append(gb(s, ws[-1]))
            ws = ws[::-1]
            z = f.critical_fiber(ws[0])
            for j in range(k):
                z = c * z * z + (al + be * ws[j]) * z + ep * ws[j]
            G = green_array(f, z, t, tol).values.reshape(T.shape) * 2.0 ** (-k)
            v, m = laplacian_pairing(G, None if k == depth else keep_inner)
            total += v
            mass += m
            nodes += 1
    return SliceIntegral(total, mass, h, nodes * t.size)


# --- the Bedford-Jonsson identity ----------------------------------------------

@dataclass(frozen=True)
class Budgets:
    samples: int = 100_000
    order: int = 10
    grid: int = 257
    depth: int = 8
    node_grid: int = 32

    def doubled(self) -> "Budgets":
        return Budgets(2 * self.samples, self.order + 1, 2 * self.grid - 1, self.depth + 1,
                       2 * self.node_grid)


@dataclass(frozen=True)
class BJReport:
    L_direct: float
    rhs: float
    defect: float
    parts: dict


def bedford_jonsson_check(f: RegularSkewMap, budgets: Budgets = Budgets(), seed: int = 0) -> BJReport:
    """Compare L with log d + ell + (integral of G against the critical measure)."""
    L = lyapunov_skew(f, budgets.order, seed, budgets.samples)
    ell = line_at_infinity_lyapunov(f, budgets.order, seed, budgets.samples)
    I1 = critical_slice_integral(f, "w=0", grid=budgets.grid)
    I2 = critical_slice_integral(f, "critical-curve", depth=budgets.depth, node_grid=budgets.node_grid)
    rhs = math.log(f.d) + ell.periodic + I1.value + I2.value
    parts = {"L_horizontal": L.L_horizontal, "ell_base": L.ell_base, "ell_backward": ell.backward,
             "ell_periodic": ell.periodic, "I_line": I1.value, "I_curve": I2.value,
             "mass_line": I1.mass, "mass_curve": I2.mass}
    return BJReport(L.L_sum, rhs, abs(L.L_sum - rhs), parts)


def product_case_oracle(f: RegularSkewMap, tol: float = 1e-12):
    """Separable values (L, rhs) when beta = eps = 0.

    Then f = (p, q~) is a product with p(z) = alpha z + c z^2 and
    q~(w) = (a + c) w^2 - a, so G = max(G_p(z), G_q(w)). One-variable
    exponents are log 2 + G(critical point), the map at infinity is
    conjugate to v -> v^2, and the slice integrals are G_q(0) and G_p(-alpha/2c).
    """
    a, al, be, ep, c = f.coeffs
    if be != 0 or ep != 0:
        raise DomainError("product oracle needs beta = eps = 0")
    # G_p at the critical point of p by its own escape rate; q~ goes through its
    # conjugate a'(v^2 - 1)
    gp = _green_1d_poly(c, al, -al / (2 * c), tol)
    gq = green(BaseParam(f.base_conjugate), 0j, tol).value
    L_true = (math.log(2) + gp) + (math.log(2) + gq)
    rhs = math.log(2) + math.log(2) + gq + gp
    return L_true, rhs, gp, gq


def _green_1d_poly(c, al, z0, tol, budget: int = 4096):
    """Escape rate of z -> c z^2 + alpha z at z0 (log + ||.|| normalization)."""
    m = abs(c)
    coeff = abs(al)
    R = 2 * max(1.0, (coeff + 1) / m)
    B = max(abs(math.log(m / 2)), abs(math.log(m + m / 2)))
    z = complex(z0)
    L = 0.0
    u = z
    if abs(z) > 1:
        L, u = math.log(abs(z)), z / abs(z)
    for n in range(budget):
        if L > math.log(R) and B * 2.0 ** (-n) <= tol / 4:
            return L * 2.0 ** (-n)
        s = math.exp(-L)
        v = c * u * u + s * al * u
        nl = 2 * L + math.log(abs(v)) if v != 0 else -math.inf
        if nl > 0:
            L, u = nl, v / abs(v)
        else:
            L, u = 0.0, v * math.exp(2 * L)
    return 0.0
