"""Multiplier relations of the saddle and the repelling cycle, and multiplier maps."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ConvergenceError, DegenerateError
from .skew import SkewParams, repelling_two_cycle, saddle_point


def relation_from_multipliers(chi_p: complex, chi_r: complex) -> tuple:
    """(t, theta) with |chi_r| = |chi_p|^t and the leftover argument theta in [0, 1)."""
    ap = abs(chi_p)
    if ap == 0 or abs(ap - 1) < 1e-12:
        raise DegenerateError("|chi_p| must differ from 0 and 1")
    t = math.log(abs(chi_r)) / math.log(ap)
    theta = (np.angle(chi_r) - t * np.angle(chi_p)) / (2 * math.pi)
    theta = theta % 1.0
    if theta > 1 - 1e-12:
        theta = 0.0
    return float(t), float(theta)


def multiplier_relation(lam: SkewParams) -> tuple:
    return relation_from_multipliers(saddle_point(lam).chi_p, repelling_two_cycle(lam).chi_r)


@dataclass(frozen=True)
class IndependenceReport:
    minimum: float
    triple: tuple
    coeff_bound: int


def independence_report(t: float, theta: float, coeff_bound: int, chunk: int = 256) -> IndependenceReport:
    """Exhaustive search for the smallest |p + q t + r theta| with integer
    coefficients bounded by ``coeff_bound``, not all zero.

    For each (q, r) the best p is the rounding of -(q t + r theta). Triples
    are normalised so the first nonzero of (q, r, p) is positive. Ties prefer
    q != 0, then small |q|, |r|, |p|.
    """
    B = int(coeff_bound)
    if B < 1 or B > 10_000:
        raise ValueError("coefficient bound must be in 1..10^4")
    tol = 8 * 2.2e-16 * (1 + B * (abs(t) + abs(theta) + 1))
    r_all = np.arange(-B, B + 1)
    best_key, best = None, None

    def consider(q, r, p, v):
        nonlocal best_key, best
        key = (0.0 if v < tol else v, q == 0, abs(q), abs(r), abs(p))
        if best_key is None or key < best_key:
            best_key, best = key, (int(p), int(q), int(r), float(v))

    for q0 in range(0, B + 1, chunk):
        qs = np.arange(q0, min(q0 + chunk, B + 1))[:, None]
        x = qs * t + r_all[None, :] * theta
        p = np.clip(-np.rint(x), -B, B)
        v = np.abs(p + x)
        # drop the zero triple and the sign-redundant half of q = 0
        if q0 == 0:
            v[0, r_all <= 0] = np.inf
        vmin = v.min()
        if best_key is not None and vmin > best_key[0] + tol and best_key[0] > 0:
            continue
        rows, cols = np.nonzero(v <= max(vmin, 0.0) + tol)
        for i, k in zip(rows[:64], cols[:64]):
            consider(int(qs[i, 0]), int(r_all[k]), int(p[i, k]), float(v[i, k]))
    # q = r = 0 leaves p = +-1
    consider(0, 0, 1, 1.0)
    p, q, r, v = best
    return IndependenceReport(v, (p, q, r), B)


# multiplier maps

def lyndon_words(n: int) -> list:
    """Primitive itineraries of length n over (+1, -1), one per cyclic class."""
    out = []
    for w in itertools.product((1, -1), repeat=n):
        rots = [w[i:] + w[:i] for i in range(n)]
        if w == max(rots) and len(set(rots)) == n:
            out.append(w)
    return out


def cycles_up_to(n: int) -> list:
    return [w for m in range(1, n + 1) for w in lyndon_words(m)]


def _base_cycle(a, word):
    m = len(word)
    w = np.zeros(np.broadcast(a).shape, dtype=complex) if np.ndim(a) else 0j
    for _ in range(60):
        prev = w
        for k in range(m - 1, -1, -1):
            w = word[k] * np.sqrt(1 + w / a)
        if np.all(np.abs(w - prev) < 1e-17):
            break
    pts = [w]
    nxt = w
    for k in range(m - 1, 0, -1):
        nxt = word[k] * np.sqrt(1 + nxt / a)
        pts.append(nxt)
    # pts[0] = w_0, then w_{m-1}, ..., w_1; reorder along the orbit
    return [pts[0]] + pts[1:][::-1]


def cycle_multiplier(lam, word: Sequence[int], c: complex = 0.0):
    """Jacobian determinant of the period-m return map at the periodic point
    over the base cycle with itinerary ``word`` (works on parameter arrays).

    For c = 0 the fiber periodic point comes from the affine composition and
    the determinant is prod(alpha + beta w_k) prod(2 a w_k). For c != 0 the
    point of the perturbed map is found by Newton from the unperturbed one.
    """
    a, al, be, ep = lam.a, lam.alpha, lam.beta, lam.epsilon
    ws = _base_cycle(a, word)
    Amul, B = 1.0, 0.0
    vert = 1.0
    for w in ws:
        Amul, B = (al + be * w) * Amul, (al + be * w) * B + ep * w
        vert = vert * 2 * a * w
    z = B / (1 - Amul)
    if c == 0:
        return Amul * vert
    return _perturbed_cycle_det(lam, complex(z), complex(ws[0]), len(word), c)


def _perturbed_cycle_det(lam, z, w, m, c):
    a, al, be, ep = lam.a, lam.alpha, lam.beta, lam.epsilon
    x = np.array([z, w], dtype=complex)
    for _ in range(60):
        y = x.copy()
        J = np.eye(2, dtype=complex)
        for _ in range(m):
            zz, ww = y
            Df = np.array([[al + be * ww + 2 * c * zz, ep + be * zz], [0, 2 * (a + c) * ww]])
            J = Df @ J
            y = np.array([al * zz + ep * ww + be * zz * ww + c * zz * zz, a * (ww * ww - 1) + c * ww * ww])
        dx = np.linalg.solve(J - np.eye(2), y - x)
        x = x - dx
        if np.max(np.abs(dx)) < 1e-15:
            break
    else:
        raise ConvergenceError("perturbed periodic point did not converge")
    det = 1.0
    y = x
    for _ in range(m):
        zz, ww = y
        det *= (al + be * ww + 2 * c * zz) * 2 * (a + c) * ww
        y = np.array([al * zz + ep * ww + be * zz * ww + c * zz * zz, a * (ww * ww - 1) + c * ww * ww])
    return complex(det)


def multiplier_map(slice_fn: Callable, cycles, t=None, c: complex = 0.0) -> np.ndarray:
    """Coordinates of the multiplier map at slice_fn(t).

    ``slice_fn`` may also be a SkewParams instance. ``cycles`` lists base
    itineraries, or an integer n meaning every primitive cycle of period <= n.
    """
    lam = slice_fn if isinstance(slice_fn, SkewParams) else slice_fn(t)
    if isinstance(cycles, int):
        cycles = cycles_up_to(cycles)
    return np.array([cycle_multiplier(lam, w, c) for w in cycles], dtype=complex)


@dataclass(frozen=True)
class RankReport:
    singular_values: tuple
    rank: int
    ratio: float
    jacobian: np.ndarray


def multiplier_jacobian_rank(lam: SkewParams, n: int = 4, chart: Sequence[str] = ("alpha", "beta", "epsilon"),
                             h: float = 1e-6, c: complex = 0.0, scales: Sequence[float] | None = None,
                             cycles=None, threshold: float = 1e-6, log_coordinates: bool = True) -> RankReport:
    """Numeric rank of the complex Jacobian of the multiplier map in a chart.

    Columns are centred complex differences along each chart direction,
    optionally rescaled by ``scales``. With ``log_coordinates`` each row is
    divided by its multiplier, which amounts to using log-multipliers as
    target coordinates and removes the spread of magnitudes between periods.
    """
    if len(chart) > 3:
        raise ValueError("chart dimension must be at most 3")
    cycles = cycles_up_to(n) if cycles is None else cycles
    base = multiplier_map(lam, cycles, c=c)
    cols = []
    for k, name in enumerate(chart):
        s = 1.0 if scales is None else scales[k]
        v = getattr(lam, name)
        up = multiplier_map(lam.replace(**{name: v + h * s}), cycles, c=c)
        dn = multiplier_map(lam.replace(**{name: v - h * s}), cycles, c=c)
        cols.append((up - dn) / (2 * h))
    J = np.array(cols).T
    if log_coordinates:
        J = J / base[:, None]
    sv = np.linalg.svd(J, compute_uv=False)
    rank = int(np.sum(sv > threshold * sv[0])) if sv[0] > 0 else 0
    ratio = float(sv[-1] / sv[0]) if sv[0] > 0 else 0.0
    return RankReport(tuple(float(x) for x in sv), rank, ratio, J)
