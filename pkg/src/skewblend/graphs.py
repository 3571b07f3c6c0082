"""Vertical graphs, the unstable manifold of the saddle, and blender intersections."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .base import BaseRegions, VJ_SYMBOLS, branch_contraction, fixed_point_neg, pair_branch, q
from .certify import H_EXPONENTS, depth_in_H, in_H, nearest_in_H
from .disk import Disk
from .errors import ConvergenceError, CoverGap, DepthExhausted, DomainError
from .skew import SkewParams, fiber2_coeffs, ifs_limit_point, lambda_point, lambda_point_arrays, saddle_point
from .words import SymbolWord

GRAPH_NODES = 257
UNSTABLE_DOMAIN = Disk(-1 + 0j, 0.5)


@dataclass
class VerticalGraph:
    """w -> z over a base disk, stored as Taylor coefficients in s = (w - c)/r.

    Coefficients come from samples on the boundary circle by FFT, the
    holomorphic counterpart of interpolation at Chebyshev nodes.
    """

    domain: Disk
    coeffs: np.ndarray

    @classmethod
    def from_function(cls, fn: Callable, domain: Disk, nodes: int = GRAPH_NODES) -> "VerticalGraph":
        theta = 2 * np.pi * np.arange(nodes) / nodes
        vals = np.asarray(fn(domain.center + domain.radius * np.exp(1j * theta)), dtype=complex)
        return cls(domain, np.fft.fft(vals) / nodes)

    @classmethod
    def constant(cls, z0: complex, domain: Disk) -> "VerticalGraph":
        return cls(domain, np.array([complex(z0)]))

    @classmethod
    def polynomial(cls, coeffs: Sequence[complex], domain: Disk) -> "VerticalGraph":
        """Graph sum coeffs[k] s^k with s = (w - c)/r."""
        return cls(domain, np.array(coeffs, dtype=complex))

    def __call__(self, w):
        s = (np.asarray(w, dtype=complex) - self.domain.center) / self.domain.radius
        out = np.polyval(self.coeffs[::-1], s)
        return complex(out) if np.ndim(out) == 0 else out

    @property
    def sup_bound(self) -> float:
        return float(np.sum(np.abs(self.coeffs)))

    @property
    def lipschitz_bound(self) -> float:
        """Bound for |dz/dw| on the closed domain disk."""
        k = np.arange(len(self.coeffs))
        return float(np.sum(k * np.abs(self.coeffs)) / self.domain.radius)

    def tangent_to_cone(self, rho: float) -> bool:
        return self.lipschitz_bound <= 1.0 / rho

    def derivative(self, w):
        k = np.arange(1, len(self.coeffs))
        d = (k * self.coeffs[1:])[::-1]
        s = (np.asarray(w, dtype=complex) - self.domain.center) / self.domain.radius
        out = np.polyval(d, s) / self.domain.radius if len(d) else np.zeros_like(s)
        return complex(out) if np.ndim(out) == 0 else out


@dataclass
class UnstableGraph:
    graph: VerticalGraph
    iterations: int
    residual: float
    rate: float
    residuals: list = field(repr=False, default_factory=list)


def _graph_transform(lam: SkewParams, g: VerticalGraph, nodes: int) -> VerticalGraph:
    a, al, be, ep = lam.a, lam.alpha, lam.beta, lam.epsilon

    def T(wp):
        w = -np.sqrt(1 + wp / a)
        return (al + be * w) * g(w) + ep * w

    return VerticalGraph.from_function(T, g.domain, nodes)


def unstable_graph(lam: SkewParams, tol: float = 1e-12, max_iter: int = 20000,
                   domain: Disk = UNSTABLE_DOMAIN, nodes: int = GRAPH_NODES,
                   window: int = 200) -> UnstableGraph:
    """Local unstable manifold of the saddle P as a vertical graph.

    Iterates T(g)(w') = (alpha + beta w) g(w) + eps w with w = g_-(w') from
    the constant graph eps/(alpha - beta - 1), the a -> infinity limit. The
    domain D(-1, 1/2) contains U_- and is mapped into U_- by g_-.
    Convergence is geometric with rate about |chi_p|; a ConvergenceError is
    raised when a window of ``window`` iterations fails to shrink the
    residual.
    """
    sp = saddle_point(lam)
    if not abs(sp.chi_p) < 1:
        raise DomainError("saddle multiplier must have modulus below 1")
    z_init = lam.epsilon / (lam.alpha - lam.beta - 1)
    g = VerticalGraph.constant(z_init, domain)
    g = VerticalGraph(domain, np.concatenate([g.coeffs, np.zeros(nodes - 1, complex)]))
    residuals = []
    for it in range(1, max_iter + 1):
        g2 = _graph_transform(lam, g, nodes)
        # coefficient differences bound the sup difference up to the node count
        res = float(np.sum(np.abs(g2.coeffs - g.coeffs)))
        residuals.append(res)
        g = g2
        if res < tol:
            break
        if it > window and not residuals[-1] < residuals[-1 - window]:
            raise ConvergenceError(f"graph transform stalled at residual {res:.3g}")
    else:
        raise ConvergenceError(f"graph transform did not reach {tol:g} in {max_iter} iterations")
    k = min(50, len(residuals) - 1)
    rate = (residuals[-1] / residuals[-1 - k]) ** (1.0 / k) if k > 0 else float("nan")
    return UnstableGraph(g, it, residuals[-1], rate, residuals)


def unstable_value(lam, w, depth: int = 10):
    """Exact evaluation of the unstable graph by backward recursion.

    g(w') = eps w_1 + (alpha + beta w_1) g(w_1) with w_1 = g_-(w'); the
    pulled-back points converge to w~ super-exponentially and the recursion
    is closed with g(w~) = P_z. Works on parameter arrays.
    """
    a, al, be, ep = lam.a, lam.alpha, lam.beta, lam.epsilon
    root = np.sqrt(1 + 4 * a * a)
    wt = (1 - root) / (2 * a)
    wt = np.where(np.abs(wt + 1) < 3 / np.abs(a), wt, (1 + root) / (2 * a))
    pz = -ep * wt / (al + be * wt - 1)
    w = np.asarray(w, dtype=complex)
    coef = np.ones(np.broadcast(w, a).shape, dtype=complex)
    acc = np.zeros_like(coef)
    for _ in range(depth):
        w = -np.sqrt(1 + w / a)
        acc = acc + coef * ep * w
        coef = coef * (al + be * w)
    out = acc + coef * pz
    return complex(out) if np.ndim(out) == 0 else out


# blender intersections

@dataclass
class IntersectionResult:
    point: tuple
    word: SymbolWord
    indices: tuple
    residual: float
    bound: float
    depth: int
    verified: bool


def _range_radius(lam: SkewParams, rho: float) -> float:
    regions = BaseRegions(lam.a)
    r = max(regions.Vj_disk(j).radius for j in VJ_SYMBOLS)
    return 2 * r / rho + 1e-9


def graph_blender_intersection(lam: SkewParams, graph, j0: int, maxdepth: int = 1000,
                               rho: float = 100.0, target: float = 1e-8,
                               lookahead: int = 6) -> IntersectionResult:
    """Point of the hyperbolic set on the vertical graph ``graph`` over V_{j0}.

    Greedy nested images: after each push through F^4 the next box is the
    one containing the image z-range most deeply; ties keep the current box
    and otherwise go to the lowest index. Base points of the coding are computed by
    backward composition (stable), and only the last ``lookahead`` of them
    can still move when the coding grows.
    """
    a, al, be, ep = lam.a, lam.alpha, lam.beta, lam.epsilon
    if j0 not in VJ_SYMBOLS:
        raise DomainError("box index must be 1..4")
    rad = _range_radius(lam, rho)
    idx = [j0]
    S = list(VJ_SYMBOLS[j0])
    Wf, Zf = [], []      # final base points and fiber values
    logprod = 0.0
    evaluate = graph if callable(graph) else None
    for n in range(maxdepth):
        # provisional continuation of the coding: repeat the last box
        ext = S + list(VJ_SYMBOLS[idx[-1]]) * 4
        kf = len(Wf)
        w = 0j
        prov = {}
        for k in range(len(ext) - 1, kf - 1, -1):
            w = complex(pair_branch(a, ext[k], w))
            prov[k] = w
        if kf == 0:
            z = complex(evaluate(prov[0]))
        else:
            c1, c0 = fiber2_coeffs(a, al, be, ep, Wf[-1])
            z = c1 * Zf[-1] + c0
        zs = {}
        for k in range(kf, len(S)):
            zs[k] = z
            c1, c0 = fiber2_coeffs(a, al, be, ep, prov[k])
            z = c1 * z + c0
        # z is now the fiber value after n+1 pushes through F^4
        # forward rounding grows like the fiber expansion
        need = rad + 1e-15 * (1 + abs(z)) * math.exp(logprod)
        depths = {j: float(depth_in_H(j, z)) for j in (1, 2, 3, 4)}
        best = max(depths.values())
        if best <= need:
            raise CoverGap(n + 1, z, need)
        cur = idx[-1]
        if depths[cur] >= best - 1e-12:
            nxt = cur
        else:
            nxt = min(j for j in depths if depths[j] >= best - 1e-12)
        idx.append(nxt)
        S.extend(VJ_SYMBOLS[nxt])
        # freeze base points that no longer depend on the continuation
        new_kf = max(kf, len(S) - 2 - lookahead - 2)
        for k in range(kf, min(new_kf, len(S) - 2)):
            Wf.append(prov[k])
            Zf.append(zs[k])
            logprod += math.log(abs(fiber2_coeffs(a, al, be, ep, prov[k])[0]))
        bound = (4.0 + abs(z)) * math.exp(-logprod) if Wf else math.inf
        if bound < 0.01 * target:
            word = SymbolWord(S, VJ_SYMBOLS[nxt])
            return _finish(lam, graph, word, idx, bound, n + 1, target)
    raise DepthExhausted(f"residual target not reached within {maxdepth} steps")


def _finish(lam, graph, word, idx, bound, depth, target) -> IntersectionResult:
    a, al, be, ep = lam.a, lam.alpha, lam.beta, lam.epsilon
    z, w, head_pts, _ = lambda_point_arrays(a, al, be, ep, word, return_orbit=True)
    z, w = complex(z), complex(w)
    residual = abs(complex(graph(w)) - z)
    # the exact orbit of x must visit the chosen boxes
    verified = residual < target
    for n, j in enumerate(idx):
        k = 2 * n
        zk = complex(head_pts[k][0]) if k < len(head_pts) else None
        if zk is not None and not in_H(j, zk):
            verified = False
            break
    if not verified:
        raise DepthExhausted(f"intersection failed verification (residual {residual:.3g})")
    return IntersectionResult((z, w), word, tuple(idx), residual, bound, depth, verified)


def random_vertical_graph(lam: SkewParams, j: int, rng: np.random.Generator, rho: float = 100.0,
                          margin: float = 0.02) -> VerticalGraph:
    """Random quadratic graph over a disk containing V_j, tangent to C_rho,
    whose z-range sits inside H_j.
    """
    regions = BaseRegions(lam.a)
    V = regions.Vj_disk(j)
    dom = Disk(V.center, V.radius * 2)
    while True:
        # uniform over the area of H_j by rejection from D_2
        z0 = complex(*rng.uniform(-2, 2, size=2))
        if abs(z0) < 2 and depth_in_H(j, z0) > margin:
            break
    slope = rng.uniform(0, 0.5 / rho) * np.exp(2j * np.pi * rng.uniform())
    curv = rng.uniform(0, 0.25 / rho) * np.exp(2j * np.pi * rng.uniform())
    # derivative bound |c1| + 2|c2| over r in the normalized variable
    c1 = slope * dom.radius
    c2 = curv * dom.radius / 2
    return VerticalGraph.polynomial([z0, c1, c2], dom)


def x_in_unstable_residual(lam: SkewParams, word: SymbolWord, depth: int = 10):
    """z(x_omega) minus the unstable graph at w(x_omega); zero exactly on X_omega."""
    a, al, be, ep = lam.a, lam.alpha, lam.beta, lam.epsilon
    z, w = lambda_point_arrays(a, al, be, ep, word)
    if np.any(~(np.abs(np.asarray(w) - UNSTABLE_DOMAIN.center) < UNSTABLE_DOMAIN.radius)):
        raise DomainError("base coordinate leaves the unstable-graph domain")
    out = z - unstable_value(lam, w, depth)
    return complex(out) if np.ndim(out) == 0 else out


def ifs_unstable_residual(h, word: SymbolWord):
    """The a = infinity proxy z_omega - eps/(alpha - beta - 1)."""
    return ifs_limit_point(h, word) - h.epsilon / (h.alpha - h.beta - 1)


@dataclass
class SliceRoots:
    roots: list
    residuals: list
    failures: list


def solve_X_omega(slice_fn: Callable[[complex], SkewParams], word: SymbolWord, seeds,
                  residual=None, tol: float = 1e-8, maxiter: int = 60, h: float = 1e-7) -> SliceRoots:
    """Newton roots in t of residual(slice_fn(t), word), deduplicated.

    The residual is holomorphic in t, so the derivative is a centred complex
    difference along the real direction.
    """
    res = residual or x_in_unstable_residual
    f = lambda t: res(slice_fn(t), word)
    roots, resid, fails = [], [], []
    for t0 in np.atleast_1d(seeds):
        t = complex(t0)
        try:
            for _ in range(maxiter):
                ft = f(t)
                d = (f(t + h) - f(t - h)) / (2 * h)
                if d == 0:
                    raise ConvergenceError("zero derivative")
                step = ft / d
                t -= step
                if abs(step) < 1e-14 * (1 + abs(t)):
                    break
            r = abs(f(t))
            if not r < tol:
                raise ConvergenceError(f"residual {r:.3g} from seed {t0}")
        except Exception as exc:      # per-seed failures are collected
            fails.append((complex(t0), str(exc)))
            continue
        if all(abs(t - s) > 1e-7 * (1 + abs(s)) for s in roots):
            roots.append(t)
            resid.append(r)
    return SliceRoots(roots, resid, fails)


@dataclass
class SweepResult:
    hits: int
    total: int
    results: list
    failures: list


def blender_intersection_sweep(lam: SkewParams, count: int, seed: int = 0, rho: float = 100.0,
                               target: float = 1e-8) -> SweepResult:
    """Random vertical graphs over V_1..V_4 in turn, each pushed to the hyperbolic set.

    A hit is a verified intersection whose residual is below ``target`` both
    from the greedy construction and from re-evaluating the coded point.
    """
    rng = np.random.default_rng(seed)
    results, failures = [], []
    for k in range(count):
        j = 1 + k % 4
        g = random_vertical_graph(lam, j, rng, rho)
        try:
            r = graph_blender_intersection(lam, g, j, rho=rho, target=target)
        except (CoverGap, DepthExhausted) as exc:
            failures.append((k, j, str(exc)))
            continue
        z, w = lambda_point(lam, r.word).point
        if r.verified and r.residual < target and abs(complex(g(w)) - z) < target:
            results.append(r)
        else:
            failures.append((k, j, f"second evaluation residual {abs(complex(g(w)) - z):.3g}"))
    return SweepResult(len(results), count, results, failures)
