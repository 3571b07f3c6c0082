"""Numeric witnesses for the ten standing assumptions on a blender parameter.

Each item returns a record with a status ("pass", "fail", "not checkable" or
"error") and the numbers behind it. Failures are data, not exceptions.
"""
from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .certify import certify_blender
from .graphs import (graph_blender_intersection, random_vertical_graph, solve_X_omega,
                     unstable_value, x_in_unstable_residual)
from .multipliers import independence_report, relation_from_multipliers
from .skew import (SkewParams, lambda_point, repelling_two_cycle, saddle_point, skew_jacobian)
from .words import SymbolWord


@dataclass
class AssumptionItem:
    item: int
    name: str
    status: str
    witness: dict = field(default_factory=dict)
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.status == "pass"


@dataclass
class AssumptionReport:
    params: dict
    items: list

    def __getitem__(self, i: int) -> AssumptionItem:
        return next(it for it in self.items if it.item == i)

    def passing(self) -> list:
        return [it.item for it in self.items if it.passed]

    def to_dict(self) -> dict:
        return {"params": self.params, "items": [asdict(it) for it in self.items]}


def resonances(eigs, max_degree: int = 3, tol: float = 1e-9) -> list:
    """Multi-indices m with 2 <= |m| <= max_degree and eig_i = prod eig_j^m_j."""
    eigs = [complex(e) for e in eigs]
    k = len(eigs)
    found = []
    for deg in range(2, max_degree + 1):
        for m in itertools.product(range(deg + 1), repeat=k):
            if sum(m) != deg:
                continue
            prod = complex(np.prod([e ** mj for e, mj in zip(eigs, m)]))
            for i, e in enumerate(eigs):
                if abs(e - prod) <= tol * max(1.0, abs(e)):
                    found.append((i, m))
    return found


def _angle(u, v) -> float:
    """Angle between complex lines spanned by u and v in C^2."""
    u = np.asarray(u, complex)
    v = np.asarray(v, complex)
    c = abs(np.vdot(u, v)) / (np.linalg.norm(u) * np.linalg.norm(v))
    return float(math.acos(min(1.0, c)))


def _jac2(lam, z, w) -> np.ndarray:
    z1, w1 = lam.alpha * z + lam.epsilon * w + lam.beta * z * w, lam.a * (w * w - 1)
    return skew_jacobian(lam, z1, w1) @ skew_jacobian(lam, z, w)


def _run(item, name, fn) -> AssumptionItem:
    try:
        status, witness, note = fn()
    except Exception as exc:      # recorded per item
        return AssumptionItem(item, name, "error", {"exception": type(exc).__name__}, str(exc))
    return AssumptionItem(item, name, status, witness, note)


def _perturbed_saddle_fiber(lam: SkewParams, c: complex) -> complex:
    """Fixed point near -1 of the perturbed base (a + c) w^2 - a."""
    a = lam.a
    A = a + c
    r = cmath.sqrt(1 + 4 * A * a)
    w1, w2 = (1 + r) / (2 * A), (1 - r) / (2 * A)
    return w1 if abs(w1 + 1) < abs(w2 + 1) else w2


def unstable_blender_words(lam: SkewParams) -> dict:
    """Codings of the points where W^u_loc(P) meets the hyperbolic set over V_3 and V_4."""
    g = lambda w: unstable_value(lam, w)
    return {j: graph_blender_intersection(lam, g, j).word for j in (3, 4)}


def check_assumptions(lam: SkewParams, d: int = 2, c: complex = 1e-3, graphs: int = 10, seed: int = 0,
                      word: SymbolWord | None = None, steps: int = 10_000) -> AssumptionReport:
    """Witnesses at lam. ``word`` defaults to the coding of the intersection of
    W^u_loc(P) with the hyperbolic set over V_3.

    The residual z(x_omega) - g_u(w(x_omega)) is eps times a function of
    (a, alpha, beta), so X_omega is a cylinder in eps and derivatives and
    slices are taken in alpha.
    """
    if d != 2:
        raise ValueError("only d = 2 is implemented")
    cert_holder = {}
    word_holder = {"w": word}

    def coded_word():
        if word_holder["w"] is None:
            word_holder["w"] = unstable_blender_words(lam)[3]
        return word_holder["w"]

    def cert():
        if "c" not in cert_holder:
            cert_holder["c"] = certify_blender(lam)
        return cert_holder["c"]

    def item1():
        ch = cert().checks
        ok = ch["cone_contraction"].passed and ch["expansion"].passed
        return ("pass" if ok else "fail",
                {"cone_margin": ch["cone_contraction"].margin, "expansion_margin": ch["expansion"].margin},
                "cone field C_rho is mapped into itself and expanded")

    def item2():
        ch = cert().checks
        ok = ch["injectivity"].passed and ch["surjective_cover"].passed
        return ("pass" if ok else "fail",
                {"injectivity_margin": ch["injectivity"].margin, "cover_margin": ch["surjective_cover"].margin},
                "F^2 is injective on each box and its image covers the fiber box")

    def item3():
        s = saddle_point(lam)
        r = repelling_two_cycle(lam)
        ok = s.is_saddle and abs(r.chi_r) > 1
        return ("pass" if ok else "fail",
                {"chi_p": abs(s.chi_p), "chi_vertical": abs(s.chi_vert), "chi_r": abs(r.chi_r)},
                "|chi_p| < 1 < |vertical eigenvalue| at P; |chi_r| > 1 at the 2-cycle")

    def item4():
        ch = cert().checks
        rng = np.random.default_rng(seed)
        hits = 0
        for k in range(graphs):
            j = 1 + k % 4
            try:
                res = graph_blender_intersection(lam, random_vertical_graph(lam, j, rng), j)
                hits += bool(res.verified)
            except Exception:
                pass
        ok = ch["ifs_proximity"].passed and ch["H_covering"].passed and hits == graphs
        return ("pass" if ok else "fail",
                {"ifs_proximity": ch["ifs_proximity"].passed, "H_covering": ch["H_covering"].passed,
                 "graphs_hit": hits, "graphs": graphs},
                "covering property plus sampled vertical graphs meeting the hyperbolic set")

    def item5():
        h = 1e-6
        w = coded_word()
        f = lambda t: x_in_unstable_residual(lam.replace(alpha=t), w)
        deriv = (f(lam.alpha + h) - f(lam.alpha - h)) / (2 * h)
        ok = abs(deriv) > 1e-8
        return ("pass" if ok else "fail",
                {"word_length": len(w.head), "residual": abs(f(lam.alpha)), "d_residual_d_alpha": abs(deriv)},
                "the coded point crosses W^u_loc(P) with nonzero speed in alpha")

    def item6():
        r = repelling_two_cycle(lam)
        e1, e2 = r.eigs
        res = resonances((e1, e2))
        ok = abs(e1 - e2) > 1e-9 * max(1, abs(e1)) and not res
        return ("pass" if ok else "fail",
                {"eig_fiber": abs(e1), "eig_base": abs(e2), "resonances": [list(m) for _, m in res]},
                "distinct eigenvalues of DF^2 at r, no resonance up to total degree 3")

    def item7():
        from .green import RegularSkewMap, escape_constants, _fiber_roots
        f = RegularSkewMap(lam, c, d)
        wt = _perturbed_saddle_fiber(lam, c)
        zc = complex(f.critical_fiber(wt))
        tangent = (-lam.beta / (2 * f.c), 1.0)
        ang = _angle(tangent, (1.0, 0.0))
        B = lam.alpha + lam.beta * wt
        P = complex(_fiber_roots(f.c, np.complex128(B - 1), np.complex128(lam.epsilon * wt))[0])
        chi = 2 * f.c * P + B
        R = escape_constants(f).radius
        z = zc
        escaped_at = landed_at = None
        koenigs = []
        orbit = [z]
        for n in range(1, steps + 1):
            z = f.c * z * z + B * z + lam.epsilon * wt
            dist = abs(z - P)
            if abs(z) > R:
                escaped_at = n
                break
            if dist == 0.0:
                landed_at = n
                break
            if dist < 1e-6:
                # linear regime of the attracting fixed point: (z_n - P) / chi^n
                # tends to a constant, which is nonzero unless the orbit lands on P
                koenigs.append(abs((z - P) / chi ** n))
                if dist < 1e-10:
                    break
            orbit.append(z)
        if escaped_at is not None:
            non_pre, how = True, "escapes"
        elif landed_at is not None:
            non_pre, how = False, "lands on the saddle"
        elif len(koenigs) >= 2:
            spread = abs(koenigs[-1] - koenigs[0]) / koenigs[-1]
            non_pre, how = koenigs[-1] > 0 and spread < 1e-3, "attracted, Koenigs coordinate nonzero"
        else:
            pts = np.array(orbit)
            pairs = cKDTree(np.column_stack([pts.real, pts.imag])).query_pairs(1e-9)
            non_pre, how = not pairs, "bounded recurrent orbit without repeats"
        ok = ang > 1e-9 and non_pre and abs(chi) < 1
        return ("pass" if ok else "fail",
                {"w_saddle": [wt.real, wt.imag], "z_critical": [zc.real, zc.imag], "angle": ang,
                 "saddle_multiplier": abs(chi), "escaped_at": escaped_at,
                 "koenigs": koenigs[-1] if koenigs else None, "orbit": how},
                "critical curve meets the stable fiber of the saddle transversally at a point of infinite orbit")

    def item8():
        s = saddle_point(lam)
        zt, wt = s.point
        best = None
        # base points in U_- near w~ that return to w~ after 2k steps via U_+
        for k in range(1, 4):
            for tail in itertools.product((1, -1), repeat=2 * k - 1):
                syms = (-1,) + tail
                w = wt
                for sv in reversed(syms):
                    w = sv * cmath.sqrt(1 + w / lam.a)
                if abs(w - wt) < 1e-12 or abs(w + 1) > 0.5:
                    continue
                z = complex(unstable_value(lam, w))
                ww = w
                for _ in range(len(syms)):
                    z = lam.alpha * z + lam.epsilon * ww + lam.beta * z * ww
                    ww = lam.a * (ww * ww - 1)
                dist = abs(z - zt)
                if abs(ww - wt) < 1e-8 and (best is None or dist < best[0]):
                    best = (dist, len(syms), w)
        ok = best is not None and best[0] < 1.0
        wit = {} if best is None else {"distance": best[0], "steps": best[1], "w_start": [best[2].real, best[2].imag]}
        return ("pass" if ok else "fail", wit,
                "a forward image of W^u_loc(P) returns to the stable fiber of P near P")

    def item9():
        return ("not checkable", {},
                "exceptional set disjoint from the small Julia set: generic, not machine-checked")

    def item10():
        sub = {}
        w = coded_word()
        lp = lambda_point(lam, w)
        sub["i_coded_point"] = lp.bound < 1e-10
        roots = solve_X_omega(lambda t: lam.replace(alpha=t), w, [lam.alpha])
        sub["ii_X_omega_root"] = bool(roots.roots)
        # strong unstable direction at the history with past all +, pushed to r
        r = repelling_two_cycle(lam)
        v = np.array([0.0, 1.0], dtype=complex)
        pts = [lambda_point(lam, SymbolWord((1,) * n, (-1,))).point for n in range(1, 26)]
        for p in reversed(pts):
            v = _jac2(lam, *p) @ v
            v /= np.linalg.norm(v)
        rp = lambda_point(lam, SymbolWord.parse("(-)*")).point
        _, vecs = np.linalg.eig(_jac2(lam, *rp))
        ang = min(_angle(v, vecs[:, 0]), _angle(v, vecs[:, 1]))
        sub["iii_tangent_angle"] = ang > 1e-3
        t, th = relation_from_multipliers(saddle_point(lam).chi_p, r.chi_r)
        ind = independence_report(t, th, 100)
        sub["iv_independence"] = ind.minimum > 1e-6
        ok = all(sub.values())
        return ("pass" if ok else "fail",
                {**sub, "tangent_angle": ang, "independence_minimum": ind.minimum,
                 "independence_triple": list(ind.triple), "X_omega_roots": len(roots.roots),
                 "X_omega_root_offset": min((abs(t - lam.alpha) for t in roots.roots), default=None)},
                "coded point, X_omega root, generic strong unstable image at r, multiplier independence")

    fns = [(1, "cone_field", item1), (2, "injective_cover", item2), (3, "saddle_and_cycle", item3),
           (4, "blender", item4), (5, "non_persistent_intersection", item5), (6, "non_resonance", item6),
           (7, "critical_curve_transversality", item7), (8, "homoclinic", item8),
           (9, "exceptional_set", item9), (10, "composite_genericity", item10)]
    items = [_run(i, n, fn) for i, n, fn in fns]
    params = {"a": [lam.a.real, lam.a.imag], "alpha": [lam.alpha.real, lam.alpha.imag],
              "beta": [lam.beta.real, lam.beta.imag], "epsilon": [lam.epsilon.real, lam.epsilon.imag],
              "c": [complex(c).real, complex(c).imag], "d": d}
    return AssumptionReport(params, items)
