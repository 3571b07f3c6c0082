"""Certified covering of the IFS boxes and the blender inequalities.

The reference boxes are H_j = D_{4/3} union a sector of D_2 of half-angle
pi/3. Each phi_j translates by a vector b_j pointing at angle e_j pi/4 with
e = (1, 3, 7, 5), and H_j is the sector centred on that same direction, so
that phi_j(z) = -z + b_j pulls the far arc of H_j back towards the origin.

All inclusions are checked with Disk arithmetic, so a pass is a proof up to
the outward rounding pad.
"""
from __future__ import annotations

import heapq
import itertools
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .base import BaseRegions, VJ_SYMBOLS, branch_image_disk, param_value
from .disk import Disk
from .errors import CertificationFailure
from .skew import DEFAULT_APERTURE, IFSParams, SkewParams, phi_maps

H_INNER = 4.0 / 3.0
H_OUTER = 2.0
H_HALF_ANGLE = math.pi / 3
H_EXPONENTS = {1: 1, 2: 3, 3: 7, 4: 5}
# largest eta with a ball of radius eta around any point of D_{2-eta}
# inside one H_j: the sector edges stay at least |z| sin(pi/12) away
_S12 = math.sin(math.pi / 12)
H_LEBESGUE_CAP = H_INNER * _S12 / (1 + _S12)


def h_direction(j: int) -> complex:
    return complex(np.exp(1j * math.pi * H_EXPONENTS[j] / 4))


def in_H(j: int, z):
    z = np.asarray(z, dtype=complex)
    r = np.abs(z)
    ang = np.abs(np.angle(z / h_direction(j)))
    out = (r < H_INNER) | ((r < H_OUTER) & (ang < H_HALF_ANGLE))
    return bool(out) if out.ndim == 0 else out


def depth_in_H(j: int, z):
    """Lower bound for the distance from z to the complement of H_j (<= 0 outside)."""
    z = np.asarray(z, dtype=complex)
    r = np.abs(z)
    ang = np.abs(np.angle(z / h_direction(j)))
    d_disk = H_INNER - r
    edge = np.where(ang < H_HALF_ANGLE, r * np.sin(np.clip(H_HALF_ANGLE - ang, 0, math.pi / 2)), -np.inf)
    d_sector = np.minimum(H_OUTER - r, edge)
    return np.maximum(d_disk, d_sector)


def _nearest_in_sector(y: np.ndarray):
    """Nearest point of the closed sector {|z| <= 2, |arg z| <= pi/3} to y."""
    r = np.abs(y)
    ang = np.angle(y)
    inside = np.abs(ang) <= H_HALF_ANGLE
    radial = np.where(r > H_OUTER, y * (H_OUTER / np.where(r > 0, r, 1)), y)
    best = radial.copy()
    bestd = np.where(inside, np.abs(y - radial), np.inf)
    for sgn in (1, -1):
        P = H_OUTER * np.exp(1j * sgn * H_HALF_ANGLE)
        t = np.clip((y * np.conj(P)).real / abs(P) ** 2, 0.0, 1.0)
        cand = t * P
        d = np.abs(y - cand)
        take = (~inside) & (d < bestd)
        best = np.where(take, cand, best)
        bestd = np.where(take, d, bestd)
    bestd = np.where(inside, np.maximum(r - H_OUTER, 0.0), bestd)
    best = np.where(inside, radial, best)
    return best, bestd


def nearest_in_H(j: int, z: np.ndarray):
    """Nearest point of the closure of H_j and its distance."""
    z = np.asarray(z, dtype=complex)
    u = h_direction(j)
    ps, ds = _nearest_in_sector(z / u)
    ps = ps * u
    r = np.abs(z)
    pd = np.where(r > H_INNER, z * (H_INNER / np.where(r > 0, r, 1)), z)
    dd = np.maximum(r - H_INNER, 0.0)
    take = dd < ds
    return np.where(take, pd, ps), np.where(take, dd, ds)


def sup_abs_affine_on_H(j: int, m: complex, b: complex) -> float:
    """Closed-form max of |m z + b| over the closure of H_j.

    Equals |m| times the largest distance from x0 = -b/m to the set: the
    disk part gives |x0| + 4/3 and the sector part is maximised on its arc or
    at its apex.
    """
    x0 = -b / m
    u = h_direction(j)
    y = x0 / u
    cands = [abs(x0) + H_INNER, abs(y)]
    lo, hi = -H_HALF_ANGLE, H_HALF_ANGLE
    opp = math.atan2(y.imag, y.real) + math.pi
    opp = (opp + math.pi) % (2 * math.pi) - math.pi
    for th in (lo, hi, min(max(opp, lo), hi)):
        cands.append(abs(H_OUTER * complex(math.cos(th), math.sin(th)) - y))
    return abs(m) * max(cands)


@dataclass
class Check:
    name: str
    passed: bool
    margin: float
    witness: object = None
    details: dict = field(default_factory=dict)


@dataclass
class CoverCertificate:
    params: IFSParams
    passed: bool
    checks: dict
    sup_upper: dict
    sup_lower: dict
    image_radius: float
    cells: int
    failure: object = None

    @property
    def slack(self) -> float:
        """2 minus the certified image radius (the room left inside D_2)."""
        return H_OUTER - self.image_radius


def _cells_meeting_H(j: int, radius: float):
    hw = radius / math.sqrt(2)
    n = int(math.ceil(H_OUTER / (2 * hw)))
    ticks = (np.arange(-n, n) + 0.5) * 2 * hw
    X, Y = np.meshgrid(ticks, ticks)
    c = (X + 1j * Y).ravel()
    _, d = nearest_in_H(j, c)
    keep = d <= radius
    return c[keep], hw


def _sup_on_H(j: int, m: complex, b: complex, start_radius: float, slack: float,
              gap: float, max_cells: int):
    """Branch and bound for sup |m z + b| over closure(H_j) with disk cells.

    Returns (upper, lower, witness, cells, violated). ``upper`` is a
    certified bound computed from cell disks padded by ``slack``.
    """
    centers, hw = _cells_meeting_H(j, start_radius)
    am = abs(m)
    heap = []
    tick = itertools.count()
    lower, witness = -1.0, None
    count = len(centers)

    def push(cs, h):
        nonlocal lower, witness
        r = h * math.sqrt(2)
        img = np.abs(m * cs + b)
        ups = img + am * r * (1 + 1e-12) + slack
        near, _ = nearest_in_H(j, cs)
        lows = np.abs(m * near + b)
        k = int(np.argmax(lows))
        if lows[k] > lower:
            lower, witness = float(lows[k]), complex(near[k])
        for cc, uu in zip(cs, ups):
            heapq.heappush(heap, (-float(uu), next(tick), complex(cc), h))

    push(centers, hw)
    while heap:
        up, _, cc, h = heap[0]
        up = -up
        if lower >= H_OUTER:
            break
        if up - lower < gap or count > max_cells:
            break
        heapq.heappop(heap)
        h2 = h / 2
        kids = cc + h2 * np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j])
        _, d = nearest_in_H(j, kids)
        kids = kids[d <= h2 * math.sqrt(2)]
        count += len(kids)
        if len(kids):
            push(kids, h2)
    upper = -heap[0][0] if heap else lower
    return upper, lower, witness, count, lower >= H_OUTER


def certify_ifs_covering(h: IFSParams, A: float = 0.0, slack: float = 1e-9,
                         cover_radius: float = 0.05, gap: float = 1e-7,
                         max_cells: int = 400_000, raise_on_fail: bool = False) -> CoverCertificate:
    """Certify the covering properties of the four boxes H_j for the maps phi_j.

    (i) D_2 is covered by the H_j; the closed disk cannot be, since every
    H_j is a subset of the open disk D_2, so the margin reported is the
    angular room of the sector argument on the open disk.
    (ii) closure(D_1) lies in every H_j.
    (iii) closure(phi_j(H_j)) lies in D_2, via a disk cover of H_j pushed
    exactly through the affine phi_j, refined where the bound is loose.
    """
    # (i) every direction is within pi/4 of a sector centre
    net = np.exp(2j * np.pi * np.arange(4096) / 4096)
    ang = np.min([np.abs(np.angle(net / h_direction(j))) for j in H_EXPONENTS], axis=0)
    ang_margin = float(np.min(H_HALF_ANGLE - ang))
    c1 = Check("D2_covered", ang_margin > 0, ang_margin,
               details={"closure_covered": False, "note": "boundary circle |z|=2 lies outside every H_j"})
    c2 = Check("D1_inside", True, H_INNER - 1.0)
    phis = phi_maps(h)
    ups, lows, wits, cells = {}, {}, {}, 0
    failure = None
    for j in (1, 2, 3, 4):
        f = phis[j]
        up, lo, wit, n, violated = _sup_on_H(j, f.m, f.b, cover_radius, slack, gap, max_cells)
        ups[j], lows[j], wits[j] = up, lo, wit
        cells += n
        if failure is None and not up < H_OUTER:
            failure = {"j": j, "point": wit, "image_abs": lo, "certified": violated}
    image_radius = max(ups.values())
    c3 = Check("phi_j_inclusion", image_radius < H_OUTER, H_OUTER - image_radius,
               witness=failure, details={"sup_upper": ups, "sup_lower": lows})
    admissible = h.admissible(A) if A > 0 else abs(abs(h.alpha ** 2 - h.beta ** 2) - 1) < 1e-9 or h.admissible(0.0)
    checks = {c.name: c for c in (c1, c2, c3)}
    passed = all(c.passed for c in checks.values())
    cert = CoverCertificate(h, passed, checks, ups, lows, image_radius, cells, failure)
    cert.checks["phi_j_inclusion"].details["admissible"] = admissible
    if raise_on_fail and not passed:
        raise CertificationFailure("H_covering", failure)
    return cert


@dataclass
class BlenderCertificate:
    params: SkewParams
    rho: float
    R: float
    A: float
    checks: dict
    sample_density: float
    rigor: str
    admissible: bool
    ifs: CoverCertificate = None

    @property
    def passed(self) -> bool:
        return self.admissible and all(c.passed and c.margin > 0 for c in self.checks.values())

    def failing(self) -> list:
        return [name for name, c in self.checks.items() if not (c.passed and c.margin > 0)]

    def to_dict(self) -> dict:
        p = self.params
        return {
            "params": {"a": _cx(p.a), "alpha": _cx(p.alpha), "beta": _cx(p.beta), "epsilon": _cx(p.epsilon)},
            "rho": self.rho, "R": self.R, "A": self.A,
            "sample_density": self.sample_density, "rigor": self.rigor,
            "admissible": self.admissible, "passed": self.passed,
            "checks": {k: {"passed": c.passed, "margin": c.margin, "details": _jsonable(c.details)}
                       for k, c in self.checks.items()},
        }

    def to_json(self) -> str:
        return canonical_json(self.to_dict())


def _cx(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, complex):
        return _cx(x)
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _emit(o, indent: int) -> str:
    pad = " " * (indent + 1)
    if isinstance(o, dict):
        if not o:
            return "{}"
        items = [f"{pad}{json.dumps(str(k), ensure_ascii=False)}: {_emit(o[k], indent + 1)}" for k in sorted(o)]
        return "{\n" + ",\n".join(items) + "\n" + " " * indent + "}"
    if isinstance(o, (list, tuple)):
        if not o:
            return "[]"
        return "[\n" + ",\n".join(pad + _emit(v, indent + 1) for v in o) + "\n" + " " * indent + "]"
    if isinstance(o, bool) or o is None:
        return json.dumps(o)
    if isinstance(o, float):
        return format(o, ".17g") if math.isfinite(o) else "null"
    if isinstance(o, int):
        return str(o)
    return json.dumps(o if isinstance(o, str) else str(o), ensure_ascii=False)


def canonical_json(obj) -> str:
    """Sorted keys, %.17g floats, non-finite floats as null, one-space indent."""
    return _emit(_jsonable(obj), 0) + "\n"


def _cells_of_disk(D: Disk, step: float) -> list:
    """Square cells of side ``step`` (relative to the radius) covering D, as disks."""
    n = max(1, int(math.ceil(1.0 / step)))
    h = D.radius / n
    ticks = (np.arange(-n, n) + 0.5) * h
    out = []
    for x in ticks:
        for y in ticks:
            c = D.center + complex(x, y)
            if abs(c - D.center) <= D.radius + h * math.sqrt(2) / 2:
                out.append(Disk(c, h * math.sqrt(2) / 2 * (1 + 1e-12)))
    return out


def _fiber_disks(lam: SkewParams, W: Disk):
    a, al, be, ep = lam.a, lam.alpha, lam.beta, lam.epsilon
    qw = a * (W * W - 1)
    dq = 2 * a * W
    c1 = (al + be * W) * (al + be * qw)
    c0 = ep * (al * W + qw + be * W * qw)
    d1 = be * (al + be * qw) + (al + be * W) * be * dq
    d0 = ep * (al + dq + be * qw + be * W * dq)
    jac = 4 * a * a * W * qw
    return qw, c1, c0, d1, d0, jac


def certify_blender(lam: SkewParams, rho: float = 100.0, R: float = 10.0,
                    A: float = DEFAULT_APERTURE, grid: float = 0.25, delta: float = 10.0,
                    ifs_slack: float = 1e-9, raise_on_fail: bool = False) -> BlenderCertificate:
    """Check the blender inequalities for F^2 on D_R x (V_+ u V_-).

    ``grid`` is the cell side relative to each V enclosure radius; every cell
    is evaluated as a Disk, so margins are certified lower bounds and shrink
    monotonically as the grid is refined. R is the fiber radius of the
    invariant box.
    """
    a = param_value(lam.a)
    if abs(a) <= delta:
        raise ValueError(f"|a| must exceed the threshold delta = {delta}")
    regions = BaseRegions(a)
    admissible = lam.hat.admissible(A)

    cone_m, inj_m, exp_m, fib_m = math.inf, math.inf, math.inf, math.inf
    rho_new = math.inf
    witness = {}
    for s in (1, -1):
        V = regions.V_disk(s)
        for W in _cells_of_disk(V, grid):
            qw, c1, c0, d1, d0, jac = _fiber_disks(lam, W)
            b_sup = d1.sup_abs * R + d0.sup_abs
            rp = jac.inf_abs / (c1.sup_abs / rho + b_sup)
            if rp / rho - 1 < cone_m:
                cone_m, rho_new = rp / rho - 1, rp
                witness["cone_contraction"] = W.center
            inj = min(c1.inf_abs, jac.inf_abs)
            if inj < inj_m:
                inj_m = inj
                witness["injectivity"] = W.center
            e = c1.inf_abs - (1 + A)
            if e < exp_m:
                exp_m = e
                witness["expansion"] = W.center
            fm = R * (c1.inf_abs - 1) - c0.sup_abs
            if fm < fib_m:
                fib_m = fm
                witness["surjective_cover"] = W.center
    # base part of the covering: closure(U_pm) sits inside D_3 = q^2(V_pm)
    base_m = min(3.0 - regions.U_disk(s).sup_abs for s in (1, -1))
    cover_m = min(fib_m, base_m)

    ifs = certify_ifs_covering(lam.hat, A=A, slack=ifs_slack)
    phis = phi_maps(lam.hat)
    prox_m = math.inf
    prox = {}
    for j in (1, 2, 3, 4):
        s0, s1 = VJ_SYMBOLS[j]
        Vj = regions.Vj_disk(j)
        dev = 0.0
        for W in _cells_of_disk(Vj, grid):
            qw, c1a, c0a, *_ = _fiber_disks(lam, W)
            W2 = a * (qw * qw - 1)
            _, c1b, c0b, *_ = _fiber_disks(lam, W2)
            C = c1b * c1a
            K = c1b * c0a + c0b
            dev = max(dev, (C - phis[j].m).sup_abs * H_OUTER + (K - phis[j].b).sup_abs)
        room = H_OUTER - ifs.sup_upper[j]
        eta = min(room - dev, H_LEBESGUE_CAP)
        # z-range of a sub-graph over V_j with slope <= 1/rho
        spread = 2 * Vj.radius / rho
        m = eta - spread
        prox[j] = {"deviation": dev, "slack": room, "eta": eta, "graph_spread": spread}
        if m < prox_m:
            prox_m = m
            witness["ifs_proximity"] = j

    checks = {
        "cone_contraction": Check("cone_contraction", cone_m > 0, cone_m, witness.get("cone_contraction"),
                                  {"rho_new": rho_new}),
        "injectivity": Check("injectivity", inj_m > 0, inj_m, witness.get("injectivity")),
        "expansion": Check("expansion", exp_m > 0, exp_m, witness.get("expansion"), {"A": A}),
        "surjective_cover": Check("surjective_cover", cover_m > 0, cover_m, witness.get("surjective_cover"),
                                  {"fiber_margin": fib_m, "base_margin": base_m}),
        "ifs_proximity": Check("ifs_proximity", prox_m > 0, prox_m, witness.get("ifs_proximity"), prox),
        "H_covering": Check("H_covering", ifs.passed, ifs.slack, ifs.failure,
                            {"sup_upper": ifs.sup_upper, "sup_lower": ifs.sup_lower}),
    }
    cert = BlenderCertificate(lam, rho, R, A, checks, grid, "exact-disk", admissible, ifs)
    if raise_on_fail and not cert.passed:
        name = cert.failing()[0] if cert.failing() else "admissibility"
        raise CertificationFailure(name, checks[name].witness if name in checks else None)
    return cert
