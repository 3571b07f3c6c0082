"""Job configuration, run reports, command dispatch and the regression pin store.

Each command maps to one library operation; this module only validates
parameters, converts JSON values and writes artifacts. Complex numbers in
configs are numbers, [re, im] pairs or strings such as "0.7+0.7j".
"""
from __future__ import annotations

import cmath
import json
import math
import os
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import ConfigError, OracleMismatch
from .raster import _atomic_write, code_version

EXIT_OK, EXIT_USAGE, EXIT_FAILED = 0, 1, 2
WORKERS_ENV = "SKEWBLEND_WORKERS"
PIN_STORE_ENV = "SKEWBLEND_PIN_STORE"

_LAMBDA = {"a": 100.0, "A": 0.01}

# per-command parameters and their defaults; None means "derived from the others"
COMMANDS = {
    "certify-blender": dict(_LAMBDA, alpha=None, beta=None, epsilon=None, rho=100.0, R=10.0, grid=0.25),
    "ifs": dict(A=0.0, alpha=None, beta=None, epsilon=None, word="(+)*", cover_A=None),
    "periodic": dict(_LAMBDA, alpha=None, beta=None, epsilon=None, n=4),
    "lyapunov": dict(_LAMBDA, alpha=None, beta=None, epsilon=None, kind="base", c=1e-3,
                     order=10, samples=100_000, grid=257, depth=8, node_grid=32),
    "green": dict(_LAMBDA, alpha=None, beta=None, epsilon=None, c=1e-3, point=[0.1, 0.1], word=None,
                  tol=1e-9, budget=512),
    "height": dict(a="2", alpha="0", beta="0", epsilon="0", c="0", base_only=True, point=["0"],
                   budget=200, height_cap=4096, tol=1e-6),
    "raster": dict(family="base", anchor=None, directions=None, window=[-1.6, 1.6, -1.6, 1.6],
                   resolution=[256, 256], fn="lyapunov", budgets={}, density=True, word=None,
                   A=0.01, a=100.0, alpha=None, beta=None, epsilon=None),
    "misiurewicz": dict(relation=None, n_max=8, window=[-1.6, 1.6, -1.6, 1.6], full=False, density=True,
                        resolution=[256, 256]),
    "assumptions": dict(_LAMBDA, alpha=None, beta=None, epsilon=None, c=1e-3, graphs=10, word=None,
                        steps=10_000),
    "report": dict(_LAMBDA, alpha=None, beta=None, epsilon=None, graphs=100),
}
TOP_KEYS = ("command", "params", "seed", "out")


def parse_complex(v) -> complex:
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ConfigError(f"complex pair must have two entries, got {v!r}")
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, str):
        try:
            return complex(v.replace(" ", "").replace("i", "j"))
        except ValueError:
            raise ConfigError(f"cannot read {v!r} as a complex number") from None
    if isinstance(v, (int, float, complex)):
        return complex(v)
    raise ConfigError(f"cannot read {v!r} as a complex number")


def cx(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


@dataclass
class JobConfig:
    command: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    out: str = "out"

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}; expected one of {sorted(COMMANDS)}")
        unknown = set(self.params) - set(COMMANDS[self.command])
        if unknown:
            raise ConfigError(f"unknown parameter(s) {sorted(unknown)} for {self.command}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ConfigError("seed must be an integer")

    @classmethod
    def from_dict(cls, d: dict) -> "JobConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(d) - set(TOP_KEYS)
        if unknown:
            raise ConfigError(f"unknown config key(s) {sorted(unknown)}")
        if "command" not in d:
            raise ConfigError("config needs a 'command'")
        return cls(d["command"], dict(d.get("params", {})), d.get("seed", 0), d.get("out", "out"))

    def to_dict(self) -> dict:
        return {"command": self.command, "params": self.params, "seed": self.seed, "out": self.out}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "JobConfig":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from None
        return cls.from_dict(d)

    def resolved(self) -> dict:
        p = dict(COMMANDS[self.command])
        p.update(self.params)
        return p


@dataclass
class RunReport:
    command: str
    inputs: dict
    results: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    version: str = field(default_factory=code_version)
    artifacts: list = field(default_factory=list)
    exit_code: int = EXIT_OK
    message: str = ""

    def result(self, name: str, value, bound=None, note: str = "") -> None:
        """Record a result together with its tolerance or bound."""
        entry = {"value": _jsonable(value), "bound": _jsonable(bound)}
        if note:
            entry["note"] = note
        self.results[name] = entry

    def to_dict(self, timings: bool = False) -> dict:
        d = {"command": self.command, "inputs": self.inputs, "results": self.results,
             "warnings": self.warnings, "version": self.version, "exit_code": self.exit_code,
             "message": self.message, "artifacts": self.artifacts}
        if timings:
            d["timings"] = self.timings
        return d


def _jsonable(x):
    if isinstance(x, (complex, np.complexfloating)):
        return cx(x)
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=1) + "\n"


def _lam(p):
    from .skew import SkewParams, lambda_hat
    h = lambda_hat(float(p.get("A", 0.01)))
    vals = {k: (getattr(h, k) if p.get(k) is None else parse_complex(p[k])) for k in ("alpha", "beta", "epsilon")}
    return SkewParams(parse_complex(p["a"]), vals["alpha"], vals["beta"], vals["epsilon"])


def _word(s):
    from .words import SymbolWord
    return SymbolWord.parse(s)


# --- commands ---------------------------------------------------------------------

def _cmd_certify(p, rep, cfg, workers):
    from .certify import certify_blender
    lam = _lam(p)
    cert = certify_blender(lam, rho=float(p["rho"]), R=float(p["R"]), A=float(p["A"]), grid=float(p["grid"]))
    path = os.path.join(cfg.out, "certificate.json")
    _atomic_write(path, (cert.to_json() + "\n").encode("utf-8"))
    rep.artifacts.append(path)
    for k, c in cert.checks.items():
        rep.result(f"margin.{k}", c.margin, 0.0, "certified lower bound; passes when > 0")
    rep.result("admissible", cert.admissible)
    rep.result("passed", cert.passed)
    if not cert.passed:
        failing = cert.failing() + ([] if cert.admissible else ["admissible"])
        rep.exit_code = EXIT_FAILED
        rep.message = "certification failed: " + ", ".join(failing)


def _cmd_ifs(p, rep, cfg, workers):
    from .certify import certify_ifs_covering
    from .skew import IFSParams, ifs_limit_point, lambda_hat, phi_maps
    h0 = lambda_hat(float(p["A"]))
    h = IFSParams(*((getattr(h0, k) if p.get(k) is None else parse_complex(p[k]))
                    for k in ("alpha", "beta", "epsilon")))
    cert = certify_ifs_covering(h, A=float(p["A"] if p["cover_A"] is None else p["cover_A"]))
    phis = phi_maps(h)
    for j in (1, 2, 3, 4):
        rep.result(f"phi_{j}", {"m": phis[j].m, "b": phis[j].b}, 1e-15, "z -> m z + b")
        rep.result(f"phi_{j}.fixed_point", phis[j].fixed_point(), 1e-15)
    rep.result("limit_point", ifs_limit_point(h, _word(p["word"])), 1e-14, f"word {p['word']}")
    rep.result("image_radius", cert.image_radius, 0.0, "certified upper bound of |phi_j(H_j)|")
    rep.result("sup_lower", cert.sup_lower, 0.0, "attained values below the certified bound")
    for k, c in cert.checks.items():
        rep.result(f"margin.{k}", c.margin, 0.0)
    rep.result("passed", cert.passed)
    if not cert.passed:
        rep.exit_code = EXIT_FAILED
        rep.message = "certification failed: " + ", ".join(k for k, c in cert.checks.items() if not c.passed)


def _cmd_periodic(p, rep, cfg, workers):
    from .base import base_periodic_points
    from .skew import repelling_two_cycle, saddle_point
    lam = _lam(p)
    orbits = base_periodic_points(lam.a, int(p["n"]))
    rep.result("base_orbits", [{"period": o.period, "points": [cx(z) for z in o.points],
                                "multiplier": o.multipliers[0], "type": o.classification} for o in orbits],
               1e-8, "Newton step bound on the points")
    s = saddle_point(lam)
    r = repelling_two_cycle(lam)
    rep.result("saddle.point", s.point, 1e-12)
    rep.result("saddle.chi_p", s.chi_p, 1e-12)
    rep.result("saddle.chi_vertical", s.chi_vert, 1e-12)
    rep.result("two_cycle.point", r.point, 1e-12)
    rep.result("two_cycle.chi_r", r.chi_r, 1e-12)
    rep.result("two_cycle.eigenvalues", r.eigs, 1e-12)


def _cmd_lyapunov(p, rep, cfg, workers):
    from .base import base_lyapunov
    from .green import Budgets, RegularSkewMap, bedford_jonsson_check, lyapunov_skew
    lam = _lam(p)
    kind = p["kind"]
    if kind == "base":
        per = base_lyapunov(lam.a, "periodic", int(p["order"]))
        bir = base_lyapunov(lam.a, "birkhoff", seed=cfg.seed, samples=int(p["samples"]))
        rep.result("periodic", per, abs(per - bir), "bound: distance to the Birkhoff estimate")
        rep.result("birkhoff", bir, abs(per - bir))
    elif kind == "skew":
        f = RegularSkewMap(lam, parse_complex(p["c"]))
        L = lyapunov_skew(f, int(p["order"]), cfg.seed, int(p["samples"]))
        rep.result("L_sum", L.L_sum, None, "Birkhoff estimate of the Jacobian-determinant average")
        rep.result("L_horizontal", L.L_horizontal, None)
        rep.result("ell_base", L.ell_base, None)
    elif kind == "bedford-jonsson":
        f = RegularSkewMap(lam, parse_complex(p["c"]))
        b = Budgets(int(p["samples"]), int(p["order"]), int(p["grid"]), int(p["depth"]), int(p["node_grid"]))
        bj = bedford_jonsson_check(f, b, cfg.seed)
        rep.result("L_direct", bj.L_direct, bj.defect)
        rep.result("rhs", bj.rhs, bj.defect, "log 2 + ell + integral of G against the critical measure")
        rep.result("defect", bj.defect, 5e-2, "acceptance bound")
        rep.result("parts", bj.parts)
    else:
        raise ConfigError(f"unknown lyapunov kind {kind!r}")


def _cmd_green(p, rep, cfg, workers):
    from .green import RegularSkewMap, green
    f = RegularSkewMap(_lam(p), parse_complex(p["c"]))
    point = _word(p["word"]) if p.get("word") else tuple(parse_complex(v) for v in p["point"])
    g = green(f, point, float(p["tol"]), int(p["budget"]))
    rep.result("G", g.value, g.tail_bound, f"verdict {g.verdict}")
    rep.result("iterations", g.iterations)
    if g.verdict == "exhausted":
        rep.warnings.append("escape-rate tail above tol at the budget")


def _cmd_height(p, rep, cfg, workers):
    from .heights import RationalPoint, RationalSkewMap, canonical_height_rational
    f = RationalSkewMap(*(Fraction(str(p[k])) for k in ("a", "alpha", "beta", "epsilon", "c")),
                        base_only=bool(p["base_only"]))
    x = RationalPoint([Fraction(str(v)) for v in p["point"]])
    h = canonical_height_rational(f, x, int(p["budget"]), int(p["height_cap"]), float(p["tol"]))
    rep.result("canonical_height", h.estimate, h.increment, "bound: last increment of the telescoped series")
    rep.result("naive_height", x.naive_height(), 0.0)
    rep.result("preperiodic", h.preperiodic)
    rep.result("steps", h.steps)
    rep.result("exact_steps", h.exact_steps)


def _slice_from(p):
    from .raster import SliceSpec
    if p["family"] == "base":
        anchor = parse_complex(p["anchor"] if p["anchor"] is not None else 0)
        dirs = tuple(parse_complex(d) for d in (p["directions"] or (1, [0, 1])))
    else:
        anchor = _lam(p)
        dirs = p["directions"] or ({"alpha": 1}, {"beta": 1})
        dirs = tuple({k: parse_complex(v) for k, v in d.items()} for d in dirs)
    return SliceSpec(anchor, dirs, tuple(p["window"]), tuple(p["resolution"]))


def _cmd_raster(p, rep, cfg, workers):
    from .raster import (RasterBudgets, laplacian_density, raster_map, write_contours_csv,
                         write_raster, x_omega_locus)
    spec = _slice_from(p)
    if p["fn"] == "x_omega":
        loc = x_omega_locus(spec, _word(p["word"]))
        files = write_raster(loc.raster, os.path.join(cfg.out, "x_omega.pgm"))
        files += (write_contours_csv(loc.contours_re, os.path.join(cfg.out, "x_omega_re.csv")),
                  write_contours_csv(loc.contours_im, os.path.join(cfg.out, "x_omega_im.csv")))
        rep.artifacts += list(files)
        rep.result("crossings", loc.crossings, max(spec.steps), "marching squares; pixel resolution")
        return
    b = RasterBudgets.from_dict(p["budgets"]) if p["budgets"] else RasterBudgets()
    r = raster_map(spec, p["fn"], b, cfg.seed, workers)
    rep.artifacts += list(write_raster(r, os.path.join(cfg.out, f"{p['fn']}.pgm")))
    rep.result("masked", r.metadata["masked"])
    rep.result("min", float(np.nanmin(r.values)) if (~r.mask).any() else None, b.tol)
    rep.result("max", float(np.nanmax(r.values)) if (~r.mask).any() else None, b.tol)
    if p["density"]:
        d = laplacian_density(r)
        rep.artifacts += list(write_raster(d, os.path.join(cfg.out, f"{p['fn']}_density.pgm")))


def _cmd_misiurewicz(p, rep, cfg, workers):
    from .raster import (base_slice, laplacian_density, misiurewicz_parameters, misiurewicz_roots_up_to,
                         pcf_density_report, raster_map, write_raster)
    window = tuple(p["window"])
    if p["relation"] is not None:
        n, m = p["relation"]
        sol = misiurewicz_parameters((n, m), window, full=bool(p["full"]))
        roots, fails = sol.roots, sol.failures
    else:
        roots, fails = misiurewicz_roots_up_to(int(p["n_max"]), window), []
    rep.result("roots", [{"a": r.a, "relation": list(r.relation), "residual": r.residual,
                          "derivative": r.derivative, "preperiodic": r.preperiodic} for r in roots],
               1e-8, "residual bound on the relation")
    rep.result("count", len(roots))
    rep.warnings += fails
    if p["density"] and p["relation"] is None:
        r = raster_map(base_slice(window, tuple(p["resolution"])), "lyapunov", seed=cfg.seed, workers=workers)
        d = laplacian_density(r)
        rep.artifacts += list(write_raster(d, os.path.join(cfg.out, "density.pgm")))
        stats = pcf_density_report(d, [r.a for r in roots if r.preperiodic])
        rep.result("fraction_above_median", stats.fraction_above_median, None, f"{stats.used} roots used")
        rep.result("bin_discrepancy", stats.bin_discrepancy, None, "total variation over 8 x 8 bins")


def _cmd_assumptions(p, rep, cfg, workers):
    from .assumptions import check_assumptions
    rpt = check_assumptions(_lam(p), c=parse_complex(p["c"]), graphs=int(p["graphs"]), seed=cfg.seed,
                            word=_word(p["word"]) if p.get("word") else None, steps=int(p["steps"]))
    for it in rpt.items:
        rep.result(f"item{it.item}.{it.name}", it.status, None, it.note)
        rep.result(f"item{it.item}.witness", it.witness)
    rep.result("passing", rpt.passing())


def _cmd_report(p, rep, cfg, workers):
    from .graphs import blender_intersection_sweep
    from .multipliers import multiplier_jacobian_rank
    from .skew import repelling_two_cycle, saddle_point
    lam = _lam(p)
    s, r = saddle_point(lam), repelling_two_cycle(lam)
    rep.result("chi_p", s.chi_p, 1e-12)
    rep.result("chi_r", r.chi_r, 1e-12)
    rk = multiplier_jacobian_rank(lam)
    rep.result("multiplier_rank", rk.rank, None, f"singular values {rk.singular_values}")
    rep.result("multiplier_ratio", rk.ratio, 1e-6, "passes rank 3 when above the bound")
    sw = blender_intersection_sweep(lam, int(p["graphs"]), cfg.seed)
    rep.result("graph_intersections", sw.hits, None, f"of {sw.total} random vertical graphs")


DISPATCH = {"certify-blender": _cmd_certify, "ifs": _cmd_ifs, "periodic": _cmd_periodic,
            "lyapunov": _cmd_lyapunov, "green": _cmd_green, "height": _cmd_height,
            "raster": _cmd_raster, "misiurewicz": _cmd_misiurewicz, "assumptions": _cmd_assumptions,
            "report": _cmd_report}


def run(cfg: JobConfig, workers: int | None = None) -> RunReport:
    """Execute one job and write ``<out>/<command>.json``; timings go to a separate file.

    Configuration problems raise ConfigError (exit 1); certification failures
    set exit code 2 on the report.
    """
    p = cfg.resolved()
    workers = workers or int(os.environ.get(WORKERS_ENV, "1"))
    rep = RunReport(cfg.command, cfg.to_dict())
    t0 = time.perf_counter()
    os.makedirs(cfg.out, exist_ok=True)
    try:
        DISPATCH[cfg.command](p, rep, cfg, workers)
    except ConfigError:
        raise
    except ValueError as exc:
        # DomainError, WordSyntaxError and friends: the inputs are unusable
        raise ConfigError(f"{type(exc).__name__}: {exc}") from exc
    rep.timings["total_s"] = time.perf_counter() - t0
    path = os.path.join(cfg.out, f"{cfg.command}.json")
    rep.artifacts.append(path)
    _atomic_write(path, dumps(rep.to_dict()).encode("utf-8"))
    _atomic_write(os.path.join(cfg.out, f"{cfg.command}.timings.json"), dumps(rep.timings).encode("utf-8"))
    return rep


# --- the pin store ---------------------------------------------------------------

@dataclass(frozen=True)
class Oracle:
    """main() is the library path, oracle() an independent computation of the same value."""
    description: str
    main: object
    oracle: object
    bound: float


def _o_ifs_fixed():
    from .skew import ifs_limit_point, lambda_hat
    return ifs_limit_point(lambda_hat(0.0), _word("(+)*"))


def _o_phi1():
    from .skew import lambda_hat, phi_maps
    f = phi_maps(lambda_hat(0.0))[1]
    return [f.m, f.b]


def _o_sup_hat1():
    from .certify import certify_ifs_covering
    from .skew import lambda_hat
    return max(certify_ifs_covering(lambda_hat(0.0)).sup_lower.values())


def _o_height_a2():
    from .heights import RationalPoint, RationalSkewMap, canonical_height_rational
    return canonical_height_rational(RationalSkewMap.base(2), RationalPoint.of(0)).estimate


def _o_height_a2_oracle():
    # integral orbit: only the archimedean place contributes, so the height is G_{q_2}(0)
    from .green import base_family_green
    return float(base_family_green(np.array([2.0 + 0j]), 0j, tol=1e-13, budget=2000).values[0])


def _o_mis_count():
    from .raster import STANDARD_WINDOW, misiurewicz_roots_up_to
    return len(misiurewicz_roots_up_to(8, STANDARD_WINDOW))


def _critical_orbit_poly(k: int) -> list:
    """Exact integer coefficients (lowest first) of v_k(C), v_0 = 0, v_{j+1} = v_j^2 + C."""
    v = [0]
    for _ in range(k):
        sq = [0] * (2 * len(v))
        for i, x in enumerate(v):
            for j, y in enumerate(v):
                sq[i + j] += x * y
        sq[1] += 1
        while len(sq) > 1 and sq[-1] == 0:
            sq.pop()
        v = sq
    return v


def _o_mis_count_oracle():
    """Count via the monic family v -> v^2 + C, with a = +-sqrt(-C).

    The relations v_{n-1} = -v_{m-1} are expanded to exact integer
    polynomials in C and solved by mpmath at extended precision.
    """
    import mpmath
    roots = []
    for n in range(3, 9):
        for m in range(2, n):
            A, B = _critical_orbit_poly(n - 1), _critical_orbit_poly(m - 1)
            rel = [(A[i] if i < len(A) else 0) + (B[i] if i < len(B) else 0) for i in range(max(len(A), len(B)))]
            with mpmath.workdps(60):
                cand = mpmath.polyroots(rel[::-1], maxsteps=400, extraprec=400)
                for C in cand:
                    z, periodic = mpmath.mpc(0), False
                    for _ in range(1, n - 1):
                        z = z * z + C
                        periodic |= abs(z) < 1e-8
                    if not periodic:
                        roots.append(complex(C))
    uniq = []
    for c in sorted(roots, key=lambda c: (round(c.real, 8), round(c.imag, 8))):
        if all(abs(c - u) > 1e-9 for u in uniq):
            uniq.append(c)
    a = [s * cmath.sqrt(-c) for c in uniq for s in (1, -1)]
    return sum(1 for z in a if abs(z.real) <= 1.6 and abs(z.imag) <= 1.6)


def _o_fixed4():
    from .raster import misiurewicz_parameters
    return sorted((r.a for r in misiurewicz_parameters((4, "fixed"), full=True).roots),
                  key=lambda z: (round(z.real, 6), round(z.imag, 6)))


def _o_fixed4_oracle():
    """Distinct roots of a P_4(a)^2 - P_4(a) - a with P_k = a (P_{k-1}^2 - 1), by mpmath."""
    import mpmath
    Pk = [0]
    for _ in range(4):
        sq = [0] * (2 * len(Pk))
        for i, x in enumerate(Pk):
            for j, y in enumerate(Pk):
                sq[i + j] += x * y
        sq[0] -= 1
        Pk = [0] + sq                      # times a
        while len(Pk) > 1 and Pk[-1] == 0:
            Pk.pop()
    sq = [0] * (2 * len(Pk))
    for i, x in enumerate(Pk):
        for j, y in enumerate(Pk):
            sq[i + j] += x * y
    rel = [0] + sq                          # a P^2
    for i, x in enumerate(Pk):
        rel[i] -= x
    rel[1] -= 1
    while rel[-1] == 0:
        rel.pop()
    # a = 0 is a multiple root; divide it out so the remaining roots are simple
    k = next(i for i, x in enumerate(rel) if x != 0)
    with mpmath.workdps(50):
        r = list(mpmath.polyroots(rel[k:][::-1], maxsteps=500, extraprec=300)) + [0] * min(k, 1)
    uniq = []
    for z in sorted((complex(z) for z in r), key=lambda z: (round(z.real, 6), round(z.imag, 6))):
        if all(abs(z - u) > 1e-6 for u in uniq):
            uniq.append(z)
    return uniq


def _o_pcf():
    from .raster import (STANDARD_WINDOW, base_slice, laplacian_density, misiurewicz_roots_up_to,
                         pcf_density_report, raster_map)
    d = laplacian_density(raster_map(base_slice(), "lyapunov"))
    return pcf_density_report(d, [r.a for r in misiurewicz_roots_up_to(8, STANDARD_WINDOW)]).fraction_above_median


def _o_pcf_oracle():
    """Escape-time Green function of v^2 + C at C = -a^2 with a fixed 1e10 cutoff,
    5-point density without clamping, roots from the mpmath count oracle's method."""
    N, half = 256, 1.6
    x = np.linspace(-half, half, N)
    X, Y = np.meshgrid(x, x)
    C = -(X + 1j * Y) ** 2
    z = np.zeros_like(C)
    G = np.zeros(C.shape)
    done = np.zeros(C.shape, bool)
    for k in range(600):
        z = np.where(done, 0, z * z + C)
        esc = ~done & (np.abs(z) > 1e10)
        G[esc] = np.log(np.abs(z[esc])) / 2.0 ** (k + 1)
        done |= esc
    h = x[1] - x[0]
    D = np.full(G.shape, np.nan)
    D[1:-1, 1:-1] = (G[2:, 1:-1] + G[:-2, 1:-1] + G[1:-1, 2:] + G[1:-1, :-2] - 4 * G[1:-1, 1:-1]) / h ** 2
    med = np.nanmedian(D)
    from .raster import misiurewicz_roots_up_to
    a = np.array([r.a for r in misiurewicz_roots_up_to(8, (-half, half, -half, half))])
    i = np.rint((a.imag + half) / h).astype(int)
    j = np.rint((a.real + half) / h).astype(int)
    ok = (i > 0) & (i < N - 1) & (j > 0) & (j < N - 1)
    return float(np.mean(D[i[ok], j[ok]] > med))


def _o_rank():
    from .multipliers import multiplier_jacobian_rank
    from .skew import lambda_0
    return multiplier_jacobian_rank(lambda_0()).ratio


def _o_rank_oracle():
    from .multipliers import multiplier_jacobian_rank
    from .skew import lambda_0
    return multiplier_jacobian_rank(lambda_0(), h=1e-5).ratio


ORACLES = {
    "ifs-fixed-all-plus": Oracle("fixed point of phi_1 at lambda-hat_1, the limit point of (+)*",
                                 _o_ifs_fixed, lambda: (1 + 1j) / 40, 1e-14),
    "phi1-coefficients": Oracle("phi_1 = m z + b at lambda-hat_1", _o_phi1, lambda: [-1, (1 + 1j) / 20], 1e-14),
    "hat1-image-sup": Oracle("largest attained |phi_j| on H_j at lambda-hat_1",
                             _o_sup_hat1, lambda: abs(2 * cmath.exp(1j * math.pi / 3) - math.sqrt(2) / 20), 1e-6),
    "height-a2-zero": Oracle("canonical height of 0 for w -> 2(w^2 - 1)", _o_height_a2, _o_height_a2_oracle, 1e-6),
    "misiurewicz-count-n8": Oracle("distinct preperiodic roots, relations up to n = 8, standard window",
                                   _o_mis_count, _o_mis_count_oracle, 0.0),
    "misiurewicz-fixed4-roots": Oracle("all roots of q^4(0) = fixed point, cleared to a polynomial in a",
                                      _o_fixed4, _o_fixed4_oracle, 1e-6),
    "pcf-fraction": Oracle("fraction of Misiurewicz roots (n <= 8) in above-median density pixels",
                           _o_pcf, _o_pcf_oracle, 0.02),
    "multiplier-rank-ratio": Oracle("sigma_min / sigma_max of the multiplier Jacobian at lambda_0",
                                    _o_rank, _o_rank_oracle, 1e-9),
}


def _distance(x, y) -> float:
    x, y = np.atleast_1d(np.asarray(x, dtype=complex)), np.atleast_1d(np.asarray(y, dtype=complex))
    if x.shape != y.shape:
        return math.inf
    return float(np.max(np.abs(x - y))) if x.size else 0.0


def default_store() -> str:
    return os.environ.get(PIN_STORE_ENV, "pins.json")


def load_store(path: str) -> dict:
    if not os.path.exists(path):
        return {}
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _decode(v):
    if isinstance(v, list) and len(v) == 2 and all(isinstance(t, (int, float)) for t in v):
        return complex(*v)
    if isinstance(v, list):
        return [_decode(t) for t in v]
    return v


def pin(oracle_id: str, recompute: bool = True, store: str | None = None) -> dict:
    """Recompute and store (recompute) or check the main path against the store.

    OracleMismatch when the main path and the independent oracle, or the main
    path and the stored value, differ beyond the bound. KeyError when the
    store holds no entry in compare mode.
    """
    if oracle_id not in ORACLES:
        raise ConfigError(f"unknown oracle {oracle_id!r}; registered: {sorted(ORACLES)}")
    o = ORACLES[oracle_id]
    path = store or default_store()
    data = load_store(path)
    value = o.main()
    if recompute:
        ref = o.oracle()
        dist = _distance(value, ref)
        if not dist <= o.bound:
            raise OracleMismatch(f"{oracle_id}: main {value!r} vs oracle {ref!r} (distance {dist:.3g})")
        data[oracle_id] = {"value": _jsonable(value), "oracle": _jsonable(ref), "bound": o.bound,
                           "description": o.description, "version": code_version()}
        _atomic_write(path, (json.dumps(data, sort_keys=True, indent=1) + "\n").encode("utf-8"))
        return data[oracle_id]
    if oracle_id not in data:
        raise KeyError(oracle_id)
    stored = _decode(data[oracle_id]["value"])
    dist = _distance(value, stored)
    if not dist <= max(o.bound, 1e-12 * (1 + _distance(stored, 0))):
        raise OracleMismatch(f"{oracle_id}: main {value!r} vs stored {stored!r} (distance {dist:.3g})")
    return data[oracle_id]
