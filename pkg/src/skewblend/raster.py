"""Parameter-plane rasters, bifurcation-density proxies and critical-orbit relations.

A slice is an affine real 2-plane in parameter space. For the base family the
parameter is the complex number a of q_a(w) = a(w^2 - 1) and any a != 0 is
admissible, so the slices reach the bifurcation locus (which sits in
|a| < 1.5; u = a w conjugates q_a to u^2 - a^2). For the skew family the
parameter is (a, alpha, beta, eps) with |a| > 10.

Raster arrays are stored row-major with shape (ny, nx): row i is the i-th y
value, column j the j-th x value. Pixel centres include the window corners.
"""
from __future__ import annotations

import json
import math
import os
import tempfile
from types import SimpleNamespace
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .base import BaseParam
from .errors import DegenerateError, DomainError, EmptyInput, RootSolverError
from .green import (RegularSkewMap, base_family_green, base_family_lyapunov, green,
                    lyapunov_skew)
from .graphs import UNSTABLE_DOMAIN, unstable_value, x_in_unstable_residual
from .polyroots import aberth, circle_start, newton_polish
from .skew import SkewParams, lambda_point_arrays
from .words import SymbolWord

FUNCTIONS = ("lyapunov", "green_at_point", "residual_X_omega", "G_on_critical")
SKEW_NAMES = ("a", "alpha", "beta", "epsilon")
STANDARD_WINDOW = (-1.6, 1.6, -1.6, 1.6)
STANDARD_RESOLUTION = (256, 256)
# pixel rows handed to one task; fixed so serial and parallel runs agree
ROW_CHUNK = 16
CLAMP_TOL = 1e-6
MISIUREWICZ_MAX_N = 10
# |q^j(0)| below this counts as a periodic critical orbit
PERIODIC_TOL = 1e-8


def code_version() -> str:
    try:
        from importlib.metadata import version
        return version("artifact")
    except Exception:
        return "0.1.0"


# --- slices -------------------------------------------------------------------

def _skew_vector(d) -> np.ndarray:
    if isinstance(d, dict):
        unknown = set(d) - set(SKEW_NAMES)
        if unknown:
            raise DomainError(f"unknown parameter names {sorted(unknown)}")
        return np.array([complex(d.get(k, 0)) for k in SKEW_NAMES])
    v = np.asarray(d, dtype=complex).ravel()
    if v.size != 4:
        raise DomainError("skew directions need 4 complex components (a, alpha, beta, eps)")
    return v


@dataclass(frozen=True)
class SliceSpec:
    """anchor + x d1 + y d2 for (x, y) in the window, at nx by ny pixels."""
    anchor: object
    directions: tuple
    window: tuple
    resolution: tuple

    def __post_init__(self):
        anchor = self.anchor
        if isinstance(anchor, BaseParam):
            anchor = anchor.a
        if isinstance(anchor, SkewParams):
            dirs = tuple(_skew_vector(d) for d in self.directions)
        else:
            anchor = complex(anchor)
            dirs = tuple(np.array([complex(d)]) for d in self.directions)
        if len(dirs) != 2:
            raise DomainError("a slice needs exactly two directions")
        M = np.array([np.concatenate([d.real, d.imag]) for d in dirs])
        s = np.linalg.svd(M, compute_uv=False)
        if not s[-1] > 1e-12 * max(1.0, s[0]):
            raise DegenerateError("slice directions are not linearly independent over R")
        nx, ny = (int(v) for v in self.resolution)
        if nx < 1 or ny < 1:
            raise DomainError("resolution must be positive")
        x0, x1, y0, y1 = (float(v) for v in self.window)
        if (nx > 1 and not x1 > x0) or (ny > 1 and not y1 > y0):
            raise DomainError("window must have x0 < x1 and y0 < y1")
        object.__setattr__(self, "anchor", anchor)
        object.__setattr__(self, "directions", tuple(tuple(complex(c) for c in d) for d in dirs))
        object.__setattr__(self, "window", (x0, x1, y0, y1))
        object.__setattr__(self, "resolution", (nx, ny))

    @property
    def family(self) -> str:
        return "skew" if isinstance(self.anchor, SkewParams) else "base"

    def axes(self):
        x0, x1, y0, y1 = self.window
        nx, ny = self.resolution
        return np.linspace(x0, x1, nx), np.linspace(y0, y1, ny)

    @property
    def steps(self) -> tuple:
        xs, ys = self.axes()
        hx = xs[1] - xs[0] if xs.size > 1 else 0.0
        hy = ys[1] - ys[0] if ys.size > 1 else 0.0
        return float(hx), float(hy)

    def coordinates(self) -> np.ndarray:
        """Parameter coordinates, shape (ny, nx, k) with k = 1 (base) or 4 (skew)."""
        xs, ys = self.axes()
        X, Y = np.meshgrid(xs, ys)
        d1, d2 = (np.array(d) for d in self.directions)
        base = (np.array([self.anchor]) if self.family == "base" else
                np.array([getattr(self.anchor, k) for k in SKEW_NAMES]))
        return base + X[..., None] * d1 + Y[..., None] * d2

    def parameter(self, coords) -> complex | SkewParams:
        """The admissible parameter at one coordinate vector; DomainError otherwise."""
        if self.family == "base":
            a = complex(coords[0])
            if a == 0:
                raise DomainError("a = 0 is degenerate")
            return a
        return SkewParams(*coords)

    def pixel_of(self, point) -> tuple:
        """(row, col) of the nearest pixel centre to a slice point (x, y)."""
        xs, ys = self.axes()
        hx, hy = self.steps
        x, y = point
        j = int(round((x - xs[0]) / hx)) if hx else 0
        i = int(round((y - ys[0]) / hy)) if hy else 0
        return i, j

    def locate(self, param) -> tuple:
        """Slice coordinates (x, y) of a parameter in the slice plane (least squares)."""
        if self.family == "base":
            v = np.array([complex(param) - self.anchor])
        else:
            p = param if isinstance(param, SkewParams) else SkewParams(*param)
            v = np.array([getattr(p, k) - getattr(self.anchor, k) for k in SKEW_NAMES])
        d1, d2 = (np.array(d) for d in self.directions)
        A = np.column_stack([np.concatenate([d1.real, d1.imag]), np.concatenate([d2.real, d2.imag])])
        sol, *_ = np.linalg.lstsq(A, np.concatenate([v.real, v.imag]), rcond=None)
        return float(sol[0]), float(sol[1])

    def to_dict(self) -> dict:
        if self.family == "base":
            anchor = {"a": [self.anchor.real, self.anchor.imag]}
        else:
            anchor = {k: [getattr(self.anchor, k).real, getattr(self.anchor, k).imag] for k in SKEW_NAMES}
        return {"family": self.family, "anchor": anchor,
                "directions": [[[c.real, c.imag] for c in d] for d in self.directions],
                "window": list(self.window), "resolution": list(self.resolution)}

    @classmethod
    def from_dict(cls, d: dict) -> "SliceSpec":
        cx = lambda p: complex(p[0], p[1])
        if d["family"] == "base":
            anchor = cx(d["anchor"]["a"])
            dirs = tuple(cx(v[0]) for v in d["directions"])
        else:
            anchor = SkewParams(*(cx(d["anchor"][k]) for k in SKEW_NAMES))
            dirs = tuple([cx(c) for c in v] for v in d["directions"])
        return cls(anchor, dirs, tuple(d["window"]), tuple(d["resolution"]))


def base_slice(window=STANDARD_WINDOW, resolution=STANDARD_RESOLUTION, anchor: complex = 0j) -> SliceSpec:
    """The a-plane with x = Re a, y = Im a."""
    return SliceSpec(anchor, (1.0, 1j), window, resolution)


def standard_skew_slices(lam: SkewParams, half: float = 0.005, resolution=(32, 32)) -> dict:
    """Real slices through lam: (Re alpha, Re beta), (Re alpha, Re eps) and the a-plane."""
    win = (-half, half, -half, half)
    return {
        "alpha-beta": SliceSpec(lam, ({"alpha": 1}, {"beta": 1}), win, resolution),
        "alpha-epsilon": SliceSpec(lam, ({"alpha": 1}, {"epsilon": 1}), win, resolution),
        "a": SliceSpec(lam, ({"a": 1}, {"a": 1j}), (-5.0, 5.0, -5.0, 5.0), resolution),
    }


# --- rasters ------------------------------------------------------------------

@dataclass(frozen=True)
class RasterBudgets:
    tol: float = 1e-9
    green_budget: int = 512
    c: complex = 1e-3
    samples: int = 20_000
    order: int = 8
    word: str = "-(+)*"
    point: tuple = (0.1, 0.1)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["c"] = [complex(self.c).real, complex(self.c).imag]
        d["point"] = [[complex(p).real, complex(p).imag] for p in self.point]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RasterBudgets":
        d = dict(d)
        if "c" in d and isinstance(d["c"], (list, tuple)):
            d["c"] = complex(*d["c"])
        if "point" in d:
            d["point"] = tuple(complex(*p) if isinstance(p, (list, tuple)) else complex(p) for p in d["point"])
        return cls(**d)


@dataclass
class Raster:
    slice: SliceSpec
    values: np.ndarray          # (ny, nx), NaN where masked
    mask: np.ndarray            # True where the pixel carries no value
    metadata: dict = field(default_factory=dict)

    def unmasked(self) -> np.ndarray:
        return self.values[~self.mask]


def pixel_seed(seed: int, index: int) -> int:
    """Per-pixel seed from (global seed, flat pixel index)."""
    return int(np.random.SeedSequence([int(seed), int(index)]).generate_state(1)[0])


def _base_values(fn: str, a: np.ndarray, b: RasterBudgets) -> np.ndarray:
    if fn == "lyapunov":
        return base_family_lyapunov(a, b.tol, b.green_budget)
    if fn == "G_on_critical":
        return base_family_green(a, 0j, b.tol, b.green_budget).values
    if fn == "green_at_point":
        return base_family_green(a, complex(b.point[0]), b.tol, b.green_budget).values
    raise DomainError(f"{fn} is not defined on the base family")


def _skew_value(fn: str, lam: SkewParams, b: RasterBudgets, seed: int) -> float:
    if fn == "residual_X_omega":
        return abs(x_in_unstable_residual(lam, SymbolWord.parse(b.word)))
    f = RegularSkewMap(lam, b.c)
    if fn == "lyapunov":
        return lyapunov_skew(f, b.order, seed, b.samples).L_sum
    if fn == "green_at_point":
        return green(f, tuple(b.point), b.tol, b.green_budget).value
    if fn == "G_on_critical":
        # the two critical components meet at (-alpha / 2c, 0)
        return green(f, (f.critical_fiber(0j), 0j), b.tol, b.green_budget).value
    raise DomainError(f"unknown raster function {fn!r}")


def _eval_rows(task):
    """Values and failure messages for one block of rows; pure in its arguments."""
    spec_dict, fn, budgets_dict, seed, rows = task
    spec = SliceSpec.from_dict(spec_dict)
    b = RasterBudgets.from_dict(budgets_dict)
    return _eval_block(spec, fn, b, seed, rows)


def _eval_block(spec: SliceSpec, fn, b: RasterBudgets, seed: int, rows):
    nx = spec.resolution[0]
    coords = spec.coordinates()[rows[0]:rows[1]]
    out = np.full(coords.shape[:2], np.nan)
    fails = []
    if spec.family == "base" and isinstance(fn, str):
        a = coords[..., 0]
        ok = a != 0
        if ok.any():
            out[ok] = _base_values(fn, a[ok], b)
        fails += [((rows[0] + i, j), "a = 0 is degenerate") for i, j in zip(*np.nonzero(~ok))]
        return out, fails
    if fn == "residual_X_omega":
        out = np.abs(xomega_residual_grid(coords, SymbolWord.parse(b.word)))
        fails += [((rows[0] + i, j), "outside the unstable-graph domain")
                  for i, j in zip(*np.nonzero(~np.isfinite(out)))]
        return out, fails
    for i in range(coords.shape[0]):
        for j in range(nx):
            idx = (rows[0] + i) * nx + j
            try:
                p = spec.parameter(coords[i, j])
                out[i, j] = (fn(p) if callable(fn) else
                             _skew_value(fn, p, b, pixel_seed(seed, idx)))
            except Exception as exc:      # per-pixel failures become mask entries
                fails.append(((rows[0] + i, j), f"{type(exc).__name__}: {exc}"))
    return out, fails


def raster_map(spec: SliceSpec, fn, budgets: RasterBudgets | None = None, seed: int = 0,
               workers: int | None = None) -> Raster:
    """Evaluate fn on every pixel of the slice.

    fn is one of FUNCTIONS or a callable on the pixel parameter. Rows are cut
    into fixed blocks of ROW_CHUNK, so the values do not depend on the worker
    count. Non-finite values and per-pixel exceptions are masked.
    """
    b = budgets or RasterBudgets()
    if isinstance(fn, str) and fn not in FUNCTIONS:
        raise DomainError(f"unknown raster function {fn!r}; expected one of {FUNCTIONS}")
    if fn == "residual_X_omega" and spec.family == "base":
        raise DomainError("residual_X_omega needs a skew-family slice")
    nx, ny = spec.resolution
    blocks = [(r, min(r + ROW_CHUNK, ny)) for r in range(0, ny, ROW_CHUNK)]
    workers = workers or int(os.environ.get("SKEWBLEND_WORKERS", "1"))
    if workers > 1 and isinstance(fn, str):
        tasks = [(spec.to_dict(), fn, b.to_dict(), seed, r) for r in blocks]
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_eval_rows, tasks))
    else:
        parts = [_eval_block(spec, fn, b, seed, r) for r in blocks]
    values = np.concatenate([p[0] for p in parts], axis=0)
    failures = [f for p in parts for f in p[1]]
    mask = ~np.isfinite(values)
    values = np.where(mask, np.nan, values)
    meta = {"function": fn if isinstance(fn, str) else getattr(fn, "__name__", "callable"),
            "budgets": b.to_dict(), "seed": int(seed), "code_version": code_version(),
            "slice": spec.to_dict(), "masked": int(mask.sum()),
            "failures": [[list(ij), msg] for ij, msg in failures[:20]]}
    return Raster(spec, values, mask, meta)


def laplacian_density(r: Raster, tol: float = CLAMP_TOL) -> Raster:
    """5-point Laplacian on interior pixels, clamped below at -tol times its scale.

    Pixels whose stencil touches a masked pixel, and the border, are masked.
    Normalization constants of dd^c are dropped.
    """
    v = r.values
    hx, hy = r.slice.steps
    ny, nx = v.shape
    out = np.full(v.shape, np.nan)
    if nx >= 3 and ny >= 3:
        c = v[1:-1, 1:-1]
        out[1:-1, 1:-1] = ((v[1:-1, 2:] + v[1:-1, :-2] - 2 * c) / hx ** 2
                           + (v[2:, 1:-1] + v[:-2, 1:-1] - 2 * c) / hy ** 2)
    mask = ~np.isfinite(out)
    if (~mask).any():
        scale = float(np.max(np.abs(out[~mask])))
        out[~mask] = np.maximum(out[~mask], -tol * max(scale, 1e-300))
    meta = dict(r.metadata, function=f"laplacian({r.metadata.get('function')})", clamp=tol,
                masked=int(mask.sum()))
    return Raster(r.slice, np.where(mask, np.nan, out), mask, meta)


# --- critical-orbit relations ---------------------------------------------------

def critical_orbit(a: np.ndarray, n: int):
    """q_a^k(0) and d/da q_a^k(0) for k = 0..n, as lists of arrays."""
    a = np.asarray(a, dtype=complex)
    P, dP = [np.zeros_like(a)], [np.zeros_like(a)]
    for _ in range(n):
        p, dp = P[-1], dP[-1]
        P.append(a * (p * p - 1))
        dP.append(p * p - 1 + 2 * a * p * dp)
    return P, dP


def _relation(relation) -> tuple:
    n, m = relation
    n = int(n)
    if not 1 <= n <= MISIUREWICZ_MAX_N:
        raise DomainError(f"n must be in 1..{MISIUREWICZ_MAX_N}")
    if m == "fixed":
        return n, "fixed"
    m = int(m)
    if not 0 <= m < n:
        raise DomainError("relation needs n > m >= 0")
    return n, m


def relation_value(a, relation):
    """(R(a), R'(a)) for q^n(0) - q^m(0), or a q^n(0)^2 - q^n(0) - a for (n, "fixed")."""
    n, m = _relation(relation)
    P, dP = critical_orbit(a, n)
    if m == "fixed":
        p, dp = P[n], dP[n]
        return np.asarray(a) * p * p - p - a, p * p + 2 * np.asarray(a) * p * dp - dp - 1
    return P[n] - P[m], dP[n] - dP[m]


def _new_factor(relation):
    """Evaluator of the factor carrying the roots that are new at this level.

    q^n(0) = q^m(0) factors as a (q^{n-1}(0) - q^{m-1}(0)) (q^{n-1}(0) + q^{m-1}(0)),
    and landing on a fixed point at step n means q^{n-1}(0) is a fixed point
    or minus one; the minus branches are the new roots.
    """
    n, m = relation

    def ev(a):
        P, dP = critical_orbit(a, n - 1)
        p, dp = P[n - 1], dP[n - 1]
        if m == "fixed":
            return a * p * p + p - a, p * p + 2 * a * p * dp + dp - 1
        return p + P[m - 1], dp + dP[m - 1]

    if m == "fixed":
        degree = 2 * (2 ** (n - 1) - 1) + 1
    else:
        degree = 2 ** (n - 1) - 1
    return ev, degree


class MisiurewiczRoot(NamedTuple):
    a: complex
    relation: tuple
    residual: float
    derivative: complex    # transversality witness: d/da of the relation at the root
    preperiodic: bool      # critical orbit strictly preperiodic (not a centre, a != 0)


class MisiurewiczSolution(NamedTuple):
    roots: list
    failures: list


def _in_window(a: complex, window) -> bool:
    if window is None:
        return True
    x0, x1, y0, y1 = window
    return x0 <= a.real <= x1 and y0 <= a.imag <= y1


def _level_roots(relation) -> np.ndarray:
    n, m = relation
    if m == 0:
        # q^n(0) = 0: a = 0 or a periodic critical point, never preperiodic
        def ev(a):
            P, dP = critical_orbit(a, n)
            return P[n], dP[n]
        deg = 2 ** n - 1
    else:
        ev, deg = _new_factor(relation)
    x, _ = aberth(ev, circle_start(deg, 1.6), strict=True)
    x, _ = newton_polish(ev, x, 2)
    return x


def misiurewicz_parameters(relation, window=None, full: bool = False,
                           tol: float = 1e-8) -> MisiurewiczSolution:
    """Verified roots a of a critical-orbit relation, optionally cut to a window.

    relation is (n, m) for q^n(0) = q^m(0) or (n, "fixed") for q^n(0) = w~(a)
    with w~ either fixed point, cleared to a w^2 - w - a = 0. By default only
    the roots new at this level are returned (the others are the roots of
    (n-1, m-1), respectively (n-1, "fixed")); ``full`` returns all roots of
    the relation. Each root is Newton-polished on the full relation and kept
    when |R(a)| < tol.
    """
    rel = _relation(relation)
    levels = [rel]
    if full:
        n, m = rel
        levels = ([(n - k, "fixed") for k in range(n)] if m == "fixed"
                  else [(n - k, m - k) for k in range(m + 1)])
    found, fails = [], []
    for lv in levels:
        try:
            cand = _level_roots(lv)
        except RootSolverError as exc:
            fails.append(f"{lv}: {exc}")
            continue
        ev = lambda a: relation_value(a, rel)
        cand, _ = newton_polish(ev, cand, 2)
        R, dR = ev(cand)
        P, _ = critical_orbit(cand, rel[0])
        for k, a in enumerate(cand):
            a = complex(a)
            if not abs(R[k]) < tol:
                fails.append(f"{lv}: residual {abs(R[k]):.3g} at a = {a:.6g}")
                continue
            periodic = (lv[1] == 0 or abs(a) < PERIODIC_TOL
                        or any(abs(P[j][k]) < PERIODIC_TOL for j in range(1, lv[0])))
            if _in_window(a, window):
                found.append(MisiurewiczRoot(a, rel, float(abs(R[k])), complex(dR[k]), not periodic))
    found = _dedupe(found)
    return MisiurewiczSolution(found, fails)


def _dedupe(roots: list, tol: float = 1e-9) -> list:
    out = []
    for r in sorted(roots, key=lambda r: (round(r.a.real, 9), round(r.a.imag, 9))):
        if all(abs(r.a - s.a) > tol * (1 + abs(s.a)) for s in out):
            out.append(r)
    return out


def misiurewicz_roots_up_to(n_max: int = 8, window=None, tol: float = 1e-8) -> list:
    """Distinct strictly preperiodic roots of all relations (n, m), 2 <= m < n <= n_max.

    m = 1 would ask q^{n-1}(0) = 0, a periodic critical point, so it is skipped.
    """
    roots = []
    for n in range(3, n_max + 1):
        for m in range(2, n):
            sol = misiurewicz_parameters((n, m), window, tol=tol)
            roots += [r for r in sol.roots if r.preperiodic]
    return _dedupe(roots)


# --- the PCF-versus-density experiment --------------------------------------------

class DensityReport(NamedTuple):
    fraction_above_median: float
    median: float
    bin_discrepancy: float      # total variation between point and density mass over 8 x 8 bins
    bin_max_gap: float
    used: int
    excluded: int


def pcf_density_report(density: Raster, points: Sequence, bins: int = 8) -> DensityReport:
    """Where parameters fall relative to the density raster.

    points are slice coordinates (x, y) or, for the base family, complex a.
    Points on masked pixels or outside the window are excluded.
    """
    spec = density.slice
    ny, nx = density.values.shape
    cells = []
    for p in points:
        xy = spec.locate(p) if not isinstance(p, tuple) else p
        i, j = spec.pixel_of(xy)
        if 0 <= i < ny and 0 <= j < nx and not density.mask[i, j]:
            cells.append((i, j))
    excluded = len(points) - len(cells)
    if not cells:
        raise EmptyInput("no point falls on an unmasked density pixel")
    vals = density.unmasked()
    med = float(np.median(vals))
    ii, jj = np.array(cells).T
    frac = float(np.mean(density.values[ii, jj] > med))
    # coarse-bin comparison of the empirical point measure with the density mass
    pos = np.where(density.mask, 0.0, np.maximum(density.values, 0.0))
    be_y = np.linspace(0, ny, bins + 1).astype(int)
    be_x = np.linspace(0, nx, bins + 1).astype(int)
    mass = np.array([[pos[be_y[u]:be_y[u + 1], be_x[v]:be_x[v + 1]].sum() for v in range(bins)]
                     for u in range(bins)])
    total = mass.sum()
    mass = mass / total if total > 0 else np.full(mass.shape, 1.0 / mass.size)
    cnt = np.zeros((bins, bins))
    for i, j in cells:
        cnt[np.searchsorted(be_y, i, "right") - 1, np.searchsorted(be_x, j, "right") - 1] += 1
    cnt /= cnt.sum()
    gap = np.abs(cnt - mass)
    return DensityReport(frac, med, float(gap.sum() / 2), float(gap.max()), len(cells), excluded)


# --- X_omega loci ---------------------------------------------------------------

class XOmegaLocus(NamedTuple):
    raster: Raster               # |residual|
    contours_re: list            # zero contours of Re residual, arrays of (x, y)
    contours_im: list            # zero contours of Im residual
    crossings: np.ndarray        # (k, 2) slice points where both vanish


def _contours(field: np.ndarray, spec: SliceSpec) -> list:
    from skimage.measure import find_contours
    xs, ys = spec.axes()
    hx, hy = spec.steps
    out = []
    for c in find_contours(field, 0.0):
        # c is (row, col) in fractional pixel units
        out.append(np.column_stack([xs[0] + c[:, 1] * hx, ys[0] + c[:, 0] * hy]))
    return out


def _segment_crossings(A: list, B: list) -> np.ndarray:
    pts = []
    for ca in A:
        for cb in B:
            p, r = ca[:-1], ca[1:] - ca[:-1]
            q, s = cb[:-1], cb[1:] - cb[:-1]
            if not len(p) or not len(q):
                continue
            den = r[:, None, 0] * s[None, :, 1] - r[:, None, 1] * s[None, :, 0]
            qp = q[None, :, :] - p[:, None, :]
            with np.errstate(divide="ignore", invalid="ignore"):
                t = (qp[..., 0] * s[None, :, 1] - qp[..., 1] * s[None, :, 0]) / den
                u = (qp[..., 0] * r[:, None, 1] - qp[..., 1] * r[:, None, 0]) / den
            hit = (den != 0) & (t >= 0) & (t <= 1) & (u >= 0) & (u <= 1)
            i, j = np.nonzero(hit)
            pts += list(p[i] + t[i, j][:, None] * r[i])
    return np.array(pts).reshape(-1, 2)


def xomega_residual_grid(coords: np.ndarray, word: SymbolWord) -> np.ndarray:
    """x_in_unstable_residual over an array of (a, alpha, beta, eps); NaN where undefined.

    Entries with |a| <= 10 or with w(x_omega) outside the unstable-graph
    domain are NaN.
    """
    a, al, be, ep = (coords[..., k] for k in range(4))
    ok = np.abs(a) > 10
    a = np.where(ok, a, 100.0)
    z, w = lambda_point_arrays(a, al, be, ep, word)
    ok &= np.abs(w - UNSTABLE_DOMAIN.center) < UNSTABLE_DOMAIN.radius
    lam = SimpleNamespace(a=a, alpha=al, beta=be, epsilon=ep)
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        res = z - unstable_value(lam, w)
    return np.where(ok, res, np.nan)


def x_omega_locus(spec: SliceSpec, word: SymbolWord | str) -> XOmegaLocus:
    """Raster of |z(x_omega) - g_u(w(x_omega))| and its zero set on the slice.

    X_omega is a complex hypersurface, real codimension 2, so it meets a real
    2-slice in isolated points. They are the crossings of the zero contours of
    the real and imaginary parts, both extracted by marching squares.
    """
    if spec.family != "skew":
        raise DomainError("X_omega loci live in skew-family slices")
    w = SymbolWord.parse(word) if isinstance(word, str) else word
    res = xomega_residual_grid(spec.coordinates(), w)
    mask = ~np.isfinite(res)
    absval = np.where(mask, np.nan, np.abs(res))
    meta = {"function": "residual_X_omega", "word": str(w), "code_version": code_version(),
            "slice": spec.to_dict(), "masked": int(mask.sum())}
    r = Raster(spec, absval, mask, meta)
    cre = _contours(np.where(mask, np.nan, res.real), spec)
    cim = _contours(np.where(mask, np.nan, res.imag), spec)
    return XOmegaLocus(r, cre, cim, _segment_crossings(cre, cim))


def hausdorff(A: np.ndarray, B: np.ndarray) -> float:
    from scipy.spatial.distance import directed_hausdorff
    return float(max(directed_hausdorff(A, B)[0], directed_hausdorff(B, A)[0]))


# --- files -------------------------------------------------------------------

def _atomic_write(path: str, data: bytes) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def pgm_bytes(r: Raster) -> tuple:
    """16-bit big-endian P5 image; values mapped affinely from [min, max] to [1, 65535].

    Masked pixels are written as 0. Returns (bytes, vmin, vmax).
    """
    ny, nx = r.values.shape
    vals = r.unmasked()
    vmin = float(vals.min()) if vals.size else 0.0
    vmax = float(vals.max()) if vals.size else 0.0
    span = vmax - vmin
    img = np.zeros((ny, nx), dtype=">u2")
    if vals.size:
        scaled = 1 + np.rint((r.values - vmin) / span * 65534) if span > 0 else np.full((ny, nx), 1.0)
        img[~r.mask] = scaled[~r.mask].astype(np.uint16)
    # image rows run top to bottom, so the largest y comes first
    header = f"P5\n{nx} {ny}\n65535\n".encode("ascii")
    return header + img[::-1].tobytes(), vmin, vmax


def write_raster(r: Raster, path: str) -> tuple:
    """Write ``path`` (PGM) and its JSON sidecar; returns both paths."""
    data, vmin, vmax = pgm_bytes(r)
    side = dict(r.metadata, min=vmin, max=vmax, mapping="1 + round((v - min) / (max - min) * 65534); 0 = masked",
                shape=[int(s) for s in r.values.shape])
    stem, _ = os.path.splitext(path)
    jpath = stem + ".json"
    _atomic_write(path, data)
    _atomic_write(jpath, (json.dumps(side, sort_keys=True, indent=1) + "\n").encode("utf-8"))
    return path, jpath


def read_pgm(path: str) -> np.ndarray:
    """Raw 16-bit pixel values in the stored orientation (first row = largest y)."""
    with open(path, "rb") as fh:
        data = fh.read()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5":
        raise DomainError("not a binary PGM")
    nx, ny = (int(v) for v in parts[1].split())
    return np.frombuffer(parts[3], dtype=">u2").reshape(ny, nx)


def write_contours_csv(contours: list, path: str) -> str:
    """CSV with columns contour, x, y; one row per vertex."""
    lines = ["contour,x,y"]
    for k, c in enumerate(contours):
        lines += [f"{k},{x:.17g},{y:.17g}" for x, y in c]
    _atomic_write(path, ("\n".join(lines) + "\n").encode("utf-8"))
    return path
