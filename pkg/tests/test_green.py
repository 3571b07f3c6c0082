import math

import numpy as np
import pytest

from skewblend.base import fixed_point_neg
from skewblend.errors import DomainError
from skewblend.green import (RegularSkewMap, approximant_ratio, base_family_green, bedford_jonsson_check,
                             critical_slice_integral, equilibrium_samples, escape_constants, green,
                             green_approximants, green_array, line_at_infinity_lyapunov, lyapunov_routes,
                             lyapunov_skew, product_case_oracle, slice_integral)
from skewblend.words import SymbolWord

LOG2 = math.log(2)


@pytest.fixture(scope="module")
def f(lam0):
    return RegularSkewMap(lam0, 1e-3)


def test_regular_map_rejects_degenerate(lam0):
    with pytest.raises(DomainError):
        RegularSkewMap(lam0, 0)
    with pytest.raises(DomainError):
        RegularSkewMap(lam0, -lam0.a)


def test_base_green_asymptotics():
    # G(w) = log|w| + log|a| + O(1/|w|^2) for q_a
    g = green(100, 1e8)
    assert g.verdict == "escaped"
    assert abs(g.value - (math.log(1e8) + math.log(100))) < 1e-6


def test_base_green_bounded_and_escaping():
    p = fixed_point_neg(100)
    # plain forward iteration of a repelling point escapes after ~7 steps of
    # rounding growth; G lands on the Holder floor instead of 0
    assert green(100, p).value < 0.1 < green(100, p + 1e-3).value
    # 1 -> 0 -> -a, so G(1) = G(-a) / 4
    assert abs(green(100, 1.0).value - green(100, -100.0).value / 4) < 1e-9


def test_base_family_matches_green():
    w = np.array([0.3 + 2j, 5.0, -1e3j])
    assert np.allclose(base_family_green(100, w).values, [green(100, x).value for x in w], atol=1e-9)


def test_functional_equation(f, rng):
    z = rng.normal(size=1000) * 50 + 1j * rng.normal(size=1000) * 50
    w = rng.normal(size=1000) * 3 + 1j * rng.normal(size=1000) * 3
    G = green_array(f, z, w).values
    G2 = green_array(f, *f.apply(z, w)).values
    assert np.max(np.abs(G2 - 2 * G)) < 2e-9


def test_homogeneity_at_infinity(f):
    # G(t x) - log|t| tends to a function of the direction only
    x = np.array([0.7 + 0.2j, 1.3 - 0.4j])
    g1 = green(f, tuple(1e6 * x)).value - math.log(1e6)
    g2 = green(f, tuple(1e9 * x)).value - math.log(1e9)
    assert abs(g1 - g2) < 1e-5


def test_approximants_converge_at_rate_half(f):
    ap = green_approximants(f, (5.0, 3.0))
    assert abs(approximant_ratio(ap) - 0.5) < 0.05
    assert abs(ap[-1] - green(f, (5.0, 3.0)).value) < 1e-9


def test_coded_point_is_bounded(f):
    for s in ("-(+)*", "(-)*", "(+-)*"):
        assert green(f, SymbolWord.parse(s)).verdict == "bounded"


def test_equilibrium_samples(f):
    s = equilibrium_samples(f, 2000, seed=0)
    assert s.shape == (2000, 2)
    assert np.max(np.abs(s)) < escape_constants(f).radius
    # forward orbits of samples pick up rounding that grows by ~200 per step,
    # so G comes out at the Holder floor ~ (1e-16)^(log 2 / log 200), not 0
    G = green_array(f, s[:, 0], s[:, 1]).values
    assert np.max(G) < 0.1 < green(f, (0.0, 1.1)).value
    assert np.array_equal(s, equilibrium_samples(f, 2000, seed=0))
    b = equilibrium_samples(100, 4000, seed=1)
    assert np.max(np.abs(b)) < 1.01


def test_base_samples_match_lyapunov():
    b = equilibrium_samples(100, 50_000, seed=2)
    # ell = log 2 + sum of G at critical points, estimated by Birkhoff on samples
    est = float(np.mean(np.log(np.abs(200 * b))))
    ell = LOG2 + green(100, 0j).value
    assert abs(est - ell) < 2e-3


def test_skew_lyapunov_split(lam0):
    s = lyapunov_skew(lam0)
    assert abs(s.ell_base - math.log(200)) < 1e-3
    assert abs(s.L_sum - s.ell_base - s.L_horizontal) < 1e-14
    assert abs(lyapunov_skew(lam0.replace(beta=0)).L_horizontal - math.log(abs(lam0.alpha))) < 1e-14


def test_lyapunov_routes_agree(f):
    comp, total = lyapunov_routes(f)
    assert abs(comp - total) < 2e-2


def test_line_at_infinity_lyapunov(f):
    ell = line_at_infinity_lyapunov(f)
    assert abs(ell.backward - ell.periodic) < 2e-3
    # exponents of degree-2 polynomial maps are at least log 2; the periodic
    # estimator at order 10 is within its truncation error of that bound
    assert ell.backward >= LOG2 - 1e-4 and ell.periodic >= LOG2 - 2e-3


def test_slice_integral_known_measures():
    # G = log max(|t|, r): dd^c G is uniform on |t| = r with mass 1, so the
    # pairing is log r; with r = 1 it is 0
    for r in (1.0, 2.0):
        s = slice_integral(lambda T: np.log(np.maximum(np.abs(T), r)), 0j, 4.0, 401)
        assert abs(s.mass - 1) < 2e-2 and abs(s.value - math.log(r)) < 2e-2
    zero = slice_integral(lambda T: np.zeros(T.shape), 0j, 1.0, 33)
    assert zero.value == 0 and zero.mass == 0


def test_slice_integral_refines():
    g = lambda T: np.log(np.maximum(np.abs(T), 2.0))
    err = [abs(slice_integral(g, 0j, 4.0, n).value - LOG2) for n in (101, 201, 401, 801)]
    assert err[-1] < err[0] and err[-1] < 1e-2


def test_critical_integral_components(f):
    with pytest.raises(DomainError):
        critical_slice_integral(f, "z=0")
    line = critical_slice_integral(f, "w=0", grid=129)
    assert line.value > 0 and abs(line.mass - 1) < 0.1


def test_product_case_oracle(lam0):
    f = RegularSkewMap(lam0.replace(beta=0, epsilon=0), 1e-3)
    L_true, rhs, gp, gq = product_case_oracle(f)
    assert abs(L_true - rhs) < 1e-12
    r = bedford_jonsson_check(f)
    assert abs(r.L_direct - L_true) < 2e-2
    assert abs(r.parts["I_line"] - gq) < 5e-2
    assert abs(r.parts["I_curve"] - gp) < 5e-2
    with pytest.raises(DomainError):
        product_case_oracle(RegularSkewMap(lam0, 1e-3))


def test_green_of_q2_is_canonical_height(pin_store):
    import json
    stored = json.loads(open(pin_store).read())["height-a2-zero"]["value"]
    assert abs(base_family_green(2, np.array([0j])).values[0] - stored) < 1e-8
