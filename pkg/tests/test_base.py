import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from skewblend import BaseParam, SymbolWord, base_lyapunov, base_periodic_points
from skewblend.base import (BaseRegions, backward_orbit_samples, base_periodic_points_aberth, branch_image_disk,
                            cantor_point, fixed_point_neg, inverse_branch, q, q_iterate, two_cycle)
from skewblend.errors import DomainError

cplx = st.complex_numbers(max_magnitude=2.99, allow_nan=False, allow_infinity=False)
big_a = st.builds(lambda r, t: r * cmath.exp(1j * t), st.floats(11, 1e4), st.floats(0, 2 * math.pi))


def newton(f, df, x, steps=60):
    for _ in range(steps):
        x = x - f(x) / df(x)
    return x


# q_iterate

def test_q_iterate_trivial():
    assert q_iterate(100, 1, 1).value == 0
    assert q_iterate(100, 0, 1).value == -100
    assert q_iterate(100, 0.5, 0).value == 0.5


def test_q_iterate_integer_orbit():
    # exact integer orbit 0 -> -2 -> 6 -> 70
    orbit = [0]
    for _ in range(3):
        orbit.append(2 * (orbit[-1] ** 2 - 1))
    assert orbit == [0, -2, 6, 70]
    assert q_iterate(2, 0, 3).value == 70
    assert q_iterate(Fraction(2), Fraction(0), 4).value == 9798


def test_q_iterate_escape_flag():
    r = q_iterate(100.0, 2.0, 50)
    assert r.escaped and math.isinf(r.value.real) and r.value.real > 0
    assert r.steps < 50


def test_base_param_threshold():
    with pytest.raises(DomainError):
        BaseParam(10)
    assert BaseParam(10.5).a == 10.5


# inverse branches

def test_inverse_branch_examples():
    assert inverse_branch(100, "+", 0) == 1
    assert inverse_branch(100, "-", 0) == -1
    # Newton oracle on q_a(w) = 2.999... at the guard band
    g = inverse_branch(100, "+", 2.999)
    ref = newton(lambda w: q(100, w) - 2.999, lambda w: 200 * w, 1.0 + 0j)
    assert abs(g - ref) < 1e-14
    with pytest.raises(DomainError):
        inverse_branch(100, "+", 3)


def test_inverse_branch_at_three_closed_form():
    # the value at w = 3 itself, continued from inside: sqrt(1.03)
    ref = newton(lambda w: q(100, w) - 3, lambda w: 200 * w, 1.0 + 0j)
    assert abs(ref - math.sqrt(1.03)) < 1e-15
    assert abs(ref - 1.0148892) < 1e-7


@settings(max_examples=200, deadline=None)
@given(big_a, cplx, st.sampled_from([1, -1]))
def test_branch_right_inverse(a, w, s):
    g = inverse_branch(a, s, w)
    assert abs(q(a, g) - w) < 1e-12 * max(1, abs(a) / 100)
    assert abs(g - s) < 3 / abs(a)


@settings(max_examples=200, deadline=None)
@given(big_a, st.floats(0, 0.4999), st.floats(0, 2 * math.pi), st.sampled_from([1, -1]))
def test_branch_left_inverse(a, r, t, s):
    v = s + r / abs(a) * cmath.exp(1j * t)
    assert abs(inverse_branch(a, s, q(a, v)) - v) < 1e-12


@pytest.mark.parametrize("a", [11, 100, 1000j, 50 * cmath.exp(0.7j)])
def test_inclusion_chain_on_boundary(a):
    # D(s, 1/|a|) inside g_s(D_3) inside D(s, 3/|a|), sampled at 10^3 boundary points
    theta = 2 * np.pi * np.arange(1000) / 1000
    ring = 2.999 * np.exp(1j * theta)
    for s in (1, -1):
        img = inverse_branch(a, s, ring)
        d = np.abs(img - s)
        assert np.all(d > 1 / abs(a)) and np.all(d < 3 / abs(a))
    R = BaseRegions(a)
    for s in (1, -1):
        assert R.U_inner(s).radius < R.U_disk(s).radius + abs(R.U_disk(s).center - s)
        assert R.U_disk(s).inside(R.U_outer(s))
        assert R.V_disk(s).inside(R.U_disk(s))


# fixed point and 2-cycle

def test_fixed_point_neg():
    w = fixed_point_neg(100)
    quad = (1 - math.sqrt(1 + 4e4)) / 200
    ref = newton(lambda x: q(100, x) - x, lambda x: 200 * x - 1, -1.0)
    assert abs(w - quad) < 1e-15 and abs(w - ref) < 1e-15
    assert abs(w + 0.99501250) < 1e-8
    assert abs(q(100, w) - w) < 1e-12


def test_fixed_point_neg_complex():
    w = fixed_point_neg(100j)
    ref = newton(lambda x: q(100j, x) - x, lambda x: 200j * x - 1, -1.0 + 0j)
    assert abs(w - ref) < 1e-14 and abs(w + 1) < 0.03


@settings(max_examples=100, deadline=None)
@given(big_a)
def test_fixed_point_property(a):
    w = fixed_point_neg(a)
    assert abs(q(a, w) - w) < 1e-12 * max(1, abs(a) / 100)
    assert abs(w + 1) < 3 / abs(a)


def test_two_cycle():
    orb = two_cycle(100)
    w0, w1 = orb.points
    # oracle: Newton on q^2 - id seeded at -1
    f = lambda x: q(100, q(100, x)) - x
    df = lambda x: 200 * q(100, x) * 200 * x - 1
    ref = newton(f, df, -1.0)
    assert abs(w0 - ref) < 1e-14
    assert abs(w0.imag) == 0 and abs(w1.imag) == 0
    assert abs(w0 + 1.005) < 1e-3 and abs(w1 - 0.995) < 1e-3
    assert abs(q(100, w0) - w1) < 1e-12 and abs(q(100, w1) - w0) < 1e-12
    assert orb.classification == "repelling"
    assert abs(abs(orb.multipliers[0]) - 4e4) / 4e4 < 1e-3


@pytest.mark.parametrize("a", [11.0, 37.5, -250.0, 1e4])
def test_two_cycle_real_for_real_a(a):
    w0, w1 = two_cycle(a).points
    assert w0.imag == 0 and w1.imag == 0


# Cantor coding

def test_cantor_all_minus_is_two_cycle():
    for a in (20, 100, 300j):
        cp = cantor_point(a, SymbolWord.constant(-1), 30)
        assert abs(cp.value - two_cycle(a).points[0]) <= cp.bound


def test_cantor_alternating_against_deeper_composition():
    word = SymbolWord.periodic([1, -1])
    cp = cantor_point(100, word, 30)
    deep = cantor_point(100, word, 60)
    assert abs(cp.value - deep.value) <= cp.bound
    assert abs(q(100, q(100, cp.value)) - cantor_point(100, word.shift(), 30).value) < 1e-10


@settings(max_examples=50, deadline=None)
@given(st.lists(st.sampled_from([1, -1]), min_size=0, max_size=12), st.sampled_from([20.0, 100.0, 1000j]))
def test_cantor_shift_equivariance(head, a):
    w = SymbolWord(head, (1, -1, -1))
    x = cantor_point(a, w, 40)
    y = cantor_point(a, w.shift(), 40)
    assert abs(q(a, q(a, x.value)) - y.value) < 2e-12 * abs(a) ** 2 * 1e-2 + y.bound + 1e-12


def test_cantor_bound_is_honest():
    w = SymbolWord.periodic([1, 1, -1])
    for N in (2, 4, 8):
        a, b = cantor_point(100, w, N), cantor_point(100, w, 2 * N)
        assert abs(a.value - b.value) <= a.bound
        assert b.bound <= a.bound * a.contraction ** N * 1.0001 + 4e-15


# periodic points

def test_periodic_n1():
    orbs = base_periodic_points(100, 1)
    pts = sorted(complex(o.points[0]).real for o in orbs)
    assert len(orbs) == 2
    assert abs(pts[0] - (1 - math.sqrt(40001)) / 200) < 1e-14
    assert abs(pts[1] - (1 + math.sqrt(40001)) / 200) < 1e-14
    assert abs(pts[1] - 1.0050125) < 1e-7


def test_periodic_n2_counts():
    orbs = base_periodic_points(100, 2)
    assert sum(o.period for o in orbs) == 4
    two = [o for o in orbs if o.period == 2]
    assert len(two) == 1
    assert min(abs(p - two_cycle(100).points[0]) for p in two[0].points) < 1e-13


@pytest.mark.parametrize("n", [1, 3, 5, 8])
def test_periodic_root_count_and_repelling(n):
    a = 100
    orbs = base_periodic_points(a, n)
    roots = [p for o in orbs for p in o.points]
    assert len(roots) == 2 ** n
    assert all(n % o.period == 0 for o in orbs)
    R = BaseRegions(a)
    assert all(R.in_U(1, p) or R.in_U(-1, p) for p in roots)
    assert all(o.classification == "repelling" for o in orbs)
    # distinct itineraries; values separate like (2|a|)^-(n-1), resolvable in doubles for small n
    assert len({o.word for o in orbs}) == len(orbs)
    if n <= 5:
        arr = np.array(roots)
        d = np.abs(arr[:, None] - arr[None, :]) + np.eye(len(arr))
        assert d.min() > 1e-12


@pytest.mark.parametrize("n", [3, 5])
def test_periodic_matches_aberth(n):
    a = 100 * cmath.exp(0.3j)
    coded = np.array([p for o in base_periodic_points(a, n) for p in o.points])
    ab = base_periodic_points_aberth(a, n)
    dist = np.abs(coded[:, None] - ab[None, :]).min(axis=1)
    assert dist.max() < 1e-12


# Lyapunov

def test_lyapunov_interval_bounds():
    for a, tol in ((100, 0.03), (1000, 0.003)):
        L = base_lyapunov(a, "periodic", 10)
        assert abs(L - math.log(2 * a)) < tol


@pytest.mark.parametrize("a", [50, 100, 1000])
def test_lyapunov_estimators_agree(a):
    assert abs(base_lyapunov(a, "periodic", 10) - base_lyapunov(a, "birkhoff", seed=3)) < 1e-2


def test_birkhoff_seeded():
    assert base_lyapunov(100, "birkhoff", seed=1) == base_lyapunov(100, "birkhoff", seed=1)


def test_backward_samples_in_U():
    w = backward_orbit_samples(100, 500, np.random.default_rng(0))
    R = BaseRegions(100)
    assert np.all(R.in_U(1, w) | R.in_U(-1, w))


def test_branch_image_disk_encloses():
    D = branch_image_disk(100, (1, -1))
    ring = 2.999 * np.exp(2j * np.pi * np.arange(300) / 300)
    img = inverse_branch(100, 1, inverse_branch(100, -1, ring))
    assert np.all(np.abs(img - D.center) <= D.radius)


def test_guarded_membership_is_conservative(rng):
    reg = BaseRegions(100)
    w = 1 + (rng.random(2000) * 2 - 1) * 0.03 + 1j * (rng.random(2000) * 2 - 1) * 0.03
    g, plain = reg.in_U(1, w, guarded=True), reg.in_U(1, w)
    assert np.all(plain[g])
    band = inverse_branch(100, 1, 2.9995 * np.exp(1j * np.linspace(0, 6, 50)))
    assert reg.in_U(1, band).all() and not reg.in_U(1, band, guarded=True).any()
    assert np.all(reg.in_V(1, w[reg.in_V(1, w, guarded=True)]))
