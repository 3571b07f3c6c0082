import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from skewblend import (IFSParams, SkewParams, SymbolWord, ifs_limit_point, lambda_0, lambda_point, phi_maps,
                       repelling_two_cycle, saddle_point)
from skewblend.base import fixed_point_neg, two_cycle
from skewblend.errors import DegenerateError, DomainError, WordSyntaxError
from skewblend.skew import (EPS0, ZETA, Affine, h_series, ifs_maps, ifs_word_iterate, skew_apply, skew_apply2,
                            skew_jacobian)

words = st.builds(lambda h, t: SymbolWord(h, t),
                  st.lists(st.sampled_from([1, -1]), max_size=20),
                  st.lists(st.sampled_from([1, -1]), min_size=1, max_size=4))


def num_jacobian(f, z, w, h=1e-6):
    J = np.zeros((2, 2), complex)
    for k, (dz, dw) in enumerate(((h, 0), (0, h))):
        up, dn = f(z + dz, w + dw), f(z - dz, w - dw)
        J[:, k] = [(up[0] - dn[0]) / (2 * h), (up[1] - dn[1]) / (2 * h)]
    return J


# words

def test_word_parse_and_print():
    w = SymbolWord.parse("+-+(-+)*")
    assert w.prefix(7) == (1, -1, 1, -1, 1, -1, 1)
    assert SymbolWord.parse(str(w)) == w
    assert SymbolWord.parse("+-") == SymbolWord.periodic([1, -1])
    for bad in ("+−*", "", "+(-)", "(+-", "+a", "()*"):
        with pytest.raises(WordSyntaxError):
            SymbolWord.parse(bad)


@settings(max_examples=200, deadline=None)
@given(words, st.integers(0, 30))
def test_word_shift(w, k):
    assert w.shift(k).prefix(10) == tuple(w[k + i] for i in range(10))
    assert SymbolWord.parse(str(w)) == w


# the map and its second iterate

def test_skew_apply_trivial(lam0):
    P = saddle_point(lam0).point
    z, w = skew_apply(lam0, *P)
    assert abs(z - P[0]) < 1e-12 and abs(w - P[1]) < 1e-12
    assert skew_apply(SkewParams(100, 1, 0, 0), 5, 1) == (5, 0)
    assert skew_apply(lam0, 0, 0) == (0, -100)


def test_second_iterate_random(lam0, rng):
    z = 10 * np.sqrt(rng.uniform(size=1000)) * np.exp(2j * np.pi * rng.uniform(size=1000))
    w = 3 * np.sqrt(rng.uniform(size=1000)) * np.exp(2j * np.pi * rng.uniform(size=1000))
    z1, w1 = skew_apply(lam0, *skew_apply(lam0, z, w))
    z2, w2 = skew_apply2(lam0, z, w)
    assert np.max(np.abs(z1 - z2) / (1 + np.abs(z1))) < 1e-12
    assert np.max(np.abs(w1 - w2) / (1 + np.abs(w1))) < 1e-12


def test_second_iterate_beta_zero():
    lam = SkewParams(100, 1.3, 0, 0.07)
    z, w = 0.4 - 0.2j, 1.1
    qw = 100 * (w * w - 1)
    assert abs(skew_apply2(lam, z, w)[0] - (1.69 * z + 0.07 * (1.3 * w + qw))) < 1e-12


def test_second_iterate_fixes_r(lam0):
    r = repelling_two_cycle(lam0).point
    z, w = skew_apply2(lam0, *r)
    assert abs(z - r[0]) < 1e-10 and abs(w - r[1]) < 1e-10


# saddle and repelling cycle

def test_saddle(lam0):
    sd = saddle_point(lam0)
    wt = fixed_point_neg(100)
    assert abs(sd.chi_p - (lam0.alpha + lam0.beta * wt)) < 1e-15
    assert abs(abs(sd.chi_p) - abs(ZETA) * (1.01 + 0.02 * wt)) < 1e-12
    assert abs(abs(sd.chi_p) - 0.99010) < 1e-5
    assert abs(sd.chi_vert + 199.0) < 0.01
    assert sd.is_saddle
    eig = np.linalg.eigvals(num_jacobian(lambda z, w: skew_apply(lam0, z, w), *sd.point))
    assert min(abs(eig - sd.chi_p)) < 1e-8 and min(abs(eig - sd.chi_vert)) < 1e-6
    with pytest.raises(DegenerateError):
        saddle_point(SkewParams(100, 1.0, 0, 0.07))


def test_repelling_cycle(lam0):
    rc = repelling_two_cycle(lam0)
    w0, w1 = two_cycle(100).points
    assert abs(rc.A2 - (lam0.alpha + lam0.beta * w0) * (lam0.alpha + lam0.beta * w1)) < 1e-15
    assert abs(rc.chi_r) > 1 and abs(abs(rc.chi_r) - abs(lam0.alpha ** 2 - lam0.beta ** 2)) < 0.05
    J = skew_jacobian(lam0, *rc.orbit[1]) @ skew_jacobian(lam0, *rc.orbit[0])
    eig = np.linalg.eigvals(J)
    assert min(abs(eig - rc.eigs[0])) < 1e-10 and min(abs(eig - rc.eigs[1])) < 1e-6


def test_repelling_limit_ifs_fixed_point():
    h = IFSParams(ZETA, 0, EPS0)
    lp, lm = ifs_maps(h)
    assert abs(lm.fixed_point() + (1 + 1j) / 40) < 1e-15
    errs = []
    for a in (1e2, 1e3, 1e4):
        z = repelling_two_cycle(SkewParams(a, ZETA, 0, EPS0)).point[0]
        errs.append(abs(z - lm.fixed_point()))
    assert errs[0] > errs[1] > errs[2] and errs[2] < 10 / 1e4


# coded points

def test_lambda_point_all_minus(lam0):
    x = lambda_point(lam0, SymbolWord.constant(-1))
    r = repelling_two_cycle(lam0).point
    assert abs(x.point[0] - r[0]) <= 1e-13 and abs(x.point[1] - r[1]) <= 1e-13
    xt = lambda_point(lam0, SymbolWord.constant(-1), N=40)
    assert abs(xt.point[0] - r[0]) <= xt.bound


def test_lambda_point_shift_equivariance(lam0, rng):
    for _ in range(50):
        w = SymbolWord.random(rng, int(rng.integers(0, 30)), tail=(1, -1))
        x, y = lambda_point(lam0, w), lambda_point(lam0, w.shift())
        z2, w2 = skew_apply2(lam0, *x.point)
        assert abs(z2 - y.point[0]) < 1e-9 and abs(w2 - y.point[1]) < 1e-9


def test_lambda_point_truncation_bound(lam0, rng):
    w = SymbolWord.random(rng, 40, tail=(1,))
    exact = lambda_point(lam0, w)
    for N in (5, 10, 20):
        t = lambda_point(lam0, w, N)
        assert abs(t.point[0] - exact.point[0]) <= t.bound


def test_lambda_point_degenerates_to_ifs():
    lam = SkewParams(1e4, ZETA * 1.01, 0.02 * ZETA, EPS0)
    z = lambda_point(lam, SymbolWord.constant(1)).point[0]
    assert abs(z - (1 + 1j) / 40) < 10 / 1e4 + abs(ifs_limit_point(lam.hat, SymbolWord.constant(1)) - (1 + 1j) / 40)


def test_lambda_point_ifs_rate(rng):
    errs = []
    ws = [SymbolWord.random(rng, 30) for _ in range(20)]
    for a in (1e2, 1e3, 1e4):
        lam = lambda_0(a=a)
        errs.append(max(abs(lambda_point(lam, w).point[0] - ifs_limit_point(lam.hat, w)) for w in ws))
    slope = np.polyfit(np.log([1e2, 1e3, 1e4]), np.log(errs), 1)[0]
    assert abs(slope + 1) < 0.2


# IFS at infinity

def test_ifs_maps_hat1(hat1):
    lp, lm = ifs_maps(hat1)
    assert abs(hat1.mu + 1j) < 1e-15
    assert abs(lp.b - 1j / 20) < 1e-15 and abs(lm.b + 1j / 20) < 1e-15


def test_ifs_symmetry_and_contraction():
    h = IFSParams(1.7, 0, 0.07)
    lp, lm = ifs_maps(h)
    assert lp.b == -lm.b
    assert abs(lambda_0().hat.mu) < 1
    with pytest.raises(DegenerateError):
        ifs_maps(IFSParams(0.5, 0, 0.07))


def test_ifs_limit_points(hat1):
    zp = ifs_limit_point(hat1, SymbolWord.constant(1))
    zm = ifs_limit_point(hat1, SymbolWord.constant(-1))
    lp, lm = ifs_maps(hat1)
    phi = phi_maps(hat1)
    assert abs(zp - (1 + 1j) / 40) < 1e-15 and abs(zm + (1 + 1j) / 40) < 1e-15
    assert abs(lp(zp) - zp) < 1e-15 and abs(phi["+"](zp) - zp) < 1e-15


def test_phi_plus_closed_form(hat1):
    p = phi_maps(hat1)["+"]
    assert abs(p.m - 1j) < 1e-15 and abs(p.b - 1 / 20) < 1e-15


@settings(max_examples=100, deadline=None)
@given(words)
def test_ifs_shift_relation(w):
    h = lambda_0().hat
    lp, lm = ifs_maps(h)
    l0 = lp if w[0] > 0 else lm
    assert abs(ifs_limit_point(h, w) - l0(ifs_limit_point(h, w.shift()))) < 1e-12


@settings(max_examples=100, deadline=None)
@given(words)
def test_ifs_closed_form_against_iteration(w):
    h = lambda_0().hat
    z = ifs_limit_point(h, w)
    # |mu| is about 0.98 at lambda-hat_0, so direct iteration needs a long prefix
    assert abs(ifs_word_iterate(h, w, 2000) - z) < 1e-10


def test_h_series():
    mu = 0.3 + 0.2j
    w = SymbolWord([1, -1], [1, 1, -1])
    direct = sum(w[n] * mu ** n for n in range(400))
    assert abs(h_series(w, mu) - direct) < 1e-14


def test_phi_display(hat1):
    phi = phi_maps(hat1)
    expect = {1: (1 + 1j) / 20, 2: (1j - 1) / 20, 3: (1 - 1j) / 20, 4: -(1 + 1j) / 20}
    for j, b in expect.items():
        assert abs(phi[j].m + 1) < 1e-14 and abs(phi[j].b - b) < 1e-14


def test_phi_composition_identity():
    phi = phi_maps(lambda_0().hat)
    c = phi["-"].compose(phi["+"])
    assert abs(c.m - phi[2].m) < 1e-14 and abs(c.b - phi[2].b) < 1e-14
    for z in (0.3, -1j, 1.2 + 0.4j):
        assert abs(phi[2](z) - phi["-"](phi["+"](z))) < 1e-14
    A = Affine(2, 1)
    assert A.inverse().compose(A) == Affine(1, 0)
