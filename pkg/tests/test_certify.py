import cmath
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from skewblend import IFSParams, certify_blender, certify_ifs_covering, lambda_0, lambda_hat
from skewblend.certify import H_EXPONENTS, canonical_json, in_H, nearest_in_H, sup_abs_affine_on_H
from skewblend.disk import Disk
from skewblend.errors import CertificationFailure
from skewblend.skew import EPS0, phi_maps

disks = st.builds(lambda c, r: Disk(c, r), st.complex_numbers(max_magnitude=5, allow_nan=False,
                                                               allow_infinity=False), st.floats(0, 2))


def sample_disk(D, rng, n=200):
    t = rng.uniform(size=n)
    return D.center + D.radius * np.sqrt(t) * np.exp(2j * np.pi * rng.uniform(size=n))


# disk arithmetic encloses pointwise results

@settings(max_examples=200, deadline=None)
@given(disks, disks)
def test_disk_arithmetic_encloses(A, B):
    rng = np.random.default_rng(0)
    x, y = sample_disk(A, rng), sample_disk(B, rng)
    # the samples themselves are rounded to a few ulps of the operand size
    fuzz = 1e-15 * (1 + A.sup_abs) * (1 + B.sup_abs)
    for D, vals in ((A + B, x + y), (A - B, x - y), (A * B, x * y), (A * (2 - 1j), x * (2 - 1j))):
        assert np.all(np.abs(vals - D.center) <= D.radius + fuzz)


@settings(max_examples=100, deadline=None)
@given(disks)
def test_disk_reciprocal_and_sqrt(A):
    rng = np.random.default_rng(1)
    x = sample_disk(A, rng)
    fuzz = 1e-15 * (1 + A.sup_abs)
    if A.radius < abs(A.center) - fuzz - 1e-6:
        R = A.reciprocal()
        ix = 1 / x
        # sample error d in x becomes about d / |x|^2 in 1/x
        slop = fuzz / (abs(A.center) - A.radius - fuzz) ** 2 + 1e-15 * np.abs(ix)
        assert np.all(np.abs(ix - R.center) <= R.radius + slop)
    elif A.radius >= abs(A.center):
        with pytest.raises(ZeroDivisionError):
            A.reciprocal()
    if A.center.real > A.radius + fuzz:
        S = A.sqrt_principal()
        assert np.all(np.abs(np.sqrt(x) - S.center) <= S.radius + fuzz)


def test_disk_bounds():
    D = Disk(3 + 4j, 1)
    assert D.sup_abs >= 6 and D.inf_abs <= 4
    assert Disk(0.5, 0.1).inside(Disk(0, 1)) and not Disk(0.95, 0.1).inside(Disk(0, 1))


# the boxes H_j

def test_H_geometry(rng):
    z = 2 * np.sqrt(rng.uniform(size=4000)) * np.exp(2j * np.pi * rng.uniform(size=4000))
    inside_any = np.any([in_H(j, z) for j in H_EXPONENTS], axis=0)
    assert np.all(inside_any)
    d1 = z[np.abs(z) <= 1]
    assert all(np.all(in_H(j, d1)) for j in H_EXPONENTS)
    for j in H_EXPONENTS:
        p, d = nearest_in_H(j, z)
        assert np.all(d[in_H(j, z)] == 0)


@pytest.mark.parametrize("j", [1, 2, 3, 4])
def test_affine_sup_closed_form_matches_sampling(j, rng):
    m, b = 1.02 * cmath.exp(0.3j), 0.07 - 0.01j
    z = 2 * np.sqrt(rng.uniform(size=20000)) * np.exp(2j * np.pi * rng.uniform(size=20000))
    z = z[in_H(j, z)]
    assert np.max(np.abs(m * z + b)) <= sup_abs_affine_on_H(j, m, b) + 1e-12


# covering certificate

def test_hat1_passes_with_governing_margins(hat1):
    c = certify_ifs_covering(hat1)
    assert c.passed
    governing = abs(2 * cmath.exp(1j * math.pi / 3) - math.sqrt(2) / 20)
    assert abs(governing - 1.9655988003) < 1e-9 and governing < 2
    assert math.sqrt(2) / 20 < 1 and abs(math.sqrt(2) / 20 - 0.07071) < 1e-5
    # the attained sup is the governing inequality, certified from above
    assert max(c.sup_lower.values()) == pytest.approx(governing, abs=1e-9)
    assert governing <= c.image_radius < 2


def test_small_aperture_passes():
    assert certify_ifs_covering(lambda_hat(0.003), A=0.003).passed


def test_control_case_fails():
    c = certify_ifs_covering(IFSParams(2, 0, EPS0))
    assert not c.passed and c.failure["j"] == 1
    # phi^+ multiplies by alpha^2 = 4, so phi_1 = phi^+ o phi^+ by 16, and H_1 leaves D_2
    phi = phi_maps(IFSParams(2, 0, EPS0))
    assert abs(phi["+"].m) == 4 and abs(phi[1].m) == 16
    assert c.failure["image_abs"] > 2
    with pytest.raises(CertificationFailure):
        certify_ifs_covering(IFSParams(2, 0, EPS0), raise_on_fail=True)


@pytest.mark.parametrize("A", [0.0, 0.003])
def test_cover_monotone_in_slack(A):
    h = lambda_hat(A)
    # the refinement gap must exceed the slack for the bound to close
    big = certify_ifs_covering(h, A=A, slack=1e-6, gap=1e-5)
    small = certify_ifs_covering(h, A=A, slack=1e-9, gap=1e-5)
    assert big.passed and small.passed
    assert small.image_radius <= big.image_radius + 1e-5


def test_cover_monotone_in_A():
    radii = [certify_ifs_covering(lambda_hat(A), A=A).image_radius for A in (0.0, 0.001, 0.003)]
    assert radii == sorted(radii)


# blender certificate

def test_blender_structure_checks(lam0):
    cert = certify_blender(lam0)
    for name in ("cone_contraction", "injectivity", "expansion", "surjective_cover"):
        assert cert.checks[name].passed and cert.checks[name].margin > 0, name
    assert cert.checks["cone_contraction"].details["rho_new"] > 100
    assert cert.rigor == "exact-disk"


def test_blender_small_aperture_passes():
    assert certify_blender(lambda_0(0.003), A=0.003).passed


def test_blender_decoupled_fails(lam0):
    cert = certify_blender(lam0.replace(epsilon=0))
    assert not cert.passed
    assert "ifs_proximity" in cert.failing() or "H_covering" in cert.failing()


def test_blender_grid_refinement_never_flips():
    lam = lambda_0(0.003)
    coarse = certify_blender(lam, A=0.003, grid=0.25)
    fine = certify_blender(lam, A=0.003, grid=0.125)
    for k, c in coarse.checks.items():
        if c.passed:
            assert fine.checks[k].passed
            assert fine.checks[k].margin >= c.margin - 1e-12


def test_certificate_json_canonical(lam0):
    cert = certify_blender(lam0)
    text = cert.to_json()
    assert text == certify_blender(lam0).to_json()
    d = json.loads(text)
    assert list(d) == sorted(d)
    assert set(d["checks"]) == {"cone_contraction", "injectivity", "expansion", "surjective_cover",
                                "ifs_proximity", "H_covering"}
    assert canonical_json({"x": 0.1}) == '{\n "x": 0.10000000000000001\n}\n'
