import json

import pytest

from skewblend.assumptions import check_assumptions, resonances, unstable_blender_words


@pytest.fixture(scope="module")
def report(lam0):
    return check_assumptions(lam0, graphs=4)


def test_structural_items_pass(report):
    for i in (1, 2, 3, 5, 6, 7, 8):
        assert report[i].passed, (i, report[i].witness)


def test_blender_item_reports_covering_failure(report):
    # the IFS covering at the default admissible radius fails at lambda_0,
    # while every sampled vertical graph still meets the hyperbolic set
    w = report[4].witness
    assert report[4].status == "fail"
    assert not w["ifs_proximity"] and not w["H_covering"] and w["graphs_hit"] == w["graphs"]


def test_composite_item_witnesses(report):
    w = report[10].witness
    assert w["i_coded_point"] and w["ii_X_omega_root"] and w["X_omega_root_offset"] < 1e-10
    # lambda_0 carries the exact multiplier relation chi_r chi_p^2 = e^{2 pi i k / 8}
    assert not w["iv_independence"] and w["independence_triple"] == [-2, 1, 8]
    assert report[10].status == "fail"


def test_exceptional_set_not_checkable(report):
    assert report[9].status == "not checkable"


def test_report_serializes(report):
    d = json.loads(json.dumps(report.to_dict()))
    assert [it["item"] for it in d["items"]] == list(range(1, 11))


def test_resonance_detector():
    chi = 0.5 + 0.1j
    assert (1, (2, 0)) in resonances([chi, chi ** 2])
    assert resonances([0.5, 0.3]) == []
    assert (0, (0, 1, 2)) in resonances([0.5 * 4.0 ** 2, 0.5, 4.0])


def test_unstable_words_distinct(lam0):
    w = unstable_blender_words(lam0)
    assert set(w) == {3, 4} and str(w[3]) != str(w[4])
