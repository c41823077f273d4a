"""Classification oracles.  The expected rows are hand-derived from the
closed forms: phi_e = (d-2)sqrt(1 - 4/((d-2)(f-2))) style surds, the
vertex bounds alpha_d, and jbar witnesses."""
import pytest

from kcmlab.classify import (classify, hyperbolic_case_table,
                             hyperbolic_inputs, range_32_max, tree_inputs)


def test_tree_inputs_exact_constants():
    inp = tree_inputs(5)
    assert float(inp.phi_e) == 3.0           # d - 2 exactly
    assert inp.jbar == 4
    assert inp.bipartite
    assert inp.regular_tree


def test_tree_chi_good_via_iv():
    inp = tree_inputs(5)
    rep = classify(4, inp)
    assert rep.chi_good and rep.chi_item == "iv"
    # j = d needs jbar = d which a tree cannot witness
    rep = classify(5, inp)
    assert rep.chi_item != "iv" or not rep.chi_good


def test_tree_omega_small_j():
    inp = tree_inputs(5)
    assert classify(1, inp).omega_good
    assert classify(3, inp).omega_good


@pytest.mark.parametrize("d,f,j,item", [
    (5, 4, 1, "a"),
    (5, 4, 2, "a"),
    (5, 4, 3, "b"),
])
def test_h54_omega_items(d, f, j, item):
    rep = classify(j, hyperbolic_inputs(d, f))
    assert rep.omega_good
    assert rep.omega_item == item


def test_h73_j4_stays_open():
    rep = classify(4, hyperbolic_inputs(7, 3))
    assert not rep.omega_good
    assert rep.omega_verdict == "open"


@pytest.mark.parametrize("d,f,item", [
    (7, 6, "i"),
    (6, 6, "ii"),
])
def test_majority_chi_good_rows(d, f, item):
    j = d // 2 + 1
    rep = classify(j, hyperbolic_inputs(d, f))
    assert rep.chi_good
    assert rep.chi_item == item


@pytest.mark.parametrize("d,f,holds", [
    (12, 3, False), (13, 3, True),
    (8, 4, False), (9, 4, True),
])
def test_majority_vertex_inequality_threshold(d, f, holds):
    # j < Phi_V certified lower bound, decided exactly on the surd; the
    # crossover degrees are 13 (f = 3) and 9 (f = 4)
    j = d // 2 + 1
    inp = hyperbolic_inputs(d, f)
    assert (inp.phi_v_lower.sub(j).sign() > 0) is holds
    if holds:
        assert classify(j, inp).chi_good


@pytest.mark.parametrize("d,f", [(12, 3), (8, 4)])
def test_majority_iii_fails_below_degree_threshold(d, f):
    # j = d/2 + 1 exceeds the certified vertex-expansion lower bound, so
    # item (iii) cannot fire; H(8,4) still lands chi-good through (ii)
    j = d // 2 + 1
    rep = classify(j, hyperbolic_inputs(d, f))
    assert rep.chi_item != "iii"


def test_h84_majority_good_via_ii():
    rep = classify(5, hyperbolic_inputs(8, 4))
    assert rep.chi_good and rep.chi_item == "ii"


def test_range_32():
    assert range_32_max(5, 4) == 3
    assert range_32_max(7, 3) == 4
    assert range_32_max(5, 5) == 3
    assert range_32_max(12, 3) == 9


def test_case_table_rows_and_range():
    table = hyperbolic_case_table(5, 4)
    assert [r.j for r in table.rows] == [1, 2, 3, 4, 5]
    for r in table.rows:
        assert r.in_range_32 == (r.j <= 3)
        if not r.in_range_32:
            assert r.note
    assert table.majority_threshold == 3
    assert table.row(3).report.omega_item == "b"


def test_case_table_rejects_non_hyperbolic():
    with pytest.raises(ValueError):
        hyperbolic_case_table(4, 4)


def test_classifier_never_reports_false():
    # verdicts are "good" or "open"; an unfired item is not a disproof
    for d, f in ((5, 4), (7, 3), (6, 6)):
        inp = hyperbolic_inputs(d, f)
        for j in range(1, d + 1):
            rep = classify(j, inp)
            assert rep.omega_verdict in ("good", "open")
            assert rep.chi_verdict in ("good", "open")
            if rep.omega_good:
                assert rep.omega_item in ("a", "b")
            if rep.chi_good:
                assert rep.chi_item in ("i", "ii", "iii", "iv")
