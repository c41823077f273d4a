"""Generator and expansion tests.  Counting oracles are closed-form; the
expansion searches are cross-checked against an independent reference."""
import itertools
from fractions import Fraction

import numpy as np
import pytest

from kcmlab.graphs import (Graph, alpha_lower, brute_force_boundary_ratio,
                           build_hyperbolic, build_tree, compute_jbar,
                           containing_min_ratio, expansion_report,
                           is_bipartite, phi_e_formula, phi_e_surd,
                           ratio_at_least_surd)
from kcmlab.surd import Surd


def tree_layer_oracle(d, k):
    return 1 if k == 0 else d * (d - 1) ** (k - 1)


def test_tree_layer_counts_match_formula():
    for d, depth in ((3, 5), (4, 4), (5, 4)):
        g = build_tree(d, depth)
        counts = np.bincount(g.layer, minlength=depth + 1)
        for k in range(depth + 1):
            assert counts[k] == tree_layer_oracle(d, k)
        assert g.n == counts.sum()


def test_tree_interior_degrees_exact():
    g = build_tree(4, 5)
    assert g.audit_interior_degrees() == []
    assert g.audit_layers()
    # leaves have degree 1: only the root path edge
    for v in np.nonzero(g.layer == 5)[0]:
        assert g.degree(int(v)) == 1


def test_tree_is_bipartite_and_connected():
    g = build_tree(3, 6)
    assert is_bipartite(g)
    # layers realize the bipartition classes
    assert g.audit_layers()


@pytest.mark.parametrize("d,f", [(5, 4), (7, 3), (5, 5), (6, 4)])
def test_hyperbolic_audits(d, f):
    g = build_hyperbolic(d, f, 5)
    assert g.audit_layers()
    assert g.audit_interior_degrees() == []
    n_faces, offenders = g.audit_interior_faces()
    assert offenders == []
    assert n_faces > 0


def test_hyperbolic_rejects_euclidean_or_spherical():
    for d, f in ((4, 4), (3, 6), (6, 3), (3, 5)):
        with pytest.raises(ValueError):
            build_hyperbolic(d, f, 4)


def test_round_trip_text():
    g = build_hyperbolic(5, 4, 4)
    h = Graph.from_text(g.to_text())
    assert h.n == g.n
    assert np.array_equal(h.indptr, g.indptr)
    assert np.array_equal(h.indices, g.indices)
    assert np.array_equal(h.layer, g.layer)


def test_bipartite_detection():
    assert is_bipartite(build_hyperbolic(5, 4, 4))
    assert not is_bipartite(build_hyperbolic(7, 3, 4))


def test_phi_e_formula_values():
    # (d - 2) * sqrt(1 - 4 / ((d-2)(f-2))) style closed form, f = 3 and 4
    for d, f in ((5, 4), (7, 3), (6, 4), (12, 3)):
        exact = phi_e_surd(d, f)
        assert abs(float(exact) - phi_e_formula(d, f)) < 1e-12
        assert phi_e_formula(d, f) > 0


def test_alpha_lower_monotone_in_d():
    # the triangle-permitting bound degenerates to 0 below d = 7
    vals3 = [alpha_lower(d, False) for d in range(7, 13)]
    vals4 = [alpha_lower(d, True) for d in range(5, 13)]
    assert alpha_lower(5, False) == alpha_lower(6, False) == 0.0
    assert all(b > a for a, b in zip(vals3, vals3[1:]))
    assert all(b > a for a, b in zip(vals4, vals4[1:]))
    # triangle-free bound is the stronger one at equal degree
    for d in range(5, 13):
        assert alpha_lower(d, True) > alpha_lower(d, False)


def brute_reference(g, max_size):
    """Independent boundary-ratio minimum by itertools over interior
    connected subsets; exponential, keep max_size tiny."""
    interior = [int(v) for v in np.nonzero(g.interior)[0]]
    best = None
    for size in range(1, max_size + 1):
        for K in itertools.combinations(interior, size):
            Ks = set(K)
            # connectivity
            seen = {K[0]}
            stack = [K[0]]
            while stack:
                u = stack.pop()
                for w in g.neighbors(u):
                    if int(w) in Ks and int(w) not in seen:
                        seen.add(int(w))
                        stack.append(int(w))
            if len(seen) != size:
                continue
            cut = sum(1 for u in K for w in g.neighbors(u)
                      if int(w) not in Ks)
            r = Fraction(cut, size)
            if best is None or r < best:
                best = r
    return best


def test_min_ratio_matches_itertools_reference():
    g = build_hyperbolic(5, 4, 4)
    assert brute_force_boundary_ratio(g, 3) == brute_reference(g, 3)
    t = build_tree(3, 4)
    assert brute_force_boundary_ratio(t, 4) == brute_reference(t, 4)


def test_ratio_on_tree_matches_closed_form():
    # connected K of size m in a d-regular tree has cut (d-2)m + 2
    d = 4
    g = build_tree(d, 6)
    for m in range(1, 6):
        r = brute_force_boundary_ratio(g, m)
        assert r == Fraction((d - 2) * m + 2, m)


def test_containing_min_ratio_lower_bounds_interior_min():
    g = build_hyperbolic(5, 4, 4)
    glob = brute_force_boundary_ratio(g, 4)
    per = containing_min_ratio(g, g.root, 4)
    assert per <= glob


def test_expansion_report_consistency():
    g = build_hyperbolic(5, 4, 4)
    rep = expansion_report(g, 4)
    assert rep.brute_min_ratio == brute_force_boundary_ratio(g, 4)
    assert rep.searched_max_size == 4
    assert rep.jbar_witness == compute_jbar(g)


def test_surd_comparison_resolves_close_calls_exactly():
    s5 = Surd.of(0, 1, 5)
    assert ratio_at_least_surd(Fraction(7, 2), s5)
    assert ratio_at_least_surd(Fraction(11, 5), s5) is False
    # deep continued-fraction convergents of sqrt(5) land a hair off on
    # alternating sides; 682^2 = 465124 vs 5 * 305^2 = 465125 and
    # 2889^2 = 8346321 vs 5 * 1292^2 = 8346320. Floats cannot tell.
    assert ratio_at_least_surd(Fraction(682, 305), s5) is False
    assert ratio_at_least_surd(Fraction(2889, 1292), s5)


def test_compute_jbar_tree_is_d_minus_1():
    for d in (3, 4, 5):
        assert compute_jbar(build_tree(d, 5)) == d - 1
