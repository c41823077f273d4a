"""Discrete sweeps against the numpy reference, coupling order, and the
event-driven engine's basic contracts."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kcmlab.dynamics import (ALL_ONE, ALL_ZERO, Configuration,
                             ContinuousTrajectory, InitialLaw, Process,
                             audit_discrepancy_flow, bernoulli,
                             coupling_violations, count_one_neighbors,
                             effective_adjacency, run_coupled_cp_nmvp,
                             run_discrete, run_fa, run_fa_coupled)
from kcmlab.graphs import build_hyperbolic, build_tree
from kcmlab.randomness import RandomField


@pytest.mark.parametrize("kind,j", [("bp", 2), ("cp", 3), ("nmvp", None)])
@pytest.mark.parametrize("policy", ["one", "zero", "absent"])
def test_kernel_matches_reference(kind, j, policy):
    g = build_tree(4, 4)
    proc = Process(kind, j, 0.15)
    for trial in (0, 1):
        fld = RandomField(5, trial)
        a = run_discrete(g, proc, bernoulli(0.6), 12, fld, policy=policy)
        b = run_discrete(g, proc, bernoulli(0.6), 12, fld, policy=policy,
                         reference=True)
        assert np.array_equal(a.states, b.states)


def test_kernel_matches_reference_hyperbolic():
    g = build_hyperbolic(5, 4, 4)
    fld = RandomField(8, 0)
    for kind, j in (("bp", 3), ("cp", 3), ("nmvp", None)):
        a = run_discrete(g, Process(kind, j, 0.08), ALL_ONE, 15, fld)
        b = run_discrete(g, Process(kind, j, 0.08), ALL_ONE, 15, fld,
                         reference=True)
        assert np.array_equal(a.states, b.states)


def test_all_one_fixed_point_without_noise():
    g = build_tree(5, 4)
    for kind, j in (("bp", 4), ("cp", 4), ("nmvp", None)):
        traj = run_discrete(g, Process(kind, j, 0.0), ALL_ONE, 8,
                            RandomField(0))
        assert traj.states.min() == 1


def test_full_noise_closed_forms():
    g = build_tree(4, 4)
    fld = RandomField(3, 0)
    free = ~g.boundary
    cp = run_discrete(g, Process("cp", 2, 1.0), ALL_ONE, 5, fld)
    assert cp.states[1:, free].max() == 0
    nm = run_discrete(g, Process("nmvp", None, 1.0), ALL_ONE, 5, fld)
    for t in range(1, 6):
        u = fld.uniform_row(g.n, t)
        assert np.array_equal(nm.states[t, free],
                              (u[free] >= 0.5).astype(np.uint8))


def test_nmvp_tie_keeps_own_state():
    g = build_tree(4, 2)
    children = np.nonzero(g.layer == 1)[0]
    for own in (0, 1):
        states = np.ones(g.n, dtype=np.uint8)
        states[g.root] = own
        states[children[:2]] = 0        # root sees 2 of 4 ones: a tie
        init = InitialLaw("explicit", config=states)
        traj = run_discrete(g, Process("nmvp", None, 0.0), init, 1,
                            RandomField(1))
        assert traj.states[1, g.root] == own


def test_bp_monotone_in_time_without_noise():
    g = build_tree(4, 5)
    traj = run_discrete(g, Process("bp", 2, 0.0), bernoulli(0.4), 10,
                        RandomField(12))
    assert (np.diff(traj.states.astype(np.int8), axis=0) >= 0).all()


def test_bp_cp_pathwise_monotone_in_eps():
    g = build_tree(4, 4)
    fld = RandomField(21, 0)
    for kind, j in (("bp", 2), ("cp", 2)):
        lo = run_discrete(g, Process(kind, j, 0.05), ALL_ONE, 15, fld)
        hi = run_discrete(g, Process(kind, j, 0.20), ALL_ONE, 15, fld)
        # shared field: the larger noise level only ever removes ones
        assert (hi.states <= lo.states).all()


@given(st.integers(0, 2**32), st.integers(0, 30))
@settings(max_examples=20, deadline=None)
def test_chi_below_sigma_property(seed, trial):
    g = build_tree(5, 3)
    chi, sigma = run_coupled_cp_nmvp(g, 0.1, 10, RandomField(seed, trial))
    assert coupling_violations(chi, sigma) == 0


def test_boundary_policies():
    g = build_tree(3, 3)
    bd = g.boundary
    one = run_discrete(g, Process("cp", 2, 0.3), ALL_ONE, 6, RandomField(2))
    assert one.states[:, bd].min() == 1
    zero = run_discrete(g, Process("cp", 2, 0.3), ALL_ONE, 6, RandomField(2),
                        policy="zero")
    assert zero.states[:, bd].max() == 0
    indptr, indices = effective_adjacency(g, "absent")
    assert not np.isin(indices, np.nonzero(bd)[0]).any()
    for v in np.nonzero(bd)[0]:
        assert indptr[v] == indptr[v + 1]


def test_count_one_neighbors_consistency():
    g = build_tree(4, 3)
    cfg = bernoulli(0.5).realize(g, RandomField(4), "one")
    for x in range(g.n):
        nbrs = g.neighbors(x)
        assert count_one_neighbors(cfg, g, x) == cfg.states[nbrs].sum()


def test_explicit_init_round_trip_and_validation():
    g = build_tree(3, 3)
    with pytest.raises(ValueError):
        InitialLaw("explicit", config=np.arange(g.n)).realize(
            g, RandomField(0))
    with pytest.raises(ValueError):
        InitialLaw("explicit", config=np.zeros(3)).realize(g, RandomField(0))
    cfg = ALL_ZERO.realize(g, RandomField(0), "zero")
    assert cfg.states.max() == 0


def test_t_zero_is_just_init():
    g = build_tree(3, 3)
    traj = run_discrete(g, Process("bp", 2, 0.5), ALL_ONE, 0, RandomField(7))
    assert traj.states.shape == (1, g.n)
    assert traj.T == 0


# -- event-driven engine -------------------------------------------------


def test_fa_deterministic_and_interpolates():
    g = build_tree(4, 4)
    a = run_fa(g, 2, 0.7, bernoulli(0.7), 10.0, RandomField(6, 1))
    b = run_fa(g, 2, 0.7, bernoulli(0.7), 10.0, RandomField(6, 1))
    assert a.n_events == b.n_events
    for t in (0.0, 3.3, 10.0):
        assert np.array_equal(a.state_at(t), b.state_at(t))
    init = bernoulli(0.7).realize(g, RandomField(6, 1))
    assert np.array_equal(a.state_at(0.0), init.states)


def test_fa_boundary_never_moves():
    g = build_tree(3, 4)
    traj = run_fa(g, 1, 0.4, bernoulli(0.4), 8.0, RandomField(9))
    bd = g.boundary
    for t in (0.0, 2.0, 5.5, 8.0):
        assert traj.state_at(t)[bd].min() == 1


def test_fa_coupled_equal_rates_never_differ():
    g = build_tree(4, 3)
    times = (1.0, 3.0, 6.0)
    _, _, disc = run_fa_coupled(g, 2, 0.8, 0.8, 6.0, RandomField(10),
                                sample_times=times)
    assert set(disc) == set(times)
    assert all(len(v) == 0 for v in disc.values())


def test_fa_coupled_discrepancy_flow_audit():
    g = build_tree(4, 3)
    p, q, disc = run_fa_coupled(g, 2, 0.9, 0.75, 8.0, RandomField(13),
                                sample_times=(2.0, 8.0))
    ok, detail = audit_discrepancy_flow(p, q)
    assert ok, detail
    for t, verts in disc.items():
        sp, sq = p.state_at(t), q.state_at(t)
        assert np.array_equal(np.nonzero(sp != sq)[0], np.sort(verts))
