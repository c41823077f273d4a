"""Field determinism and the scalar/compiled bit-equality contract."""
import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from kcmlab import _kernels
from kcmlab.randomness import (Mark, RandomField, classify_point, mix64,
                               uniform_at)


def test_same_seed_same_values():
    a = RandomField(42, 3)
    b = RandomField(42, 3)
    for x in range(5):
        for t in range(1, 5):
            assert a.uniform_at(x, t) == b.uniform_at(x, t)


def test_trials_and_streams_decorrelate():
    f = RandomField(42)
    vals = {f.for_trial(i).uniform_at(7, 3) for i in range(50)}
    assert len(vals) == 50
    streams = {s: f.uniform_at(7, 3, stream=s)
               for s in ("L", "init", "poisc", "poist", "fau")}
    assert len(set(streams.values())) == 5


def test_query_order_irrelevant():
    f = RandomField(9, 1)
    forward = [f.uniform_at(x, 2) for x in range(20)]
    backward = [f.uniform_at(x, 2) for x in reversed(range(20))]
    assert forward == backward[::-1]


@given(st.integers(0, 2**64 - 1))
@settings(max_examples=200, deadline=None)
def test_mix64_scalar_matches_compiled(z):
    assert mix64(z) == int(_kernels.mix64(np.uint64(z)))


def test_uniform_row_matches_scalar_path():
    f = RandomField(2026, 4)
    for t in (1, 7, 33):
        row = f.uniform_row(50, t)
        for x in range(50):
            assert row[x] == f.uniform_at(x, t)


def test_uniform_block_matches_row():
    f = RandomField(17, 0)
    blk = _kernels.uniform_block(f.base("L"), 30, 1, 6)
    for t in range(1, 6):
        assert np.array_equal(blk[t - 1], f.uniform_row(30, t))


def test_init_uniforms_use_init_stream():
    f = RandomField(5, 0)
    init = f.init_uniforms(10)
    assert not np.array_equal(init, f.uniform_row(10, 0))
    assert np.array_equal(init, f.uniform_row(10, 0, stream="init"))


def test_uniforms_in_unit_interval_and_spread():
    f = RandomField(1234, 0)
    row = f.uniform_row(4000, 1)
    assert (0.0 <= row).all() and (row < 1.0).all()
    assert abs(row.mean() - 0.5) < 0.03
    assert abs((row < 0.25).mean() - 0.25) < 0.03


def test_poisson_clock_deterministic_and_sorted():
    f = RandomField(77, 2)
    t1, u1 = f.poisson_clock(3, 12.0)
    t2, u2 = f.poisson_clock(3, 12.0)
    assert np.array_equal(t1, t2) and np.array_equal(u1, u2)
    assert (np.diff(t1) >= 0).all()
    assert ((0 <= t1) & (t1 <= 12.0)).all()


def test_poisson_counts_mean():
    f = RandomField(31, 0)
    mu = 7.5
    counts = [len(f.for_trial(i).poisson_clock(0, mu)[0])
              for i in range(400)]
    m = float(np.mean(counts))
    assert abs(m - mu) < 3 * np.sqrt(mu / 400) + 0.2


def test_poisson_counts_kernel_agrees():
    f = RandomField(31, 6)
    ks = _kernels.poisson_counts(f.base("poisc"), 20, 5.0)
    for x in range(20):
        assert ks[x] == len(f.poisson_clock(x, 5.0)[0])


def test_classify_point_bands():
    assert classify_point(0.5, 0.2, "bp") == Mark("update", None)
    assert classify_point(0.1, 0.2, "bp") == Mark("noise", 0)
    assert classify_point(0.1, 0.2, "cp") == Mark("noise", 0)
    # majority noise splits the band: low half forces 0, high half 1
    assert classify_point(0.05, 0.2, "nmvp") == Mark("noise", 0)
    assert classify_point(0.15, 0.2, "nmvp") == Mark("noise", 1)
    assert classify_point(0.0, 0.0, "nmvp") == Mark("update", None)


def test_free_function_rejects_time_zero():
    import pytest
    with pytest.raises(ValueError):
        uniform_at(RandomField(0), 0, 0)
