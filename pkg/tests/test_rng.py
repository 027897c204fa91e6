import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from parisian_ruin import kernels, rng


def test_mix64_reference_values():
    # SplitMix64 seeded with 0: first outputs of the reference generator
    state, out = 0, []
    for _ in range(3):
        state = (state + rng.GOLDEN) & ((1 << 64) - 1)
        out.append(rng._fmix(state))
    assert out == [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]
    assert rng.mix64(0) == out[0]


def test_fmix_array_matches_scalar():
    xs = [0, 1, 2 ** 63, 2 ** 64 - 1, 0x123456789ABCDEF]
    assert [int(v) for v in rng.fmix_array(np.array(xs, dtype=np.uint64))] == [rng._fmix(x) for x in xs]


def test_unit_ranges():
    bits = np.array([0, 2 ** 64 - 1], dtype=np.uint64)
    lo, hi = rng.to_unit(bits)
    assert lo == 0.0 and hi < 1.0
    lo, hi = rng.to_unit_open(bits)
    assert lo > 0.0 and hi == 1.0


def test_keys_depend_on_absolute_index():
    a = rng.path_keys(9, 1, 0, 100)
    b = rng.path_keys(9, 1, 40, 60)
    assert np.array_equal(a[40:], b)
    assert len(np.unique(a)) == 100
    assert not np.array_equal(a, rng.path_keys(9, 2, 0, 100))
    assert not np.array_equal(a, rng.path_keys(10, 1, 0, 100))


def test_normals_deterministic_and_sliceable():
    keys = rng.path_keys(1, 1, 0, 50)
    slots = np.arange(200, dtype=np.uint64)
    z = rng.normals(keys, slots)
    assert np.array_equal(z, rng.normals(keys, slots))
    assert np.array_equal(z[10:20, 50:80], rng.normals(keys[10:20], slots[50:80]))


def test_normal_moments_and_ks():
    z = rng.normals(rng.path_keys(2024, 1, 0, 400), np.arange(1000, dtype=np.uint64)).ravel()
    n = z.size
    assert abs(z.mean()) < 5 / np.sqrt(n)
    assert abs(z.var() - 1) < 5 * np.sqrt(2 / n)
    assert abs(stats.skew(z)) < 5 * np.sqrt(6 / n)
    assert abs(stats.kurtosis(z)) < 5 * np.sqrt(24 / n)
    assert stats.kstest(z, "norm").pvalue > 1e-4


def test_normal_tail_frequency():
    # the ziggurat base strip (|z| > R) must appear with the right frequency
    z = rng.normals(rng.path_keys(77, 1, 0, 2000), np.arange(2000, dtype=np.uint64)).ravel()
    p = 2 * stats.norm.sf(rng.ZIG_R)
    k = np.count_nonzero(np.abs(z) > rng.ZIG_R)
    assert abs(k - p * z.size) < 5 * np.sqrt(p * z.size)
    assert np.count_nonzero(np.abs(z) > 4.5) > 0


def test_adjacent_slots_uncorrelated():
    z = rng.normals(rng.path_keys(3, 1, 0, 20000), np.arange(4, dtype=np.uint64))
    c = np.corrcoef(z.T)
    off = c[~np.eye(4, dtype=bool)]
    assert np.all(np.abs(off) < 5 / np.sqrt(20000))


def test_setup_uniforms_distinct_from_normals():
    keys = rng.path_keys(5, 1, 0, 20000)
    u0, u1 = rng.setup_uniforms(keys, 0), rng.setup_uniforms(keys, 1)
    assert np.all((u0 >= 0) & (u0 < 1))
    assert stats.kstest(u0, "uniform").pvalue > 1e-4
    assert abs(np.corrcoef(u0, u1)[0, 1]) < 0.05


@pytest.mark.skipif(kernels.BACKEND != "compiled", reason="compiled kernels not built")
@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2 ** 64 - 1), start=st.integers(0, 2 ** 40))
def test_compiled_normals_identical(seed, start):
    keys = rng.path_keys(seed, 1, start, 16)
    slots = np.arange(0, 3000, 7, dtype=np.uint64)
    assert np.array_equal(kernels.normals(keys, slots, "compiled"), kernels.normals(keys, slots, "python"))
