import numpy as np
import pytest

from conftest import ALL_KERNELS, random_sample
from funcpd.core import FunctionalSample
from funcpd.kernels import KernelSpec, evaluate
from funcpd.ustat import (
    KernelTable,
    brute_force_trajectory,
    compute_row_sums,
    cusum_identity_check,
    hoeffding_decomposition,
    hoeffding_plugin,
    ustat_process,
)

cusum, sign = KernelSpec.cusum(), KernelSpec.spatial_sign()


def direct_row_sums(sample, spec):
    X = sample.data
    return np.array([sum(evaluate(spec, X[i], X[j]) for j in range(sample.n)) for i in range(sample.n)])


def test_row_sums_examples(kernel):
    const = FunctionalSample(np.tile([1.0, -2.0, 0.5], (6, 1)))
    np.testing.assert_array_equal(compute_row_sums(const, kernel), np.zeros((6, 3)))
    np.testing.assert_array_equal(compute_row_sums(FunctionalSample([1.0, 2.0, 3.0]), cusum), [[-3], [0], [3]])
    np.testing.assert_array_equal(compute_row_sums(FunctionalSample([0.0, 5.0]), sign), [[-1], [1]])


def test_row_sums_match_direct_loop_and_cache_paths(kernel, rng):
    s = random_sample(rng, 17, 4)
    expected = direct_row_sums(s, kernel)
    np.testing.assert_allclose(compute_row_sums(s, kernel), expected, rtol=1e-12, atol=1e-12)
    cached = KernelTable(s, kernel, cache_budget_mb=100).row_sums
    streamed = KernelTable(s, kernel, cache_budget_mb=0).row_sums
    np.testing.assert_allclose(cached, streamed, rtol=1e-13, atol=1e-13)


def test_row_sums_sum_to_zero(kernel, rng):
    s = random_sample(rng, 40, 5)
    R = compute_row_sums(s, kernel)
    assert np.linalg.norm(R.sum(axis=0)) <= 1e-8 * (np.linalg.norm(R, axis=1).sum() + 1)


def test_process_examples():
    p = ustat_process(FunctionalSample([[0.0], [0.0]]), cusum)
    assert p.statistic == 0 and list(p.traj_norms) == [0]
    p = ustat_process(FunctionalSample([0.0, 0.0, 1.0, 1.0]), cusum)
    # brute force: k=1 -> 2, k=2 -> 4, k=3 -> 2
    np.testing.assert_allclose(p.traj_norms, [2, 4, 2])
    assert p.argmax_k == 2 and p.statistic == pytest.approx(0.5)
    assert p.raw_max == 4


def test_process_rejects_single_observation():
    with pytest.raises(ValueError):
        ustat_process(FunctionalSample([[1.0], [2.0]]).__class__(np.zeros((1, 2))), cusum)


def test_argmax_tie_break_smallest_k():
    # symmetric series: ||U_{n,1}|| = ||U_{n,3}||
    p = ustat_process(FunctionalSample([1.0, 0.0, 0.0, 1.0]), cusum)
    assert p.traj_norms[0] == p.traj_norms[2] > p.traj_norms[1]
    assert p.argmax_k == 1


def test_sign_kernel_matches_brute_force(rng):
    s = random_sample(rng, 30, 5)
    fast = ustat_process(s, sign)
    slow = ustat_process(s, sign, brute_force=True)
    np.testing.assert_allclose(fast.traj_norms, slow.traj_norms, rtol=1e-9)
    np.testing.assert_allclose(fast.trajectory, brute_force_trajectory(s, sign), rtol=1e-9, atol=1e-12)
    assert fast.argmax_k == slow.argmax_k


def test_time_reversal(kernel, rng):
    s = random_sample(rng, 25, 3)
    rev = FunctionalSample(s.data[::-1])
    a, b = ustat_process(s, kernel), ustat_process(rev, kernel)
    np.testing.assert_allclose(b.traj_norms, a.traj_norms[::-1], rtol=1e-10, atol=1e-10)
    assert b.statistic == pytest.approx(a.statistic, rel=1e-10)


def test_translation_and_scale_invariance(kernel, rng):
    s = random_sample(rng, 25, 3)
    shifted = FunctionalSample(s.data + rng.standard_normal(3))
    assert ustat_process(shifted, kernel).statistic == pytest.approx(ustat_process(s, kernel).statistic, rel=1e-10)
    base = ustat_process(s, sign).statistic
    # powers of two scale exactly in floating point
    assert ustat_process(FunctionalSample(4.0 * s.data), sign).statistic == base
    assert ustat_process(FunctionalSample(3.7 * s.data), sign).statistic == pytest.approx(base, rel=1e-12)


def test_hoeffding_plugin_examples(kernel):
    const = FunctionalSample(np.ones((5, 2)))
    np.testing.assert_array_equal(hoeffding_plugin(const, kernel).h1_hat, np.zeros((5, 2)))
    hp = hoeffding_plugin(FunctionalSample([1.0, 2.0, 3.0]), cusum)
    np.testing.assert_allclose(hp.h1_hat, [[-1.5], [0], [1.5]])
    hp = hoeffding_plugin(FunctionalSample([0.0, 1.0]), sign)
    np.testing.assert_allclose(hp.h1_hat, [[-1], [1]])
    np.testing.assert_allclose(hp.mean_h1, hp.h1_hat.mean(axis=0))


def test_hoeffding_identity(kernel, rng):
    s = random_sample(rng, 12, 3)
    lin, deg = hoeffding_decomposition(s, kernel)
    U = brute_force_trajectory(s, kernel)
    scale = np.max(np.linalg.norm(lin, axis=1) + np.linalg.norm(deg, axis=1))
    assert np.max(np.linalg.norm(U - lin - deg, axis=1)) < 1e-8 * scale


def test_cusum_identity_examples(rng):
    assert cusum_identity_check(random_sample(rng, 40, 6)) < 1e-9
    s = FunctionalSample([0.0, 0.0, 1.0, 1.0])
    # both sides are 0.5 at k=2: 4 / 4**1.5 and ||(-0.5) + (-0.5)|| / 2
    assert cusum_identity_check(s) < 1e-15
    assert cusum_identity_check(FunctionalSample(np.ones((8, 3)))) == 0
