import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from pytest import approx

from abc3 import gp
from abc3.data import CovariatePool, gen_synthetic
from abc3.errors import InputError
from abc3.kernels import KernelSpec, cross_gram, eval_kernel
from abc3.metrics import (
    check_assumption,
    mmd_bound_report,
    mmd_sq,
    pehe,
    pehe_omega,
    type1_test,
    write_assumption_csv,
)
from abc3.policies import PolicyContext

ACQ = KernelSpec(noise_variance=1.0)
RBF = KernelSpec()


# ---------------------------------------------------------------- pehe


def test_pehe_zero_on_equal_vectors():
    v = np.array([1.0, -2.0, 0.5])
    assert pehe(v, v) == 0.0


def test_pehe_constant_offset():
    v = np.zeros(7)
    assert pehe(v + 3.0, v) == approx(9.0)


def test_pehe_matches_loop():
    rng = np.random.default_rng(0)
    a, b = rng.normal(size=20), rng.normal(size=20)
    want = sum((ai - bi) ** 2 for ai, bi in zip(a, b)) / 20
    assert pehe(a, b) == approx(want, abs=1e-12)


def test_pehe_length_mismatch():
    with pytest.raises(InputError):
        pehe([1.0], [1.0, 2.0])


def test_pehe_omega_same_functional():
    rng = np.random.default_rng(1)
    a, b = rng.normal(size=9), rng.normal(size=9)
    assert pehe_omega(a, b) == pehe(a, b)
    assert pehe_omega(a, a) == 0.0


# ---------------------------------------------------------------- mmd


def test_mmd_zero_on_identical_sets():
    rng = np.random.default_rng(2)
    a = rng.normal(size=(6, 3))
    assert mmd_sq(RBF, a, a) == approx(0.0, abs=1e-12)


def test_mmd_singletons_closed_form():
    x, y = np.array([0.0, 0.0]), np.array([1.0, 1.0])
    want = 2.0 - 2.0 * eval_kernel(RBF, x, y)
    assert mmd_sq(RBF, x[None], y[None]) == approx(want, abs=1e-14)


def test_mmd_matches_triple_sum_oracle():
    rng = np.random.default_rng(3)
    for _ in range(5):
        a = rng.normal(size=(rng.integers(2, 7), 2))
        b = rng.normal(size=(rng.integers(2, 7), 2))
        total = 0.0
        for x in a:
            for x2 in a:
                total += eval_kernel(RBF, x, x2) / (len(a) ** 2)
        for y in b:
            for y2 in b:
                total += eval_kernel(RBF, y, y2) / (len(b) ** 2)
        for x in a:
            for y in b:
                total -= 2.0 * eval_kernel(RBF, x, y) / (len(a) * len(b))
        assert mmd_sq(RBF, a, b) == approx(max(total, 0.0), abs=1e-10)


def test_mmd_empty_set_rejected():
    with pytest.raises(InputError):
        mmd_sq(RBF, np.zeros((0, 2)), np.zeros((3, 2)))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_mmd_symmetric_and_permutation_invariant(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(int(rng.integers(2, 6)), 2))
    b = rng.normal(size=(int(rng.integers(2, 6)), 2))
    assert mmd_sq(RBF, a, b) == approx(mmd_sq(RBF, b, a), abs=1e-12)
    perm = rng.permutation(len(a))
    assert mmd_sq(RBF, a[perm], b) == approx(mmd_sq(RBF, a, b), abs=1e-12)


def test_mmd_relaxed_triangle_bound():
    rng = np.random.default_rng(4)
    for _ in range(10):
        a = rng.normal(size=(4, 2))
        b = rng.normal(size=(5, 2))
        c = rng.normal(size=(3, 2))
        ab = mmd_sq(RBF, a, b)
        assert ab <= 2.0 * mmd_sq(RBF, a, c) + 2.0 * mmd_sq(RBF, b, c) + 1e-12


# ------------------------------------------------------- bound report


def _ctx_with(pool, obs):
    ctx = PolicyContext.fresh(pool, ACQ, np.random.default_rng(0))
    for idx, arm in obs:
        ctx = ctx.with_arm_state(
            arm, gp.extend(ctx.arm_states[arm], idx, pool.outcome(idx, arm))
        )
    return ctx


def test_bound_trivially_holds_with_full_observation():
    pool = gen_synthetic("smooth-gp", 8, 2, seed=5)
    obs = [(i, 0) for i in range(4)] + [(i, 1) for i in range(4, 8)]
    report = mmd_bound_report(_ctx_with(pool, obs))
    assert report.bound_rhs > 0
    assert report.n_treat == 4 and report.n_control == 4


def test_bound_report_single_point_arms():
    x = np.zeros((2, 1))
    pool = CovariatePool(X=x, y0=np.zeros(2), y1=np.zeros(2))
    report = mmd_bound_report(_ctx_with(pool, [(0, 0), (1, 1)]))
    assert report.mmd_sq == approx(0.0, abs=1e-12)
    assert report.mmd_sq <= report.bound_rhs


def test_bound_needs_both_arms():
    pool = gen_synthetic("smooth-gp", 6, 2, seed=6)
    with pytest.raises(InputError):
        mmd_bound_report(_ctx_with(pool, [(0, 0)]))


def test_bound_holds_along_random_runs():
    rng = np.random.default_rng(7)
    for seed in range(5):
        pool = gen_synthetic("smooth-gp", 30, 3, seed=seed)
        reports = check_assumption(ACQ, pool, permutations=20, rng=np.random.default_rng(seed))
        assert all(r.min_gap >= 0 for r in reports)
        ctx = PolicyContext.fresh(pool, ACQ, rng)
        order = rng.permutation(30)
        for t, idx in enumerate(order):
            arm = int(rng.integers(0, 2))
            ctx = ctx.with_arm_state(
                arm, gp.extend(ctx.arm_states[arm], int(idx), pool.outcome(int(idx), arm))
            )
            if ctx.arm_states[0].size and ctx.arm_states[1].size and t % 5 == 4:
                report = mmd_bound_report(ctx)
                assert report.mmd_sq <= report.bound_rhs


# --------------------------------------------------- assumption check


def test_assumption_full_set_identities():
    pool = gen_synthetic("smooth-gp", 12, 2, seed=8)
    reports = check_assumption(RBF, pool, permutations=10)
    last = reports[-1]
    assert last.n == 12
    assert last.eps_star_max == 0.0
    assert last.min_gap == approx(2.0 * last.M)
    g = cross_gram(RBF, pool.X, pool.X)
    assert last.M == approx(float(g.mean()), abs=1e-10)


def test_assumption_identical_covariates():
    x = np.zeros((6, 2))
    pool = CovariatePool(X=x, y0=np.zeros(6), y1=np.zeros(6))
    reports = check_assumption(RBF, pool, permutations=5)
    for r in reports:
        assert r.eps_star_max == approx(0.0, abs=1e-12)
        assert r.two_delta_star_min == approx(2.0, abs=1e-12)


def test_assumption_gap_positive_on_gaussian_pool():
    pool = gen_synthetic("smooth-gp", 50, 3, seed=9)
    reports = check_assumption(RBF, pool, permutations=100)
    assert all(r.min_gap > 0 for r in reports)


def test_assumption_matches_direct_prefix_evaluation():
    pool = gen_synthetic("smooth-gp", 10, 2, seed=10)
    g = cross_gram(RBF, pool.X, pool.X)
    m = float(g.mean())
    rng_seed = 123
    reports = check_assumption(RBF, pool, permutations=1, rng=np.random.default_rng(rng_seed))
    order = np.random.default_rng(rng_seed).permutation(10)
    for n in range(1, 10):  # n == N collapses by definition, checked above
        prefix = order[:n]
        delta = float(g[prefix].mean(axis=1).mean())
        eps = m - float(g[np.ix_(prefix, prefix)].mean())
        r = reports[n - 1]
        assert r.two_delta_star_min == approx(2 * delta, abs=1e-10)
        assert r.eps_star_max == approx(eps, abs=1e-10)
        assert r.min_gap == approx(2 * delta - eps, abs=1e-10)


def test_assumption_rejects_zero_permutations():
    pool = gen_synthetic("smooth-gp", 6, 2, seed=11)
    with pytest.raises(InputError):
        check_assumption(RBF, pool, permutations=0)


def test_assumption_csv_schema(tmp_path):
    pool = gen_synthetic("smooth-gp", 6, 2, seed=12)
    reports = check_assumption(RBF, pool, permutations=3)
    out = tmp_path / "gaps.csv"
    write_assumption_csv(reports, out)
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "n,two_delta_star_min,eps_star_max,min_gap"
    assert len(lines) == 7


# ---------------------------------------------------------- type1


def test_type1_identical_arms_never_reject():
    pool = gen_synthetic("smooth-gp", 10, 2, seed=13)
    state = gp.fit(KernelSpec(noise_variance=0.1), pool, [0, 2, 4], pool.y0[[0, 2, 4]])
    report = type1_test((state, state), pool.X)
    assert report.per_point_z == approx(np.zeros(10))
    assert report.rejection_rate == 0.0


def test_type1_huge_alpha_never_rejects():
    pool = gen_synthetic("smooth-gp", 10, 2, seed=14)
    s0 = gp.fit(KernelSpec(noise_variance=0.1), pool, [0, 1], pool.y0[:2])
    s1 = gp.fit(KernelSpec(noise_variance=0.1), pool, [2, 3], pool.y1[2:4])
    report = type1_test((s0, s1), pool.X, alpha=1e9)
    assert report.rejection_rate == 0.0


def test_type1_rate_is_mean_of_rejections():
    pool = gen_synthetic("smooth-gp", 12, 2, seed=15)
    s0 = gp.fit(KernelSpec(noise_variance=0.1), pool, [0, 1, 2], pool.y0[:3])
    s1 = gp.fit(KernelSpec(noise_variance=0.1), pool, [3, 4], pool.y1[3:5])
    report = type1_test((s0, s1), pool.X, alpha=0.5)
    assert report.rejection_rate == approx(float(np.mean(np.abs(report.per_point_z) > 0.5)))


def test_type1_degenerate_variance_counts_as_rejection():
    # noiseless arms observed at the same query point: pooled variance is 0
    x = np.array([[0.0], [3.0]])
    pool = CovariatePool(X=x, y0=np.array([1.0, 0.0]), y1=np.array([2.0, 0.0]))
    s0 = gp.fit(RBF, pool, [0], [1.0])
    s1 = gp.fit(RBF, pool, [0], [2.0])
    report = type1_test((s0, s1), x[:1])
    assert report.degenerate_points == 1
    assert report.rejection_rate == 1.0


def test_type1_destandardization_scales():
    pool = gen_synthetic("smooth-gp", 10, 2, seed=16)
    spec = KernelSpec(noise_variance=0.1)
    s0 = gp.fit(spec, pool, [0, 1, 2], np.array([0.1, -0.2, 0.3]))
    s1 = gp.fit(spec, pool, [3, 4, 5], np.array([-0.1, 0.4, 0.2]))
    plain = type1_test((s0, s1), pool.X)
    # equal scaling of both arms leaves z invariant; offsets shift the mean
    scaled = type1_test((s0, s1), pool.X, scales=((0.0, 2.0), (0.0, 2.0)))
    assert scaled.per_point_z == approx(plain.per_point_z, abs=1e-12)
    shifted = type1_test((s0, s1), pool.X, scales=((1.0, 1.0), (0.0, 1.0)))
    assert not np.allclose(shifted.per_point_z, plain.per_point_z)
