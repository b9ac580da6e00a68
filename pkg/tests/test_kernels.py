import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from pytest import approx

from abc3.errors import ConfigError, InputError, NumericalError
from abc3.kernels import (
    GramMatrix,
    KernelFamily,
    KernelSpec,
    cross_gram,
    eval_kernel,
    gram,
    stable_cholesky,
)

RBF = KernelSpec()
MATERN_HALF = KernelSpec(family=KernelFamily.MATERN, nu=0.5)
SINE = KernelSpec(family=KernelFamily.EXP_SINE_SQUARED)
COMPOSITE = KernelSpec(family=KernelFamily.COMPOSITE, constant_scale=2.0, white_noise=0.3)

ALL_FAMILIES = [RBF, KernelSpec(family=KernelFamily.MATERN, nu=1.5), SINE, COMPOSITE]


def test_rbf_identical_inputs():
    assert eval_kernel(RBF, [0.3, -1.2], [0.3, -1.2]) == approx(1.0)


def test_rbf_half_at_known_distance():
    """exp(-r^2 / 2) = 0.5 when r^2 = 2 ln 2."""
    x2 = [math.sqrt(2.0 * math.log(2.0)), 0.0]
    assert eval_kernel(RBF, [0.0, 0.0], x2) == approx(0.5, abs=1e-14)


def test_matern_half_is_exponential():
    assert eval_kernel(MATERN_HALF, [0.0], [1.0]) == approx(math.exp(-1.0), abs=1e-14)


def test_matern_unsupported_nu_rejected():
    with pytest.raises(ConfigError):
        KernelSpec(family=KernelFamily.MATERN, nu=3.0)


def test_nonpositive_lengthscale_rejected():
    with pytest.raises(ConfigError):
        KernelSpec(lengthscale=0.0)
    with pytest.raises(ConfigError):
        KernelSpec(lengthscale=-1.0)


def test_dimension_mismatch():
    with pytest.raises(InputError):
        eval_kernel(RBF, [0.0, 1.0], [0.0])
    with pytest.raises(InputError):
        cross_gram(RBF, np.zeros((3, 2)), np.zeros((4, 3)))


def test_composite_self_value_is_constant_scale():
    # white noise is observation-level: it never enters the pairwise value
    assert eval_kernel(COMPOSITE, [1.0], [1.0]) == approx(2.0)
    assert COMPOSITE.prior_variance == approx(2.0)


@settings(max_examples=40, deadline=None)
@given(
    st.integers(min_value=0, max_value=3),
    st.lists(st.floats(-5, 5), min_size=2, max_size=4),
    st.lists(st.floats(-5, 5), min_size=2, max_size=4),
)
def test_symmetry_and_bounds(which, xs, ys):
    spec = ALL_FAMILIES[which]
    d = min(len(xs), len(ys))
    x, y = xs[:d], ys[:d]
    kxy = eval_kernel(spec, x, y)
    kyx = eval_kernel(spec, y, x)
    assert kxy == approx(kyx, abs=1e-12)
    if spec.family is not KernelFamily.COMPOSITE:
        assert 0.0 <= kxy <= 1.0 + 1e-12
        assert eval_kernel(spec, x, x) == approx(1.0, abs=1e-12)


def test_gram_single_row():
    gm = gram(RBF, np.array([[0.4, 2.0]]))
    assert gm.entries == approx(np.array([[1.0]]))
    assert gm.jitter == 0.0


def test_gram_duplicate_rows_need_jitter():
    x = np.array([[1.0, 2.0], [1.0, 2.0]])
    with pytest.raises(np.linalg.LinAlgError):
        np.linalg.cholesky(cross_gram(RBF, x, x))
    gm = gram(RBF, x)
    assert gm.jitter > 0
    np.linalg.cholesky(gm.stabilized)  # must not raise


def test_gram_psd_after_jitter():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(10, 3))
    gm = gram(RBF, x)
    eigs = np.linalg.eigvalsh(gm.stabilized)
    assert eigs.min() >= -1e-10


def test_gram_composite_includes_white_on_diagonal():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(5, 2))
    gm = gram(COMPOSITE, x)
    latent = cross_gram(COMPOSITE, x, x)
    assert gm.entries == approx(latent + 0.3 * np.eye(5))


def test_cross_gram_matches_elementwise_loop():
    rng = np.random.default_rng(2)
    x, z = rng.normal(size=(5, 2)), rng.normal(size=(3, 2))
    for spec in ALL_FAMILIES:
        got = cross_gram(spec, x, z)
        want = np.array([[eval_kernel(spec, xi, zj) for zj in z] for xi in x])
        assert got == approx(want, abs=1e-14)


def test_cross_gram_equals_gram_minus_jitter():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(8, 3))
    # the periodic kernel is only PSD on scalar inputs, so it gets a 1-D pool
    for spec, pool in ((RBF, x), (MATERN_HALF, x), (SINE, x[:, :1])):
        gm = gram(spec, pool)
        assert np.array_equal(cross_gram(spec, pool, pool), gm.entries)


def test_cross_gram_column_vector_against_pool():
    rng = np.random.default_rng(4)
    pool = rng.normal(size=(6, 2))
    col = cross_gram(RBF, pool, pool[2])
    assert col.shape == (6, 1)
    assert col[2, 0] == approx(1.0)


def test_jitter_at_recommended_level_factorizes():
    rng = np.random.default_rng(5)
    for n in (5, 20, 40):
        x = rng.normal(size=(n, 3))
        entries = cross_gram(RBF, x, x)
        jitter = 1e-8 * np.mean(np.diag(entries))
        np.linalg.cholesky(entries + jitter * np.eye(n))


def test_stable_cholesky_gives_up_on_indefinite():
    mat = np.array([[1.0, 0.0], [0.0, -5.0]])
    with pytest.raises(NumericalError, match="eigenvalue"):
        stable_cholesky(mat)


def test_gram_matrix_dataclass_roundtrip():
    gm = GramMatrix(entries=np.eye(2), jitter=0.5)
    assert gm.stabilized == approx(np.eye(2) * 1.5)
