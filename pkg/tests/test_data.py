import numpy as np
import pytest
from pytest import approx

from abc3.data import (
    CovariatePool,
    SplitSpec,
    gen_synthetic,
    load_csv,
    normalize,
    save_csv,
    split,
)
from abc3.errors import ConfigError, InputError
from abc3.metrics import pehe


def test_load_well_formed(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("x0,x1,y0,y1\n1,2,3,4\n5,6,7,8\n0,0,1,1\n")
    pool = load_csv(path)
    assert pool.n == 3 and pool.d == 2
    assert pool.y1 == approx([4.0, 8.0, 1.0])
    assert pool.dist == approx(np.full(3, 1 / 3))


def test_load_missing_y1_without_null_flag(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("x0,y0\n1,2\n3,4\n")
    with pytest.raises(InputError, match="y1"):
        load_csv(path)
    pool = load_csv(path, null_hypothesis=True)
    assert np.array_equal(pool.y0, pool.y1)


def test_load_names_bad_cell(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("x0,y0,y1\n1,2,3\n1,oops,3\n")
    with pytest.raises(InputError, match=r"row 3, column y0"):
        load_csv(path)


def test_load_rejects_nan(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("x0,y0,y1\n1,2,3\n1,nan,3\n")
    with pytest.raises(InputError, match="non-finite"):
        load_csv(path)


def test_load_rejects_bad_header(tmp_path):
    path = tmp_path / "p.csv"
    path.write_text("a,b,y0,y1\n1,2,3,4\n1,2,3,4\n")
    with pytest.raises(InputError, match="header"):
        load_csv(path)


def test_roundtrip_bit_identical(tmp_path):
    pool = gen_synthetic("smooth-gp", 30, 4, seed=0)
    p1 = tmp_path / "a.csv"
    p2 = tmp_path / "b.csv"
    save_csv(pool, p1)
    loaded = load_csv(p1)
    assert np.array_equal(loaded.X, pool.X)
    assert np.array_equal(loaded.y0, pool.y0)
    assert np.array_equal(loaded.y1, pool.y1)
    save_csv(loaded, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_normalize_constant_column_maps_to_zero():
    x = np.column_stack([np.full(5, 7.0), np.arange(5.0)])
    pool = CovariatePool(X=x, y0=np.zeros(5), y1=np.zeros(5))
    normed = normalize(pool)
    assert normed.X[:, 0] == approx(np.zeros(5))


def test_normalize_moments():
    rng = np.random.default_rng(1)
    pool = CovariatePool(X=rng.normal(3, 5, size=(40, 3)), y0=np.zeros(40), y1=np.zeros(40))
    normed = normalize(pool)
    assert np.abs(normed.X.mean(axis=0)).max() < 1e-10
    assert normed.X.std(axis=0) == approx(np.ones(3), abs=1e-10)


def test_split_sizes_and_partition():
    pool = gen_synthetic("smooth-gp", 10, 2, seed=2)
    train, test = split(pool, SplitSpec(seed=0, train_fraction=0.5))
    assert train.n == 5 and test.n == 5
    # disjoint and exhaustive on the raw covariates
    joined = np.vstack([train.x_raw, test.x_raw])
    assert sorted(map(tuple, joined)) == sorted(map(tuple, pool.x_raw))


def test_split_deterministic():
    pool = gen_synthetic("smooth-gp", 20, 2, seed=3)
    a = split(pool, SplitSpec(seed=7))
    b = split(pool, SplitSpec(seed=7))
    assert np.array_equal(a[0].X, b[0].X) and np.array_equal(a[1].y1, b[1].y1)


def test_split_train_stats_applied_to_test():
    pool = gen_synthetic("smooth-gp", 50, 3, seed=4)
    train, test = split(pool, SplitSpec(seed=1))
    assert np.abs(train.X.mean(axis=0)).max() < 1e-10
    # test stats are near but not exactly standardized (train stats applied)
    assert np.abs(test.X.mean(axis=0)).max() > 1e-10


def test_split_null_flag_forces_equal_outcomes():
    pool = gen_synthetic("smooth-gp", 12, 2, seed=5)
    train, test = split(pool, SplitSpec(seed=0, null_hypothesis=True))
    assert np.array_equal(train.y0, train.y1)
    assert np.array_equal(test.y0, test.y1)


def test_split_guards_degenerate_fraction():
    pool = gen_synthetic("smooth-gp", 4, 1, seed=6)
    with pytest.raises(ConfigError):
        split(pool, SplitSpec(seed=0, train_fraction=0.01))
    with pytest.raises(ConfigError):
        SplitSpec(seed=0, train_fraction=1.5)


def test_null_kind_outcomes_identical():
    pool = gen_synthetic("null", 25, 3, seed=7)
    assert np.array_equal(pool.y0, pool.y1)
    assert pool.is_null
    assert pehe(np.zeros(pool.n), pool.true_cate()) == 0.0


def test_linear_kind_ols_recovers_coefficients():
    pool = gen_synthetic("linear", 60, 4, seed=8, noise=0.0)
    beta0, *_ = np.linalg.lstsq(pool.X, pool.y0, rcond=None)
    beta1, *_ = np.linalg.lstsq(pool.X, pool.y1, rcond=None)
    assert pool.X @ beta0 == approx(pool.y0, abs=1e-8)
    assert pool.X @ beta1 == approx(pool.y1, abs=1e-8)


def test_gen_synthetic_deterministic():
    a = gen_synthetic("smooth-gp", 15, 2, seed=9)
    b = gen_synthetic("smooth-gp", 15, 2, seed=9)
    assert np.array_equal(a.X, b.X) and np.array_equal(a.y0, b.y0)


def test_gen_synthetic_validates():
    with pytest.raises(ConfigError):
        gen_synthetic("mystery", 10, 2)
    with pytest.raises(InputError):
        gen_synthetic("null", 2, 2)


def test_pool_rejects_nonfinite():
    with pytest.raises(InputError):
        CovariatePool(X=np.array([[np.nan]]), y0=np.zeros(1), y1=np.zeros(1))
