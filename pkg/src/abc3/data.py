"""Subject pools: CSV ingestion, synthetic benchmarks, splits, normalization.

A pool carries covariates plus BOTH potential outcomes per subject; the
runner reveals exactly one of them per query. Feature normalization is
z-scoring with statistics computed on the train half only; outcome
standardization happens lazily at regression time (see runner) so that
all metrics stay on the raw outcome scale.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, InputError

__all__ = [
    "CovariatePool",
    "SplitSpec",
    "load_csv",
    "save_csv",
    "normalize",
    "split",
    "gen_synthetic",
    "SYNTHETIC_KINDS",
]

SYNTHETIC_KINDS = ("smooth-gp", "linear", "null")


@dataclass(frozen=True)
class CovariatePool:
    """Subject pool with covariates, both potential outcomes and weights.

    ``X`` is on whatever scale the pool is currently in (raw after loading,
    z-scored after ``normalize``/``split``); ``x_raw`` always keeps the
    loaded values for round-trip IO.
    """

    X: np.ndarray
    y0: np.ndarray
    y1: np.ndarray
    name: str = "pool"
    dist: np.ndarray = field(default=None)  # type: ignore[assignment]
    x_raw: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        x = np.asarray(self.X, dtype=float)
        y0 = np.asarray(self.y0, dtype=float).ravel()
        y1 = np.asarray(self.y1, dtype=float).ravel()
        if x.ndim != 2:
            raise InputError("X must be a 2-D matrix")
        if y0.shape[0] != x.shape[0] or y1.shape[0] != x.shape[0]:
            raise InputError("outcome vectors must match the number of rows of X")
        for label, arr in (("X", x), ("y0", y0), ("y1", y1)):
            if not np.all(np.isfinite(arr)):
                raise InputError(f"{label} contains non-finite entries")
        dist = self.dist
        if dist is None:
            dist = np.full(x.shape[0], 1.0 / x.shape[0])
        else:
            dist = np.asarray(dist, dtype=float).ravel()
            if dist.shape[0] != x.shape[0] or abs(dist.sum() - 1.0) > 1e-9:
                raise InputError("dist must have one weight per subject and sum to 1")
        x_raw = self.x_raw if self.x_raw is not None else x
        object.__setattr__(self, "X", x)
        object.__setattr__(self, "y0", y0)
        object.__setattr__(self, "y1", y1)
        object.__setattr__(self, "dist", dist)
        object.__setattr__(self, "x_raw", np.asarray(x_raw, dtype=float))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def is_null(self) -> bool:
        """True when both potential outcomes coincide for every subject."""
        return bool(np.array_equal(self.y0, self.y1))

    def outcome(self, index: int, arm: int) -> float:
        """Reveal one potential outcome. The runner's only read path for y."""
        return float(self.y1[index] if arm == 1 else self.y0[index])

    def true_cate(self) -> np.ndarray:
        return self.y1 - self.y0


@dataclass(frozen=True)
class SplitSpec:
    seed: int = 0
    train_fraction: float = 0.5
    null_hypothesis: bool = False

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError(f"train_fraction must be in (0, 1), got {self.train_fraction}")


def load_csv(path, null_hypothesis: bool = False) -> CovariatePool:
    """Read a pool from CSV with header ``x0..x{d-1},y0[,y1]``.

    ``y1`` may be omitted only when ``null_hypothesis`` is set, in which case
    it is copied from ``y0``.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty file") from None
        rows = list(reader)

    header = [h.strip() for h in header]
    n_x = sum(1 for h in header if h.startswith("x"))
    expected = [f"x{i}" for i in range(n_x)]
    has_y1 = "y1" in header
    expected += ["y0", "y1"] if has_y1 else ["y0"]
    if header != expected or n_x == 0:
        raise InputError(
            f"{path}: header must be x0..x{{d-1}},y0[,y1]; got {','.join(header)}"
        )
    if not has_y1 and not null_hypothesis:
        raise InputError(f"{path}: missing column y1 (only allowed under the null-hypothesis flag)")
    if len(rows) < 2:
        raise InputError(f"{path}: need at least 2 data rows, got {len(rows)}")

    parsed = np.empty((len(rows), len(header)))
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise InputError(f"{path}: row {i + 2} has {len(row)} cells, expected {len(header)}")
        for j, cell in enumerate(row):
            try:
                value = float(cell)
            except ValueError:
                raise InputError(
                    f"{path}: row {i + 2}, column {header[j]}: non-numeric cell {cell!r}"
                ) from None
            if not math.isfinite(value):
                raise InputError(f"{path}: row {i + 2}, column {header[j]}: non-finite value")
            parsed[i, j] = value

    x = parsed[:, :n_x]
    y0 = parsed[:, n_x]
    y1 = parsed[:, n_x + 1] if has_y1 else y0.copy()
    if null_hypothesis:
        y1 = y0.copy()
    import os

    name = os.path.splitext(os.path.basename(str(path)))[0]
    return CovariatePool(X=x, y0=y0, y1=y1, name=name)


def save_csv(pool: CovariatePool, path) -> None:
    """Write a pool so that load_csv reproduces it bit-identically.

    Uses Python float repr, which round-trips float64 exactly.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{i}" for i in range(pool.d)] + ["y0", "y1"])
        for i in range(pool.n):
            writer.writerow(
                [repr(float(v)) for v in pool.X[i]]
                + [repr(float(pool.y0[i])), repr(float(pool.y1[i]))]
            )


def _zscore_stats(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = x.mean(axis=0)
    sd = x.std(axis=0)
    sd = np.where(sd > 0, sd, 1.0)  # constant columns map to 0
    return mean, sd


def normalize(pool: CovariatePool) -> CovariatePool:
    """Z-score each feature column over this pool's own rows."""
    if pool.n < 2:
        raise InputError("normalization needs at least 2 rows")
    mean, sd = _zscore_stats(pool.X)
    return replace(pool, X=(pool.X - mean) / sd, x_raw=pool.x_raw)


def split(pool: CovariatePool, spec: SplitSpec) -> tuple[CovariatePool, CovariatePool]:
    """Seeded disjoint train/test split with train-only normalization stats."""
    rng = np.random.default_rng(spec.seed)
    perm = rng.permutation(pool.n)
    n_train = int(pool.n * spec.train_fraction)
    if n_train == 0 or n_train == pool.n:
        raise ConfigError(
            f"split of {pool.n} rows at fraction {spec.train_fraction} leaves an empty side"
        )
    train_idx, test_idx = perm[:n_train], perm[n_train:]
    mean, sd = _zscore_stats(pool.X[train_idx])

    def _take(idx: np.ndarray, tag: str) -> CovariatePool:
        y0 = pool.y0[idx]
        y1 = pool.y0[idx].copy() if spec.null_hypothesis else pool.y1[idx]
        return CovariatePool(
            X=(pool.X[idx] - mean) / sd,
            y0=y0,
            y1=y1,
            name=f"{pool.name}[{tag}]",
            x_raw=pool.x_raw[idx],
        )

    return _take(train_idx, "train"), _take(test_idx, "test")


def _rff_sampler(rng: np.random.Generator, d: int, lengthscale: float, n_features: int = 512):
    """Random-feature draw from a smooth GP prior; O(N) to evaluate.

    Exact N x N sampling is infeasible for the large pools the scaled policy
    targets, so smooth surfaces are drawn from a feature expansion of the
    squared-exponential kernel instead.
    """
    omega = rng.normal(0.0, 1.0 / lengthscale, size=(n_features, d))
    phase = rng.uniform(0.0, 2.0 * math.pi, size=n_features)
    weights = rng.normal(size=n_features)

    def sample(x: np.ndarray) -> np.ndarray:
        return math.sqrt(2.0 / n_features) * (np.cos(x @ omega.T + phase) @ weights)

    return sample


def _clustered_covariates(rng: np.random.Generator, n: int, d: int, n_clusters: int = 16) -> np.ndarray:
    """Unevenly weighted Gaussian clusters, mimicking real subject pools.

    Uniform covariate clouds make every selection policy equivalent; real
    pools are lumpy, which is what covariate-aware selection exploits.
    """
    centers = rng.normal(0.0, 2.0, size=(n_clusters, d))
    weights = rng.dirichlet(np.ones(n_clusters))
    labels = rng.choice(n_clusters, size=n, p=weights)
    return centers[labels] + 0.5 * rng.standard_normal((n, d))


def gen_synthetic(
    kind: str,
    n: int,
    d: int,
    seed: int = 0,
    noise: float = 0.1,
    lengthscale: float | None = None,
) -> CovariatePool:
    """Deterministic synthetic pool of the given kind.

    smooth-gp: independent smooth surfaces per arm plus observation noise.
    linear:    y^a = X @ beta_a + noise.
    null:      one smooth surface copied to both arms (y1 == y0 exactly).

    The default surface lengthscale is sqrt(d), so that kernel similarities
    stay informative across dimensions at the clusters' unit feature scale.
    """
    if kind not in SYNTHETIC_KINDS:
        raise ConfigError(f"unknown synthetic kind {kind!r}; choose from {SYNTHETIC_KINDS}")
    if n < 4 or d < 1:
        raise InputError(f"need n >= 4 and d >= 1, got n={n}, d={d}")
    rng = np.random.default_rng(seed)
    x = _clustered_covariates(rng, n, d)
    ell = lengthscale if lengthscale is not None else math.sqrt(d)

    if kind == "linear":
        beta0 = rng.normal(size=d)
        beta1 = rng.normal(size=d)
        y0 = x @ beta0 + noise * rng.standard_normal(n)
        y1 = x @ beta1 + noise * rng.standard_normal(n)
    else:
        f0 = _rff_sampler(rng, d, ell)
        f1 = _rff_sampler(rng, d, ell)
        y0 = f0(x) + noise * rng.standard_normal(n)
        if kind == "null":
            y1 = y0.copy()
        else:
            y1 = f1(x) + noise * rng.standard_normal(n)

    return CovariatePool(X=x, y0=y0, y1=y1, name=f"{kind}-n{n}-d{d}-s{seed}")
