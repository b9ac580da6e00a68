"""Evaluation metrics and balance diagnostics.

PEHE variants score a CATE estimate against either the true effects or an
oracle fitted on the full pool. MMD^2 (biased V-statistic) measures the
covariate imbalance between the observed arms, and the bound report pairs
it with its theoretical ceiling: 4*lambda*/|I1| + 4*lambda*/|I0| plus twice
the summed integrated posterior variances. The assumption checker verifies
the eps* <= 2*delta* condition that the ceiling relies on, over random
prefix orderings of the pool.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import CovariatePool
from .errors import InputError
from .gp import ArmState, integrated_variance, posterior
from .kernels import KernelSpec, cross_gram
from .policies import PolicyContext

__all__ = [
    "MmdReport",
    "AssumptionReport",
    "Type1Report",
    "pehe",
    "pehe_omega",
    "mmd_sq",
    "mmd_bound_report",
    "check_assumption",
    "type1_test",
    "write_assumption_csv",
]


@dataclass(frozen=True)
class MmdReport:
    mmd_sq: float
    bound_rhs: float
    lambda_star: float
    n_treat: int
    n_control: int


@dataclass(frozen=True)
class AssumptionReport:
    n: int
    min_gap: float
    two_delta_star_min: float
    eps_star_max: float
    M: float
    permutations: int


@dataclass(frozen=True)
class Type1Report:
    alpha: float
    rejection_rate: float
    per_point_z: np.ndarray
    degenerate_points: int = 0


def pehe(cate_hat, cate_true) -> float:
    """Mean squared CATE error over a uniform test distribution."""
    a = np.asarray(cate_hat, dtype=float).ravel()
    b = np.asarray(cate_true, dtype=float).ravel()
    if a.shape != b.shape:
        raise InputError(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")
    diff = a - b
    return float(np.mean(diff * diff))


def pehe_omega(cate_hat, cate_omega) -> float:
    """Same functional, measured against the full-pool oracle estimates."""
    return pehe(cate_hat, cate_omega)


def mmd_sq(kernel: KernelSpec, a, b) -> float:
    """Squared maximum mean discrepancy between two point sets.

    Biased V-statistic (diagonal terms included), clamped at 0.
    """
    am = np.asarray(a, dtype=float)
    bm = np.asarray(b, dtype=float)
    if am.ndim == 1:
        am = am[None, :]
    if bm.ndim == 1:
        bm = bm[None, :]
    if am.shape[0] == 0 or bm.shape[0] == 0:
        raise InputError("mmd_sq requires two nonempty sets")
    kaa = cross_gram(kernel, am, am)
    kbb = cross_gram(kernel, bm, bm)
    kab = cross_gram(kernel, am, bm)
    value = kaa.mean() + kbb.mean() - 2.0 * kab.mean()
    return max(float(value), 0.0)


def mmd_bound_report(ctx: PolicyContext) -> MmdReport:
    """Observed-arm imbalance and its variance-based upper bound."""
    s0, s1 = ctx.arm_states[0], ctx.arm_states[1]
    if s0.size == 0 or s1.size == 0:
        raise InputError("bound report needs both arms nonempty")
    lam = ctx.lambda_star()
    x0 = ctx.pool.X[list(s0.indices)]
    x1 = ctx.pool.X[list(s1.indices)]
    value = mmd_sq(ctx.acquisition_kernel, x1, x0)
    iv = integrated_variance(s0) + integrated_variance(s1)
    bound = 4.0 * lam / s1.size + 4.0 * lam / s0.size + 2.0 * iv
    return MmdReport(
        mmd_sq=value,
        bound_rhs=float(bound),
        lambda_star=lam,
        n_treat=s1.size,
        n_control=s0.size,
    )


def check_assumption(
    kernel: KernelSpec,
    pool: CovariatePool,
    permutations: int = 100,
    rng: np.random.Generator | None = None,
) -> list[AssumptionReport]:
    """Probe eps*(I_n) <= 2*delta*(I_n) over random prefix orderings.

    For each permutation, every leading prefix I_n is scored incrementally:
    delta* is the subset's mean affinity to the whole pool, eps* the pool
    mean M minus the within-subset mean. Reports the worst gap per n.
    """
    if permutations < 1:
        raise InputError("need at least one permutation")
    rng = rng if rng is not None else np.random.default_rng(0)
    g = cross_gram(kernel, pool.X, pool.X)
    n_pool = pool.n
    row_means = g.mean(axis=1)
    m_const = float(g.mean())

    min_gap = np.full(n_pool, np.inf)
    two_delta_min = np.full(n_pool, np.inf)
    eps_max = np.full(n_pool, -np.inf)
    for _ in range(permutations):
        order = rng.permutation(n_pool)
        delta_sum = 0.0
        pair_sum = 0.0
        for n in range(1, n_pool + 1):
            new = order[n - 1]
            delta_sum += row_means[new]
            pair_sum += 2.0 * float(g[new, order[: n - 1]].sum()) + float(g[new, new])
            two_delta = 2.0 * delta_sum / n
            # the full-index subset mean is M by definition, so eps* collapses
            eps = 0.0 if n == n_pool else m_const - pair_sum / (n * n)
            gap = two_delta - eps
            k = n - 1
            min_gap[k] = min(min_gap[k], gap)
            two_delta_min[k] = min(two_delta_min[k], two_delta)
            eps_max[k] = max(eps_max[k], eps)
    return [
        AssumptionReport(
            n=n + 1,
            min_gap=float(min_gap[n]),
            two_delta_star_min=float(two_delta_min[n]),
            eps_star_max=float(eps_max[n]),
            M=m_const,
            permutations=permutations,
        )
        for n in range(n_pool)
    ]


def write_assumption_csv(reports: list[AssumptionReport], path) -> None:
    with open(path, "w") as fh:
        fh.write("n,two_delta_star_min,eps_star_max,min_gap\n")
        for r in reports:
            fh.write(f"{r.n},{r.two_delta_star_min!r},{r.eps_star_max!r},{r.min_gap!r}\n")


def type1_test(
    arm_states: tuple[ArmState, ArmState],
    test_covariates,
    alpha: float = 1.96,
    scales: tuple[tuple[float, float], tuple[float, float]] | None = None,
) -> Type1Report:
    """Z-test of the sharp no-effect null at every test point.

    z(x) = (m1(x) - m0(x)) / sqrt(V1(x) + V0(x)) with the posterior CATE
    standard deviation from the independent arms. ``scales`` carries the
    per-arm outcome standardization (mean, sd) to undo before testing.
    Points with zero pooled variance count as rejections and are flagged.
    """
    x = np.asarray(test_covariates, dtype=float)
    if scales is None:
        scales = ((0.0, 1.0), (0.0, 1.0))
    post0 = posterior(arm_states[0], x)
    post1 = posterior(arm_states[1], x)
    (mu0, sd0), (mu1, sd1) = scales
    mean_diff = (post1.mean * sd1 + mu1) - (post0.mean * sd0 + mu0)
    var = post1.variance * sd1 * sd1 + post0.variance * sd0 * sd0
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(var > 0, mean_diff / np.sqrt(var), np.inf * np.sign(mean_diff))
    z = np.where((var <= 0) & (mean_diff == 0), np.inf, z)
    degenerate = int(np.sum(var <= 0))
    rate = float(np.mean(np.abs(z) > alpha))
    return Type1Report(
        alpha=alpha, rejection_rate=rate, per_point_z=z, degenerate_points=degenerate
    )
