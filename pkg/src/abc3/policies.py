"""Acquisition policies over the unobserved subject pool.

Every policy maps the current context to one (subject, arm) pair, except
the leverage baseline which draws a whole batch at once. All of them are
blind to observed outcome values: scores are functions of covariates and
posterior variances only (the variance of a GP posterior does not depend
on the outcome vector).

The fast scoring path evaluates, for a candidate x_c and arm a, the drop
in pool-averaged posterior variance that observing (x_c, a) would cause:

    score = mean_x [u' k_*(x) - k(x_c, x)]^2 / (k(x_c, x_c) + s2 - k~' u)

with u solving (K_t + s2 I) u = k~ against the cached Cholesky factor, so
no hypothetical refit is ever needed.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import solve_triangular

from .data import CovariatePool
from .errors import ConfigError, InputError, NumericalError, StateError
from .gp import ArmState, fit
from .kernels import KernelSpec, cross_gram

__all__ = [
    "PolicyDecision",
    "PolicyContext",
    "abc3_score",
    "decide_abc3",
    "decide_naive",
    "decide_mackay",
    "decide_ace",
    "decide_leverage",
    "leverage_scores",
    "SEQUENTIAL_POLICIES",
    "POLICY_NAMES",
]

SEQUENTIAL_POLICIES = ("abc3", "naive", "mackay", "ace")
POLICY_NAMES = SEQUENTIAL_POLICIES + ("leverage",)

_DENOM_FLOOR = 1e-12


@dataclass(frozen=True)
class PolicyDecision:
    subject_index: int
    arm: int
    score: float
    candidate_indices: tuple[int, ...] | None = None
    per_candidate_scores: np.ndarray | None = None  # (candidates, 2)


@dataclass
class PolicyContext:
    """Read-only view of a decision point.

    ``arm_states`` hold the acquisition-kernel GPs (the fixed kernel that
    scores uncertainty; it is never touched by hyperparameter fitting).
    ``test_covariates`` exists solely for the ACE baseline.
    """

    pool: CovariatePool
    arm_states: tuple[ArmState, ArmState]
    acquisition_kernel: KernelSpec
    rng: np.random.Generator
    test_covariates: np.ndarray | None = None
    _caches: dict = field(default_factory=dict, repr=False)

    @classmethod
    def fresh(
        cls,
        pool: CovariatePool,
        acquisition_kernel: KernelSpec,
        rng: np.random.Generator,
        test_covariates: np.ndarray | None = None,
    ) -> "PolicyContext":
        states = tuple(
            replace(fit(acquisition_kernel, pool, [], []), arm=a) for a in (0, 1)
        )
        return cls(
            pool=pool,
            arm_states=states,  # type: ignore[arg-type]
            acquisition_kernel=acquisition_kernel,
            rng=rng,
            test_covariates=test_covariates,
        )

    def observed(self) -> set[int]:
        return set(self.arm_states[0].indices) | set(self.arm_states[1].indices)

    def candidates(self) -> list[int]:
        return sorted(set(range(self.pool.n)) - self.observed())

    def with_arm_state(self, arm: int, state: ArmState) -> "PolicyContext":
        states = list(self.arm_states)
        states[arm] = state
        return replace(self, arm_states=tuple(states))

    def pool_gram(self) -> np.ndarray:
        """Acquisition-kernel Gram over the full pool (latent, cached)."""
        if "pool_gram" not in self._caches:
            self._caches["pool_gram"] = cross_gram(
                self.acquisition_kernel, self.pool.X, self.pool.X
            )
        return self._caches["pool_gram"]

    def lambda_star(self) -> float:
        """Largest eigenvalue of the pool Gram matrix (cached, write-once)."""
        if "lambda_star" not in self._caches:
            try:
                eigs = np.linalg.eigvalsh(self.pool_gram())
            except np.linalg.LinAlgError as exc:
                raise NumericalError(f"eigen-solver failed on pool Gram: {exc}") from exc
            self._caches["lambda_star"] = float(eigs[-1])
        return self._caches["lambda_star"]


def _candidate_solves(state: ArmState, candidate_cols: np.ndarray):
    """Forward and full solves of the candidates' kernel vectors.

    Returns (A, B): A = L^-1 K_oc and B = (K + s2 I)^-1 K_oc, both (t, m).
    """
    if state.size == 0:
        m = candidate_cols.shape[1]
        return np.zeros((0, m)), np.zeros((0, m))
    a = solve_triangular(state.chol, candidate_cols, lower=True)
    b = solve_triangular(state.chol, a, lower=True, trans="T")
    return a, b


def _abc3_scores_one_arm(ctx: PolicyContext, state: ArmState, cands: list[int], ops=None):
    """Variance-reduction score of each candidate for one arm."""
    g = ctx.pool_gram()
    cols = state.cross_pool[:, cands] if state.size else np.zeros((0, len(cands)))
    a, b = _candidate_solves(state, cols)
    t, m = cols.shape
    n = ctx.pool.n
    kc = g[cands, :]  # k(x_c, x) over the pool
    resid = b.T @ state.cross_pool - kc if t else -kc
    numer = np.mean(resid * resid, axis=1)
    noisy_diag = np.array([g[c, c] for c in cands]) + state.kernel.noise_variance + state.jitter
    denom = noisy_diag - np.sum(a * a, axis=0)
    if np.any(denom <= _DENOM_FLOOR):
        bad = cands[int(np.argmin(denom))]
        raise NumericalError(
            f"acquisition denominator <= {_DENOM_FLOOR:g} at candidate {bad}; "
            "candidate duplicates an observation with zero noise"
        )
    if ops is not None:
        # two triangular solves, the cross-pool product, and the residual pass
        ops["flops"] = ops.get("flops", 0) + 2 * t * t * m + t * m * n + 3 * m * n + 2 * t * m
    return numer / denom


def abc3_score(ctx: PolicyContext, candidate_index: int, arm: int) -> float:
    """Score a single (candidate, arm) pair; see module docstring for the form."""
    if candidate_index in ctx.observed():
        raise InputError(f"candidate {candidate_index} already observed")
    return float(
        _abc3_scores_one_arm(ctx, ctx.arm_states[arm], [int(candidate_index)])[0]
    )


def _argmax_with_tiebreak(scores: np.ndarray, cands: list[int]) -> tuple[int, int, float]:
    """Argmax over a (candidates, 2) score grid.

    Flattened C-order argmax returns the first maximum, which is exactly the
    tie-break rule: lowest subject index first, then arm 0.
    """
    flat = int(np.argmax(scores))
    pos, arm = divmod(flat, 2)
    return cands[pos], arm, float(scores[pos, arm])


def _require_candidates(ctx: PolicyContext) -> list[int]:
    cands = ctx.candidates()
    if not cands:
        raise StateError("no unobserved candidates left")
    return cands


def decide_abc3(
    ctx: PolicyContext, keep_scores: bool = False, ops: dict | None = None
) -> PolicyDecision:
    """Pick the (subject, arm) with the largest integrated variance reduction."""
    cands = _require_candidates(ctx)
    scores = np.stack(
        [_abc3_scores_one_arm(ctx, ctx.arm_states[a], cands, ops) for a in (0, 1)],
        axis=1,
    )
    idx, arm, score = _argmax_with_tiebreak(scores, cands)
    return PolicyDecision(
        subject_index=idx,
        arm=arm,
        score=score,
        candidate_indices=tuple(cands) if keep_scores else None,
        per_candidate_scores=scores if keep_scores else None,
    )


def decide_naive(ctx: PolicyContext) -> PolicyDecision:
    """Uniformly random subject, fair-coin arm."""
    cands = _require_candidates(ctx)
    idx = int(ctx.rng.choice(cands))
    arm = int(ctx.rng.integers(0, 2))
    return PolicyDecision(subject_index=idx, arm=arm, score=0.0)


def _pool_variances(ctx: PolicyContext, state: ArmState, cands: list[int]) -> np.ndarray:
    g = ctx.pool_gram()
    prior = np.array([g[c, c] for c in cands])
    if state.size == 0:
        return prior
    cols = state.cross_pool[:, cands]
    a = solve_triangular(state.chol, cols, lower=True)
    return np.maximum(prior - np.sum(a * a, axis=0), 0.0)


def decide_mackay(ctx: PolicyContext, keep_scores: bool = False) -> PolicyDecision:
    """Pick the candidate with the largest own posterior variance."""
    cands = _require_candidates(ctx)
    scores = np.stack(
        [_pool_variances(ctx, ctx.arm_states[a], cands) for a in (0, 1)], axis=1
    )
    idx, arm, score = _argmax_with_tiebreak(scores, cands)
    return PolicyDecision(
        subject_index=idx,
        arm=arm,
        score=score,
        candidate_indices=tuple(cands) if keep_scores else None,
        per_candidate_scores=scores if keep_scores else None,
    )


def decide_ace(ctx: PolicyContext, keep_scores: bool = False) -> PolicyDecision:
    """Maximize squared mean posterior covariance to the test set over variance.

    The only policy allowed to see the test covariates (never test outcomes).
    Candidates with zero posterior variance are skipped.
    """
    if ctx.test_covariates is None:
        raise ConfigError("ACE needs test covariates in the policy context")
    cands = _require_candidates(ctx)
    x_test = np.asarray(ctx.test_covariates, dtype=float)
    x_cand = ctx.pool.X[cands]

    per_arm = []
    for a in (0, 1):
        state = ctx.arm_states[a]
        k_test_cand = cross_gram(ctx.acquisition_kernel, x_test, x_cand)
        if state.size:
            x_obs = ctx.pool.X[list(state.indices)]
            k_test_obs = cross_gram(ctx.acquisition_kernel, x_test, x_obs)
            cols = state.cross_pool[:, cands]
            b = solve_triangular(
                state.chol,
                solve_triangular(state.chol, cols, lower=True),
                lower=True,
                trans="T",
            )
            cov = k_test_cand - k_test_obs @ b
        else:
            cov = k_test_cand
        mean_cov = cov.mean(axis=0)
        var = _pool_variances(ctx, state, cands)
        with np.errstate(divide="ignore", invalid="ignore"):
            score = np.where(var > _DENOM_FLOOR, mean_cov**2 / var, -np.inf)
        per_arm.append(score)
    scores = np.stack(per_arm, axis=1)
    idx, arm, score = _argmax_with_tiebreak(scores, cands)
    return PolicyDecision(
        subject_index=idx,
        arm=arm,
        score=score,
        candidate_indices=tuple(cands) if keep_scores else None,
        per_candidate_scores=scores if keep_scores else None,
    )


def leverage_scores(
    x: np.ndarray,
    ridge: float = 1e-6,
    add_intercept: bool = True,
    row_normalize: bool = True,
) -> np.ndarray:
    """Ridge-regularized leverage of each row: diag of the hat matrix."""
    xt = np.asarray(x, dtype=float)
    if row_normalize:
        norms = np.linalg.norm(xt, axis=1, keepdims=True)
        xt = np.where(norms > 0, xt / np.where(norms > 0, norms, 1.0), 0.0)
    if add_intercept:
        xt = np.hstack([xt, np.ones((xt.shape[0], 1))])
    gram_ridge = xt.T @ xt + ridge * np.eye(xt.shape[1])
    solved = np.linalg.solve(gram_ridge, xt.T)
    return np.sum(xt.T * solved, axis=0)


def decide_leverage(pool: CovariatePool, budget: int, rng: np.random.Generator) -> list[PolicyDecision]:
    """Non-sequential batch: sample subjects by leverage, assign arms by coin.

    Leverage is computed on row-normalized, intercept-augmented covariates;
    a fresh batch is drawn for every budget, so consecutive checkpoints need
    not be nested.
    """
    if budget > pool.n:
        raise InputError(f"budget {budget} exceeds pool size {pool.n}")
    lev = leverage_scores(pool.X)
    probs = lev / lev.sum()
    chosen = rng.choice(pool.n, size=budget, replace=False, p=probs)
    arms = rng.integers(0, 2, size=budget)
    return [
        PolicyDecision(subject_index=int(i), arm=int(a), score=float(lev[int(i)]))
        for i, a in zip(chosen, arms)
    ]
