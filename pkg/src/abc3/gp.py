"""Per-arm Gaussian-process posterior engine.

Each treatment arm keeps an :class:`ArmState`: the observed pool indices,
their outcomes, a Cholesky factor of the noisy Gram matrix, and cached
kernel rows against the full pool. Appending one observation reuses the
existing factor through a bordered extension, so a sequential run costs
O(t^2) per step instead of O(t^3).

Posterior variance never reads the outcome vector; policies rely on that
to stay blind to outcomes.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.optimize import minimize

from .errors import InputError, NumericalError
from .kernels import KernelFamily, KernelSpec, cross_gram, gram, stable_cholesky

__all__ = [
    "ArmState",
    "Posterior",
    "fit",
    "posterior",
    "integrated_variance",
    "extend",
    "fit_hyperparameters",
    "log_marginal_likelihood",
]

# Bordered extensions accumulate O(t)*eps drift; refactorize periodically.
_REFIT_EVERY = 64

# Search box for the composite regression kernel, in log space.
_LOG_LENGTHSCALE_BOUNDS = (math.log(0.1), math.log(100.0))
_LOG_CONSTANT_BOUNDS = (math.log(1e-3), math.log(1e3))
_LOG_WHITE_BOUNDS = (math.log(1e-6), math.log(10.0))


def _pool_matrix(pool) -> np.ndarray:
    """Accept either a CovariatePool-like object or a plain array."""
    x = getattr(pool, "X", pool)
    return np.asarray(x, dtype=float)


@dataclass(frozen=True)
class ArmState:
    """Immutable per-arm observation set with factored Gram state."""

    arm: int
    kernel: KernelSpec
    pool_x: np.ndarray
    indices: tuple[int, ...]
    outcomes: np.ndarray
    chol: np.ndarray
    alpha: np.ndarray
    cross_pool: np.ndarray
    jitter: float
    extensions_since_fit: int = 0

    @property
    def size(self) -> int:
        return len(self.indices)

    def noisy_diagonal(self) -> float:
        """Diagonal entry of the factored matrix for a fresh observation."""
        white = self.kernel.white_noise if self.kernel.family is KernelFamily.COMPOSITE else 0.0
        return self.kernel.prior_variance + white + self.kernel.noise_variance + self.jitter


@dataclass(frozen=True)
class Posterior:
    mean: np.ndarray
    variance: np.ndarray


def fit(kernel: KernelSpec, pool, indices, outcomes) -> ArmState:
    """Build an ArmState from scratch for the given observations.

    ``indices`` index rows of the pool; an empty set yields the prior state.
    """
    pool_x = _pool_matrix(pool)
    idx = tuple(int(i) for i in indices)
    if len(set(idx)) != len(idx):
        raise InputError(f"duplicate observation indices: {idx}")
    if idx and (min(idx) < 0 or max(idx) >= pool_x.shape[0]):
        raise InputError(f"observation index out of range for pool of size {pool_x.shape[0]}")
    y = np.asarray(outcomes, dtype=float).ravel()
    if y.shape[0] != len(idx):
        raise InputError(f"{len(idx)} indices but {y.shape[0]} outcomes")
    if y.size and not np.all(np.isfinite(y)):
        raise InputError("outcomes must be finite")

    n_pool = pool_x.shape[0]
    if not idx:
        return ArmState(
            arm=0,
            kernel=kernel,
            pool_x=pool_x,
            indices=(),
            outcomes=np.zeros(0),
            chol=np.zeros((0, 0)),
            alpha=np.zeros(0),
            cross_pool=np.zeros((0, n_pool)),
            jitter=0.0,
        )

    x_obs = pool_x[list(idx)]
    gm = gram(kernel, x_obs)
    noisy = gm.entries + kernel.noise_variance * np.eye(len(idx))
    chol, jitter = stable_cholesky(noisy)
    alpha = cho_solve((chol, True), y)
    cross_pool = cross_gram(kernel, x_obs, pool_x)
    return ArmState(
        arm=0,
        kernel=kernel,
        pool_x=pool_x,
        indices=idx,
        outcomes=y,
        chol=chol,
        alpha=alpha,
        cross_pool=cross_pool,
        jitter=jitter,
    )


def _clamp_variance(var: np.ndarray, prior: float) -> np.ndarray:
    tol = 1e-10 * max(1.0, prior)
    worst = float(var.min()) if var.size else 0.0
    if worst < -tol:
        raise NumericalError(f"posterior variance {worst:.3e} below -{tol:.1e} tolerance")
    return np.maximum(var, 0.0)


def posterior(state: ArmState, queries) -> Posterior:
    """Posterior mean and variance at the query covariates."""
    q = np.asarray(queries, dtype=float)
    if q.ndim == 1:
        q = q[None, :]
    if q.shape[1] != state.pool_x.shape[1]:
        raise InputError(f"query dimension {q.shape[1]} != pool dimension {state.pool_x.shape[1]}")
    prior = state.kernel.prior_variance
    if state.size == 0:
        return Posterior(mean=np.zeros(q.shape[0]), variance=np.full(q.shape[0], prior))
    k_star = cross_gram(state.kernel, state.pool_x[list(state.indices)], q)
    mean = k_star.T @ state.alpha
    a = solve_triangular(state.chol, k_star, lower=True)
    var = prior - np.sum(a * a, axis=0)
    return Posterior(mean=mean, variance=_clamp_variance(var, prior))


def pool_variance(state: ArmState) -> np.ndarray:
    """Posterior variance at every pool point, via the cached kernel rows."""
    prior = state.kernel.prior_variance
    if state.size == 0:
        return np.full(state.pool_x.shape[0], prior)
    a = solve_triangular(state.chol, state.cross_pool, lower=True)
    return _clamp_variance(prior - np.sum(a * a, axis=0), prior)


def integrated_variance(state: ArmState, pool=None) -> float:
    """Mean posterior variance over the (uniform, discrete) pool distribution."""
    return float(np.mean(pool_variance(state)))


def extend(state: ArmState, new_index: int, new_outcome: float) -> ArmState:
    """Return the state with one more observation, via a bordered Cholesky row.

    Equivalent to refitting from scratch up to roundoff; refactorizes fully
    every few dozen extensions to bound drift.
    """
    new_index = int(new_index)
    if new_index in state.indices:
        raise InputError(f"index {new_index} already observed in this arm")
    if not (0 <= new_index < state.pool_x.shape[0]):
        raise InputError(f"index {new_index} out of range")
    if not np.isfinite(new_outcome):
        raise InputError("outcome must be finite")

    if state.extensions_since_fit + 1 >= _REFIT_EVERY:
        fresh = fit(
            state.kernel,
            state.pool_x,
            state.indices + (new_index,),
            np.append(state.outcomes, new_outcome),
        )
        return replace(fresh, arm=state.arm)

    t = state.size
    k_tilde = state.cross_pool[:, new_index]
    if t:
        r = solve_triangular(state.chol, k_tilde, lower=True)
    else:
        r = np.zeros(0)
    pivot_sq = state.noisy_diagonal() - float(r @ r)
    if pivot_sq <= 1e-12 * max(1.0, state.noisy_diagonal()):
        raise NumericalError(
            f"nonpositive bordering pivot ({pivot_sq:.3e}) extending with index "
            f"{new_index}; duplicate point with zero noise?"
        )
    pivot = math.sqrt(pivot_sq)

    chol = np.zeros((t + 1, t + 1))
    chol[:t, :t] = state.chol
    chol[t, :t] = r
    chol[t, t] = pivot
    outcomes = np.append(state.outcomes, float(new_outcome))
    alpha = cho_solve((chol, True), outcomes)
    new_row = cross_gram(state.kernel, state.pool_x[new_index], state.pool_x)
    cross_pool = np.vstack([state.cross_pool, new_row])
    return ArmState(
        arm=state.arm,
        kernel=state.kernel,
        pool_x=state.pool_x,
        indices=state.indices + (new_index,),
        outcomes=outcomes,
        chol=chol,
        alpha=alpha,
        cross_pool=cross_pool,
        jitter=state.jitter,
        extensions_since_fit=state.extensions_since_fit + 1,
    )


def _composite_gram_parts(x_obs: np.ndarray, log_theta: np.ndarray, noise_variance: float):
    """K and its log-parameter derivatives for the composite kernel."""
    c, ell, w = np.exp(log_theta)
    d2 = np.maximum(
        np.sum(x_obs * x_obs, axis=1)[:, None]
        + np.sum(x_obs * x_obs, axis=1)[None, :]
        - 2.0 * (x_obs @ x_obs.T),
        0.0,
    )
    rbf = c * np.exp(-d2 / (2.0 * ell * ell))
    n = x_obs.shape[0]
    k = rbf + (w + noise_variance) * np.eye(n)
    dk = [rbf, rbf * (d2 / (ell * ell)), w * np.eye(n)]
    return k, dk


def log_marginal_likelihood(
    x_obs: np.ndarray, y: np.ndarray, log_theta: np.ndarray, noise_variance: float = 0.0
) -> tuple[float, np.ndarray]:
    """Log marginal likelihood of the composite kernel and its gradient.

    Parameters are ``log(constant_scale), log(lengthscale), log(white_noise)``.
    Returns ``(-inf, zeros)`` when the Gram matrix is not factorizable.
    """
    k, dk = _composite_gram_parts(x_obs, log_theta, noise_variance)
    n = x_obs.shape[0]
    try:
        chol = np.linalg.cholesky(k)
    except np.linalg.LinAlgError:
        return -np.inf, np.zeros(3)
    alpha = cho_solve((chol, True), y)
    lml = (
        -0.5 * float(y @ alpha)
        - float(np.sum(np.log(np.diag(chol))))
        - 0.5 * n * math.log(2.0 * math.pi)
    )
    k_inv = cho_solve((chol, True), np.eye(n))
    grad = np.array([0.5 * (alpha @ d @ alpha - np.sum(k_inv * d)) for d in dk])
    return lml, grad


def fit_hyperparameters(
    pool,
    indices,
    outcomes,
    init: KernelSpec,
    restarts: int = 3,
    seed: int = 0,
) -> KernelSpec:
    """Maximize the marginal likelihood of the composite regression kernel.

    Quasi-Newton ascent over log-parameters inside a fixed search box, with
    the first start at ``init`` and the rest drawn from a seeded rng. Falls
    back to ``init`` (with a warning) if no restart reaches a finite
    likelihood.
    """
    if init.family is not KernelFamily.COMPOSITE:
        raise InputError("hyperparameter fitting applies to the composite kernel only")
    pool_x = _pool_matrix(pool)
    idx = [int(i) for i in indices]
    if len(idx) < 2:
        raise InputError("hyperparameter fitting needs at least 2 observations")
    x_obs = pool_x[idx]
    y = np.asarray(outcomes, dtype=float).ravel()

    bounds = [_LOG_CONSTANT_BOUNDS, _LOG_LENGTHSCALE_BOUNDS, _LOG_WHITE_BOUNDS]
    init_theta = np.array(
        [
            math.log(init.constant_scale),
            math.log(init.lengthscale),
            math.log(max(init.white_noise, math.exp(_LOG_WHITE_BOUNDS[0]))),
        ]
    )
    init_theta = np.clip(init_theta, [b[0] for b in bounds], [b[1] for b in bounds])

    def objective(theta):
        lml, grad = log_marginal_likelihood(x_obs, y, theta, init.noise_variance)
        if not np.isfinite(lml):
            return 1e25, np.zeros(3)
        return -lml, -grad

    rng = np.random.default_rng(seed)
    starts = [init_theta] + [
        np.array([rng.uniform(lo, hi) for lo, hi in bounds]) for _ in range(max(restarts - 1, 0))
    ]

    best_theta, best_val = None, np.inf
    for theta0 in starts:
        res = minimize(objective, theta0, jac=True, method="L-BFGS-B", bounds=bounds)
        if np.isfinite(res.fun) and res.fun < best_val and res.fun < 1e24:
            best_val, best_theta = res.fun, res.x

    if best_theta is None:
        warnings.warn(
            "hyperparameter fitting produced no finite likelihood; keeping initial kernel",
            RuntimeWarning,
        )
        return init
    c, ell, w = np.exp(best_theta)
    return init.with_params(constant_scale=float(c), lengthscale=float(ell), white_noise=float(w))
