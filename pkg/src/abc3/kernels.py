"""Covariance kernels, Gram matrices and jitter-stabilized factorization.

Two kernels live side by side in an experiment: a fixed acquisition kernel
(plain RBF by default) that drives uncertainty scores, and an optimizable
regression kernel (constant * RBF + white noise) used for outcome fitting.
Both are described by :class:`KernelSpec`.

White noise is an observation-level term: it appears on the diagonal of
``gram`` (same input row) but never in ``eval_kernel`` or ``cross_gram``,
which return latent covariances. This keeps ``k(x, x) == constant_scale``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, InputError, NumericalError

__all__ = [
    "KernelFamily",
    "KernelSpec",
    "GramMatrix",
    "eval_kernel",
    "gram",
    "cross_gram",
    "stable_cholesky",
]

# Escalation schedule for the diagonal jitter, as multiples of the mean
# diagonal entry. 0 first: well-conditioned matrices get no jitter at all.
_JITTER_START = 1e-10
_JITTER_MAX = 1e-4

_MATERN_NUS = (0.5, 1.5, 2.5)


class KernelFamily(str, enum.Enum):
    RBF = "rbf"
    MATERN = "matern"
    EXP_SINE_SQUARED = "exp-sine-squared"
    COMPOSITE = "composite"


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family, its parameters, and the observation noise variance.

    ``noise_variance`` is the iid Gaussian observation noise added to the
    Gram diagonal when fitting; it is not part of the kernel function.
    """

    family: KernelFamily = KernelFamily.RBF
    lengthscale: float = 1.0
    nu: float = 1.5
    periodicity: float = 1.0
    constant_scale: float = 1.0
    white_noise: float = 0.0
    noise_variance: float = 0.0

    def __post_init__(self):
        if self.lengthscale <= 0:
            raise ConfigError(f"lengthscale must be positive, got {self.lengthscale}")
        if self.constant_scale <= 0:
            raise ConfigError(f"constant_scale must be positive, got {self.constant_scale}")
        if self.periodicity <= 0:
            raise ConfigError(f"periodicity must be positive, got {self.periodicity}")
        if self.white_noise < 0:
            raise ConfigError(f"white_noise must be nonnegative, got {self.white_noise}")
        if self.noise_variance < 0:
            raise ConfigError(f"noise_variance must be nonnegative, got {self.noise_variance}")
        if self.family is KernelFamily.MATERN and self.nu not in _MATERN_NUS:
            raise ConfigError(f"Matern nu must be one of {_MATERN_NUS}, got {self.nu}")

    def with_params(self, **kwargs) -> "KernelSpec":
        return replace(self, **kwargs)

    @property
    def prior_variance(self) -> float:
        """k(x, x) for any x: the latent prior variance."""
        return self.constant_scale if self.family is KernelFamily.COMPOSITE else 1.0


@dataclass(frozen=True)
class GramMatrix:
    """Symmetric kernel matrix plus the diagonal jitter that makes it factorizable.

    ``entries`` holds raw kernel values (white noise included on the diagonal
    for composite kernels); ``jitter`` is stored separately and only added
    when factorizing.
    """

    entries: np.ndarray
    jitter: float

    @property
    def stabilized(self) -> np.ndarray:
        return self.entries + self.jitter * np.eye(self.entries.shape[0])


def _as_matrix(x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise InputError(f"covariates must be 1-D or 2-D, got ndim={arr.ndim}")
    return arr


def _sq_dists(x: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances, clipped at 0 for roundoff."""
    xx = np.sum(x * x, axis=1)[:, None]
    zz = np.sum(z * z, axis=1)[None, :]
    d2 = xx + zz - 2.0 * (x @ z.T)
    return np.maximum(d2, 0.0)


def _pairwise(spec: KernelSpec, x: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Latent kernel values between every row of x and every row of z."""
    ell = spec.lengthscale
    if spec.family in (KernelFamily.RBF, KernelFamily.COMPOSITE):
        k = np.exp(-_sq_dists(x, z) / (2.0 * ell * ell))
        if spec.family is KernelFamily.COMPOSITE:
            k = spec.constant_scale * k
        return k
    r = np.sqrt(_sq_dists(x, z))
    if spec.family is KernelFamily.MATERN:
        s = r / ell
        if spec.nu == 0.5:
            return np.exp(-s)
        if spec.nu == 1.5:
            t = math.sqrt(3.0) * s
            return (1.0 + t) * np.exp(-t)
        t = math.sqrt(5.0) * s
        return (1.0 + t + t * t / 3.0) * np.exp(-t)
    if spec.family is KernelFamily.EXP_SINE_SQUARED:
        sine = np.sin(math.pi * r / spec.periodicity) / ell
        return np.exp(-2.0 * sine * sine)
    raise ConfigError(f"unsupported kernel family: {spec.family}")


def eval_kernel(spec: KernelSpec, x, x2) -> float:
    """Latent kernel value k(x, x2) between two covariate vectors."""
    xa = np.asarray(x, dtype=float).ravel()
    xb = np.asarray(x2, dtype=float).ravel()
    if xa.shape != xb.shape:
        raise InputError(f"dimension mismatch: {xa.shape} vs {xb.shape}")
    return float(_pairwise(spec, xa[None, :], xb[None, :])[0, 0])


def cross_gram(spec: KernelSpec, x, z) -> np.ndarray:
    """Cross-covariance matrix k(x_i, z_j); no white noise, no jitter."""
    xm, zm = _as_matrix(x), _as_matrix(z)
    if xm.shape[1] != zm.shape[1]:
        raise InputError(f"dimension mismatch: {xm.shape[1]} vs {zm.shape[1]} columns")
    return _pairwise(spec, xm, zm)


def gram(spec: KernelSpec, x) -> GramMatrix:
    """Full kernel matrix over the rows of x, with a jitter that admits Cholesky.

    For composite kernels the white-noise term is added on the diagonal
    (same-row indicator). The jitter search starts at 0 and escalates by
    factors of 10 from 1e-10 up to 1e-4 of the mean diagonal.
    """
    xm = _as_matrix(x)
    if xm.shape[0] == 0:
        raise InputError("gram requires a nonempty covariate matrix")
    entries = _pairwise(spec, xm, xm)
    entries = 0.5 * (entries + entries.T)
    if spec.family is KernelFamily.COMPOSITE and spec.white_noise > 0:
        entries = entries + spec.white_noise * np.eye(xm.shape[0])
    _, jitter = stable_cholesky(entries)
    return GramMatrix(entries=entries, jitter=jitter)


def stable_cholesky(mat: np.ndarray) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor of ``mat + jitter*I``, escalating jitter as needed.

    Returns the factor and the jitter actually used. Raises
    :class:`NumericalError` with condition diagnostics once the jitter
    ceiling is exceeded.
    """
    n = mat.shape[0]
    diag_mean = float(np.mean(np.diag(mat))) if n else 1.0
    scale = diag_mean if diag_mean > 0 else 1.0
    jitter = 0.0
    while True:
        try:
            chol = np.linalg.cholesky(mat + jitter * np.eye(n) if jitter else mat)
            return chol, jitter
        except np.linalg.LinAlgError:
            if jitter == 0.0:
                jitter = _JITTER_START * scale
            elif jitter < _JITTER_MAX * scale:
                jitter = min(jitter * 10.0, _JITTER_MAX * scale)
            else:
                eigs = np.linalg.eigvalsh(mat)
                raise NumericalError(
                    "Cholesky failed at maximum jitter "
                    f"{jitter:.3e} (min eigenvalue {eigs[0]:.3e}, "
                    f"max {eigs[-1]:.3e}, n={n})"
                ) from None
