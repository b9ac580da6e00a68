"""Experiment orchestration: seeded replications of the evaluation protocol.

One run = one (dataset, policy, seed): split the pool in half, let the
policy pick (subject, arm) pairs from the train half one at a time, reveal
only the chosen potential outcome, and at every checkpoint fit regression
GPs on what has been observed, predict CATE on the test half and emit a
metrics record. The non-sequential leverage baseline draws a fresh batch
per checkpoint budget instead.

Outcome access discipline: the decision loop reads outcomes exclusively
through ``pool.outcome(index, arm)``, once per query. The full-information
oracle used by the surrogate error metric reads the outcome arrays
directly; it is an evaluation construct, not part of the policy loop.
"""

from __future__ import annotations

import dataclasses
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import gp
from .data import CovariatePool, SplitSpec, gen_synthetic, load_csv, split
from .errors import ConfigError
from .kernels import KernelFamily, KernelSpec
from .metrics import mmd_bound_report, mmd_sq, pehe, type1_test
from .policies import (
    PolicyContext,
    decide_abc3,
    decide_ace,
    decide_leverage,
    decide_mackay,
    decide_naive,
)

__all__ = [
    "ExperimentConfig",
    "MetricsRecord",
    "RunResult",
    "DEFAULT_ACQUISITION_KERNEL",
    "DEFAULT_REGRESSION_KERNEL",
    "run_experiment",
    "bench",
    "write_jsonl",
    "write_summary_csv",
    "load_dataset",
    "kernel_from_dict",
    "config_from_dict",
]

DEFAULT_ACQUISITION_KERNEL = KernelSpec(
    family=KernelFamily.RBF, lengthscale=1.0, noise_variance=1.0
)
DEFAULT_REGRESSION_KERNEL = KernelSpec(
    family=KernelFamily.COMPOSITE,
    lengthscale=1.0,
    constant_scale=1.0,
    white_noise=1e-2,
    noise_variance=0.0,
)

# Cost guards: the imbalance bound needs the top eigenvalue of an N x N Gram
# and the oracle needs a GP on the full train half, both cubic in N.
_EXACT_DIAGNOSTICS_MAX_N = 2000

RUN_POLICIES = ("abc3", "naive", "mackay", "ace", "leverage", "abc3-scaled", "abc3-sample")


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str
    policy: str = "abc3"
    seeds: tuple[int, ...] = (0,)
    checkpoint_fraction: float = 0.1
    train_fraction: float = 0.5
    null_hypothesis: bool = False
    acquisition_kernel: KernelSpec = DEFAULT_ACQUISITION_KERNEL
    regression_kernel: KernelSpec = DEFAULT_REGRESSION_KERNEL
    refit_hyperparams_at_checkpoints: bool = True
    hyperparam_restarts: int = 3
    alpha: float = 1.96
    out: str | None = None
    record_wall_time: bool = True
    budget_steps: int | None = None  # absolute query cap; None sweeps the train pool
    scale: "object | None" = None  # ScaleConfig for the sampled policies

    def __post_init__(self):
        if not 0.0 < self.checkpoint_fraction <= 1.0:
            raise ConfigError(f"checkpoint_fraction must be in (0, 1], got {self.checkpoint_fraction}")
        if not self.seeds:
            raise ConfigError("seeds must be nonempty")
        if self.policy not in RUN_POLICIES:
            raise ConfigError(f"unknown policy {self.policy!r}; valid: {', '.join(RUN_POLICIES)}")


_RECORD_FIELDS = (
    "dataset",
    "policy",
    "seed",
    "step",
    "frac_observed",
    "pehe",
    "pehe_omega",
    "mmd_sq",
    "bound_rhs",
    "n_treat",
    "n_control",
    "type1_rate",
    "wall_ms",
)


@dataclass(frozen=True)
class MetricsRecord:
    dataset: str
    policy: str
    seed: int
    step: int
    frac_observed: float
    pehe: float
    pehe_omega: float | None
    mmd_sq: float | None
    bound_rhs: float | None
    n_treat: int
    n_control: int
    type1_rate: float | None
    wall_ms: float

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in _RECORD_FIELDS}


@dataclass
class RunResult:
    records: list = field(default_factory=list)
    decisions: list = field(default_factory=list)  # (seed, step, subject, arm, score)
    failures: list = field(default_factory=list)  # (seed, message)


def load_dataset(spec: str, null_hypothesis: bool = False) -> CovariatePool:
    """Load a CSV path or build a synthetic pool from ``synth:kind:n:d[:seed]``."""
    if spec.startswith("synth:"):
        parts = spec.split(":")
        if len(parts) not in (4, 5):
            raise ConfigError(f"synthetic spec must be synth:kind:n:d[:seed], got {spec!r}")
        try:
            n, d = int(parts[2]), int(parts[3])
            gen_seed = int(parts[4]) if len(parts) == 5 else 0
        except ValueError:
            raise ConfigError(f"non-integer field in synthetic spec {spec!r}") from None
        return gen_synthetic(parts[1], n, d, seed=gen_seed)
    return load_csv(spec, null_hypothesis=null_hypothesis)


def checkpoint_steps(train_size: int, fraction: float) -> list[int]:
    """Checkpoint step numbers: every ``fraction`` of the train pool, ending at 100%."""
    count = math.ceil(round(1.0 / fraction, 9))
    steps = sorted(
        {
            min(train_size, math.ceil(round(k * fraction * train_size, 9)))
            for k in range(1, count + 1)
        }
    )
    return steps


def _standardization(y: np.ndarray) -> tuple[float, float]:
    if y.size == 0:
        return 0.0, 1.0
    mu = float(np.mean(y))
    sd = float(np.std(y))
    return mu, sd if sd > 0 else 1.0


def _hp_seed(seed: int, step: int, arm: int) -> int:
    return int(np.random.SeedSequence((seed, step, arm)).generate_state(1)[0])


class _CateModel:
    """Two regression GPs plus per-arm outcome standardization."""

    def __init__(self, config: ExperimentConfig, train: CovariatePool, seed: int, step: int,
                 obs: tuple[tuple[list, np.ndarray], tuple[list, np.ndarray]]):
        self.states = []
        self.scales = []
        for arm in (0, 1):
            idx, y_raw = obs[arm]
            mu, sd = _standardization(np.asarray(y_raw, dtype=float))
            y_std = (np.asarray(y_raw, dtype=float) - mu) / sd
            kernel = config.regression_kernel
            if config.refit_hyperparams_at_checkpoints and len(idx) >= 2:
                kernel = gp.fit_hyperparameters(
                    train,
                    idx,
                    y_std,
                    init=config.regression_kernel,
                    restarts=config.hyperparam_restarts,
                    seed=_hp_seed(seed, step, arm),
                )
            state = gp.fit(kernel, train, idx, y_std)
            self.states.append(dataclasses.replace(state, arm=arm))
            self.scales.append((mu, sd))
        self.states = tuple(self.states)
        self.scales = tuple(self.scales)

    def predict_cate(self, x: np.ndarray) -> np.ndarray:
        raw = []
        for arm in (0, 1):
            post = gp.posterior(self.states[arm], x)
            mu, sd = self.scales[arm]
            raw.append(post.mean * sd + mu)
        return raw[1] - raw[0]


def _oracle_cate(config: ExperimentConfig, train: CovariatePool, test: CovariatePool, seed: int):
    """Surrogate target: regressors fit on every train subject with both outcomes."""
    if train.n > _EXACT_DIAGNOSTICS_MAX_N:
        return None
    all_idx = list(range(train.n))
    model = _CateModel(
        config, train, seed, step=0, obs=((all_idx, train.y0), (all_idx, train.y1))
    )
    return model.predict_cate(test.X)


def _evaluate_checkpoint(
    config: ExperimentConfig,
    train: CovariatePool,
    test: CovariatePool,
    ctx: PolicyContext,
    seed: int,
    step: int,
    cate_omega,
    wall_ms: float,
) -> MetricsRecord:
    s0, s1 = ctx.arm_states
    obs = ((list(s0.indices), s0.outcomes), (list(s1.indices), s1.outcomes))
    model = _CateModel(config, train, seed, step, obs)
    cate_hat = model.predict_cate(test.X)

    pehe_value = pehe(cate_hat, test.true_cate())
    pehe_omega_value = pehe(cate_hat, cate_omega) if cate_omega is not None else None

    mmd_value = bound_value = None
    if s0.size and s1.size:
        if train.n <= _EXACT_DIAGNOSTICS_MAX_N:
            report = mmd_bound_report(ctx)
            mmd_value, bound_value = report.mmd_sq, report.bound_rhs
        else:
            mmd_value = mmd_sq(
                ctx.acquisition_kernel,
                train.X[list(s1.indices)],
                train.X[list(s0.indices)],
            )

    type1_rate = None
    if train.is_null and test.is_null:
        report = type1_test(model.states, test.X, alpha=config.alpha, scales=model.scales)
        type1_rate = report.rejection_rate

    return MetricsRecord(
        dataset=train.name.removesuffix("[train]"),
        policy=config.policy,
        seed=seed,
        step=step,
        frac_observed=step / train.n,
        pehe=pehe_value,
        pehe_omega=pehe_omega_value,
        mmd_sq=mmd_value,
        bound_rhs=bound_value,
        n_treat=s1.size,
        n_control=s0.size,
        type1_rate=type1_rate,
        wall_ms=wall_ms if config.record_wall_time else 0.0,
    )


def _sequential_decider(config: ExperimentConfig, rng: np.random.Generator):
    name = config.policy
    if name == "abc3":
        return decide_abc3
    if name == "naive":
        return decide_naive
    if name == "mackay":
        return decide_mackay
    if name == "ace":
        return decide_ace
    if name in ("abc3-scaled", "abc3-sample"):
        from . import scale as scale_mod

        cfg = config.scale if config.scale is not None else scale_mod.ScaleConfig()
        if name == "abc3-scaled":
            return lambda ctx: scale_mod.decide_abc3_scaled(ctx, cfg, rng)
        return lambda ctx: scale_mod.decide_abc3_sample(ctx, cfg, rng)
    raise ConfigError(f"unknown policy {name!r}")


def _run_seed(config: ExperimentConfig, pool: CovariatePool, seed: int, result: RunResult) -> None:
    train, test = split(
        pool,
        SplitSpec(
            seed=seed,
            train_fraction=config.train_fraction,
            null_hypothesis=config.null_hypothesis,
        ),
    )
    rng = np.random.default_rng(seed)
    total_steps = train.n if config.budget_steps is None else min(train.n, config.budget_steps)
    if total_steps <= 0:
        return
    checkpoints = checkpoint_steps(total_steps, config.checkpoint_fraction)
    cate_omega = _oracle_cate(config, train, test, seed)

    if config.policy == "leverage":
        for step in checkpoints:
            start = time.perf_counter()
            batch = decide_leverage(train, step, rng)
            states = [gp.fit(config.acquisition_kernel, train, [], []) for _ in (0, 1)]
            states = [dataclasses.replace(s, arm=a) for a, s in enumerate(states)]
            for pos, decision in enumerate(batch):
                y = train.outcome(decision.subject_index, decision.arm)
                states[decision.arm] = gp.extend(states[decision.arm], decision.subject_index, y)
                result.decisions.append(
                    (seed, step, pos, decision.subject_index, decision.arm, decision.score)
                )
            wall_ms = (time.perf_counter() - start) * 1e3
            ctx = PolicyContext(
                pool=train,
                arm_states=tuple(states),  # type: ignore[arg-type]
                acquisition_kernel=config.acquisition_kernel,
                rng=rng,
            )
            result.records.append(
                _evaluate_checkpoint(config, train, test, ctx, seed, step, cate_omega, wall_ms)
            )
        return

    decide = _sequential_decider(config, rng)
    ctx = PolicyContext.fresh(
        train,
        config.acquisition_kernel,
        rng,
        test_covariates=test.X if config.policy == "ace" else None,
    )
    wall_total_ms = 0.0
    for step in range(1, total_steps + 1):
        start = time.perf_counter()
        decision = decide(ctx)
        y = train.outcome(decision.subject_index, decision.arm)
        new_state = gp.extend(ctx.arm_states[decision.arm], decision.subject_index, y)
        ctx = ctx.with_arm_state(decision.arm, new_state)
        wall_total_ms += (time.perf_counter() - start) * 1e3
        result.decisions.append(
            (seed, step, 0, decision.subject_index, decision.arm, decision.score)
        )
        if step in checkpoints:
            result.records.append(
                _evaluate_checkpoint(
                    config, train, test, ctx, seed, step, cate_omega, wall_total_ms
                )
            )


def run_experiment(config: ExperimentConfig, pool: CovariatePool | None = None) -> RunResult:
    """Run every seed of the config; a failing seed is recorded, not fatal."""
    if pool is None:
        pool = load_dataset(config.dataset, null_hypothesis=config.null_hypothesis)
    result = RunResult()
    for seed in config.seeds:
        try:
            _run_seed(config, pool, seed, result)
        except Exception as exc:  # noqa: BLE001 - deliberate per-seed isolation
            result.failures.append((seed, f"seed {seed}: {type(exc).__name__}: {exc}"))
    if config.out:
        write_jsonl(result.records, config.out)
    return result


def write_jsonl(records, path) -> None:
    with open(path, "w") as fh:
        for record in records:
            fh.write(json.dumps(record.to_dict()) + "\n")


def read_jsonl(path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


SUMMARY_HEADER = "policy,frac,mean_pehe,sd_pehe,mean_mmd_sq,mean_type1,wall_ms_mean"


def summarize(records) -> list[dict]:
    """Per (policy, frac) aggregation of a record stream."""
    groups: dict[tuple[str, float], list[MetricsRecord]] = {}
    for r in records:
        groups.setdefault((r.policy, r.frac_observed), []).append(r)

    def _mean(values):
        vals = [v for v in values if v is not None]
        return float(np.mean(vals)) if vals else None

    rows = []
    for (policy, frac), rs in sorted(groups.items()):
        pehes = [r.pehe for r in rs]
        rows.append(
            {
                "policy": policy,
                "frac": frac,
                "mean_pehe": float(np.mean(pehes)),
                "sd_pehe": float(np.std(pehes)),
                "mean_mmd_sq": _mean(r.mmd_sq for r in rs),
                "mean_type1": _mean(r.type1_rate for r in rs),
                "wall_ms_mean": float(np.mean([r.wall_ms for r in rs])),
            }
        )
    return rows


def write_summary_csv(rows, path) -> None:
    def _cell(v):
        return "" if v is None else repr(v) if isinstance(v, float) else str(v)

    with open(path, "w") as fh:
        fh.write(SUMMARY_HEADER + "\n")
        for row in rows:
            fh.write(",".join(_cell(row[k]) for k in SUMMARY_HEADER.split(",")) + "\n")


def bench(configs, out_path=None) -> tuple[list[dict], list[str]]:
    """Run several configs and aggregate; partial failures are reported per config."""
    all_records = []
    failures: list[str] = []
    for config in configs:
        try:
            result = run_experiment(config)
            all_records.extend(result.records)
            failures.extend(f"{config.policy}: {msg}" for _, msg in result.failures)
        except Exception as exc:  # noqa: BLE001
            failures.append(f"{config.policy} on {config.dataset}: {type(exc).__name__}: {exc}")
    rows = summarize(all_records)
    if out_path:
        write_summary_csv(rows, out_path)
    return rows, failures


def kernel_from_dict(d: dict) -> KernelSpec:
    """Build a kernel spec from config-file keys (family plus parameters)."""
    kwargs = dict(d)
    family = kwargs.pop("family", "rbf")
    try:
        kwargs["family"] = KernelFamily(family)
    except ValueError:
        valid = ", ".join(f.value for f in KernelFamily)
        raise ConfigError(f"unknown kernel family {family!r}; valid: {valid}") from None
    return KernelSpec(**kwargs)


def config_from_dict(d: dict) -> ExperimentConfig:
    kwargs = dict(d)
    if "acquisition_kernel" in kwargs:
        kwargs["acquisition_kernel"] = kernel_from_dict(kwargs["acquisition_kernel"])
    if "regression_kernel" in kwargs:
        kwargs["regression_kernel"] = kernel_from_dict(kwargs["regression_kernel"])
    if "seeds" in kwargs:
        kwargs["seeds"] = tuple(int(s) for s in kwargs["seeds"])
    if "scale" in kwargs and isinstance(kwargs["scale"], dict):
        from . import scale as scale_mod

        kwargs["scale"] = scale_mod.ScaleConfig(**kwargs["scale"])
    unknown = set(kwargs) - {f.name for f in dataclasses.fields(ExperimentConfig)}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return ExperimentConfig(**kwargs)
