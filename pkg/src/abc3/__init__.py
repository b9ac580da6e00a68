"""Active Bayesian selection of (subject, treatment-arm) pairs for randomized
experiments, with GP-based scoring, baseline policies, balance and error
diagnostics, and a reproducible benchmark runner."""

from .data import CovariatePool, SplitSpec, gen_synthetic, load_csv, normalize, save_csv, split
from .errors import Abc3Error, ConfigError, InputError, NumericalError, StateError
from .gp import ArmState, Posterior, extend, fit, fit_hyperparameters, integrated_variance, posterior
from .kernels import GramMatrix, KernelFamily, KernelSpec, cross_gram, eval_kernel, gram
from .metrics import (
    AssumptionReport,
    MmdReport,
    Type1Report,
    check_assumption,
    mmd_bound_report,
    mmd_sq,
    pehe,
    pehe_omega,
    type1_test,
)
from .policies import (
    PolicyContext,
    PolicyDecision,
    abc3_score,
    decide_abc3,
    decide_ace,
    decide_leverage,
    decide_mackay,
    decide_naive,
)
from .runner import ExperimentConfig, MetricsRecord, RunResult, bench, run_experiment
from .scale import ScaleConfig, decide_abc3_sample, decide_abc3_scaled, scaled_bench

__version__ = "0.1.0"
