"""Exact conditional sampling of heavy-tailed random walks given a barrier crossing."""

__version__ = "0.1.0"

from .bgmeasure import BGMeasure, LogRatioTable
from .errors import (BudgetExceeded, CertificationFailure, ConfigError, ConstructionError,
                     DirectnessViolation, DomainError, QuadratureError, TailwalkError)
from .harness import ExperimentConfig, ExperimentReport, emit_report, run_experiment
from .residual import ResidualLaw
from .sampler import (PathRecord, ar_exact_sample, bernoulli_crossing, naive_conditional,
                      replication_rng, walk_under_p, walk_under_q)
from .steplaw import CANONICAL, CONFIG_A, CONFIG_B, CONFIG_C, StepLaw
