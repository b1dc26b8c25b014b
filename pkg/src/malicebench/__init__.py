"""Learning halfspaces under malicious noise with reweighted hinge loss."""
from __future__ import annotations

from .adversary import AdversarySpec, Strategy, corrupt, empirical_noise_rate
from .core import (AlgorithmParams, Dataset, Halfspace, LabeledSample, LearnerView, PancakeSpec, Provenance,
                   hinge_loss, in_pancake, margin, subgradient, weighted_hinge_loss)
from .datagen import (Component, Family, MixtureSampler, MixtureSpec, SeparableMixtureSpec, enforce_margin,
                      make_separable_spec, sample_mixture)
from .diagnostics import (CertificateEntry, CertificateReport, check_dense_pancake_condition, gradient_decomposition,
                          lemma_suite, pancake_density, pointwise_certificate, sum_norm)
from .experiments import ExperimentConfig, RunResult, report, run_experiment
from .learner import LearnerOutput, OptimizerConfig, error_rate, learn, minimize_weighted_hinge, prune
from .outlier_removal import (InfeasibleError, RemovalParams, project_weights, soft_outlier_removal, top_direction,
                              verify_feasibility)

__version__ = "0.1.0"

__all__ = [
    "AdversarySpec",
    "AlgorithmParams",
    "CertificateEntry",
    "CertificateReport",
    "Component",
    "Dataset",
    "ExperimentConfig",
    "Family",
    "Halfspace",
    "InfeasibleError",
    "LabeledSample",
    "LearnerOutput",
    "LearnerView",
    "MixtureSampler",
    "MixtureSpec",
    "OptimizerConfig",
    "PancakeSpec",
    "Provenance",
    "RemovalParams",
    "RunResult",
    "SeparableMixtureSpec",
    "Strategy",
    "check_dense_pancake_condition",
    "corrupt",
    "empirical_noise_rate",
    "enforce_margin",
    "error_rate",
    "gradient_decomposition",
    "hinge_loss",
    "in_pancake",
    "learn",
    "lemma_suite",
    "make_separable_spec",
    "margin",
    "minimize_weighted_hinge",
    "pancake_density",
    "pointwise_certificate",
    "project_weights",
    "prune",
    "report",
    "run_experiment",
    "sample_mixture",
    "soft_outlier_removal",
    "subgradient",
    "sum_norm",
    "top_direction",
    "verify_feasibility",
    "weighted_hinge_loss",
]
