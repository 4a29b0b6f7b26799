"""Per-agent objectives and their data generators."""

from .base import LocalObjective, ProxResult, project_ball, soft_threshold
from .io import dump_dataset, load_dataset
from .lasso import LassoData, generate_lasso, lasso_prox
from .phase_retrieval import (
    PhaseRetrievalData,
    generate_phase_retrieval,
    phase_aligned_distance,
    pr_gradient,
    pr_prox,
    pr_value,
)
from .quadratic import QuadraticData, centralized_minimizer, generate_quadratic, quad_prox, random_symmetric
from .sparse_pca import SparsePcaData, generate_sparse_pca, spca_prox

__all__ = [
    "LocalObjective",
    "ProxResult",
    "project_ball",
    "soft_threshold",
    "dump_dataset",
    "load_dataset",
    "LassoData",
    "generate_lasso",
    "lasso_prox",
    "PhaseRetrievalData",
    "generate_phase_retrieval",
    "phase_aligned_distance",
    "pr_gradient",
    "pr_prox",
    "pr_value",
    "QuadraticData",
    "centralized_minimizer",
    "generate_quadratic",
    "quad_prox",
    "random_symmetric",
    "SparsePcaData",
    "generate_sparse_pca",
    "spca_prox",
]
