"""Boltzmann-exploration EM for finite mixture models."""
from beem.core import (
    AssignmentState,
    BaseModel,
    BeemConfig,
    FitReport,
    WeightMode,
    beem_fit,
    complete_data_loglik,
    cool,
    modified_responsibility,
    random_partition,
    responsibilities,
    sample_assignment,
    sample_assignments,
)
from beem.kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "AssignmentState", "BaseModel", "BeemConfig", "FitReport", "WeightMode", "beem_fit",
    "complete_data_loglik", "cool", "modified_responsibility", "random_partition",
    "responsibilities", "sample_assignment", "sample_assignments", "BACKEND",
]
