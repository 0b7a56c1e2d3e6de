"""Exact finite-volume oracles and diagrammatic bounds for the lace-expansion
coefficients of oriented percolation."""
from __future__ import annotations

from .errors import (BondBudgetExceeded, BudgetExceeded, ConfigError, LaceBoundsError,
                     PathBudgetExceeded, StateBudgetExceeded)
from .model import Bond, BondConfig, ModelSpec, StepKernel, Vertex, WaveVector

__all__ = [
    "Bond", "BondConfig", "ModelSpec", "StepKernel", "Vertex", "WaveVector",
    "LaceBoundsError", "ConfigError", "BudgetExceeded", "BondBudgetExceeded",
    "StateBudgetExceeded", "PathBudgetExceeded",
]
__version__ = "0.1.0"
