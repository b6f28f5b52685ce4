"""Discrete truncated Wigner sampling and semi-classical evolution."""

from .ensemble import EnsembleInstabilityError, EnsembleResult, run_ensemble
from .phase_space import sample_initial, wigner_weights

__all__ = ["EnsembleInstabilityError", "EnsembleResult", "run_ensemble", "sample_initial", "wigner_weights"]
