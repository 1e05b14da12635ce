"""Circuit estimators for higher-order Rayleigh-Schroedinger energy corrections."""
from .system import PerturbedSystem, diagonalize_h0, load_system, random_system
from .oracle import PTCorrections, correction, epsilon_m, exact_spectrum, level_shift, pt_corrections, uv_series_bias

__version__ = "0.1.0"

__all__ = [
    "PTCorrections", "PerturbedSystem", "correction", "diagonalize_h0", "epsilon_m", "exact_spectrum",
    "level_shift",
    "load_system", "pt_corrections", "random_system", "uv_series_bias",
]
