"""Exact constructions and checks for multi-species stochastic higher-spin vertex
models, their q-Hahn and q-Boson degenerations, Markov duality functions, and a
Monte Carlo simulator for the associated particle systems."""

from .qarith import SingularValueError, scalar
from .vertex import IntegrityError, r_matrix, s_matrix

__version__ = "0.1.0"

__all__ = ["SingularValueError", "IntegrityError", "scalar", "r_matrix", "s_matrix", "__version__"]
