from .analytic import DensityTable, DoubleWell1D, GaussianMixture, analytic_density
from .base import Objective, finite_difference_gradient, stochastic_potential
from .datasets import Dataset, make_synthetic_dataset
from .mlp import MlpObjective, mlp_forward_backward, parameter_count, xavier_init

__all__ = [
    "Dataset",
    "DensityTable",
    "DoubleWell1D",
    "GaussianMixture",
    "MlpObjective",
    "Objective",
    "analytic_density",
    "finite_difference_gradient",
    "make_synthetic_dataset",
    "mlp_forward_backward",
    "parameter_count",
    "stochastic_potential",
    "xavier_init",
]
