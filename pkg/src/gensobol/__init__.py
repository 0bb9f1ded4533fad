"""Generalized Sobol' indices: pick-and-freeze estimation of linear
combinations of ANOVA variance components."""

from .subsets import (
    SubsetMask,
    complement,
    lower_from_sigma,
    nxor_set,
    sigma_from_lower,
    subsets_of,
    xor_set,
)
from .models import GridFunction, MinModel, ProductModel, brute_force_anova, brute_force_theta
from .gsi import (
    GsiSpec,
    batch_cost,
    compose_bilinear,
    compose_simple,
    compose_square,
    cost,
    expected_value,
    is_contrast,
    proxy_variance,
    target_value,
)

__version__ = "0.1.0"
