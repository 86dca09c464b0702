"""Cubic nonlinear squeezing of non-Gaussian states under loss and dephasing.

Submodules:

- ``fock``: truncated Fock-space states, gates and the input-state families
- ``channels``: loss and dephasing on density matrices and moment polynomials
- ``moments``: moments of ``O(z) = p + z x^2``
- ``gaussian``: Gaussian benchmarks, plain and channel-propagated
- ``analytic``: closed-form variances and their symbolic regeneration
- ``optimize``: minimization of xi and xi = 1 boundaries
- ``cli``: command-line front end
"""

from .channels import Dephase, Loss, apply_channel, apply_dephasing, apply_loss
from .errors import (
    CubicSqueezeError,
    DegenerateBenchmarkError,
    DomainError,
    IncompleteKrausError,
    InvalidDimensionError,
    InvalidStateError,
    NumericalInstabilityError,
    OptimizationError,
    QuadratureError,
    TruncationError,
    UnsupportedDegreeError,
)
from .fock import (
    DensityMatrix,
    FockConfig,
    IdealCubic,
    MixedCubic,
    SqueezedSuperposition,
    Superposition,
    build_state,
)
from .gaussian import GaussianStateParams, min_gaussian_variance, xi
from .moments import nonlinear_mean, nonlinear_variance

__version__ = "0.1.0"

__all__ = [
    "CubicSqueezeError",
    "DegenerateBenchmarkError",
    "DensityMatrix",
    "Dephase",
    "DomainError",
    "FockConfig",
    "GaussianStateParams",
    "IdealCubic",
    "IncompleteKrausError",
    "InvalidDimensionError",
    "InvalidStateError",
    "Loss",
    "MixedCubic",
    "NumericalInstabilityError",
    "OptimizationError",
    "QuadratureError",
    "SqueezedSuperposition",
    "Superposition",
    "TruncationError",
    "UnsupportedDegreeError",
    "apply_channel",
    "apply_dephasing",
    "apply_loss",
    "build_state",
    "min_gaussian_variance",
    "nonlinear_mean",
    "nonlinear_variance",
    "xi",
    "__version__",
]
