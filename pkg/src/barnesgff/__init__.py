"""Multiple gamma functions, Barnes beta distributions, Selberg and Morris
integral laws, and maxima of discrete log-correlated Gaussian fields."""

from .errors import (
    BarnesError,
    ContractError,
    DomainError,
    InversionError,
    PoleError,
    QuadratureError,
    VerificationError,
)
from .multigamma import MultiGammaParams, log_multi_gamma
from .barnesbeta import BarnesBetaSpec, RatioSpec, Regime, log_eta
from .selbergmorris import SelbergParams

__version__ = "0.1.0"

__all__ = [
    "BarnesError",
    "ContractError",
    "DomainError",
    "InversionError",
    "PoleError",
    "QuadratureError",
    "VerificationError",
    "MultiGammaParams",
    "log_multi_gamma",
    "BarnesBetaSpec",
    "RatioSpec",
    "Regime",
    "log_eta",
    "SelbergParams",
    "__version__",
]
