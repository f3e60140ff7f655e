"""Numerical laboratory for the nonreciprocal Maryland model."""

__version__ = "0.1.0"

from .localization import (  # noqa: E402
    IprSummary,
    StateDiagnostics,
    classify_states,
    ellipse_value,
    ipr,
    ipr_summary,
)
from .model import (  # noqa: E402
    IncommensurateWarning,
    ModelParams,
    ParameterError,
    build_hamiltonian,
    fibonacci_alpha,
    onsite_potential,
)
from .spectral import (  # noqa: E402
    EigensolverError,
    Spectrum,
    analytic_loop,
    complex_dos,
    critical_gamma,
    distance_to_loop,
    eigendecompose,
    max_abs_imag,
)
from .topology import WindingResult, log_det, winding_number  # noqa: E402
