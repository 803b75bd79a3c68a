"""Wong-Zakai approximations with kernel-smoothed noise.

Exact and smoothed-noise solvers for ``dX = b(t, X) dt + sigma(t) X dB`` in
the Stratonovich and Ito (Wick) sense, exact Wick calculus on stochastic
exponentials, and Monte Carlo measurement of strong convergence rates.
"""

__version__ = "0.1.0"

from .errors import ConfigError, DomainError, NonFiniteStateError, NotExactlyComputableError
from .grid import (
    BrownianPath,
    GridFunction,
    TimeGrid,
    inner_product,
    ito_integral,
    l2_norm,
    make_grid,
    sample_brownian,
    sample_brownian_batch,
    shift_path,
)
from .kernels import (
    Kernel,
    SmoothedPath,
    d_l2norm_dt,
    delta_distance,
    exact_kernel,
    make_kernel,
    mollifier_kernel,
    polygonal_kernel,
    smooth_path,
)
from .models import DriftSpec, PathSolution, SDEConfig, SigmaSpec
from .rates import (
    ErrorCurve,
    ErrorPoint,
    RateFit,
    SBoundParams,
    bound_check,
    closed_form_curve,
    closed_form_error,
    fit_rate,
    mc_error,
    s_q,
)
from .solvers import (
    closed_form,
    euler_maruyama,
    exact_ito,
    exact_stratonovich,
    wz_pointwise,
    wz_wick,
)
from .wick import (
    ExpFactor,
    ExponentialVector,
    gamma_contract,
    l2_distance_exact,
    lp_norm_exact,
    lp_norm_mc,
    stochastic_exponential,
    translate,
    wick_product,
)
from .wick_checks import (
    check_s_bound_props,
    prop41_finite_difference_check,
    run_identity_suite,
    translation_lipschitz_check,
)

__all__ = [
    "DriftSpec",
    "PathSolution",
    "SDEConfig",
    "SigmaSpec",
    "BrownianPath",
    "ConfigError",
    "DomainError",
    "ErrorCurve",
    "ErrorPoint",
    "ExpFactor",
    "ExponentialVector",
    "GridFunction",
    "Kernel",
    "NonFiniteStateError",
    "NotExactlyComputableError",
    "RateFit",
    "SBoundParams",
    "SmoothedPath",
    "TimeGrid",
    "bound_check",
    "check_s_bound_props",
    "closed_form",
    "closed_form_curve",
    "closed_form_error",
    "d_l2norm_dt",
    "delta_distance",
    "euler_maruyama",
    "exact_ito",
    "exact_kernel",
    "exact_stratonovich",
    "fit_rate",
    "gamma_contract",
    "inner_product",
    "ito_integral",
    "l2_distance_exact",
    "l2_norm",
    "lp_norm_exact",
    "lp_norm_mc",
    "make_grid",
    "make_kernel",
    "mc_error",
    "mollifier_kernel",
    "polygonal_kernel",
    "prop41_finite_difference_check",
    "run_identity_suite",
    "s_q",
    "sample_brownian",
    "sample_brownian_batch",
    "shift_path",
    "smooth_path",
    "stochastic_exponential",
    "translate",
    "translation_lipschitz_check",
    "wick_product",
    "wz_pointwise",
    "wz_wick",
]
