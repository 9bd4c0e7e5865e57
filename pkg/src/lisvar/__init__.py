"""Identification and inference for locally identified structural VARs."""

from .varcore import (
    HsvarReducedForm,
    ReducedForm,
    StructuralParams,
    cholesky_lower,
    cumulative_ir,
    fit_hsvar_fgls,
    fit_ols,
    impulse_response,
    impulse_responses,
    map_g,
    map_g_inverse,
    sign_normalize,
    simulate,
    simulate_hsvar,
    vma_coefficients,
)

__version__ = "0.1.0"
