"""Enumeration of the identified set of orthogonal matrices."""

from __future__ import annotations

from ..restrictions import CompiledRestrictions, RestrictionSpec, classify, compile_restrictions
from ..varcore import HsvarReducedForm, ReducedForm
from .closed_form import solve_bivariate_closed_form
from .common import (
    IdentifiedSet,
    ImpulseResponseSet,
    collapse_points,
    identified_set_irf,
    is_admissible,
)
from .general import bezout_cap, solve_general
from .hsvar import hsvar_eigen, solve_hsvar
from .oracle import brute_force_oracle
from .triangular import solve_triangular


def solve(
    spec: RestrictionSpec,
    rf: ReducedForm | HsvarReducedForm,
    route: str = "auto",
    *,
    seed: int = 0,
    shock_position: int = 1,
) -> IdentifiedSet:
    """Pick a solver: heteroskedastic reduced forms use the eigen route, triangular
    restrictions the sequential route, anything else the polynomial route."""
    if isinstance(rf, HsvarReducedForm) or route == "hsvar":
        return solve_hsvar(rf, spec, shock_position)
    if route == "auto":
        route = "triangular" if classify(spec).triangular else "general"
    if route == "triangular":
        return solve_triangular(spec, rf)
    if route == "general":
        return solve_general(compile_restrictions(spec, rf), seed=seed)
    if route == "oracle":
        return brute_force_oracle(compile_restrictions(spec, rf))
    raise ValueError(f"unknown route {route!r}")


__all__ = [
    "CompiledRestrictions",
    "IdentifiedSet",
    "ImpulseResponseSet",
    "bezout_cap",
    "brute_force_oracle",
    "collapse_points",
    "hsvar_eigen",
    "identified_set_irf",
    "is_admissible",
    "solve",
    "solve_bivariate_closed_form",
    "solve_general",
    "solve_hsvar",
    "solve_triangular",
]
