"""Explicit solutions for a bivariate SVAR with one restriction ``(A0^{-1})_{11} = c``."""

from __future__ import annotations

import numpy as np

from ..errors import DimensionMismatch
from ..restrictions import SIGN_TOL
from ..varcore import ReducedForm
from .common import IdentifiedSet, canonical_order
from .triangular import TANGENCY_TOL


def solve_bivariate_closed_form(rf: ReducedForm, c: float) -> IdentifiedSet:
    """First column ``q1 = (c/s11, +-sqrt(1 - c^2/s11^2))``; second column is the
    orthogonal complement ``(-q12, q11)`` up to sign. Both are screened with the
    positive-diagonal-of-``A0`` rule written out in Cholesky entries.

    An infeasible ``c`` (``c^2 > s11^2``) gives an empty set with
    ``diagnostics["reason"] == "no_real_solution"``.
    """
    if rf.n != 2:
        raise DimensionMismatch("closed form applies to bivariate systems only")
    L = rf.sigma_tr
    s11, s21, s22 = L[0, 0], L[1, 0], L[1, 1]
    diag = {"route": "closed_form", "sigma11": float(s11)}
    r2 = 1.0 - (c / s11) ** 2
    if r2 < -TANGENCY_TOL:
        diag["reason"] = "no_real_solution"
        return IdentifiedSet([], "closed_form", diag)
    tangent = abs(r2) <= TANGENCY_TOL
    q11 = c / s11
    q12s = [0.0] if tangent else [-np.sqrt(r2), np.sqrt(r2)]

    # A0 = Q' Sigma_tr^{-1}: (A0)_11 = q11/s11 - q12*s21/(s11*s22), (A0)_22 = q22/s22
    a11_norm = np.hypot(1.0 / s11, s21 / (s11 * s22))
    out, labels = [], []
    for b, q12 in enumerate(q12s):
        a11 = (q11 / s11 - q12 * s21 / (s11 * s22)) / a11_norm
        if a11 <= -SIGN_TOL or (abs(a11) < SIGN_TOL and not _leading_positive((q11, q12))):
            continue
        # (A0)_22 = q22 / s22 >= 0 picks the sign of the complement
        q2 = np.array([-q12, q11])
        if q2[1] < -SIGN_TOL or (abs(q2[1]) < SIGN_TOL and not _leading_positive(q2)):
            q2 = -q2
        out.append(np.column_stack([[q11, q12], q2]))
        labels.append((b,))
    out, labels = canonical_order(out, labels)
    return IdentifiedSet(out, "closed_form", diag, labels=labels)


def _leading_positive(q) -> bool:
    q = np.asarray(q, dtype=float)
    big = np.flatnonzero(np.abs(q) > 1e-8)
    return big.size == 0 or q[big[0]] > 0
