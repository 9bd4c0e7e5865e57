"""Identification through a break in the covariance of structural shocks."""

from __future__ import annotations

import warnings

import numpy as np

from ..errors import InvalidRestriction, NearDegenerateEigenvalues
from ..restrictions import RestrictionSpec, compile_restrictions
from ..varcore import HsvarReducedForm
from .common import IdentifiedSet, column_admissible

DEGENERATE_GAP = 1e-6


def hsvar_eigen(hrf: HsvarReducedForm) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and eigenvectors of ``S1^{-1} Sigma2 S1^{-1}'`` with
    ``S1`` the Cholesky factor of ``Sigma1``. Each eigenvector is oriented so its
    largest-magnitude entry is positive."""
    rf1 = hrf.regime1()
    Li = rf1.sigma_tr_inv
    M = Li @ hrf.Sigma2 @ Li.T
    w, V = np.linalg.eigh(0.5 * (M + M.T))
    idx = np.argsort(w)[::-1]
    w, V = w[idx], V[:, idx]
    lead = V[np.argmax(np.abs(V), axis=0), np.arange(V.shape[1])]
    return w, V * np.where(lead < 0, -1.0, 1.0)


def solve_hsvar(
    hrf: HsvarReducedForm, sign_spec: RestrictionSpec | None = None, shock_position: int = 1
) -> IdentifiedSet:
    """Admissible rotations when variances shift across two regimes.

    Every eigen-column whose impulse responses (with either sign) satisfy the
    sign restrictions on shock ``shock_position`` (1-based) yields one member:
    that column is swapped into ``shock_position`` and oriented to meet the
    signs; the remaining columns follow the normalization rule.
    """
    n = hrf.n
    pos = shock_position - 1
    if not 0 <= pos < n:
        raise InvalidRestriction(f"shock_position {shock_position} outside 1..{n}")
    spec = sign_spec if sign_spec is not None else RestrictionSpec(n, hrf.p)
    if spec.equalities:
        raise InvalidRestriction("the heteroskedastic route takes sign restrictions only")
    if any(s.j != shock_position for s in spec.signs):
        raise InvalidRestriction("sign restrictions must refer to the shock at shock_position")
    rf1 = hrf.regime1()
    compiled = compile_restrictions(spec, rf1)
    w, V = hsvar_eigen(hrf)
    gaps = np.abs(w[:, None] - w[None, :])[np.triu_indices(n, 1)]
    min_gap = float(gaps.min()) if gaps.size else np.inf
    diag = {
        "route": "hsvar",
        "eigenvalues": w.tolist(),
        "min_eigen_gap": min_gap,
        "shock_position": shock_position,
    }
    if min_gap < DEGENERATE_GAP:
        warnings.warn(
            f"eigenvalue gap {min_gap:.3g} below {DEGENERATE_GAP}; the identified set is a continuum",
            NearDegenerateEigenvalues,
            stacklevel=2,
        )
        diag["continuum"] = True
        diag["admissible_indices"] = []
        diag["M"] = 0
        return IdentifiedSet([], "hsvar", diag, labels=[], lambdas=[])

    S = compiled.sign_rows[pos]
    admissible, orient = [], []
    for k in range(n):
        v = V[:, k]
        plus = bool(np.all(S @ v >= -1e-10)) if S.size else True
        minus = bool(np.all(-S @ v >= -1e-10)) if S.size else True
        if plus or minus:
            admissible.append(k)
            orient.append((plus, minus))
    members, labels, lambdas = [], [], []
    for k, (plus, minus) in zip(admissible, orient):
        perm = list(range(n))
        perm[pos], perm[k] = perm[k], perm[pos]
        Q = V[:, perm].copy()
        lam = w[perm].copy()
        for j in range(n):
            if j == pos and plus != minus:
                if minus:
                    Q[:, j] = -Q[:, j]
                continue
            norm_ok, _ = column_admissible(compiled, j, Q[:, j])
            if not norm_ok:
                Q[:, j] = -Q[:, j]
        members.append(Q)
        labels.append(k + 1)
        lambdas.append(lam)
    diag["admissible_indices"] = [k + 1 for k in admissible]
    diag["M"] = len(members)
    if not members:
        diag["reason"] = "no eigen-column satisfies the sign restrictions"
    return IdentifiedSet(members, "hsvar", diag, labels=labels, lambdas=lambdas)
