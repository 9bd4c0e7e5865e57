from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import EmptyIdentifiedSet
from ..restrictions import (
    SIGN_TOL,
    CompiledRestrictions,
    evaluate_equality,
    evaluate_signs,
    vec,
)
from ..varcore import ReducedForm, map_g_inverse, vma_coefficients

DEDUP_TOL = 1e-6
EQUALITY_TOL = 1e-6


@dataclass(eq=False)
class IdentifiedSet:
    """Admissible orthogonal matrices for one reduced form.

    ``labels`` are route specific: bit tuples for the triangular route, 1-based
    eigen-column indices for the heteroskedastic route. ``lambdas[m]`` holds the
    variance ratios aligned with the columns of ``q_matrices[m]``.
    """

    q_matrices: list[np.ndarray]
    route: str
    diagnostics: dict = field(default_factory=dict)
    labels: list | None = None
    lambdas: list[np.ndarray] | None = None

    @property
    def count(self) -> int:
        return len(self.q_matrices)

    @property
    def empty(self) -> bool:
        return not self.q_matrices

    def __len__(self):
        return self.count

    def __iter__(self):
        return iter(self.q_matrices)

    def a0_matrices(self, rf: ReducedForm) -> list[np.ndarray]:
        return [map_g_inverse(rf, Q).A0 for Q in self.q_matrices]


def _entry_orientation(q: np.ndarray) -> float:
    """+1 when the first non-negligible entry of ``q`` is positive."""
    big = np.flatnonzero(np.abs(q) > 1e-8)
    return 1.0 if big.size == 0 or q[big[0]] > 0 else -1.0


def normalization_status(compiled: CompiledRestrictions, Q: np.ndarray) -> np.ndarray:
    """Per-column check of the normalization rule.

    A column whose normalization value is numerically zero cannot be pinned by
    the rule; it is accepted only in the orientation whose first
    non-negligible entry is positive, so that exactly one of ``+-q`` survives.
    """
    V = compiled.norm_vectors
    vals = np.einsum("ij,ij->j", V, Q) / np.linalg.norm(V, axis=0)
    ok = vals >= SIGN_TOL
    amb = np.abs(vals) < SIGN_TOL
    for j in np.flatnonzero(amb):
        ok[j] = _entry_orientation(Q[:, j]) > 0
    return ok


def column_admissible(compiled: CompiledRestrictions, j: int, q: np.ndarray) -> tuple[bool, bool]:
    """(normalization ok, signs ok) for a single column placed at shock ``j``."""
    v = compiled.norm_vectors[:, j]
    val = v @ q / np.linalg.norm(v)
    norm_ok = val >= SIGN_TOL or (abs(val) < SIGN_TOL and _entry_orientation(q) > 0)
    S = compiled.sign_rows[j]
    sign_ok = bool(np.all(S @ q >= -SIGN_TOL)) if S.size else True
    return bool(norm_ok), sign_ok


def flip_to_normalization(compiled: CompiledRestrictions, Q: np.ndarray) -> np.ndarray:
    return Q * np.where(normalization_status(compiled, Q), 1.0, -1.0)


def equality_scale(compiled: CompiledRestrictions) -> float:
    F, c = compiled.F, compiled.c
    return max(1.0, float(np.max(np.abs(F), initial=0.0)), float(np.max(np.abs(c), initial=0.0)))


def is_admissible(compiled: CompiledRestrictions, Q: np.ndarray, tol: float = EQUALITY_TOL) -> bool:
    if np.max(np.abs(Q.T @ Q - np.eye(Q.shape[0]))) > 1e-8:
        return False
    res = evaluate_equality(compiled, Q)
    if res.size and np.max(np.abs(res)) > tol:
        return False
    return bool(normalization_status(compiled, Q).all() and evaluate_signs(compiled, Q).all())


def dedup(mats: list[np.ndarray], tol: float = DEDUP_TOL, labels=None):
    keep, keep_labels = [], []
    for k, Q in enumerate(mats):
        if all(np.linalg.norm(Q - R) >= tol for R in keep):
            keep.append(Q)
            keep_labels.append(None if labels is None else labels[k])
    return keep, keep_labels


def canonical_order(mats: list[np.ndarray], labels=None):
    """Deterministic ordering of set members (descending lexicographic ``vec``)."""
    keys = [tuple(np.round(vec(Q), 8)) for Q in mats]
    idx = sorted(range(len(mats)), key=lambda k: keys[k], reverse=True)
    return [mats[k] for k in idx], (None if labels is None else [labels[k] for k in idx])


@dataclass(eq=False)
class ImpulseResponseSet:
    """Impulse responses of every member of an identified set.

    ``irfs[m, h, i, j]`` is the response of variable ``i`` to shock ``j`` at
    horizon ``h`` under member ``m`` (0-based array indices).
    """

    irfs: np.ndarray
    labels: list | None = None

    @property
    def count(self) -> int:
        return self.irfs.shape[0]

    @property
    def h_max(self) -> int:
        return self.irfs.shape[1] - 1

    def values(self, i: int, j: int, h: int) -> np.ndarray:
        """Per-member values at variable ``i``, shock ``j`` (1-based), horizon ``h``."""
        return self.irfs[:, h, i - 1, j - 1]

    def points(self, i: int, j: int, h: int, tol: float = 1e-9):
        """Sorted distinct points of the identified set and their multiplicities."""
        return collapse_points(self.values(i, j, h), tol)


def collapse_points(values, tol: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
    """Sort values and merge neighbours closer than ``tol``."""
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        return v, np.zeros(0, dtype=int)
    pts, mult = [v[0]], [1]
    for x in v[1:]:
        if abs(x - pts[-1]) < tol:
            mult[-1] += 1
        else:
            pts.append(x)
            mult.append(1)
    return np.array(pts), np.array(mult)


def identified_set_irf(iset: IdentifiedSet, rf: ReducedForm, h_max: int) -> ImpulseResponseSet:
    if iset.empty:
        raise EmptyIdentifiedSet("identified set is empty; no impulse responses to compute")
    CL = vma_coefficients(rf, h_max) @ rf.sigma_tr
    irfs = np.einsum("hik,mkj->mhij", CL, np.stack(iset.q_matrices))
    return ImpulseResponseSet(irfs, iset.labels)
