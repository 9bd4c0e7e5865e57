"""Sequential construction of every admissible ``Q`` for triangular restrictions.

Columns are determined one at a time in the triangular shock ordering. At each
level the unit vector ``q`` must lie on the line ``d + z*alpha`` cut out by the
level's restrictions and orthogonality to earlier columns; intersecting the line
with the unit sphere gives at most two roots, so the search is a binary tree
indexed by bit vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NotTriangular, RankDeficient
from ..restrictions import CompiledRestrictions, RestrictionSpec, classify, compile_restrictions
from ..varcore import ReducedForm
from .common import IdentifiedSet, canonical_order, column_admissible, dedup

TANGENCY_TOL = 1e-12


@dataclass
class Level:
    """Linear system of one level: ``F_tilde q = c_tilde`` with ``n - 1`` rows when identified."""

    shock: int
    F_tilde: np.ndarray
    c_tilde: np.ndarray
    rank: int


def numerical_rank(M: np.ndarray, floor: int | None = None) -> int:
    """Singular values above ``max(shape or floor) * eps * s_max``."""
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0:
        return 0
    scale = max(max(M.shape), floor or 0)
    return int(np.sum(s > scale * np.finfo(float).eps * s[0]))


def position_rows(compiled: CompiledRestrictions, order: tuple[int, ...]) -> list[np.ndarray]:
    """Rows assigned to each triangular position: an atom belongs to the latest
    position among the columns it touches."""
    pos = {s: k for k, s in enumerate(order)}
    rows: list[list[int]] = [[] for _ in order]
    for r, atom in enumerate(compiled.spec.equalities):
        rows[max(pos[c] for c in atom.columns)].append(r)
    return [np.array(r, dtype=int) for r in rows]


def build_level(
    compiled: CompiledRestrictions,
    order: tuple[int, ...],
    rows: list[np.ndarray],
    k: int,
    previous: list[np.ndarray],
) -> Level:
    """Stack the position-``k`` restrictions on their own column with the earlier columns."""
    n = compiled.n
    s = order[k]
    r = rows[k]
    own = compiled.rows_on_column(r, s) if r.size else np.zeros((0, n))
    rhs = compiled.c[r].copy() if r.size else np.zeros(0)
    for t, q in enumerate(previous):
        if r.size:
            rhs -= compiled.rows_on_column(r, order[t]) @ q
    prev = np.array(previous).reshape(-1, n)
    F_tilde = np.vstack([own, prev])
    c_tilde = np.concatenate([rhs, np.zeros(len(previous))])
    return Level(s, F_tilde, c_tilde, numerical_rank(F_tilde, n - 1))


def line_sphere_roots(level: Level, tangency_tol: float = TANGENCY_TOL):
    """Unit vectors on ``{x : F_tilde x = c_tilde}`` when that set is a line.

    Returns ``(roots, discriminant)``; roots are ordered with the smaller ``z``
    first and the null direction oriented so its largest entry is positive.
    """
    F, c = level.F_tilde, level.c_tilde
    n = F.shape[1]
    if F.shape[0]:
        d = F.T @ np.linalg.solve(F @ F.T, c)
        alpha = np.linalg.svd(F)[2][-1]
    else:
        d = np.zeros(n)
        alpha = np.eye(n)[0]
    if alpha[np.argmax(np.abs(alpha))] < 0:
        alpha = -alpha
    lam = d @ d - 1.0
    xi = d @ alpha
    om = alpha @ alpha
    disc = xi * xi - lam * om
    if disc < -tangency_tol:
        return [], disc
    if abs(disc) <= tangency_tol:
        return [d + (-xi / om) * alpha], disc
    root = np.sqrt(disc)
    return [d + ((-xi - root) / om) * alpha, d + ((-xi + root) / om) * alpha], disc


def _prepare(spec_or_compiled, rf):
    if isinstance(spec_or_compiled, CompiledRestrictions):
        compiled = spec_or_compiled
    else:
        compiled = compile_restrictions(spec_or_compiled, rf)
    cls = classify(compiled.spec)
    if not cls.triangular:
        raise NotTriangular(
            "restrictions are not triangular: no shock ordering gives a block "
            "lower-triangular pattern with n-i restrictions on the i-th shock"
        )
    return compiled, cls.order


def solve_triangular(spec: RestrictionSpec | CompiledRestrictions, rf: ReducedForm | None = None) -> IdentifiedSet:
    """Enumerate all admissible ``Q`` by depth-first search over bit vectors.

    Raises :class:`RankDeficient` when a level's stacked matrix has rank below
    ``n - 1`` (the restrictions then leave a continuum of solutions).
    """
    compiled, order = _prepare(spec, rf)
    n = compiled.n
    rows = position_rows(compiled, order)
    found: list[np.ndarray] = []
    labels: list[tuple[int, ...]] = []
    stats = {"pruned_no_real_root": 0, "pruned_normalization": 0, "pruned_signs": 0}
    ranks: list[int] = [0] * n

    def descend(k: int, previous: list[np.ndarray], bits: tuple[int, ...]):
        if k == n:
            Q = np.zeros((n, n))
            for t, q in enumerate(previous):
                Q[:, order[t]] = q
            found.append(Q)
            labels.append(bits)
            return
        level = build_level(compiled, order, rows, k, previous)
        ranks[k] = level.rank
        if level.rank < n - 1:
            raise RankDeficient(k + 1, level.rank, n - 1)
        roots, _ = line_sphere_roots(level)
        if not roots:
            stats["pruned_no_real_root"] += 1
            return
        for b, q in enumerate(roots):
            norm_ok, sign_ok = column_admissible(compiled, level.shock, q)
            if not norm_ok:
                stats["pruned_normalization"] += 1
                continue
            if not sign_ok:
                stats["pruned_signs"] += 1
                continue
            descend(k + 1, previous + [q], bits + (b,))

    descend(0, [], ())
    members, labels = dedup(found, labels=labels)
    members, labels = canonical_order(members, labels)
    diag = {
        "route": "triangular",
        "shock_order": [s + 1 for s in order],
        "level_ranks": ranks,
        **stats,
    }
    return IdentifiedSet(members, "triangular", diag, labels=labels)
