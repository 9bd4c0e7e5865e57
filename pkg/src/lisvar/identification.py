"""Rank conditions for local, global, subset and shock-wise identification,
solution-count bounds and the random-draw identification check."""

from __future__ import annotations

from collections.abc import Callable, Iterable
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    NoRealSolution,
    NotAdmissible,
    NotPartitioned,
    NotRecursive,
    NotTriangular,
    RankDeficient,
)
from .restrictions import (
    CompiledRestrictions,
    RestrictionSpec,
    classify,
    compile_restrictions,
    dtilde,
    evaluate_equality,
    evaluate_signs,
    structural_rows,
    structural_values,
    vec,
)
from .solve.common import column_admissible, flip_to_normalization, normalization_status
from .solve.triangular import build_level, line_sphere_roots, numerical_rank, position_rows
from .varcore import ReducedForm, StructuralParams, random_orthogonal

ADMISSIBLE_TOL = 1e-6
OBJECTIVE_TOL = 1e-12


@dataclass
class GlobalResult:
    globally_identified: bool
    failing_index: int | None = None
    Q: np.ndarray | None = None


@dataclass
class LocalRankResult:
    locally_identified: bool
    rank: int
    required: int
    order_condition: bool

    def __bool__(self):
        return self.locally_identified


@dataclass
class SequentialResult:
    ok: bool
    per_index_ranks: list[int]
    shock_identified: dict[int, bool] = field(default_factory=dict)
    Q: np.ndarray | None = None

    def __bool__(self):
        return self.ok


def _require_admissible(compiled: CompiledRestrictions, Q: np.ndarray):
    res = evaluate_equality(compiled, Q)
    if res.size and np.max(np.abs(res)) >= ADMISSIBLE_TOL:
        raise NotAdmissible(
            f"Q violates the equality restrictions (max residual {np.max(np.abs(res)):.3g})"
        )


def check_global_rwz(compiled: CompiledRestrictions) -> GlobalResult:
    """Sequential rank test for recursive restrictions without cross-shock terms.

    ``failing_index`` is the 1-based position in the triangular shock ordering.
    """
    cls = classify(compiled.spec)
    if not cls.recursive:
        raise NotRecursive(
            "global check needs homogeneous triangular restrictions "
            f"(triangular={cls.triangular}, homogeneous={cls.homogeneous})"
        )
    if cls.cross_shock:
        raise NotRecursive("global check does not cover restrictions linking two shocks")
    n = compiled.n
    order = cls.order
    rows = position_rows(compiled, order)
    Q = np.zeros((n, n))
    previous: list[np.ndarray] = []
    for k, s in enumerate(order):
        F_kk = compiled.rows_on_column(rows[k], s) if rows[k].size else np.zeros((0, n))
        v = compiled.norm_vectors[:, s]
        A = np.vstack([F_kk] + [q[None, :] for q in previous])
        if numerical_rank(np.column_stack([A.T, v])) < n:
            return GlobalResult(False, k + 1)
        q = np.linalg.svd(A)[2][-1] if A.size else v / np.linalg.norm(v)
        if v @ q < 0:
            q = -q
        previous.append(q)
        Q[:, s] = q
    return GlobalResult(True, None, Q)


def _local_rank(M: np.ndarray, n: int, f: int) -> LocalRankResult:
    required = n * (n - 1) // 2
    if required == 0:
        return LocalRankResult(True, 0, 0, True)
    rank = numerical_rank(M, max(f, required)) if M.size else 0
    order_ok = f >= required
    return LocalRankResult(order_ok and rank == required, rank, required, order_ok)


def check_local_rank(compiled: CompiledRestrictions, Q: np.ndarray) -> LocalRankResult:
    """Rank of ``F(phi)(I kron Q) D_n`` against ``n(n-1)/2`` at an admissible ``Q``."""
    Q = np.asarray(Q, dtype=float)
    _require_admissible(compiled, Q)
    n = compiled.n
    if n < 2:
        return _local_rank(np.zeros((0, 0)), n, compiled.f)
    M = compiled.F @ np.kron(np.eye(n), Q) @ dtilde(n)
    return _local_rank(M, n, compiled.f)


def check_local_structural(sp: StructuralParams, spec: RestrictionSpec) -> LocalRankResult:
    """Same verdict computed from structural objects: rank of ``Z (I kron h(A)') D_n``."""
    c = np.array([a.value for a in spec.equalities], dtype=float)
    vals = structural_values(spec, sp)
    if vals.size and np.max(np.abs(vals - c)) >= ADMISSIBLE_TOL:
        raise NotAdmissible("structural parameters violate the equality restrictions")
    n = sp.n
    if n < 2:
        return _local_rank(np.zeros((0, 0)), n, spec.f)
    return _local_rank(structural_rows(spec, sp) @ dtilde(n), n, spec.f)


def commutation_matrix(m: int, n: int | None = None) -> np.ndarray:
    """``K`` with ``K vec(A) = vec(A')`` for ``A`` of shape ``m x n``."""
    n = m if n is None else n
    K = np.zeros((m * n, m * n))
    for i in range(m):
        for j in range(n):
            K[i * n + j, j * m + i] = 1.0
    return K


def check_subset_rank(
    compiled: CompiledRestrictions, Q1: np.ndarray, shocks: Iterable[int] | None = None
) -> LocalRankResult:
    """Local identification of a subset of ``s`` shocks.

    ``shocks`` are the 1-based shock indices of the group (default ``1..s``) and
    ``Q1`` holds their columns. No restriction may link the group to the other
    shocks. The stacked matrix is ``[F_11; N_s (I_s kron Q1')]`` and the verdict
    is full column rank ``n*s``.
    """
    Q1 = np.atleast_2d(np.asarray(Q1, dtype=float))
    n, s = Q1.shape
    group = list(range(s)) if shocks is None else [k - 1 for k in shocks]
    if len(group) != s:
        raise ValueError("number of shocks does not match the columns of Q1")
    gset = set(group)
    rows = []
    for r, atom in enumerate(compiled.spec.equalities):
        touched = set(atom.columns)
        if touched & gset and touched - gset:
            raise NotPartitioned(f"restriction {r + 1} links the shock group to other shocks")
        if touched <= gset:
            rows.append(r)
    rows = np.array(rows, dtype=int)
    F11 = (
        np.hstack([compiled.rows_on_column(rows, j) for j in group]) if rows.size else np.zeros((0, n * s))
    )
    if rows.size:
        res = F11 @ vec(Q1) - compiled.c[rows]
        if np.max(np.abs(res)) >= ADMISSIBLE_TOL:
            raise NotAdmissible("Q1 violates the restrictions on the shock group")
    if np.max(np.abs(Q1.T @ Q1 - np.eye(s))) > 1e-8:
        raise NotAdmissible("columns of Q1 are not orthonormal")
    N = 0.5 * (np.eye(s * s) + commutation_matrix(s))
    J = np.vstack([F11, N @ np.kron(np.eye(s), Q1.T)])
    required = n * s
    rank = numerical_rank(J)
    return LocalRankResult(rank == required, rank, required, F11.shape[0] >= required - s * (s + 1) // 2)


def _triangular_order(compiled: CompiledRestrictions) -> tuple[int, ...]:
    cls = classify(compiled.spec)
    if not cls.triangular:
        raise NotTriangular("restrictions are not triangular")
    return cls.order


def _first_branch(compiled, order, rows):
    """Construct one admissible ``Q`` level by level, preferring branches that pass
    normalization and signs; returns ``(previous, ranks)``."""
    n = compiled.n
    ranks: list[int] = []

    def descend(k, previous, strict):
        if k == n:
            return previous
        level = build_level(compiled, order, rows, k, previous)
        if len(ranks) <= k:
            ranks.append(level.rank)
        else:
            ranks[k] = level.rank
        if level.rank < n - 1:
            raise RankDeficient(k + 1, level.rank, n - 1)
        roots, _ = line_sphere_roots(level)
        for q in roots:
            if strict and not all(column_admissible(compiled, level.shock, q)):
                continue
            out = descend(k + 1, previous + [q], strict)
            if out is not None:
                return out
        return None

    for strict in (True, False):
        out = descend(0, [], strict)
        if out is not None:
            return out, ranks
    raise NoRealSolution("no real solution at some level: the reduced form is incompatible with the restrictions")


def check_triangular_sequential(compiled: CompiledRestrictions, Q: np.ndarray | None = None) -> SequentialResult:
    """Sequential rank test ``rank(F_tilde_ii) = n - 1`` for triangular restrictions.

    With ``Q`` given, the stacked matrices use its columns; otherwise a solution
    is constructed level by level. ``shock_identified[j]`` (1-based shock) is the
    shock-wise verdict: every level up to that shock's position passes.
    """
    order = _triangular_order(compiled)
    n = compiled.n
    rows = position_rows(compiled, order)
    ranks: list[int] = []
    if Q is not None:
        Q = np.asarray(Q, dtype=float)
        _require_admissible(compiled, Q)
        for k in range(n):
            previous = [Q[:, order[t]] for t in range(k)]
            ranks.append(build_level(compiled, order, rows, k, previous).rank)
        built = Q
    else:
        try:
            previous, ranks = _first_branch(compiled, order, rows)
            built = np.zeros((n, n))
            for t, q in enumerate(previous):
                built[:, order[t]] = q
        except RankDeficient:
            built = None
            ranks = _ranks_until_failure(compiled, order, rows)
    passes = [r == n - 1 for r in ranks] + [False] * (n - len(ranks))
    shock_ok = {}
    prefix = True
    for k, s in enumerate(order):
        prefix = prefix and passes[k]
        shock_ok[s + 1] = prefix
    return SequentialResult(all(passes), ranks, shock_ok, built)


def _ranks_until_failure(compiled, order, rows) -> list[int]:
    """Ranks along a constructed branch, stopping at the deficient level."""
    n = compiled.n
    ranks: list[int] = []
    previous: list[np.ndarray] = []
    for k in range(n):
        level = build_level(compiled, order, rows, k, previous)
        ranks.append(level.rank)
        if level.rank < n - 1:
            break
        roots, _ = line_sphere_roots(level)
        if not roots:
            break
        previous.append(roots[0])
    return ranks


def check_rwz_sufficient_Mi(compiled: CompiledRestrictions, Q: np.ndarray) -> bool:
    """Each ``M_i = [F_ii Q ; (I_i 0)]`` has rank ``n`` (columns of ``Q`` in block order).

    For restrictions that are block lower-triangular in the natural shock order
    but do not have ``n - i`` rows per block, the blocks are used as given and
    the test simply fails when rows are missing.
    """
    Q = np.asarray(Q, dtype=float)
    _require_admissible(compiled, Q)
    n = compiled.n
    cls = classify(compiled.spec)
    if cls.triangular:
        order = cls.order
        rows = position_rows(compiled, order)
    else:
        order = tuple(range(n))
        rows_l: list[list[int]] = [[] for _ in range(n)]
        for r, atom in enumerate(compiled.spec.equalities):
            if max(atom.columns) > atom.block:
                raise NotTriangular("restrictions are not block lower-triangular")
            rows_l[atom.block].append(r)
        rows = [np.array(r, dtype=int) for r in rows_l]
    Qp = Q[:, list(order)]
    for k, s in enumerate(order):
        F_kk = compiled.rows_on_column(rows[k], s) if rows[k].size else np.zeros((0, n))
        sel = np.eye(n)[: k + 1]
        if numerical_rank(np.vstack([F_kk @ Qp, sel])) < n:
            return False
    return True


def solution_count_bound(spec: RestrictionSpec, s: int | None = None) -> int:
    """Upper bound on the number of admissible ``Q``."""
    if s is not None:
        return 2 ** (s * (s + 1) // 2)
    cls = classify(spec)
    if cls.recursive and not cls.cross_shock:
        return 1
    if cls.triangular:
        return 2**spec.n
    return 2 ** (spec.n * (spec.n + 1) // 2)


def _penalized(Q, compiled: CompiledRestrictions):
    """Equality objective, full objective (with sign/normalization penalties) and
    its Euclidean gradient for a batch of matrices."""
    R, n, _ = Q.shape
    F, c = compiled.F, compiled.c
    x = Q.transpose(0, 2, 1).reshape(R, n * n)
    r = x @ F.T - c
    eq = np.sum(r * r, axis=1)
    grad = (2.0 * r @ F).reshape(R, n, n).transpose(0, 2, 1)
    obj = eq.copy()
    V = compiled.norm_vectors / np.linalg.norm(compiled.norm_vectors, axis=0)
    vals = np.einsum("ij,rij->rj", V, Q)
    viol = np.minimum(vals, 0.0)
    obj += np.sum(viol * viol, axis=1)
    grad += 2.0 * viol[:, None, :] * V[None, :, :]
    for j, S in enumerate(compiled.sign_rows):
        if S.size:
            sv = Q[:, :, j] @ S.T
            v = np.minimum(sv, 0.0)
            obj += np.sum(v * v, axis=1)
            grad[:, :, j] += 2.0 * v @ S
    return eq, obj, grad


def _polar(Y):
    U, _, Vt = np.linalg.svd(Y)
    return U @ Vt


def find_admissible_q(
    compiled: CompiledRestrictions,
    seed: int = 0,
    restarts: int | None = None,
    max_iter: int = 500,
) -> np.ndarray | None:
    """Minimize the squared equality residual over the orthogonal group.

    Sign and normalization constraints enter as squared hinge penalties.
    Riemannian gradient steps with Armijo backtracking are retracted by polar
    decomposition. The first restart reaching an equality objective below
    ``1e-12`` while meeting normalization and signs is returned.
    """
    n = compiled.n
    R = 20 * n if restarts is None else restarts
    rng = np.random.default_rng(seed)
    Q = random_orthogonal(n, rng, size=R)
    eq, obj, grad = _penalized(Q, compiled)
    step = np.ones(R)

    def accept(k):
        for cand in (Q[k], flip_to_normalization(compiled, Q[k])):
            r = evaluate_equality(compiled, cand)
            if (r @ r if r.size else 0.0) < OBJECTIVE_TOL and normalization_status(compiled, cand).all() \
                    and evaluate_signs(compiled, cand).all():
                return cand
        return None

    active = obj > 1e-24
    for _ in range(max_iter):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        Qa = Q[idx]
        A = np.einsum("rji,rjk->rik", Qa, grad[idx])
        rg = Qa @ (0.5 * (A - A.transpose(0, 2, 1)))
        gn = np.sum(rg * rg, axis=(1, 2))
        t = step[idx] * 2.0
        pending = np.ones(len(idx), dtype=bool)
        for _ in range(50):
            p = np.flatnonzero(pending)
            if not p.size:
                break
            trial = _polar(Qa[p] - t[p, None, None] * rg[p])
            e2, o2, g2 = _penalized(trial, compiled)
            good = o2 <= obj[idx[p]] - 1e-4 * t[p] * gn[p]
            gi = idx[p[good]]
            Q[gi], eq[gi], obj[gi], grad[gi] = trial[good], e2[good], o2[good], g2[good]
            pending[p[good]] = False
            t[p[~good]] *= 0.5
        step[idx] = np.minimum(t, 1e3)
        active[idx] = ~pending & (obj[idx] > 1e-24) & (gn > 1e-30)
        done = np.flatnonzero((obj < 1e-20) & (eq < OBJECTIVE_TOL))
        for k in done:
            hit = accept(k)
            if hit is not None:
                return hit
    for k in np.argsort(obj):
        if eq[k] < OBJECTIVE_TOL:
            hit = accept(k)
            if hit is not None:
                return hit
    return None


LOCAL_AE = "LocallyIdentifiedAlmostEverywhere"
NOT_IDENTIFIED = "NotIdentified"
INCONCLUSIVE = "Inconclusive"


@dataclass
class VerdictResult:
    verdict: str
    evidence: list[dict]

    def as_dict(self) -> dict:
        return {"verdict": self.verdict, "evidence": self.evidence}


def _draws(rf_sampler, n_draws: int, rng: np.random.Generator):
    if callable(rf_sampler):
        for _ in range(n_draws):
            yield rf_sampler(rng)
    else:
        for k, rf in enumerate(rf_sampler):
            if k >= n_draws:
                break
            yield rf


def identification_verdict(
    spec: RestrictionSpec,
    rf_sampler: Callable[[np.random.Generator], ReducedForm] | Iterable[ReducedForm],
    n_draws: int = 10,
    seed: int = 0,
    short_circuit: bool = True,
) -> VerdictResult:
    """Random-draw check of the rank condition.

    One draw with an admissible ``Q`` satisfying the rank condition establishes
    local identification almost everywhere. If admissible points were found but
    all fail, the verdict is ``NotIdentified``; if none were found anywhere, it is
    ``Inconclusive`` unless the order condition already rules identification out.
    """
    rng = np.random.default_rng(seed)
    evidence = []
    required = spec.n * (spec.n - 1) // 2
    order_ok = spec.f >= required
    any_admissible = any_rank = False
    for k, rf in enumerate(_draws(rf_sampler, n_draws, rng)):
        compiled = compile_restrictions(spec, rf)
        Q = find_admissible_q(compiled, seed=int(rng.integers(2**31)))
        item = {"draw": k, "admissible_found": Q is not None, "order_condition": order_ok, "required": required}
        if Q is not None:
            res = check_local_rank(compiled, Q)
            item.update(rank=res.rank, locally_identified=res.locally_identified)
            any_admissible = True
            any_rank = any_rank or res.locally_identified
        else:
            item.update(rank=None, locally_identified=False)
        evidence.append(item)
        if short_circuit and any_rank:
            break
    if any_rank:
        verdict = LOCAL_AE
    elif any_admissible or not order_ok:
        verdict = NOT_IDENTIFIED
    else:
        verdict = INCONCLUSIVE
    return VerdictResult(verdict, evidence)
