"""All real solutions of ``F vec(Q) = c, Q'Q = I`` by damped multi-start Newton."""

from __future__ import annotations

import numpy as np

from ..errors import OrderConditionViolated
from ..restrictions import CompiledRestrictions, dtilde, evaluate_signs
from ..varcore import random_orthogonal
from .common import (
    IdentifiedSet,
    canonical_order,
    dedup,
    equality_scale,
    flip_to_normalization,
    normalization_status,
)

CHUNK = 8192
# relative singular-value cutoff for flagging roots that are not isolated
ISOLATION_RTOL = 1e-8


def bezout_cap(n: int) -> int:
    return 2 ** (n * (n + 1) // 2)


def default_starts(n: int) -> int:
    return 50 * bezout_cap(n)


def _not_isolated(compiled: CompiledRestrictions, Q: np.ndarray) -> bool:
    n = compiled.n
    if n < 2:
        return False
    s = np.linalg.svd(compiled.F @ np.kron(np.eye(n), Q) @ dtilde(n), compute_uv=False)
    return bool(s[0] == 0 or s[-1] < ISOLATION_RTOL * s[0])


def _residual(Q, F, c, iu):
    K, n, _ = Q.shape
    x = Q.transpose(0, 2, 1).reshape(K, n * n)
    lin = x @ F.T - c
    G = np.einsum("kia,kib->kab", Q, Q) - np.eye(n)
    return np.concatenate([lin, G[:, iu[0], iu[1]]], axis=1)


def _jacobian(Q, F, iu):
    K, n, _ = Q.shape
    f = F.shape[0]
    J = np.zeros((K, f + len(iu[0]), n * n))
    J[:, :f] = F
    for r, (a, b) in enumerate(zip(*iu)):
        J[:, f + r, a * n : (a + 1) * n] += Q[:, :, b]
        J[:, f + r, b * n : (b + 1) * n] += Q[:, :, a]
    return J


def _newton_step(J, r):
    try:
        return np.linalg.solve(J, -r[..., None])[..., 0]
    except np.linalg.LinAlgError:
        return -(np.linalg.pinv(J) @ r[..., None])[..., 0]


def newton_polish(Q0: np.ndarray, F: np.ndarray, c: np.ndarray, tol: float = 1e-12, max_iter: int = 200):
    """Batched damped Newton on the square system; returns final iterates and residual norms."""
    Q = np.array(Q0, dtype=float)
    K, n, _ = Q.shape
    iu = np.triu_indices(n)
    r = _residual(Q, F, c, iu)
    norm = np.max(np.abs(r), axis=1)
    active = norm >= tol
    for _ in range(max_iter):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        Qa, ra = Q[idx], r[idx]
        step = _newton_step(_jacobian(Qa, F, iu), ra)
        step = step.reshape(len(idx), n, n).transpose(0, 2, 1)
        old = np.sum(ra**2, axis=1)
        t = np.ones(len(idx))
        pending = np.ones(len(idx), dtype=bool)
        Qn = Qa.copy()
        rn = ra.copy()
        for _ in range(30):
            if not pending.any():
                break
            p = np.flatnonzero(pending)
            trial = Qa[p] + t[p, None, None] * step[p]
            rt = _residual(trial, F, c, iu)
            good = np.sum(rt**2, axis=1) <= (1 - 1e-4 * t[p]) * old[p]
            Qn[p[good]] = trial[good]
            rn[p[good]] = rt[good]
            pending[p[good]] = False
            t[p[~good]] *= 0.5
        stalled = pending
        Q[idx] = Qn
        r[idx] = rn
        norm[idx] = np.max(np.abs(rn), axis=1)
        small_step = np.max(np.abs(step), axis=(1, 2)) < tol
        active[idx] = (norm[idx] >= tol) & ~stalled & ~small_step
    return Q, norm


def solve_general(
    compiled: CompiledRestrictions,
    *,
    seed: int = 0,
    n_starts: int | None = None,
    tol: float = 1e-12,
    max_iter: int = 200,
    accept_tol: float = 1e-10,
) -> IdentifiedSet:
    """Every admissible ``Q`` for exactly-identifying equality restrictions.

    Converged roots are kept when their residual is below ``accept_tol`` times the
    scale of ``(F, c)``. Each root and its column-flipped, normalized variant are
    filtered by the normalization rule, the equalities and the sign
    restrictions, then deduplicated.
    """
    n, f = compiled.n, compiled.f
    if f != n * (n - 1) // 2:
        raise OrderConditionViolated(
            f"the polynomial route needs exactly n(n-1)/2 = {n * (n - 1) // 2} equality "
            f"restrictions, got {f}"
        )
    K = default_starts(n) if n_starts is None else int(n_starts)
    rng = np.random.default_rng(seed)
    scale = equality_scale(compiled)
    roots = []
    n_conv = 0
    for start in range(0, K, CHUNK):
        size = min(CHUNK, K - start)
        Q0 = random_orthogonal(n, rng, size=size)
        Q, norm = newton_polish(Q0, compiled.F, compiled.c, tol=tol * scale, max_iter=max_iter)
        ok = norm < accept_tol * scale
        n_conv += int(ok.sum())
        roots.extend(Q[ok])
    distinct, _ = dedup(roots)

    candidates = []
    dropped_norm = dropped_sign = 0
    eq_tol = accept_tol * scale
    for Q in distinct:
        variants = [Q]
        Qn = flip_to_normalization(compiled, Q)
        if np.linalg.norm(Qn - Q) > 0:
            variants.append(Qn)
        kept = False
        norm_fail = True
        for V in variants:
            res = compiled.F @ V.reshape(-1, order="F") - compiled.c
            if res.size and np.max(np.abs(res)) > eq_tol:
                continue
            if not normalization_status(compiled, V).all():
                continue
            norm_fail = False
            if not evaluate_signs(compiled, V).all():
                continue
            candidates.append(V)
            kept = True
        if not kept:
            if norm_fail:
                dropped_norm += 1
            else:
                dropped_sign += 1
    members, _ = dedup(candidates)
    members, _ = canonical_order(members)
    diag = {
        "route": "general",
        "n_starts": K,
        "n_converged": n_conv,
        "n_distinct_roots": len(distinct),
        "discarded_by_normalization": dropped_norm,
        "discarded_by_signs": dropped_sign,
        "bezout_cap": bezout_cap(n),
        # members failing the local rank condition: the set is then not a finite set of points
        "non_isolated_members": sum(_not_isolated(compiled, Q) for Q in members),
        "max_residual": max(
            (float(np.max(np.abs(compiled.F @ Q.reshape(-1, order="F") - compiled.c))) for Q in members),
            default=0.0,
        ),
    }
    if not members:
        diag["reason"] = "no converged root satisfies the restrictions"
    return IdentifiedSet(members, "general", diag)
