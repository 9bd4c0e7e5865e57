"""Grid search over the orthogonal group, used to certify that the solvers find
every solution. Independent of the Newton and triangular code paths: it works
in angle coordinates and polishes with a generic least-squares routine."""

from __future__ import annotations

import numpy as np
from scipy.ndimage import minimum_filter
from scipy.optimize import least_squares

from ..errors import DimensionTooLarge
from ..restrictions import CompiledRestrictions, evaluate_signs
from .common import IdentifiedSet, canonical_order, dedup, equality_scale, normalization_status


def _rot2(t):
    c, s = np.cos(t), np.sin(t)
    return np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)


def _rot3(a, b, g):
    """``Rz(a) Ry(b) Rx(g)`` for broadcastable angle arrays."""
    ca, sa, cb, sb, cg, sg = np.cos(a), np.sin(a), np.cos(b), np.sin(b), np.cos(g), np.sin(g)
    return np.stack(
        [
            np.stack([ca * cb, ca * sb * sg - sa * cg, ca * sb * cg + sa * sg], -1),
            np.stack([sa * cb, sa * sb * sg + ca * cg, sa * sb * cg - ca * sg], -1),
            np.stack([-sb, cb * sg, cb * cg], -1),
        ],
        -2,
    )


def _param(n: int, theta, reflect: bool):
    theta = np.asarray(theta, dtype=float)
    if n == 2:
        Q = _rot2(theta[..., 0])
    else:
        Q = _rot3(theta[..., 0], theta[..., 1], theta[..., 2])
    if reflect:
        Q = Q.copy()
        Q[..., :, -1] *= -1
    return Q


def _residual(F, c, n, reflect):
    if not F.size:
        return lambda th: np.zeros(1)
    return lambda th: F @ _param(n, th, reflect).T.ravel() - c


def _polish(fun, theta0):
    return least_squares(fun, theta0, method="trf", xtol=1e-15, ftol=1e-15, gtol=1e-15).x


def _polish_all(F, c, n, reflect, starts, tol):
    """Distinct roots reached by polishing from each start."""
    fun = _residual(F, c, n, reflect)
    found: list[np.ndarray] = []
    for theta0 in starts:
        theta = _polish(fun, theta0)
        if np.max(np.abs(fun(theta))) >= tol:
            continue
        Q = _param(n, theta, reflect)
        if not any(np.max(np.abs(Q - R)) < 1e-6 for R in found):
            found.append(Q)
    return found


def brute_force_oracle(
    compiled: CompiledRestrictions, grid_density: int = 72, n_lowest: int = 64
) -> IdentifiedSet:
    """Every admissible ``Q`` found by polishing, over a grid of rotation angles
    (both determinant signs), from the local minima of the equality residual and
    from the ``n_lowest`` cells with the smallest residual."""
    n = compiled.n
    if n > 3:
        raise DimensionTooLarge("the grid oracle supports n <= 3")
    F, c = compiled.F, compiled.c
    scale = equality_scale(compiled)
    if n == 1:
        cands = [np.array([[1.0]]), np.array([[-1.0]])]
        roots = [Q for Q in cands if not F.size or np.max(np.abs(F @ Q.ravel() - c)) < 1e-10 * scale]
    else:
        G = grid_density
        if n == 2:
            axes = [np.arange(G) * 2 * np.pi / G]
            modes = ["wrap"]
        else:
            axes = [
                np.arange(G) * 2 * np.pi / G,
                -np.pi / 2 + (np.arange(G // 2) + 0.5) * np.pi / (G // 2),
                np.arange(G) * 2 * np.pi / G,
            ]
            modes = ["wrap", "nearest", "wrap"]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        roots = []
        for reflect in (False, True):
            Q = _param(n, mesh, reflect)
            x = np.swapaxes(Q, -1, -2).reshape(*mesh.shape[:-1], n * n)
            res = np.linalg.norm(x @ F.T - c, axis=-1) if F.size else np.zeros(mesh.shape[:-1])
            # local minima plus the lowest cells: neighbouring roots can share a basin
            flat = res.reshape(-1)
            lowest = np.argpartition(flat, min(n_lowest, flat.size) - 1)[:n_lowest]
            local = np.flatnonzero((res == minimum_filter(res, size=3, mode=modes)).reshape(-1))
            starts = mesh.reshape(-1, mesh.shape[-1])[np.union1d(local, lowest)]
            roots += _polish_all(F, c, n, reflect, starts, 1e-10 * scale)
    roots, _ = dedup(roots)
    members = [
        Q for Q in roots if normalization_status(compiled, Q).all() and evaluate_signs(compiled, Q).all()
    ]
    members, _ = canonical_order(members)
    diag = {"route": "oracle", "grid_density": grid_density, "n_roots": len(roots)}
    return IdentifiedSet(members, "oracle", diag)
