"""Projection confidence sets for impulse responses whose identified set is a
finite collection of points.

Draws of the reduced form retained in a credible region are clustered into at
most ``M_bar`` groups (``M_bar`` being the largest identified-set size among the
draws); each cluster yields the interval spanned by its points and the
confidence set is the union of those intervals.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from itertools import combinations, product

import numpy as np

from ..errors import DegenerateVariance
from ..solve.common import collapse_points
from .draws import SolvedDraws, _check_eta, as_solved
from .posterior import credible_region_phi

VARIANCE_EPS = 1e-12
VARIANCE_FLOOR_SHARE = 1e-6
COLLAPSE_TOL = 1e-9


@dataclass(eq=False)
class ClusteredDrawSet:
    """Cluster assignment of the identified-set points of each draw.

    ``assignments[k]`` is the increasing map (1-based cluster labels) of the
    sorted distinct points ``points[k]``; ``D[k, m]`` flags that cluster ``m + 1``
    received a point of draw ``k``.
    """

    points: list[np.ndarray]
    multiplicities: list[np.ndarray]
    M_bar: int
    K_tilde: int
    mu: np.ndarray
    var: np.ndarray
    floored: np.ndarray
    variance_floor: float | None
    assignments: list[tuple[int, ...]]
    D: np.ndarray
    source_indices: list[int] = field(default_factory=list)
    n_empty: int = 0

    @property
    def M(self) -> np.ndarray:
        return np.array([len(p) for p in self.points])

    def intervals(self) -> list[tuple[int, float, float]]:
        """``(label, lo, hi)`` for every cluster that received at least one point."""
        return _cluster_intervals(self.points, self.assignments, self.M_bar)


def _cluster_intervals(values, assignments, M_bar):
    lo = np.full(M_bar, np.inf)
    hi = np.full(M_bar, -np.inf)
    for v, a in zip(values, assignments):
        idx = np.asarray(a) - 1
        np.minimum.at(lo, idx, v)
        np.maximum.at(hi, idx, v)
    return [(m + 1, float(lo[m]), float(hi[m])) for m in range(M_bar) if lo[m] <= hi[m]]


def _fit_clusters(points: list[np.ndarray]):
    """Cluster means/variances from maximal-size draws and the argmin assignment
    (lexicographically smallest map on ties)."""
    M = np.array([len(p) for p in points])
    M_bar = int(M.max())
    top = np.stack([p for p in points if len(p) == M_bar])
    K_tilde = top.shape[0]
    mu = top.mean(axis=0)
    var = top.var(axis=0, ddof=1) if K_tilde > 1 else np.zeros(M_bar)
    floored = var < VARIANCE_EPS
    floor = None
    if floored.any():
        pooled = float(top.var())
        floor = pooled * VARIANCE_FLOOR_SHARE if pooled * VARIANCE_FLOOR_SHARE >= VARIANCE_EPS else 1.0
        var = np.where(floored, floor, var)
        if np.any(M < M_bar):
            warnings.warn(
                f"cluster variance below {VARIANCE_EPS} (K_tilde={K_tilde}); floored at {floor:.3g}",
                DegenerateVariance,
                stacklevel=3,
            )
    assignments: list = [None] * len(points)
    for size in np.unique(M):
        rows = np.flatnonzero(M == size)
        maps = np.array(list(combinations(range(M_bar), int(size))))
        P = np.stack([points[k] for k in rows])
        cost = (((P[:, None, :] - mu[maps][None]) ** 2) / var[maps][None]).sum(axis=2)
        best = maps[np.argmin(cost, axis=1)]
        for k, b in zip(rows, best):
            assignments[k] = tuple(int(x) + 1 for x in b)
    D = np.zeros((len(points), M_bar), dtype=bool)
    for k, a in enumerate(assignments):
        D[k, np.asarray(a) - 1] = True
    return M_bar, K_tilde, mu, var, floored, floor, assignments, D


def _retained_values(solved: SolvedDraws, eta):
    keep = solved.require_nonempty()
    i, j, h = _check_eta(eta, solved)
    return keep, [solved.irf_sets[k].values(i, j, h) for k in keep]


def cluster_draws(retained, spec=None, eta_selector=(1, 1, 0), h_max=None, **kw) -> ClusteredDrawSet:
    """Cluster the identified-set points of ``retained`` draws at one response.

    Points closer than ``1e-9`` within a draw count as one point.
    """
    solved = as_solved(retained, spec, int(eta_selector[2]) if h_max is None else h_max, **kw)
    keep, vals = _retained_values(solved, eta_selector)
    pts, mult = zip(*(collapse_points(v, COLLAPSE_TOL) for v in vals))
    M_bar, K_tilde, mu, var, floored, floor, assignments, D = _fit_clusters(list(pts))
    return ClusteredDrawSet(
        list(pts),
        list(mult),
        M_bar,
        K_tilde,
        mu,
        var,
        floored,
        floor,
        assignments,
        D,
        [solved.draws.source_index(k) for k in keep],
        solved.n_empty,
    )


def merge_intervals(intervals) -> list[tuple[float, float]]:
    """Union of closed intervals as a sorted list of disjoint intervals."""
    out: list[list[float]] = []
    for lo, hi in sorted((float(a), float(b)) for a, b in intervals):
        if out and lo <= out[-1][1]:
            out[-1][1] = max(out[-1][1], hi)
        else:
            out.append([lo, hi])
    return [(a, b) for a, b in out]


@dataclass(eq=False)
class ProjectionConfidenceSet:
    """Per-coordinate cluster intervals ``(label, lo, hi)``, keyed by 1-based
    ``(variable, shock)`` and horizon. Labels are local to each coordinate in
    switching mode and shared across coordinates in fixed mode."""

    mode: str
    alpha: float
    clusters: dict
    anchor: tuple | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def coordinates(self) -> list[tuple[int, int, int]]:
        return sorted(self.clusters)

    def cluster_intervals(self, i: int, j: int, h: int):
        return list(self.clusters[(i, j, h)])

    def intervals(self, i: int, j: int, h: int) -> list[tuple[float, float]]:
        return merge_intervals((lo, hi) for _, lo, hi in self.clusters[(i, j, h)])

    def contains(self, i: int, j: int, h: int, x, tol: float = 0.0) -> bool:
        """True when every value in ``x`` lies in the union (widened by ``tol``)."""
        ivs = self.intervals(i, j, h)
        return all(any(lo - tol <= v <= hi + tol for lo, hi in ivs) for v in np.atleast_1d(x))

    def hull(self, i: int, j: int, h: int) -> tuple[float, float]:
        ivs = self.intervals(i, j, h)
        return ivs[0][0], ivs[-1][1]


def _coords(solved: SolvedDraws, coordinates, h_max):
    if coordinates is not None:
        return [tuple(int(x) for x in c) for c in coordinates]
    n = solved.spec.n
    return [(i, j, h) for i, j, h in product(range(1, n + 1), range(1, n + 1), range(h_max + 1))]


def _retain(draws, spec, alpha, h_max, kw):
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    solved = as_solved(draws, spec, h_max, **kw)
    retained = credible_region_phi(solved, alpha)
    retained.require_nonempty()
    return retained


def projection_cs_switching(
    draws, spec=None, alpha: float = 0.9, h_max: int = 0, coordinates=None, **kw
) -> ProjectionConfidenceSet:
    """Switching-label sets: draws are first restricted to the ``alpha`` highest
    posterior-density share, then every coordinate is clustered on its own."""
    retained = _retain(draws, spec, alpha, h_max, kw)
    clusters, m_bar, floored = {}, {}, []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", DegenerateVariance)
        for c in _coords(retained, coordinates, h_max):
            cl = cluster_draws(retained, None, c)
            clusters[c] = cl.intervals()
            m_bar[c] = cl.M_bar
            if cl.floored.any():
                floored.append(c)
    _reraise(caught)
    diag = {
        "n_retained": retained.count,
        "n_empty": retained.n_empty,
        "M_bar": m_bar,
        "variance_floored": floored,
    }
    return ProjectionConfidenceSet("switching", alpha, clusters, None, diag)


def _reraise(caught):
    seen = set()
    for w in caught:
        key = (w.category, str(w.message))
        if key not in seen:
            seen.add(key)
            warnings.warn(w.message, w.category, stacklevel=3)


def anchored_member_labels(retained: SolvedDraws, anchor):
    """Cluster labels (1-based) for every member of every non-empty draw, assigned
    once at the ``anchor`` response. Members sharing an anchor value share a label."""
    keep, vals = _retained_values(retained, anchor)
    pts, groups = [], []
    for v in vals:
        p, mult = collapse_points(v, COLLAPSE_TOL)
        pts.append(p)
        groups.append(np.searchsorted(np.cumsum(mult), np.argsort(np.argsort(v, kind="stable")), side="right"))
    fit = _fit_clusters(pts)
    assignments = fit[6]
    labels = [np.asarray(a)[g] for a, g in zip(assignments, groups)]
    return keep, labels, fit


def projection_cs_fixed(
    draws, spec=None, alpha: float = 0.9, h_max: int = 0, anchor=(1, 1, 0), coordinates=None, **kw
) -> ProjectionConfidenceSet:
    """Fixed-label sets: members are labelled once by clustering the ``anchor``
    response ``(i*, j*, h*)`` and those labels are reused at every coordinate."""
    anchor = tuple(int(x) for x in anchor)
    retained = _retain(draws, spec, alpha, max(h_max, anchor[2]), kw)
    keep, labels, fit = anchored_member_labels(retained, anchor)
    M_bar = fit[0]
    clusters = {}
    for i, j, h in _coords(retained, coordinates, h_max):
        vals = [retained.irf_sets[k].values(i, j, h) for k in keep]
        clusters[(i, j, h)] = _cluster_intervals(vals, labels, M_bar)
    diag = {
        "n_retained": retained.count,
        "n_empty": retained.n_empty,
        "M_bar": M_bar,
        "K_tilde": fit[1],
        "cluster_means": fit[2].tolist(),
        "variance_floored": bool(fit[4].any()),
        "member_labels": [lab.tolist() for lab in labels],
        "source_indices": [retained.draws.source_index(k) for k in keep],
    }
    return ProjectionConfidenceSet("fixed", alpha, clusters, anchor, diag)
