"""Posterior of impulse responses over multi-point identified sets and the
corresponding robust (prior-free over ``Q``) bounds."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import gaussian_kde

from ..errors import AllDrawsEmpty, TooFewSamples
from .draws import SolvedDraws, _check_eta, as_solved

HDR_MIN_SAMPLES = 100


@dataclass(eq=False)
class WeightedIrfSample:
    """Weighted impulse-response sample: draw ``k`` contributes its members
    ``member_irfs[k]`` (shape ``(M_k, h+1, n, n)``) with relative weights
    ``member_weights[k]``; each draw carries total mass ``1 / L``."""

    member_irfs: list[np.ndarray]
    member_weights: list[np.ndarray]
    n_dropped: int
    source_indices: list[int]

    @property
    def n_draws(self) -> int:
        return len(self.member_irfs)

    def _vals(self, eta):
        i, j, h = (int(x) for x in eta)
        return [irf[:, h, i - 1, j - 1] for irf in self.member_irfs]

    def values(self, eta) -> tuple[np.ndarray, np.ndarray]:
        """Flattened points and their normalized weights (summing to one)."""
        vals = self._vals(eta)
        L = self.n_draws
        w = [wk / wk.sum() / L for wk in self.member_weights]
        return np.concatenate(vals), np.concatenate(w)

    def probability(self, eta, interval) -> float:
        """Posterior probability that the response lies in the closed ``interval``."""
        lo, hi = interval
        per_draw = np.array(
            [
                wk[(v >= lo) & (v <= hi)].sum() / wk.sum()
                for v, wk in zip(self._vals(eta), self.member_weights)
            ]
        )
        return float(per_draw.mean())

    def mean(self, eta) -> float:
        # each draw's weighted average is clipped to its own hull against rounding
        per_draw = np.array(
            [
                np.clip((wk * v).sum() / wk.sum(), v.min(), v.max())
                for v, wk in zip(self._vals(eta), self.member_weights)
            ]
        )
        return float(per_draw.mean())

    def resample(self, seed: int = 0) -> np.ndarray:
        """One member per draw chosen with the member weights; shape ``(L, h+1, n, n)``."""
        rng = np.random.default_rng(seed)
        out = []
        for irf, wk in zip(self.member_irfs, self.member_weights):
            out.append(irf[rng.choice(len(wk), p=wk / wk.sum())])
        return np.stack(out) if out else np.zeros((0,))

    def hdr(self, eta, levels) -> list[list[tuple[float, float]]]:
        """Highest density regions of the weighted sample, one list per level."""
        x, w = self.values(eta)
        return highest_density_regions(x, levels, weights=w)


def _member_weights(weights, k: int, values: np.ndarray, irf_set) -> np.ndarray:
    M = len(values)
    if weights is None:
        w = np.ones(M)
    elif callable(weights):
        w = np.asarray(weights(k, irf_set), dtype=float)
    else:
        w = np.asarray(weights, dtype=float)
        if w.size < M:
            raise ValueError(f"{w.size} weights given for a draw with {M} members")
        w = w[:M]
    if w.shape != (M,) or np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite, non-negative and one per member")
    if w.sum() <= 0:
        raise ValueError(f"draw {k}: weights sum to zero")
    return w


def posterior_irf(
    drawset,
    spec=None,
    h_max: int | None = None,
    weights=None,
    order_by=None,
    **solve_kwargs,
) -> WeightedIrfSample:
    """Posterior sample of impulse responses with a conditional prior over the
    members of each identified set.

    ``weights`` is None (equal weights), a sequence applied to the members in
    order, or a callable ``(draw_index, irf_set) -> weights``. Members are taken
    in solver order unless ``order_by = (i, j, h)`` sorts them by that response.
    Draws with an empty identified set are dropped and counted.
    """
    if h_max is None:
        if not isinstance(drawset, SolvedDraws):
            raise ValueError("h_max is required for unsolved draws")
        h_max = drawset.h_max
    solved = as_solved(drawset, spec, h_max, **solve_kwargs)
    keep = solved.nonempty
    if not keep:
        raise AllDrawsEmpty(f"all {solved.count} draws have an empty identified set")
    irfs, ws = [], []
    for k in keep:
        s = solved.irf_sets[k]
        arr = s.irfs[:, : h_max + 1]
        if order_by is not None:
            i, j, h = _check_eta(order_by, solved)
            arr = arr[np.argsort(s.irfs[:, h, i - 1, j - 1], kind="stable")]
        irfs.append(arr)
        ws.append(_member_weights(weights, k, arr, s))
    src = [solved.draws.source_index(k) for k in keep]
    return WeightedIrfSample(irfs, ws, solved.count - len(keep), src)


def highest_density_region(samples, level: float, weights=None, grid_size: int = 4096):
    """Union of intervals where a Gaussian kernel density estimate (Silverman
    bandwidth) exceeds the threshold that leaves probability ``level`` above it."""
    return highest_density_regions(samples, [level], weights, grid_size)[0]


def highest_density_regions(samples, levels, weights=None, grid_size: int = 4096):
    """Regions for several levels sharing one density estimate."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < HDR_MIN_SAMPLES:
        raise TooFewSamples(f"{x.size} samples, at least {HDR_MIN_SAMPLES} required")
    levels = [float(a) for a in levels]
    if any(not 0 < a <= 1 for a in levels):
        raise ValueError("levels must lie in (0, 1]")
    lo, hi = float(x.min()), float(x.max())
    if hi - lo <= 1e-12 * max(1.0, abs(lo)):
        return [[(lo, hi)] for _ in levels]
    kde = gaussian_kde(x, bw_method="silverman", weights=weights)
    bw = float(np.sqrt(kde.covariance[0, 0]))
    pad = 4 * bw
    size = int(min(65536, max(grid_size, np.ceil((hi - lo + 2 * pad) / (bw / 10)))))
    grid = np.linspace(lo - pad, hi + pad, size)
    dens = kde(grid)
    order = np.argsort(-dens)
    mass = np.cumsum(dens[order])
    return [[(lo, hi)] if a >= 1 else _slice(grid, dens, order, mass, a) for a in levels]


def _slice(grid, dens, order, mass, level):
    size = len(grid)
    cut = np.searchsorted(mass, level * mass[-1])
    thr = dens[order[min(cut, size - 1)]]
    inside = dens >= thr
    step = np.diff(inside.astype(int))
    starts = list(np.flatnonzero(step > 0) + 1)
    ends = list(np.flatnonzero(step < 0))
    if inside[0]:
        starts.insert(0, 0)
    if inside[-1]:
        ends.append(size - 1)
    return [
        (_crossing(grid, dens, thr, a - 1, a), _crossing(grid, dens, thr, b, b + 1))
        for a, b in zip(starts, ends)
    ]


def _crossing(grid, dens, thr, a, b) -> float:
    """Linear interpolation of the threshold crossing between grid points a and b."""
    if a < 0:
        return float(grid[0])
    if b >= len(grid):
        return float(grid[-1])
    da, db = dens[a] - thr, dens[b] - thr
    if da == db:
        return float(grid[b])
    t = da / (da - db)
    return float(grid[a] + t * (grid[b] - grid[a]))


def robust_bounds_probability(drawset, spec, eta_selector, H0_interval, h_max=None, **kw):
    """Range of posterior probabilities of ``H0`` over all conditional priors on
    the identified set: (share of draws whose set lies inside ``H0``, share of
    draws whose set meets ``H0``)."""
    solved = as_solved(drawset, spec, _horizon(eta_selector, h_max), **kw)
    lo, hi = H0_interval
    vals = solved.values(eta_selector)
    inside = [(v >= lo) & (v <= hi) for v in vals]
    lower = float(np.mean([b.all() for b in inside]))
    upper = float(np.mean([b.any() for b in inside]))
    return lower, upper


def posterior_mean_range(drawset, spec, eta_selector, h_max=None, **kw):
    """Average over draws of the smallest and of the largest identified-set point."""
    solved = as_solved(drawset, spec, _horizon(eta_selector, h_max), **kw)
    vals = solved.values(eta_selector)
    mins = np.array([v.min() for v in vals])
    maxs = np.array([v.max() for v in vals])
    return float(mins.mean()), float(maxs.mean())


def _horizon(eta, h_max):
    return int(eta[2]) if h_max is None else h_max
