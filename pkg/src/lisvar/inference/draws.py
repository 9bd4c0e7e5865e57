"""Identified sets and impulse responses for every posterior draw."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import AllDrawsEmpty, SingularSigma, Unstable
from ..restrictions import RestrictionSpec, classify
from ..solve import ImpulseResponseSet, identified_set_irf, solve
from ..solve.common import IdentifiedSet
from ..varcore import HsvarReducedForm
from .posterior import PosteriorDrawSet

log = logging.getLogger(__name__)


@dataclass(eq=False)
class SolvedDraws:
    """Per-draw identified sets, aligned with ``draws.draws``.

    ``irf_sets[k]`` is None when draw ``k`` has an empty identified set (or could
    not be solved, see ``failures``). Inference conditions on the non-empty draws.
    """

    draws: PosteriorDrawSet
    spec: RestrictionSpec
    h_max: int
    sets: list[IdentifiedSet | None]
    irf_sets: list[ImpulseResponseSet | None]
    failures: dict = field(default_factory=dict)

    @property
    def log_density(self) -> np.ndarray:
        return self.draws.log_density

    @property
    def count(self) -> int:
        return len(self.irf_sets)

    def __len__(self):
        return self.count

    @property
    def nonempty(self) -> list[int]:
        return [k for k, s in enumerate(self.irf_sets) if s is not None]

    @property
    def n_empty(self) -> int:
        return self.count - len(self.nonempty)

    def subset(self, indices) -> "SolvedDraws":
        idx = [int(k) for k in indices]
        return SolvedDraws(
            self.draws.subset(idx),
            self.spec,
            self.h_max,
            [self.sets[k] for k in idx],
            [self.irf_sets[k] for k in idx],
            {new: self.failures[old] for new, old in enumerate(idx) if old in self.failures},
        )

    def require_nonempty(self) -> list[int]:
        keep = self.nonempty
        if not keep:
            raise AllDrawsEmpty(f"all {self.count} draws have an empty identified set")
        return keep

    def values(self, eta) -> list[np.ndarray]:
        """Per non-empty draw, the member values at ``eta = (i, j, h)``."""
        i, j, h = _check_eta(eta, self)
        return [self.irf_sets[k].values(i, j, h) for k in self.require_nonempty()]

    def member_counts(self) -> np.ndarray:
        return np.array([0 if s is None else s.count for s in self.irf_sets])


def _check_eta(eta, solved: SolvedDraws) -> tuple[int, int, int]:
    i, j, h = (int(x) for x in eta)
    n = solved.spec.n
    if not (1 <= i <= n and 1 <= j <= n):
        raise ValueError(f"variable/shock ({i}, {j}) outside 1..{n}")
    if not 0 <= h <= solved.h_max:
        raise ValueError(f"horizon {h} outside 0..{solved.h_max}")
    return i, j, h


def _solve_one(args):
    k, rf, spec, h_max, route, seed, shock_position = args
    try:
        iset = solve(spec, rf, route, seed=seed + k, shock_position=shock_position)
    except (Unstable, SingularSigma) as exc:
        return k, None, None, f"{type(exc).__name__}: {exc}"
    if iset.empty:
        return k, iset, None, None
    base = rf.regime1() if isinstance(rf, HsvarReducedForm) else rf
    return k, iset, identified_set_irf(iset, base, h_max), None


def solve_draws(
    draws: PosteriorDrawSet,
    spec: RestrictionSpec,
    h_max: int,
    *,
    route: str = "auto",
    seed: int = 0,
    threads: int = 1,
    shock_position: int = 1,
) -> SolvedDraws:
    """Solve every draw; ``threads > 1`` spreads draws over a thread pool.

    Results do not depend on ``threads``: each draw is solved independently and
    the randomized route is seeded by ``seed + draw index``.
    """
    if h_max < 0:
        raise ValueError("h_max must be non-negative")
    if route == "auto" and draws.kind != "hsvar":
        route = "triangular" if classify(spec).triangular else "general"
    jobs = [(k, rf, spec, h_max, route, seed, shock_position) for k, rf in enumerate(draws.draws)]
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_solve_one, jobs))
    else:
        results = [_solve_one(job) for job in jobs]
    sets = [None] * len(jobs)
    irfs = [None] * len(jobs)
    failures = {}
    for k, iset, irf, err in results:
        sets[k], irfs[k] = iset, irf
        if err is not None:
            failures[k] = err
    out = SolvedDraws(draws, spec, h_max, sets, irfs, failures)
    log.info("solved %d draws: %d empty, %d failed", out.count, out.n_empty, len(failures))
    return out


def as_solved(obj, spec: RestrictionSpec | None, h_max: int, **kwargs) -> SolvedDraws:
    """Accept either already-solved draws or raw posterior draws plus a spec."""
    if isinstance(obj, SolvedDraws):
        if h_max > obj.h_max:
            raise ValueError(f"draws were solved up to horizon {obj.h_max}, {h_max} requested")
        return obj
    if spec is None:
        raise ValueError("a restriction spec is required to solve raw posterior draws")
    return solve_draws(obj, spec, h_max, **kwargs)
