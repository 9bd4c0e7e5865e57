"""Posterior draws of reduced-form parameters."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.stats import invwishart

from ..errors import ImproperPosterior, RankDeficientRegressors, ShortRegime
from ..varcore import (
    HsvarReducedForm,
    ReducedForm,
    _regime_rows,
    fit_hsvar_fgls,
    lagged_regressors,
)

HSVAR_BURN_IN = 500


@dataclass(eq=False)
class PosteriorDrawSet:
    """Reduced-form draws with their log posterior density (up to a constant)."""

    draws: list
    log_density: np.ndarray
    seed: int | None = None
    kind: str = "niw"
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.log_density = np.asarray(self.log_density, dtype=float).reshape(-1)
        if len(self.draws) != self.log_density.size:
            raise ValueError("one log density per draw is required")
        if not np.all(np.isfinite(self.log_density)):
            raise ValueError("log densities must be finite")

    @property
    def count(self) -> int:
        return len(self.draws)

    def __len__(self):
        return self.count

    def __iter__(self):
        return iter(self.draws)

    def subset(self, indices) -> "PosteriorDrawSet":
        idx = [int(k) for k in indices]
        diag = dict(self.diagnostics)
        diag["source_indices"] = [self.source_index(k) for k in idx]
        return PosteriorDrawSet(
            [self.draws[k] for k in idx], self.log_density[idx], self.seed, self.kind, diag
        )

    def source_index(self, k: int) -> int:
        src = self.diagnostics.get("source_indices")
        return int(src[k]) if src is not None else int(k)


def _log_kernel(Sigma: np.ndarray, resid: np.ndarray) -> float:
    """``-(T + n + 1)/2 log|Sigma| - tr(Sigma^{-1} U'U)/2`` under the flat prior
    ``|Sigma|^{-(n+1)/2}``."""
    n = Sigma.shape[0]
    sign, logdet = np.linalg.slogdet(Sigma)
    if sign <= 0:
        return -np.inf
    quad = np.trace(np.linalg.solve(Sigma, resid.T @ resid))
    return float(-0.5 * (resid.shape[0] + n + 1) * logdet - 0.5 * quad)


def _draw_rng(seed: int, k: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(k)])


def sample_posterior_niw(data, p: int, L: int, seed: int = 0) -> PosteriorDrawSet:
    """Conjugate posterior under the flat prior ``|Sigma|^{-(n+1)/2}``.

    ``Sigma ~ IW(U'U, T - np - 1)`` with ``U`` the least-squares residuals and
    ``T`` the effective sample; ``B | Sigma`` is matrix normal around the
    least-squares estimate with row covariance ``(X'X)^{-1}``. Draw ``k`` uses
    its own generator seeded by ``(seed, k)``.
    """
    if L < 0:
        raise ValueError("L must be non-negative")
    data = np.asarray(data, dtype=float)
    Y, X = lagged_regressors(data, p)
    T_eff, m = X.shape
    n = Y.shape[1]
    if T_eff <= n * p + n + 2:
        raise ImproperPosterior(
            f"effective sample {T_eff} too small for a proper posterior (needs > {n * p + n + 2})"
        )
    XtX = X.T @ X
    if np.linalg.matrix_rank(XtX) < m:
        raise ImproperPosterior("regressor matrix is rank deficient")
    XtX_inv = np.linalg.inv(XtX)
    B_hat = np.linalg.solve(XtX, X.T @ Y).T
    U = Y - X @ B_hat.T
    S = U.T @ U
    dof = T_eff - m
    Lx = np.linalg.cholesky(XtX_inv)
    draws, logd = [], []
    for k in range(L):
        rng = _draw_rng(seed, k)
        Sigma = np.atleast_2d(invwishart.rvs(df=dof, scale=S, random_state=rng))
        Sigma = 0.5 * (Sigma + Sigma.T)
        Ls = np.linalg.cholesky(Sigma)
        B = B_hat + Ls @ rng.standard_normal((n, m)) @ Lx.T
        draws.append(ReducedForm(B, Sigma))
        logd.append(_log_kernel(Sigma, Y - X @ B.T))
    diag = {"T_eff": T_eff, "dof": dof, "B_ols": B_hat, "Sigma_ols": S / dof}
    return PosteriorDrawSet(draws, np.array(logd), seed, "niw", diag)


def sample_posterior_hsvar(
    data, p: int, t_break: int, L: int, seed: int = 0, burn_in: int = HSVAR_BURN_IN
) -> PosteriorDrawSet:
    """Two-block Gibbs sampler for a VAR whose residual covariance changes at
    ``t_break`` (first row of the second regime, 0-based in ``data``).

    ``B | Sigma_1, Sigma_2`` is Gaussian around the GLS estimate and each
    ``Sigma_r | B`` is inverse-Wishart with ``T_r`` degrees of freedom. The chain
    starts at the FGLS estimate and discards ``burn_in`` sweeps.
    """
    if L < 0:
        raise ValueError("L must be non-negative")
    data = np.asarray(data, dtype=float)
    try:
        start = fit_hsvar_fgls(data, p, t_break)
    except RankDeficientRegressors as exc:
        raise ShortRegime(str(exc)) from exc
    Y, X = lagged_regressors(data, p)
    n, m = Y.shape[1], X.shape[1]
    r1 = _regime_rows(data.shape[0], p, t_break)
    masks = (r1, ~r1)
    for mask, name in zip(masks, ("regime 1", "regime 2")):
        if mask.sum() <= m + n:
            raise ShortRegime(f"{name} has {mask.sum()} usable observations, needs more than {m + n}")
    rng = np.random.default_rng(seed)
    B = start.B
    Sigmas = [start.Sigma1, start.Sigma2]
    draws, logd = [], []
    for sweep in range(burn_in + L):
        U = Y - X @ B.T
        for r, mask in enumerate(masks):
            Ur = U[mask]
            S = np.atleast_2d(invwishart.rvs(df=int(mask.sum()), scale=Ur.T @ Ur, random_state=rng))
            Sigmas[r] = 0.5 * (S + S.T)
        prec = np.zeros((n * m, n * m))
        rhs = np.zeros(n * m)
        for mask, Sr in zip(masks, Sigmas):
            Si = np.linalg.inv(Sr)
            Xr = X[mask]
            prec += np.kron(Xr.T @ Xr, Si)
            rhs += (Si @ Y[mask].T @ Xr).reshape(-1, order="F")
        Lp = np.linalg.cholesky(prec)
        mean = cho_solve((Lp, True), rhs)
        z = rng.standard_normal(n * m)
        B = (mean + solve_triangular(Lp.T, z, lower=False)).reshape(n, m, order="F")
        if sweep >= burn_in:
            U = Y - X @ B.T
            ld = sum(_log_kernel(Sr, U[mask]) for mask, Sr in zip(masks, Sigmas))
            draws.append(HsvarReducedForm(B, Sigmas[0], Sigmas[1], t_break, data.shape[0]))
            logd.append(ld)
    diag = {"burn_in": burn_in, "fgls": start, "regime_sizes": [int(r1.sum()), int((~r1).sum())]}
    return PosteriorDrawSet(draws, np.array(logd), seed, "hsvar", diag)


def credible_region_phi(drawset, alpha: float):
    """Keep the ``ceil(alpha * L)`` draws with the highest log posterior density.

    Works on anything exposing ``log_density`` and ``subset``; the retained
    draws keep their original relative order and ties are broken by draw index.
    """
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    L = len(drawset.log_density)
    keep = min(L, math.ceil(alpha * L - 1e-9))
    order = np.argsort(-np.asarray(drawset.log_density), kind="stable")[:keep]
    return drawset.subset(np.sort(order))
