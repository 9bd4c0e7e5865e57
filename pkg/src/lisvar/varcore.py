"""Reduced-form and structural VAR objects, the maps between them, impulse
responses, least-squares estimation and simulation.

Conventions: ``B`` is ``n x (n*p + 1)`` with the intercept in column 0 followed
by the lag matrices ``B_1 ... B_p``. ``Q`` is orthogonal and the impact matrix is
``A0^{-1} = Sigma_tr @ Q`` where ``Sigma_tr`` is the lower Cholesky factor of the
reduced-form covariance.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import (
    AmbiguousNormalization,
    DimensionMismatch,
    NotPositiveSemiDefinite,
    RankDeficientRegressors,
    ShortRegime,
    SingularA0,
    SingularSigma,
    Unstable,
    UnstableWarning,
)

REL_TOL = 1e-8
NORMALIZATION_TOL = 1e-10
NORMALIZATION_RULES = ("diag_a0", "diag_a0inv")


def scale_tol(M: np.ndarray) -> float:
    """Scale-aware tolerance: ``1e-8`` times the largest absolute entry."""
    m = float(np.max(np.abs(M))) if np.size(M) else 0.0
    return REL_TOL * max(m, np.finfo(float).tiny)


def _check_psd(S: np.ndarray, name: str) -> np.ndarray:
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {S.shape}")
    if not np.all(np.isfinite(S)):
        raise NotPositiveSemiDefinite(f"{name} has non-finite entries")
    tol = scale_tol(S)
    if np.max(np.abs(S - S.T)) > tol:
        raise NotPositiveSemiDefinite(f"{name} is not symmetric")
    S = 0.5 * (S + S.T)
    if np.linalg.eigvalsh(S)[0] < -tol:
        raise NotPositiveSemiDefinite(f"{name} has a negative eigenvalue")
    return S


@dataclass(frozen=True, eq=False)
class ReducedForm:
    """Reduced-form parameters ``phi = (B, Sigma)``."""

    B: np.ndarray
    Sigma: np.ndarray

    def __post_init__(self):
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        S = _check_psd(self.Sigma, "Sigma")
        n = S.shape[0]
        if B.shape[0] != n or (B.shape[1] - 1) % n != 0:
            raise DimensionMismatch(
                f"B must be {n} x ({n}p+1), got shape {B.shape}"
            )
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "Sigma", S)

    @classmethod
    def from_lags(cls, lags, Sigma, intercept=None) -> "ReducedForm":
        Sigma = np.asarray(Sigma, dtype=float)
        n = Sigma.shape[0]
        lags = [np.asarray(L, dtype=float).reshape(n, n) for L in lags]
        b = np.zeros(n) if intercept is None else np.asarray(intercept, dtype=float)
        return cls(np.column_stack([b] + lags) if lags else b[:, None], Sigma)

    @property
    def n(self) -> int:
        return self.Sigma.shape[0]

    @property
    def p(self) -> int:
        return (self.B.shape[1] - 1) // self.n

    @property
    def intercept(self) -> np.ndarray:
        return self.B[:, 0]

    def lag(self, l: int) -> np.ndarray:
        """Lag matrix ``B_l`` for ``l`` in ``1..p``."""
        if not 1 <= l <= self.p:
            raise IndexError(f"lag {l} outside 1..{self.p}")
        n = self.n
        return self.B[:, 1 + (l - 1) * n : 1 + l * n]

    @cached_property
    def lags(self) -> np.ndarray:
        return np.stack([self.lag(l) for l in range(1, self.p + 1)]) if self.p else np.zeros((0, self.n, self.n))

    @cached_property
    def sigma_tr(self) -> np.ndarray:
        return cholesky_lower(self.Sigma)

    @cached_property
    def sigma_tr_inv(self) -> np.ndarray:
        L = self.sigma_tr
        if np.min(np.abs(np.diag(L))) <= scale_tol(L):
            raise SingularSigma("Sigma is singular; its Cholesky factor cannot be inverted")
        return np.linalg.inv(L)

    def companion(self) -> np.ndarray:
        n, p = self.n, self.p
        C = np.zeros((n * p, n * p))
        C[:n, :] = self.B[:, 1:]
        if p > 1:
            C[n:, :-n] = np.eye(n * (p - 1))
        return C

    def spectral_radius(self) -> float:
        if self.p == 0:
            return 0.0
        return float(np.max(np.abs(np.linalg.eigvals(self.companion()))))

    def is_stable(self) -> bool:
        return self.spectral_radius() < 1.0


@dataclass(frozen=True, eq=False)
class HsvarReducedForm:
    """Two-regime reduced form with a common ``B`` and a covariance break at ``t_break``.

    ``t_break`` counts observations: rows with index ``< t_break`` of the data
    belong to regime 1.
    """

    B: np.ndarray
    Sigma1: np.ndarray
    Sigma2: np.ndarray
    t_break: int
    T: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "Sigma1", _check_psd(self.Sigma1, "Sigma1"))
        object.__setattr__(self, "Sigma2", _check_psd(self.Sigma2, "Sigma2"))
        rf = ReducedForm(self.B, self.Sigma1)
        object.__setattr__(self, "B", rf.B)
        if self.Sigma2.shape != self.Sigma1.shape:
            raise DimensionMismatch("regime covariances differ in shape")
        if self.t_break <= 0 or (self.T is not None and self.t_break >= self.T):
            raise ShortRegime("t_break must lie strictly inside the sample")

    @property
    def n(self) -> int:
        return self.Sigma1.shape[0]

    @property
    def p(self) -> int:
        return (self.B.shape[1] - 1) // self.n

    def regime1(self) -> ReducedForm:
        return ReducedForm(self.B, self.Sigma1)

    def regime2(self) -> ReducedForm:
        return ReducedForm(self.B, self.Sigma2)


@dataclass(frozen=True, eq=False)
class StructuralParams:
    """Structural parameters ``A0 y_t = a + sum_j A_j y_{t-j} + eps_t``."""

    A0: np.ndarray
    Aplus: np.ndarray

    def __post_init__(self):
        A0 = np.atleast_2d(np.asarray(self.A0, dtype=float))
        Ap = np.atleast_2d(np.asarray(self.Aplus, dtype=float))
        n = A0.shape[0]
        if A0.shape != (n, n) or Ap.shape[0] != n or (Ap.shape[1] - 1) % n != 0:
            raise DimensionMismatch(f"inconsistent shapes A0 {A0.shape}, Aplus {Ap.shape}")
        s = np.linalg.svd(A0, compute_uv=False)
        if s[-1] <= scale_tol(A0):
            raise SingularA0("A0 is singular")
        object.__setattr__(self, "A0", A0)
        object.__setattr__(self, "Aplus", Ap)

    @classmethod
    def from_impact(cls, A0inv, lags=(), intercept=None) -> "StructuralParams":
        """Build from the impact matrix ``A0^{-1}`` and reduced-form lag matrices."""
        A0 = np.linalg.inv(np.asarray(A0inv, dtype=float))
        n = A0.shape[0]
        b = np.zeros(n) if intercept is None else np.asarray(intercept, dtype=float)
        B = np.column_stack([b] + [np.asarray(L, dtype=float) for L in lags])
        return cls(A0, A0 @ B)

    @property
    def n(self) -> int:
        return self.A0.shape[0]

    @property
    def p(self) -> int:
        return (self.Aplus.shape[1] - 1) // self.n

    @property
    def A0inv(self) -> np.ndarray:
        return np.linalg.inv(self.A0)

    def lag(self, l: int) -> np.ndarray:
        n = self.n
        return self.Aplus[:, 1 + (l - 1) * n : 1 + l * n]


def cholesky_lower(Sigma: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor with non-negative diagonal.

    Semidefinite input (posterior draws close to singular) is handled by
    clipping eigenvalues at zero and running a pivot-tolerant factorization.
    """
    S = _check_psd(Sigma, "Sigma")
    try:
        return np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        pass
    w, V = np.linalg.eigh(S)
    S = (V * np.clip(w, 0.0, None)) @ V.T
    S = 0.5 * (S + S.T)
    n = S.shape[0]
    tol = scale_tol(S)
    L = np.zeros_like(S)
    for j in range(n):
        d = S[j, j] - L[j, :j] @ L[j, :j]
        if d <= tol:
            continue
        L[j, j] = np.sqrt(d)
        L[j + 1 :, j] = (S[j + 1 :, j] - L[j + 1 :, :j] @ L[j, :j]) / L[j, j]
    return L


def vma_coefficients(rf: ReducedForm, h_max: int) -> np.ndarray:
    """Coefficients ``C_0..C_{h_max}`` of the inverted lag polynomial, shape ``(h_max+1, n, n)``."""
    n, p = rf.n, rf.p
    C = np.zeros((h_max + 1, n, n))
    C[0] = np.eye(n)
    lags = rf.lags
    for h in range(1, h_max + 1):
        for j in range(1, min(h, p) + 1):
            C[h] += lags[j - 1] @ C[h - j]
    return C


def _check_orthogonal(Q: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise DimensionMismatch(f"Q must be square, got shape {Q.shape}")
    if np.max(np.abs(Q.T @ Q - np.eye(Q.shape[0]))) > tol:
        raise ValueError("Q is not orthogonal")
    return Q


def impulse_responses(rf: ReducedForm, Q: np.ndarray, h_max: int) -> np.ndarray:
    """All impulse response matrices ``IR^0..IR^{h_max}``; entry ``[h, i, j]`` is the
    response of variable ``i`` to shock ``j`` at horizon ``h``."""
    Q = _check_orthogonal(Q)
    return vma_coefficients(rf, h_max) @ (rf.sigma_tr @ Q)


def impulse_response(rf: ReducedForm, Q: np.ndarray, h: int) -> np.ndarray:
    return impulse_responses(rf, Q, h)[h]


def long_run_multiplier(rf: ReducedForm) -> np.ndarray:
    """``(I - sum_j B_j)^{-1}``, the sum of all VMA coefficients. Requires stability."""
    if not rf.is_stable():
        raise Unstable(
            f"companion spectral radius {rf.spectral_radius():.6g} >= 1; "
            "infinite-horizon responses are undefined"
        )
    return np.linalg.inv(np.eye(rf.n) - rf.lags.sum(axis=0))


def cumulative_ir(rf: ReducedForm, Q: np.ndarray, h_max: int | None = None) -> np.ndarray:
    """Cumulative response up to ``h_max``; ``h_max=None`` gives the infinite-horizon limit."""
    Q = _check_orthogonal(Q)
    if h_max is None:
        return long_run_multiplier(rf) @ rf.sigma_tr @ Q
    return impulse_responses(rf, Q, h_max).sum(axis=0)


def map_g(sp: StructuralParams) -> tuple[ReducedForm, np.ndarray]:
    """Structural parameters to ``(phi, Q)``."""
    A0inv = sp.A0inv
    Sigma = A0inv @ A0inv.T
    rf = ReducedForm(A0inv @ sp.Aplus, 0.5 * (Sigma + Sigma.T))
    Q = rf.sigma_tr.T @ sp.A0.T
    return rf, Q


def map_g_inverse(rf: ReducedForm, Q: np.ndarray) -> StructuralParams:
    """``(phi, Q)`` to structural parameters: ``A0 = Q' Sigma_tr^{-1}``, ``A+ = A0 B``."""
    Q = _check_orthogonal(Q)
    A0 = Q.T @ rf.sigma_tr_inv
    return StructuralParams(A0, A0 @ rf.B)


def normalization_vectors(rf: ReducedForm, rule: str = "diag_a0") -> np.ndarray:
    """Matrix whose column ``j`` is the vector ``v_j`` with the rule ``v_j' q_j >= 0``.

    ``diag_a0``: positive diagonal of ``A0`` (columns of ``Sigma_tr^{-1}``).
    ``diag_a0inv``: positive diagonal of ``A0^{-1}`` (rows of ``Sigma_tr``).
    """
    if rule == "diag_a0":
        return rf.sigma_tr_inv
    if rule == "diag_a0inv":
        return rf.sigma_tr.T
    raise ValueError(f"unknown normalization rule {rule!r}; choose from {NORMALIZATION_RULES}")


def normalization_values(Q: np.ndarray, V: np.ndarray) -> np.ndarray:
    """Per-column values ``v_j' q_j`` scaled to cosines."""
    return np.einsum("ij,ij->j", V, Q) / np.linalg.norm(V, axis=0)


def sign_normalize(Q: np.ndarray, rf: ReducedForm, rule: str = "diag_a0") -> np.ndarray:
    """Flip column signs of ``Q`` so the normalization rule holds.

    Columns whose normalization value is numerically zero are ambiguous; they are
    left unchanged and an :class:`AmbiguousNormalization` warning is emitted.
    """
    Q = _check_orthogonal(Q)
    vals = normalization_values(Q, normalization_vectors(rf, rule))
    ambiguous = np.abs(vals) <= NORMALIZATION_TOL
    if ambiguous.any():
        warnings.warn(
            f"normalization is ambiguous for columns {list(np.flatnonzero(ambiguous) + 1)}",
            AmbiguousNormalization,
            stacklevel=2,
        )
    signs = np.where((vals < 0) & ~ambiguous, -1.0, 1.0)
    return Q * signs


def random_orthogonal(n: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Haar-distributed draws from the orthogonal group O(n)."""
    from scipy.stats import ortho_group

    if n == 1:
        s = rng.choice([-1.0, 1.0], size=(size or 1, 1, 1))
        return s if size else s[0]
    out = ortho_group.rvs(n, size=size or 1, random_state=rng)
    if size:
        return out.reshape(size, n, n)
    return out


def lagged_regressors(data: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(Y, X)`` with ``X`` rows ``(1, y_{t-1}', ..., y_{t-p}')`` for ``t = p..T-1``."""
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    T = data.shape[0]
    Y = data[p:]
    cols = [np.ones((T - p, 1))] + [data[p - l : T - l] for l in range(1, p + 1)]
    return Y, np.hstack(cols)


def _ols(Y: np.ndarray, X: np.ndarray) -> np.ndarray:
    coef, _, rank, _ = np.linalg.lstsq(X, Y, rcond=None)
    if rank < X.shape[1]:
        raise RankDeficientRegressors(
            f"regressor matrix has rank {rank} < {X.shape[1]} (constant or collinear series?)"
        )
    return coef.T


def fit_ols(data: np.ndarray, p: int) -> ReducedForm:
    """Equation-by-equation least squares; residual covariance divided by ``T - np - 1``
    where ``T`` is the effective sample size."""
    Y, X = lagged_regressors(data, p)
    T_eff, m = X.shape
    if T_eff <= m:
        raise RankDeficientRegressors(
            f"need more than {m} usable observations for {p} lags, got {T_eff}"
        )
    B = _ols(Y, X)
    U = Y - X @ B.T
    return ReducedForm(B, U.T @ U / (T_eff - m))


def _regime_rows(T: int, p: int, t_break: int) -> np.ndarray:
    """Boolean mask over effective rows ``t = p..T-1``: True in regime 1."""
    return np.arange(p, T) < t_break


def gls_coefficients(Y, X, regime1, Sigma1, Sigma2) -> np.ndarray:
    """GLS estimate of the common ``B`` given regime covariances."""
    n, m = Y.shape[1], X.shape[1]
    prec = np.zeros((n * m, n * m))
    rhs = np.zeros(n * m)
    for mask, S in ((regime1, Sigma1), (~regime1, Sigma2)):
        Si = np.linalg.inv(S)
        Xr, Yr = X[mask], Y[mask]
        prec += np.kron(Xr.T @ Xr, Si)
        rhs += (Si @ Yr.T @ Xr).reshape(-1, order="F")
    return np.linalg.solve(prec, rhs).reshape(n, m, order="F")


def fit_hsvar_fgls(
    data: np.ndarray, p: int, t_break: int, tol: float = 1e-8, max_iter: int = 100
) -> HsvarReducedForm:
    """Iterated FGLS with common ``B`` and regime covariances ``U_r'U_r / T_r``."""
    Y, X = lagged_regressors(data, p)
    T = Y.shape[0] + p
    m = X.shape[1]
    r1 = _regime_rows(T, p, t_break)
    for k, name in ((r1.sum(), "regime 1"), ((~r1).sum(), "regime 2")):
        if k <= m:
            raise ShortRegime(f"{name} has {k} usable observations, needs more than {m}")
    B = _ols(Y, X)
    for _ in range(max_iter):
        U = Y - X @ B.T
        S1 = U[r1].T @ U[r1] / r1.sum()
        S2 = U[~r1].T @ U[~r1] / (~r1).sum()
        B_new = gls_coefficients(Y, X, r1, S1, S2)
        done = np.max(np.abs(B_new - B)) < tol
        B = B_new
        if done:
            break
    U = Y - X @ B.T
    S1 = U[r1].T @ U[r1] / r1.sum()
    S2 = U[~r1].T @ U[~r1] / (~r1).sum()
    return HsvarReducedForm(B, 0.5 * (S1 + S1.T), 0.5 * (S2 + S2.T), t_break, T)


def _simulate_rf(rf: ReducedForm, impact: np.ndarray, shocks: np.ndarray) -> np.ndarray:
    n, p = rf.n, rf.p
    total = shocks.shape[0]
    y = np.zeros((total + p, n))
    b = rf.intercept
    lags = rf.lags
    for t in range(total):
        acc = b + impact @ shocks[t]
        for l in range(p):
            acc = acc + lags[l] @ y[p + t - 1 - l]
        y[p + t] = acc
    return y[p:]


def _warn_if_unstable(rf: ReducedForm):
    if not rf.is_stable():
        warnings.warn(
            f"simulating an unstable VAR (spectral radius {rf.spectral_radius():.4g})",
            UnstableWarning,
            stacklevel=3,
        )


def simulate(sp: StructuralParams, T: int, seed: int, burn: int = 1000) -> np.ndarray:
    """Simulate ``T`` observations with unit-variance Gaussian structural shocks,
    zero initial conditions and ``burn`` discarded start-up periods."""
    rf, _ = map_g(sp)
    _warn_if_unstable(rf)
    rng = np.random.default_rng(seed)
    eps = rng.standard_normal((T + burn, sp.n))
    return _simulate_rf(rf, sp.A0inv, eps)[burn:]


def simulate_hsvar(
    sp: StructuralParams, lambdas, t_break: int, T: int, seed: int, burn: int = 1000
) -> np.ndarray:
    """Simulate a two-regime SVAR: shocks in rows ``>= t_break`` are scaled by ``sqrt(lambdas)``."""
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.shape != (sp.n,) or np.any(lambdas <= 0):
        raise ValueError("lambdas must be a positive vector of length n")
    if not 0 < t_break < T:
        raise ShortRegime("t_break must lie strictly inside the sample")
    rf, _ = map_g(sp)
    _warn_if_unstable(rf)
    rng = np.random.default_rng(seed)
    eps = rng.standard_normal((T + burn, sp.n))
    eps[burn + t_break :] *= np.sqrt(lambdas)
    return _simulate_rf(rf, sp.A0inv, eps)[burn:]


def read_csv_data(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Read a CSV with a header row of variable names and float columns."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    values = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ValueError(f"{path}:{lineno}: expected {len(header)} columns, got {len(row)}")
        try:
            values.append([float(c) for c in row])
        except ValueError:
            raise ValueError(f"{path}:{lineno}: non-numeric or missing value") from None
    data = np.array(values, dtype=float).reshape(-1, len(header))
    if not np.all(np.isfinite(data)):
        raise ValueError(f"{path}: data contain non-finite values")
    return header, data


def write_csv_data(path: str | Path, data: np.ndarray, names: list[str] | None = None):
    data = np.atleast_2d(np.asarray(data, dtype=float))
    names = names or [f"y{i + 1}" for i in range(data.shape[1])]
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for row in data:
            w.writerow([repr(float(x)) for x in row])
