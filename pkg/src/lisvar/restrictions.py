"""Equality and sign restrictions on SVAR objects and their compilation into the
linear system ``F(phi) vec(Q) = c`` plus per-shock sign matrices.

User-facing indices (variables, shocks, lags) are 1-based; horizons start at 0.
``vec`` stacks the columns of ``Q``, so entries ``[j*n:(j+1)*n]`` of a compiled
row act on column ``q_{j+1}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Union

import numpy as np

from .errors import DimensionMismatch, InvalidRestriction
from .varcore import (
    NORMALIZATION_RULES,
    ReducedForm,
    StructuralParams,
    long_run_multiplier,
    normalization_values,
    normalization_vectors,
    vma_coefficients,
)

SIGN_TOL = 1e-10


class PhiContext:
    """Reduced-form quantities needed to build restriction rows, computed lazily."""

    def __init__(self, rf: ReducedForm, h_max: int = 0):
        self.rf = rf
        self.n = rf.n
        self._h_max = h_max

    @cached_property
    def sigma_tr(self):
        return self.rf.sigma_tr

    @cached_property
    def sigma_tr_inv(self):
        return self.rf.sigma_tr_inv

    @cached_property
    def vma(self):
        return vma_coefficients(self.rf, self._h_max)

    def C(self, h: int) -> np.ndarray:
        if h > self._h_max:
            self._h_max = h
            self.__dict__.pop("vma", None)
        return self.vma[h]

    @cached_property
    def long_run(self):
        return long_run_multiplier(self.rf)


class StructuralView:
    """Structural quantities computed directly from ``(A0, A+)``."""

    def __init__(self, sp: StructuralParams):
        self.sp = sp
        self.n = sp.n
        self.A0 = sp.A0
        self.A0inv = sp.A0inv
        self._rf_lags = ReducedForm(self.A0inv @ sp.Aplus, self.A0inv @ self.A0inv.T)

    def A(self, l: int) -> np.ndarray:
        return self.sp.lag(l)

    def ir(self, h: int) -> np.ndarray:
        return vma_coefficients(self._rf_lags, h)[h] @ self.A0inv

    def cir(self) -> np.ndarray:
        return long_run_multiplier(self._rf_lags) @ self.A0inv


def _block_row(n: int, col: int, coef: np.ndarray) -> np.ndarray:
    row = np.zeros(n * n)
    row[col * n : (col + 1) * n] = coef
    return row


@dataclass(frozen=True)
class Element:
    """A single restricted entry ``(i, j)`` of some SVAR object (1-based)."""

    i: int
    j: int

    kind = "element"

    @property
    def column(self) -> int:
        """0-based column of ``Q`` this entry is linear in."""
        raise NotImplementedError

    @property
    def columns(self) -> tuple[int, ...]:
        return (self.column,)

    def coefficient(self, ctx: PhiContext) -> np.ndarray:
        raise NotImplementedError

    def structural_coefficient(self, sv: StructuralView) -> np.ndarray:
        raise NotImplementedError

    def structural_value(self, sv: StructuralView) -> float:
        raise NotImplementedError

    def row(self, ctx: PhiContext) -> np.ndarray:
        return _block_row(ctx.n, self.column, self.coefficient(ctx))

    def structural_row(self, sv: StructuralView) -> np.ndarray:
        return _block_row(sv.n, self.column, self.structural_coefficient(sv))

    def validate(self, n: int, p: int):
        for name, v in (("i", self.i), ("j", self.j)):
            if not (isinstance(v, (int, np.integer)) and 1 <= v <= n):
                raise InvalidRestriction(f"{self}: index {name}={v} outside 1..{n}")

    @property
    def needs_long_run(self) -> bool:
        return False

    @property
    def horizon(self) -> int:
        return 0


@dataclass(frozen=True)
class A0InvElement(Element):
    """Entry of the impact matrix ``A0^{-1}``: ``(e_i' Sigma_tr) q_j``."""

    kind = "a0inv"

    @property
    def column(self):
        return self.j - 1

    def coefficient(self, ctx):
        return ctx.sigma_tr[self.i - 1]

    def structural_coefficient(self, sv):
        return sv.A0inv[self.i - 1]

    def structural_value(self, sv):
        return sv.A0inv[self.i - 1, self.j - 1]


@dataclass(frozen=True)
class A0Element(Element):
    """Entry of ``A0``: ``(Sigma_tr^{-1} e_j)' q_i``."""

    kind = "a0"

    @property
    def column(self):
        return self.i - 1

    def coefficient(self, ctx):
        return ctx.sigma_tr_inv[:, self.j - 1]

    def structural_coefficient(self, sv):
        return sv.A0[:, self.j - 1]

    def structural_value(self, sv):
        return sv.A0[self.i - 1, self.j - 1]


@dataclass(frozen=True)
class LagElement(Element):
    """Entry of the structural lag matrix ``A_l``: ``(Sigma_tr^{-1} B_l e_j)' q_i``."""

    l: int = 1
    kind = "lag"

    @property
    def column(self):
        return self.i - 1

    def coefficient(self, ctx):
        return ctx.sigma_tr_inv @ ctx.rf.lag(self.l)[:, self.j - 1]

    def structural_coefficient(self, sv):
        return sv.A(self.l)[:, self.j - 1]

    def structural_value(self, sv):
        return sv.A(self.l)[self.i - 1, self.j - 1]

    def validate(self, n, p):
        super().validate(n, p)
        if not 1 <= self.l <= p:
            raise InvalidRestriction(f"{self}: lag {self.l} outside 1..{p}")


@dataclass(frozen=True)
class CirInfElement(Element):
    """Entry of the infinite-horizon cumulative response ``(I - sum B_l)^{-1} Sigma_tr Q``."""

    kind = "cir"

    @property
    def column(self):
        return self.j - 1

    def coefficient(self, ctx):
        return (ctx.long_run @ ctx.sigma_tr)[self.i - 1]

    def structural_coefficient(self, sv):
        return sv.cir()[self.i - 1]

    def structural_value(self, sv):
        return sv.cir()[self.i - 1, self.j - 1]

    @property
    def needs_long_run(self):
        return True


@dataclass(frozen=True)
class IrhElement(Element):
    """Impulse response of variable ``i`` to shock ``j`` at horizon ``h``: ``e_i' C_h Sigma_tr q_j``."""

    h: int = 0
    kind = "irh"

    @property
    def column(self):
        return self.j - 1

    def coefficient(self, ctx):
        return (ctx.C(self.h) @ ctx.sigma_tr)[self.i - 1]

    def structural_coefficient(self, sv):
        return sv.ir(self.h)[self.i - 1]

    def structural_value(self, sv):
        return sv.ir(self.h)[self.i - 1, self.j - 1]

    def validate(self, n, p):
        super().validate(n, p)
        if self.h < 0:
            raise InvalidRestriction(f"{self}: negative horizon")

    @property
    def horizon(self):
        return self.h


@dataclass(frozen=True)
class LinearCombo:
    """``first - d * second``, a linear restriction linking two entries of the same object."""

    first: Element
    second: Element
    d: float = 1.0

    kind = "combo"

    @classmethod
    def a0inv(cls, i, j, k, l, d=1.0) -> "LinearCombo":
        """``(A0^{-1})_{ij} - d (A0^{-1})_{kl}``."""
        return cls(A0InvElement(i, j), A0InvElement(k, l), float(d))

    @classmethod
    def a0(cls, i, j, k, l, d=1.0) -> "LinearCombo":
        """``(A0)_{ij} - d (A0)_{kl}``."""
        return cls(A0Element(i, j), A0Element(k, l), float(d))

    @classmethod
    def irh(cls, h, i, j, h2, k, l, d=1.0) -> "LinearCombo":
        """``IR^h_{ij} - d IR^{h2}_{kl}``."""
        return cls(IrhElement(i, j, h=h), IrhElement(k, l, h=h2), float(d))

    @property
    def column(self) -> int:
        return self.first.column

    @property
    def columns(self) -> tuple[int, ...]:
        return tuple(sorted({self.first.column, self.second.column}))

    def row(self, ctx):
        return self.first.row(ctx) - self.d * self.second.row(ctx)

    def structural_row(self, sv):
        return self.first.structural_row(sv) - self.d * self.second.structural_row(sv)

    def structural_value(self, sv):
        return self.first.structural_value(sv) - self.d * self.second.structural_value(sv)

    def validate(self, n, p):
        self.first.validate(n, p)
        self.second.validate(n, p)
        if type(self.first) is not type(self.second):
            raise InvalidRestriction(f"{self}: both terms must target the same object")
        if not math.isfinite(self.d):
            raise InvalidRestriction(f"{self}: coefficient d must be finite")

    @property
    def needs_long_run(self):
        return self.first.needs_long_run or self.second.needs_long_run

    @property
    def horizon(self):
        return max(self.first.horizon, self.second.horizon)


Target = Union[Element, LinearCombo]


@dataclass(frozen=True)
class EqualityAtom:
    target: Target
    value: float = 0.0

    @property
    def block(self) -> int:
        """0-based block row: the column of ``Q`` of the (first) restricted entry."""
        return self.target.column

    @property
    def columns(self) -> tuple[int, ...]:
        return self.target.columns


@dataclass(frozen=True)
class SignAtom:
    """``sign * IR^h_{ij} >= 0`` for every ``h`` in ``h..h_end`` (``h_end`` defaults to ``h``)."""

    i: int
    j: int
    h: int = 0
    sign: int = 1
    h_end: int | None = None

    @property
    def horizons(self) -> range:
        return range(self.h, (self.h if self.h_end is None else self.h_end) + 1)

    def validate(self, n: int):
        if not (1 <= self.i <= n and 1 <= self.j <= n):
            raise InvalidRestriction(f"{self}: indices outside 1..{n}")
        if self.sign not in (1, -1):
            raise InvalidRestriction(f"{self}: sign must be +1 or -1")
        if self.h < 0 or (self.h_end is not None and self.h_end < self.h):
            raise InvalidRestriction(f"{self}: invalid horizon range")


@dataclass(frozen=True)
class RestrictionSpec:
    n: int
    p: int
    equalities: tuple[EqualityAtom, ...] = ()
    signs: tuple[SignAtom, ...] = ()
    normalization: str = "diag_a0"

    def __post_init__(self):
        object.__setattr__(self, "equalities", tuple(self.equalities))
        object.__setattr__(self, "signs", tuple(self.signs))
        if self.n < 1 or self.p < 0:
            raise InvalidRestriction("need n >= 1 and p >= 0")
        for atom in self.equalities:
            atom.target.validate(self.n, self.p)
            if not math.isfinite(atom.value):
                raise InvalidRestriction(f"{atom}: value must be finite")
        for s in self.signs:
            s.validate(self.n)
        if self.normalization not in NORMALIZATION_RULES:
            raise InvalidRestriction(
                f"unknown normalization {self.normalization!r}; choose from {NORMALIZATION_RULES}"
            )

    @property
    def f(self) -> int:
        return len(self.equalities)

    @property
    def block_counts(self) -> tuple[int, ...]:
        """Number of atoms in each block row under the default assignment."""
        counts = [0] * self.n
        for atom in self.equalities:
            counts[atom.block] += 1
        return tuple(counts)

    @property
    def max_horizon(self) -> int:
        hs = [a.target.horizon for a in self.equalities]
        hs += [max(s.horizons) for s in self.signs]
        return max(hs, default=0)

    def with_values(self, values) -> "RestrictionSpec":
        """Same restrictions with new right-hand sides."""
        values = list(values)
        if len(values) != self.f:
            raise DimensionMismatch(f"need {self.f} values, got {len(values)}")
        eqs = tuple(EqualityAtom(a.target, float(v)) for a, v in zip(self.equalities, values))
        return RestrictionSpec(self.n, self.p, eqs, self.signs, self.normalization)

    def without_signs(self) -> "RestrictionSpec":
        return RestrictionSpec(self.n, self.p, self.equalities, (), self.normalization)


@dataclass(frozen=True)
class Classification:
    triangular: bool
    homogeneous: bool
    recursive: bool
    ordered_counts: bool
    order: tuple[int, ...] | None = None
    cross_shock: bool = False

    def as_dict(self) -> dict:
        return {
            "triangular": self.triangular,
            "homogeneous": self.homogeneous,
            "recursive": self.recursive,
            "ordered_counts": self.ordered_counts,
            "shock_order": None if self.order is None else [k + 1 for k in self.order],
        }


def _triangular_order(n: int, atoms: list[tuple[int, ...]]) -> tuple[int, ...] | None:
    """Find a shock ordering making the block pattern lower triangular with
    ``f_i = n - i``. Positions are filled from the last one backwards: the shock
    at position ``pos`` (1-based) must be touched by exactly ``n - pos`` of the
    atoms not already claimed by later positions."""

    def search(pos: int, remaining: list[tuple[int, ...]], placed: tuple[int, ...]):
        if pos == 0:
            return placed if not remaining else None
        for s in range(n):
            if s in placed:
                continue
            hit = [a for a in remaining if s in a]
            if len(hit) != n - pos:
                continue
            rest = [a for a in remaining if s not in a]
            out = search(pos - 1, rest, (s,) + placed)
            if out is not None:
                return out
        return None

    return search(n, list(atoms), ())


def classify(spec: RestrictionSpec) -> Classification:
    """Structural classification of the equality restrictions.

    ``order[k]`` is the 0-based shock placed at position ``k`` of the triangular
    arrangement (blocks ordered so that ``f_1 >= ... >= f_n``).
    """
    atoms = [a.columns for a in spec.equalities]
    order = _triangular_order(spec.n, atoms) if spec.f == spec.n * (spec.n - 1) // 2 else None
    triangular = order is not None
    homogeneous = all(a.value == 0.0 for a in spec.equalities)
    counts = spec.block_counts
    return Classification(
        triangular=triangular,
        homogeneous=homogeneous,
        recursive=triangular and homogeneous,
        ordered_counts=all(counts[k] >= counts[k + 1] for k in range(spec.n - 1)),
        order=order,
        cross_shock=any(len(c) > 1 for c in atoms),
    )


@dataclass(frozen=True, eq=False)
class CompiledRestrictions:
    """``F(phi)``, ``c``, sign rows and normalization vectors at a given ``phi``.

    ``sign_rows[j]`` holds the rows ``S_j(phi)`` acting on column ``q_j`` (0-based);
    ``norm_vectors[:, j]`` is the vector whose inner product with ``q_j`` must be
    non-negative.
    """

    spec: RestrictionSpec
    rf: ReducedForm
    F: np.ndarray
    c: np.ndarray
    row_blocks: np.ndarray
    sign_rows: tuple[np.ndarray, ...]
    norm_vectors: np.ndarray
    ctx: PhiContext = field(repr=False)

    @property
    def n(self) -> int:
        return self.spec.n

    @property
    def f(self) -> int:
        return self.F.shape[0]

    def block_rows(self, i: int) -> np.ndarray:
        """Row indices of block ``i`` (0-based)."""
        return np.flatnonzero(self.row_blocks == i)

    def F_block(self, i: int, j: int) -> np.ndarray:
        """Sub-block ``F_ij``: rows of block ``i`` restricted to column ``q_j`` (0-based)."""
        n = self.n
        return self.F[self.block_rows(i)][:, j * n : (j + 1) * n]

    def rows_on_column(self, rows: np.ndarray, j: int) -> np.ndarray:
        n = self.n
        return self.F[rows][:, j * n : (j + 1) * n]


def compile_restrictions(spec: RestrictionSpec, rf: ReducedForm) -> CompiledRestrictions:
    """Build ``F(phi)``, ``c`` and the sign matrices. Raises ``Unstable`` when an
    infinite-horizon cumulative restriction meets a non-stationary VAR."""
    if spec.n != rf.n:
        raise DimensionMismatch(f"spec has n={spec.n}, reduced form has n={rf.n}")
    for a in spec.equalities:
        terms = (a.target.first, a.target.second) if isinstance(a.target, LinearCombo) else (a.target,)
        for t in terms:
            if isinstance(t, LagElement) and t.l > rf.p:
                raise DimensionMismatch(f"{t} needs lag {t.l}, reduced form has p={rf.p}")
    n = spec.n
    ctx = PhiContext(rf, spec.max_horizon)
    if spec.equalities:
        F = np.vstack([a.target.row(ctx) for a in spec.equalities])
    else:
        F = np.zeros((0, n * n))
    c = np.array([a.value for a in spec.equalities], dtype=float)
    blocks = np.array([a.block for a in spec.equalities], dtype=int)
    rows: list[list[np.ndarray]] = [[] for _ in range(n)]
    if spec.signs:
        irf_impact = ctx.vma @ ctx.sigma_tr
        for s in spec.signs:
            for h in s.horizons:
                rows[s.j - 1].append(s.sign * irf_impact[h, s.i - 1])
    sign_rows = tuple(np.array(r).reshape(-1, n) for r in rows)
    V = normalization_vectors(rf, spec.normalization)
    return CompiledRestrictions(spec, rf, F, c, blocks, sign_rows, V, ctx)


def vec(Q: np.ndarray) -> np.ndarray:
    return np.asarray(Q).reshape(-1, order="F")


def unvec(v: np.ndarray, n: int) -> np.ndarray:
    return np.asarray(v).reshape(n, n, order="F")


def evaluate_equality(compiled: CompiledRestrictions, Q: np.ndarray) -> np.ndarray:
    """Residual ``F(phi) vec(Q) - c``."""
    Q = np.asarray(Q, dtype=float)
    if Q.shape != (compiled.n, compiled.n):
        raise DimensionMismatch(f"Q has shape {Q.shape}, expected {(compiled.n, compiled.n)}")
    return compiled.F @ vec(Q) - compiled.c


def evaluate_signs(compiled: CompiledRestrictions, Q: np.ndarray) -> np.ndarray:
    """Booleans ``S_j(phi) q_j >= -tol`` for every sign row, shocks in order."""
    Q = np.asarray(Q, dtype=float)
    out = [S @ Q[:, j] >= -SIGN_TOL for j, S in enumerate(compiled.sign_rows)]
    return np.concatenate(out) if out else np.zeros(0, dtype=bool)


def column_signs_ok(compiled: CompiledRestrictions, j: int, q: np.ndarray) -> bool:
    S = compiled.sign_rows[j]
    return bool(np.all(S @ q >= -SIGN_TOL)) if S.size else True


def column_normalization_ok(compiled: CompiledRestrictions, j: int, q: np.ndarray) -> bool:
    v = compiled.norm_vectors[:, j]
    return bool(v @ q / np.linalg.norm(v) >= -SIGN_TOL)


def normalization_ok(compiled: CompiledRestrictions, Q: np.ndarray) -> bool:
    return bool(np.all(normalization_values(Q, compiled.norm_vectors) >= -SIGN_TOL))


def structural_values(spec: RestrictionSpec, sp: StructuralParams) -> np.ndarray:
    """Restricted quantities computed directly from structural parameters."""
    sv = StructuralView(sp)
    return np.array([a.target.structural_value(sv) for a in spec.equalities], dtype=float)


def structural_rows(spec: RestrictionSpec, sp: StructuralParams) -> np.ndarray:
    """The matrix ``F(phi)(I_n kron Q)`` assembled from structural objects alone."""
    sv = StructuralView(sp)
    if not spec.equalities:
        return np.zeros((0, sp.n * sp.n))
    return np.vstack([a.target.structural_row(sv) for a in spec.equalities])


def dtilde(n: int) -> np.ndarray:
    """Matrix mapping the below-diagonal entries of a skew-symmetric ``H`` (taken
    column by column) to ``vec(H)``."""
    if n < 2:
        raise ValueError("dtilde needs n >= 2")
    D = np.zeros((n * n, n * (n - 1) // 2))
    k = 0
    for col in range(n):
        for row in range(col + 1, n):
            D[col * n + row, k] = 1.0
            D[row * n + col, k] = -1.0
            k += 1
    return D
