import numpy as np
import pytest

from lisvar.restrictions import (
    A0Element,
    A0InvElement,
    EqualityAtom,
    RestrictionSpec,
    StructuralView,
)
from lisvar.varcore import ReducedForm, map_g_inverse, random_orthogonal, sign_normalize

BIVARIATE_LAG = [[0.8, -0.2], [0.1, 0.6]]
BIVARIATE_SIGMA = [[0.49, -0.14], [-0.14, 0.13]]

# impact response of variable 1 to shock 1 fixed at 0.5
BIVARIATE_Q1 = np.array([[0.714, -0.700], [0.700, 0.714]])
BIVARIATE_Q2 = np.array([[0.714, 0.700], [-0.700, 0.714]])
BIVARIATE_A0_1 = np.array([[1.687, 2.333], [-0.320, 2.381]])
BIVARIATE_A0_2 = np.array([[0.354, -2.333], [1.680, 2.381]])


@pytest.fixture
def bivariate_rf():
    return ReducedForm.from_lags([BIVARIATE_LAG], BIVARIATE_SIGMA)


@pytest.fixture
def bivariate_spec():
    return RestrictionSpec(2, 1, (EqualityAtom(A0InvElement(1, 1), 0.5),))


def nk_spec(n=3, p=1):
    zeros = [(1, 3), (2, 1), (3, 2)]
    return RestrictionSpec(n, p, tuple(EqualityAtom(A0Element(i, j), 0.0) for i, j in zeros))


def random_rf(rng, n, p=1, scale=0.3):
    A = rng.standard_normal((n, n))
    S = A @ A.T + 0.5 * np.eye(n)
    lags = [scale * rng.standard_normal((n, n)) / np.sqrt(n) for _ in range(p)]
    return ReducedForm.from_lags(lags, S)


def feasible_spec(rf, targets, rng, Q0=None, signs=(), normalization="diag_a0"):
    """Restriction values read off a normalized random structure, so ``Q0`` is
    admissible (sign restrictions aside) and the set is non-empty."""
    Q0 = sign_normalize(random_orthogonal(rf.n, rng) if Q0 is None else Q0, rf, normalization)
    view = StructuralView(map_g_inverse(rf, Q0))
    atoms = tuple(EqualityAtom(t, float(t.structural_value(view))) for t in targets)
    return RestrictionSpec(rf.n, rf.p, atoms, tuple(signs), normalization), Q0


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance verdicts, printed after the run as one PASS/FAIL line per criterion
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
