import warnings
from itertools import combinations

import numpy as np
import pytest
from scipy.stats import norm

from lisvar.errors import AllDrawsEmpty, DegenerateVariance, ImproperPosterior, ShortRegime, TooFewSamples
from lisvar.inference import (
    PosteriorDrawSet,
    SolvedDraws,
    cluster_draws,
    credible_region_phi,
    highest_density_region,
    highest_density_regions,
    merge_intervals,
    posterior_irf,
    posterior_mean_range,
    projection_cs_fixed,
    projection_cs_switching,
    robust_bounds_probability,
    sample_posterior_hsvar,
    sample_posterior_niw,
    solve_draws,
)
from lisvar.inference.posterior import _log_kernel
from lisvar.restrictions import A0InvElement, EqualityAtom, RestrictionSpec
from lisvar.solve import solve_triangular
from lisvar.solve.common import ImpulseResponseSet
from lisvar.varcore import (
    ReducedForm,
    StructuralParams,
    fit_hsvar_fgls,
    lagged_regressors,
    map_g_inverse,
    simulate,
    simulate_hsvar,
)

from conftest import BIVARIATE_LAG, BIVARIATE_SIGMA

FIXTURE_SPEC = RestrictionSpec(2, 1, (EqualityAtom(A0InvElement(1, 1), 0.5),))


def synthetic(points, log_density=None):
    """Solved draws whose response (1, 1, 0) takes the given member values."""
    irf_sets = []
    for p in points:
        if p is None:
            irf_sets.append(None)
            continue
        arr = np.zeros((len(p), 1, 2, 2))
        arr[:, 0, 0, 0] = p
        irf_sets.append(ImpulseResponseSet(arr))
    ld = np.zeros(len(points)) if log_density is None else log_density
    draws = PosteriorDrawSet([None] * len(points), ld)
    return SolvedDraws(draws, RestrictionSpec(2, 1), 0, [None] * len(points), irf_sets)


@pytest.fixture(scope="module")
def fixture_data():
    rf = ReducedForm.from_lags([BIVARIATE_LAG], BIVARIATE_SIGMA)
    Q1 = solve_triangular(FIXTURE_SPEC, rf).q_matrices[0]
    return simulate(map_g_inverse(rf, Q1), 400, seed=11)


@pytest.fixture(scope="module")
def fixture_solved(fixture_data):
    return solve_draws(sample_posterior_niw(fixture_data, 1, 300, seed=5), FIXTURE_SPEC, 4)


# posterior draws


def test_niw_is_seeded_per_draw(fixture_data):
    a = sample_posterior_niw(fixture_data, 1, 20, seed=3)
    b = sample_posterior_niw(fixture_data, 1, 5, seed=3)
    c = sample_posterior_niw(fixture_data, 1, 5, seed=4)
    for x, y in zip(a.draws[:5], b.draws):
        np.testing.assert_array_equal(x.B, y.B)
        np.testing.assert_array_equal(x.Sigma, y.Sigma)
    assert not np.array_equal(a.draws[0].Sigma, c.draws[0].Sigma)


def test_niw_zero_draws(fixture_data):
    d = sample_posterior_niw(fixture_data, 1, 0)
    assert d.count == 0 and d.log_density.shape == (0,)


def test_niw_moments_match_conjugate_formulas(fixture_data):
    d = sample_posterior_niw(fixture_data, 1, 4000, seed=1)
    Y, X = lagged_regressors(fixture_data, 1)
    B_hat = np.linalg.lstsq(X, Y, rcond=None)[0].T
    S = (Y - X @ B_hat.T).T @ (Y - X @ B_hat.T)
    dof = X.shape[0] - X.shape[1]
    n = Y.shape[1]
    # inverse-Wishart mean
    np.testing.assert_allclose(np.mean([r.Sigma for r in d], axis=0), S / (dof - n - 1), rtol=0.02, atol=2e-3)
    np.testing.assert_allclose(np.mean([r.B for r in d], axis=0), B_hat, atol=0.01)
    np.testing.assert_allclose(d.diagnostics["B_ols"], B_hat, atol=1e-12)


def test_niw_log_density_is_kernel(fixture_data):
    d = sample_posterior_niw(fixture_data, 1, 3, seed=2)
    Y, X = lagged_regressors(fixture_data, 1)
    for rf, ld in zip(d, d.log_density):
        U = Y - X @ rf.B.T
        n = rf.n
        expect = -0.5 * (U.shape[0] + n + 1) * np.linalg.slogdet(rf.Sigma)[1] - 0.5 * np.trace(
            np.linalg.inv(rf.Sigma) @ U.T @ U
        )
        assert ld == pytest.approx(expect, rel=1e-12)
        assert _log_kernel(rf.Sigma, U) == pytest.approx(ld, rel=1e-12)


def test_niw_improper_for_short_samples():
    data = np.random.default_rng(0).standard_normal((6, 2))
    with pytest.raises(ImproperPosterior):
        sample_posterior_niw(data, 1, 10)


@pytest.fixture(scope="module")
def hsvar_data():
    A0inv = np.array([[1.0, 0.3], [0.2, 1.0]])
    sp = StructuralParams.from_impact(A0inv, [0.4 * np.eye(2)])
    return simulate_hsvar(sp, np.array([3.0, 0.5]), 1500, 3000, seed=7)


def test_hsvar_gibbs_centres_on_fgls(hsvar_data):
    d = sample_posterior_hsvar(hsvar_data, 1, 1500, 300, seed=1, burn_in=100)
    fgls = fit_hsvar_fgls(hsvar_data, 1, 1500)
    assert d.kind == "hsvar" and d.count == 300
    np.testing.assert_allclose(np.mean([r.B for r in d], axis=0), fgls.B, atol=0.02)
    np.testing.assert_allclose(np.mean([r.Sigma1 for r in d], axis=0), fgls.Sigma1, rtol=0.05, atol=0.02)
    np.testing.assert_allclose(np.mean([r.Sigma2 for r in d], axis=0), fgls.Sigma2, rtol=0.05, atol=0.05)


def test_hsvar_gibbs_is_seeded(hsvar_data):
    a = sample_posterior_hsvar(hsvar_data, 1, 1500, 3, seed=2, burn_in=5)
    b = sample_posterior_hsvar(hsvar_data, 1, 1500, 3, seed=2, burn_in=5)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.Sigma2, y.Sigma2)


def test_hsvar_short_regime(hsvar_data):
    with pytest.raises(ShortRegime):
        sample_posterior_hsvar(hsvar_data[:1506], 1, 1502, 2)


def test_credible_region_keeps_highest_density():
    d = PosteriorDrawSet([10, 11, 12, 13, 14], [0.0, 3.0, 1.0, 3.0, 2.0])
    assert credible_region_phi(d, 0.6).draws == [11, 13, 14]
    assert credible_region_phi(d, 0.4).draws == [11, 13]
    assert credible_region_phi(d, 0.2).draws == [11]
    assert credible_region_phi(d, 1.0).count == 5
    sub = credible_region_phi(d, 0.6)
    assert [sub.source_index(k) for k in range(3)] == [1, 3, 4]
    with pytest.raises(ValueError):
        credible_region_phi(d, 0.0)


# solving draws


def test_solved_fixture_draws_have_one_or_two_members(fixture_solved):
    # the normalization occasionally removes one of the two roots
    counts = fixture_solved.member_counts()
    assert fixture_solved.n_empty == 0
    assert set(counts) <= {1, 2} and np.mean(counts == 2) > 0.95


def test_threads_do_not_change_results(fixture_data):
    draws = sample_posterior_niw(fixture_data, 1, 40, seed=9)
    a = solve_draws(draws, FIXTURE_SPEC, 2, threads=1)
    b = solve_draws(draws, FIXTURE_SPEC, 2, threads=3)
    for x, y in zip(a.irf_sets, b.irf_sets):
        np.testing.assert_array_equal(x.irfs, y.irfs)


def test_all_draws_empty(fixture_data):
    spec = RestrictionSpec(2, 1, (EqualityAtom(A0InvElement(1, 1), 50.0),))
    solved = solve_draws(sample_posterior_niw(fixture_data, 1, 10), spec, 0)
    assert solved.n_empty == 10
    with pytest.raises(AllDrawsEmpty):
        posterior_irf(solved)
    with pytest.raises(AllDrawsEmpty):
        projection_cs_switching(solved)


# posterior of impulse responses


def _positive_share(solved, weights_of):
    shares = []
    for k in solved.nonempty:
        v = solved.irf_sets[k].values(2, 1, 0)
        w = weights_of(v)
        shares.append(w[v >= 0].sum() / w.sum())
    return np.mean(shares)


def test_equal_weights_spread_mass_over_members(fixture_solved):
    post = posterior_irf(fixture_solved)
    x, w = post.values((2, 1, 0))
    assert w.sum() == pytest.approx(1.0)
    expect = _positive_share(fixture_solved, np.ones_like)
    assert post.probability((2, 1, 0), (0.0, np.inf)) == pytest.approx(expect, abs=1e-12)
    # members have impact responses of opposite sign, so about half the mass is positive
    assert expect == pytest.approx(0.5, abs=0.01)
    assert post.probability((1, 1, 0), (0.5 - 1e-9, 0.5 + 1e-9)) == pytest.approx(1.0)


def test_weights_select_members(fixture_solved):
    last = lambda k, st: np.r_[np.zeros(st.count - 1), 1.0]  # noqa: E731
    post = posterior_irf(fixture_solved, order_by=(2, 1, 0), weights=last)
    expect = _positive_share(fixture_solved, lambda v: (v == v.max()).astype(float))
    assert post.probability((2, 1, 0), (0.0, np.inf)) == pytest.approx(expect, abs=1e-12)
    assert expect > 0.99
    calls = []
    posterior_irf(fixture_solved, weights=lambda k, st: calls.append(k) or np.ones(st.count))
    assert calls == list(range(fixture_solved.count))
    with pytest.raises(ValueError):
        posterior_irf(fixture_solved, weights=[])
    with pytest.raises(ValueError):
        posterior_irf(fixture_solved, weights=[-1.0, 1.0])


def test_resample_picks_one_member_per_draw(fixture_solved):
    post = posterior_irf(fixture_solved)
    draws = post.resample(seed=1)
    assert draws.shape == (fixture_solved.count, 5, 2, 2)
    np.testing.assert_allclose(draws[:, 0, 0, 0], 0.5, atol=1e-10)


def test_normal_hdr_matches_quantiles():
    x = np.random.default_rng(0).standard_normal(20000)
    (region,) = highest_density_region(x, 0.9)
    z = norm.ppf(0.95)
    assert region[0] == pytest.approx(-z, abs=0.08) and region[1] == pytest.approx(z, abs=0.08)


def test_bimodal_hdr_splits():
    rng = np.random.default_rng(1)
    x = np.concatenate([rng.normal(-5, 1, 5000), rng.normal(5, 1, 5000)])
    regions = highest_density_regions(x, [0.5, 1.0])
    assert len(regions[0]) == 2
    assert regions[0][0][1] < 0 < regions[0][1][0]
    assert regions[1] == [(x.min(), x.max())]


def test_hdr_nested_levels():
    x = np.random.default_rng(2).gamma(2.0, size=5000)
    wide, narrow = highest_density_regions(x, [0.9, 0.5])
    assert wide[0][0] <= narrow[0][0] and narrow[-1][1] <= wide[-1][1]


def test_hdr_weights_match_replication():
    rng = np.random.default_rng(3)
    base = rng.standard_normal(400)
    a = highest_density_region(np.concatenate([base, base, base[:200]]), 0.75)
    w = np.r_[np.full(200, 3.0), np.full(200, 2.0)]
    b = highest_density_region(base, 0.75, weights=w / w.sum())
    # identical weighted empirical distribution, bandwidths differ through n_eff
    assert len(a) == len(b) == 1
    assert a[0][0] == pytest.approx(b[0][0], abs=0.1) and a[0][1] == pytest.approx(b[0][1], abs=0.1)


def test_hdr_needs_samples():
    with pytest.raises(TooFewSamples):
        highest_density_region(np.zeros(50), 0.9)
    assert highest_density_region(np.full(200, 0.5), 0.9) == [(0.5, 0.5)]


# robust bounds


def test_robust_bounds_on_constructed_sets():
    solved = synthetic([[0.2, 0.8], [0.3, 0.4], [0.9, 1.0]])
    assert robust_bounds_probability(solved, None, (1, 1, 0), (0.0, 0.5)) == pytest.approx((1 / 3, 2 / 3))
    assert robust_bounds_probability(solved, None, (1, 1, 0), (-np.inf, np.inf)) == (1.0, 1.0)
    assert robust_bounds_probability(solved, None, (1, 1, 0), (5.0, 6.0)) == (0.0, 0.0)
    lo, hi = posterior_mean_range(solved, None, (1, 1, 0))
    assert lo == pytest.approx((0.2 + 0.3 + 0.9) / 3) and hi == pytest.approx((0.8 + 0.4 + 1.0) / 3)


def test_any_member_prior_lies_within_bounds():
    rng = np.random.default_rng(4)
    solved = synthetic([rng.normal(size=rng.integers(1, 4)) for _ in range(60)])
    H0 = (-0.3, 0.6)
    lower, upper = robust_bounds_probability(solved, None, (1, 1, 0), H0)
    mlo, mhi = posterior_mean_range(solved, None, (1, 1, 0))
    for s in range(20):
        wr = np.random.default_rng(s)
        post = posterior_irf(solved, weights=lambda k, st: wr.random(st.count) + 1e-3)
        assert lower <= post.probability((1, 1, 0), H0) <= upper
        assert mlo <= post.mean((1, 1, 0)) <= mhi


def test_empty_draws_are_skipped_in_bounds():
    solved = synthetic([[0.1, 0.2], None, [0.7]])
    assert robust_bounds_probability(solved, None, (1, 1, 0), (0.0, 0.5)) == (0.5, 0.5)
    assert posterior_irf(solved).n_dropped == 1


# clustering and projection sets


def _brute_assign(points, mu, var):
    best = None
    for combo in combinations(range(len(mu)), len(points)):
        c = float(np.sum((np.asarray(points) - mu[list(combo)]) ** 2 / var[list(combo)]))
        if best is None or c < best[0]:
            best = (c, tuple(m + 1 for m in combo))
    return best[1]


def test_cluster_assignment_matches_enumeration():
    rng = np.random.default_rng(6)
    centres = np.array([-3.0, 0.0, 2.0, 6.0])
    pts = []
    for _ in range(80):
        M = rng.integers(1, 5)
        idx = np.sort(rng.choice(4, M, replace=False))
        pts.append(centres[idx] + 0.3 * rng.standard_normal(M))
    cl = cluster_draws(synthetic(pts))
    assert cl.M_bar == 4
    for p, a in zip(cl.points, cl.assignments):
        assert a == _brute_assign(p, cl.mu, cl.var)
    assert cl.D.sum() == sum(len(p) for p in pts)


def test_single_point_joins_nearest_cluster():
    cl = cluster_draws(synthetic([[0.0, 10.0], [1.0, 11.0], [-1.0, 9.0], [10.5]]))
    np.testing.assert_allclose(cl.mu, [0.0, 10.0])
    np.testing.assert_allclose(cl.var, [1.0, 1.0])
    assert cl.assignments == [(1, 2), (1, 2), (1, 2), (2,)]
    assert cl.intervals() == [(1, -1.0, 1.0), (2, 9.0, 11.0)]


def test_single_full_draw_floors_variance():
    with pytest.warns(DegenerateVariance):
        cl = cluster_draws(synthetic([[0.0, 10.0], [1.0], [9.0]]))
    assert cl.K_tilde == 1 and cl.floored.all()
    assert cl.variance_floor == pytest.approx(25.0 * 1e-6)
    assert cl.assignments == [(1, 2), (1,), (2,)]


def test_zero_variance_without_smaller_draws_is_silent():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        cl = cluster_draws(synthetic([[0.0, 1.0], [0.0, 1.0]]))
    assert cl.floored.all() and cl.intervals() == [(1, 0.0, 0.0), (2, 1.0, 1.0)]


def test_tied_points_collapse():
    with pytest.warns(DegenerateVariance):
        cl = cluster_draws(synthetic([[0.0, 5.0], [1.0, 1.0 + 1e-12]]))
    np.testing.assert_array_equal(cl.M, [2, 1])
    np.testing.assert_array_equal(cl.multiplicities[1], [2])


def test_merge_intervals():
    assert merge_intervals([(3, 4), (0, 1), (0.5, 2), (2, 2.5)]) == [(0.0, 2.5), (3.0, 4.0)]


def test_switching_set_covers_retained_draws(fixture_solved):
    cs = projection_cs_switching(fixture_solved, alpha=0.9, h_max=4)
    retained = credible_region_phi(fixture_solved, 0.9)
    assert cs.diagnostics["n_retained"] == retained.count == 270
    for i, j, h in cs.coordinates:
        vals = np.concatenate(retained.values((i, j, h)))
        assert cs.contains(i, j, h, vals)
    ((lo, hi),) = cs.intervals(1, 1, 0)
    assert lo == pytest.approx(0.5, abs=1e-12) and hi == pytest.approx(0.5, abs=1e-12)
    assert len(cs.intervals(2, 1, 0)) == 2


def test_fixed_labels_split_by_anchor_sign(fixture_solved):
    cs = projection_cs_fixed(fixture_solved, alpha=0.9, h_max=4, anchor=(2, 1, 0))
    retained = credible_region_phi(fixture_solved, 0.9)
    by_sign = {True: set(), False: set()}
    for k, labels in zip(retained.nonempty, cs.diagnostics["member_labels"]):
        for v, lab in zip(retained.irf_sets[k].values(2, 1, 0), labels):
            by_sign[bool(v > 0)].add(lab)
    assert by_sign == {True: {2}, False: {1}}
    for i, j, h in cs.coordinates:
        vals = np.concatenate(retained.values((i, j, h)))
        assert cs.contains(i, j, h, vals)


def test_fixed_and_switching_agree_at_anchor(fixture_solved):
    fixed = projection_cs_fixed(fixture_solved, alpha=0.8, h_max=2, anchor=(2, 1, 0))
    switching = projection_cs_switching(fixture_solved, alpha=0.8, h_max=2, coordinates=[(2, 1, 0)])
    assert fixed.cluster_intervals(2, 1, 0) == switching.cluster_intervals(2, 1, 0)


def test_fixed_labels_differ_from_switching_away_from_anchor():
    # two members cross between horizons: switching relabels, fixed keeps the anchor labels
    irf_sets = []
    rng = np.random.default_rng(0)
    for _ in range(50):
        a, b = rng.normal(0, 0.1, 2)
        arr = np.zeros((2, 2, 2, 2))
        arr[:, 0, 0, 0] = [-1 + a, 1 + b]
        arr[:, 1, 0, 0] = [1 + b, -1 + a] if rng.random() < 0.5 else [-1 + a, 1 + b]
        irf_sets.append(ImpulseResponseSet(arr))
    solved = SolvedDraws(PosteriorDrawSet([None] * 50, np.zeros(50)), RestrictionSpec(2, 1), 1, [None] * 50, irf_sets)
    fixed = projection_cs_fixed(solved, alpha=1.0, h_max=1, anchor=(1, 1, 0))
    switching = projection_cs_switching(solved, alpha=1.0, h_max=1)
    assert len(switching.cluster_intervals(1, 1, 1)) == 2
    labs = fixed.cluster_intervals(1, 1, 1)
    assert all(hi - lo > 1.5 for _, lo, hi in labs)
