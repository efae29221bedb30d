import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import alpha_loop
from synergylab.errors import InsufficientSupport, NumericalError
from synergylab.hypergraph import GroupSizeDistribution
from synergylab.synergy import (
    EmpiricalSynergy,
    R_at,
    alpha_of,
    empirical_synergy,
    equilibrium_scale,
    fit_distribution,
    fit_synergy,
    model_R,
    optimal_group_size,
)
from synergylab.synthlab import gen_synergy_curve, gen_team_sizes, planted_pg


def test_equilibrium_scale_examples():
    assert equilibrium_scale({1: 1.0}) == 1.0
    emp = empirical_synergy({1: 0.5, 2: 0.5})
    assert emp.z == 2.0
    np.testing.assert_array_equal(emp.r_emp, [1.0, 1.0])
    assert emp.as_dict() == {1: 1.0, 2: 2.0}
    for m in (1, 3, 7, 20):
        assert equilibrium_scale({g: 1 / m for g in range(1, m + 1)}) == pytest.approx(m, rel=1e-14)


def test_alpha_examples():
    assert alpha_of(2.3, 0.7, {1: 1.0}) == 1.0
    assert alpha_of(1.0, math.log(2), {1: 0.5, 2: 0.5}) == pytest.approx(4 / 3, rel=1e-15)
    with pytest.raises(ValueError):
        alpha_of(-1.0, 0.1, {1: 1.0})


def test_alpha_overflow_reports_diagnostic():
    with pytest.raises(NumericalError, match="alpha overflow"):
        alpha_of(2000.0, 0.0, {1: 0.5, 10**6: 0.5})


def test_model_examples():
    assert model_R(3, 1.0, 2.0, 0.5) == pytest.approx(9 * math.exp(-1), rel=1e-15)
    assert abs(model_R(3, 1.0, 2.0, 0.5) - 3.3110) < 1e-4
    g = np.arange(1, 10)
    np.testing.assert_array_equal(model_R(g, 0.7, 0.0, 0.0), np.full(9, 0.7))
    for b, c in [(0.0, 0.0), (2.5, 0.1), (0.3, 3.0)]:
        assert model_R(1, 1.9, b, c) == 1.9


def test_optimum_classification():
    class P:
        def __init__(self, beta, gamma):
            self.beta, self.gamma = beta, gamma

    geo = optimal_group_size(P(2.54, 0.58))
    assert geo.interior and geo.g_star == pytest.approx(4.379, abs=1e-3)
    assert optimal_group_size(P(0.0, 0.77)).kind == "boundary"
    assert optimal_group_size(P(0.4, 0.4)).kind == "boundary"
    assert optimal_group_size(P(1.0, 0.0)).kind == "monotone_increasing"
    assert optimal_group_size(P(0.0, 0.0)).kind == "flat"


def fit_curve(beta, gamma, g_max=30, **kw):
    cv = gen_synergy_curve(beta, gamma, g_max=g_max, **kw)
    return cv, fit_synergy(EmpiricalSynergy.observed(cv.g, cv.p, cv.R_emp))


def test_planted_recovery_and_alpha_consistency():
    cv, f = fit_curve(1.5, 0.2)
    assert abs(f.beta - 1.5) < 1e-3 and abs(f.gamma - 0.2) < 1e-3
    assert f.r_squared >= 0.9999
    assert f.alpha == pytest.approx(cv.planted["alpha"], rel=1e-6)
    assert f.alpha == pytest.approx(alpha_loop(f.beta, f.gamma, cv.g, cv.p), rel=1e-12)
    assert R_at(f, 1) == f.alpha


def test_noisy_fit_quality():
    for seed in range(5):
        _, f = fit_curve(1.5, 0.2, noise=0.01, seed=seed)
        assert f.r_squared >= 0.99


def test_min_count_exclusion_and_support():
    cv = gen_synergy_curve(1.5, 0.2, g_max=12)
    emp = EmpiricalSynergy.observed(cv.g, cv.p, cv.R_emp)
    counts = {int(g): 1000 if g <= 8 else 50 for g in cv.g}
    f = fit_synergy(emp, counts, min_count=100)
    assert f.included_sizes == tuple(range(1, 9))
    assert f.excluded_sizes == (9, 10, 11, 12)
    # alpha keeps the full support even though sizes were excluded from the RSS
    assert f.alpha == pytest.approx(alpha_loop(f.beta, f.gamma, cv.g, cv.p), rel=1e-12)
    with pytest.raises(InsufficientSupport):
        fit_synergy(emp, {1: 500, 2: 500, 3: 10}, min_count=100)


def test_fit_is_deterministic():
    _, a = fit_curve(0.8, 0.3, noise=0.02, seed=3)
    _, b = fit_curve(0.8, 0.3, noise=0.02, seed=3)
    assert a.as_dict() == b.as_dict()


def test_weighted_and_reduced_variants_run():
    cv = gen_synergy_curve(1.5, 0.2, g_max=15)
    emp = EmpiricalSynergy.observed(cv.g, cv.p, cv.R_emp)
    counts = {int(g): int(10_000 * p / g) + 1 for g, p in zip(cv.g, cv.p)}
    w = fit_synergy(emp, counts, min_count=1, weight="Lg")
    assert abs(w.beta - 1.5) < 1e-3 and w.weight == "Lg"
    r = fit_synergy(emp, model="reduced")
    assert r.model == "reduced" and r.rss >= 0
    with pytest.raises(ValueError):
        fit_synergy(emp, model="cubic")


def test_fit_from_sampled_team_sizes():
    sizes = gen_team_sizes(1.5, 0.2, 1_000_000, seed=2, g_max=30)
    g, L = np.unique(sizes, return_counts=True)
    dist = GroupSizeDistribution(g, L, n_authors=len(sizes))
    f = fit_distribution(dist, min_count=100)
    assert abs(f.beta / 1.5 - 1) < 0.05 and abs(f.gamma / 0.2 - 1) < 0.05


def test_two_plants_give_distinct_fits():
    _, a = fit_curve(2.54, 0.58)
    _, b = fit_curve(0.0, 0.77)
    assert a.optimum.interior and not b.optimum.interior
    assert a.beta > b.beta + 2


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, 6.0), st.floats(0.02, 1.5), st.floats(0.2, 3.0))
def test_stationary_point_is_grid_argmax(beta, gamma, alpha):
    class P:
        pass

    fit = P()
    fit.alpha, fit.beta, fit.gamma = alpha, beta, gamma
    opt = optimal_group_size(fit)
    step = 1e-3
    grid = np.arange(1.0, max(40.0, 3 * beta / gamma), step)
    peak = grid[np.argmax(model_R(grid, alpha, beta, gamma))]
    if beta / gamma > 1 + step:
        assert opt.interior and abs(peak - opt.g_star) <= step
    elif beta / gamma <= 1:
        assert not opt.interior and peak == 1.0


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(1e-6, 1.0), min_size=1, max_size=30))
def test_equilibrium_residual_property(w):
    p = np.array(w) / np.sum(w)
    emp = empirical_synergy((np.arange(1, len(p) + 1), p))
    assert abs(emp.residual) <= 1e-10


def test_planted_pg_limits():
    pg = planted_pg(1.0, 40.0)
    assert pg[1] > 1 - 1e-12
    with pytest.raises(ValueError):
        planted_pg(1.0, 0.0)
