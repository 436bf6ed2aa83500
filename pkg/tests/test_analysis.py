import math
import warnings

import numpy as np
import pytest

from sgcombi import analysis as an
from sgcombi.analysis import BoundParams, ConvergenceRecord
from sgcombi.combination import SolverHandle
from sgcombi.problems import gaussian_poisson, quadratic_poisson


def _records(errors, start=1):
    return [ConvergenceRecord(n, e, 10 * 2**n) for n, e in enumerate(errors, start)]


def test_rates_examples():
    assert an.convergence_rates([1.0, 0.25, 0.0625]) == [2.0, 2.0]
    assert an.convergence_rates([1.0, 0.5]) == [1.0]
    assert an.convergence_rates([0.3, 0.3]) == [0.0]


def test_rates_undefined():
    rates = an.convergence_rates([1.0, 0.0, 0.5])
    assert all(math.isnan(r) for r in rates)
    with pytest.raises(ValueError):
        an.convergence_rates([1.0])


def test_rates_geometric():
    for p in (1, 2, 3):
        errs = [2.0 ** (-p * n) for n in range(10)]
        assert an.convergence_rates(errs) == [float(p)] * 9


def test_surplus_ratios():
    recs = [ConvergenceRecord(n, abs(s), 1, signed=s) for n, s in enumerate([4.0, 2.0, -1.0, 0.0])]
    r = an.surplus_ratios(recs)
    assert r[:2] == [2.0, -2.0]
    assert math.isnan(r[2])


def test_fit_recovers_model():
    p, q, r = 2.0, 1.0, 3.0
    ns = np.arange(2, 14)
    recs = [ConvergenceRecord(int(n), 2.0 ** (-r + q * math.log2(n) - p * n), 2**n) for n in ns]
    fit = an.fit_asymptote(recs)
    assert fit.p == pytest.approx(p, abs=1e-10)
    assert fit.q == pytest.approx(q, abs=1e-10)
    assert fit.r == pytest.approx(r, abs=1e-10)
    assert fit.residual_norm < 1e-10
    assert fit.count == len(ns)


def test_fit_by_dof():
    p, q, r = 1.5, 2.0, -1.0
    recs = []
    for n in range(2, 12):
        x = math.log2(3.0 * 2**n)
        recs.append(ConvergenceRecord(n, 2.0 ** (-r + q * math.log2(x) - p * x), 3 * 2**n))
    fit = an.fit_asymptote(recs, "by_dof")
    assert (fit.p, fit.q, fit.r) == pytest.approx((p, q, r), abs=1e-9)


def test_fit_skips_level_zero():
    recs = _records([0.5, 0.1, 0.02, 0.004], start=0)
    with pytest.warns(UserWarning):
        fit = an.fit_asymptote(recs)
    assert fit.count == 3


def test_fit_errors():
    with pytest.raises(an.FitError):
        an.fit_asymptote(_records([1.0, 0.5]))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(an.FitError):
            an.fit_asymptote(_records([1.0, 0.0, 0.0, 0.1]))
    with pytest.raises(ValueError):
        an.fit_asymptote(_records([1.0, 0.5, 0.2]), "by_time")


def test_model_curve():
    fit = an.FitResult(p=2.0, q=1.0, r=3.0, residual_norm=0.0)
    np.testing.assert_allclose(an.model_curve(fit, [1, 2, 4]), [-5.0, -6.0, -9.0])


def test_theoretical_bound():
    assert an.theoretical_bound(BoundParams(1.0, 1), 3) == 0.03125
    assert an.theoretical_bound(BoundParams(1.0, 2), 5) == pytest.approx(35 / 1024, rel=1e-12)
    assert an.theoretical_bound(BoundParams(0.0, 3), 4) == 0.0
    for n in range(12):
        assert an.theoretical_bound(BoundParams(1.5, 1), n) == 2 * 1.5 * 4.0**-n


def test_sharper_bound():
    assert an.sharper_bound(BoundParams(1.0, 2), 5) == pytest.approx(35 / 1024, rel=1e-12)
    assert an.sharper_bound(BoundParams(0.0, 3), 5) == 0.0
    with pytest.raises(ValueError):
        an.sharper_bound(BoundParams(1.0, 1), 5)


def test_bound_binomial_estimates():
    # both bounds rest on an upper estimate of C(l + k, k), l = n + d - 1, k = d - 1
    for d in range(2, 12):
        k = d - 1
        for n in range(0, 30):
            l = n + d - 1
            exact = math.comb(l + k, k)
            assert exact <= (l + k) ** k / math.factorial(k)
            assert exact < (1 + l * (1 + math.log(k)) / k) ** k * (1 + 1e-12)


def test_sharper_bound_ordering():
    # as printed, the corollary's bound only undercuts the theorem's at n = 0 (d >= 3);
    # for n >= 2 the mean-value estimate of the binomial is the looser one
    for d in range(3, 9):
        bp = BoundParams(1.0, d)
        assert an.sharper_bound(bp, 0) < an.theoretical_bound(bp, 0)
        for n in range(2, 11):
            assert an.sharper_bound(bp, n) > an.theoretical_bound(bp, n)


def test_leading_term():
    assert an.leading_term(BoundParams(1.0, 2, v_bar=1.0), 10) == pytest.approx(0.75 * 10 * 4.0**-10, rel=1e-12)
    assert an.leading_term(BoundParams(1.0, 2, v_bar=1.0), 10) == pytest.approx(7.1526e-6, rel=1e-4)
    assert an.leading_term(BoundParams(1.0, 3, p=1, v_bar=1.0), 8) == pytest.approx(0.03125, rel=1e-12)
    assert an.leading_term(BoundParams(1.0, 1, v_bar=2.0), 3) == 2.0 * 4.0**-3
    with pytest.raises(ValueError):
        an.leading_term(BoundParams(1.0, 2), 3)
    with pytest.raises(ValueError):
        an.leading_term(BoundParams(1.0, 2, v_bar=1.0), 0)


def test_bound_params_validation():
    with pytest.raises(ValueError):
        BoundParams(-1.0, 2)
    with pytest.raises(ValueError):
        BoundParams(1.0, 0)


def test_model_bounds():
    assert an.model_bound("advection", 2, 1.0, 10) == pytest.approx(2 * 2 * (9 / 16) * 12 * 2.0**-10, rel=1e-14)
    b, lead = an.model_bound_constants("poisson", 1, 1.0)
    assert b == 121000.0 * 2.5 and lead == 121000.0 / 64
    values = [an.model_bound("poisson", d, 1.0, 6) for d in range(1, 9)]
    assert all(a < b for a, b in zip(values, values[1:]))
    alt = an.model_bound("poisson", 2, 1.0, 6, c=an.POISSON_EXPANSION_C)
    assert alt > an.model_bound("poisson", 2, 1.0, 6)
    with pytest.raises(ValueError):
        an.model_bound_constants("heat", 2, 1.0)


def test_pointwise_quadratic_exact():
    prob = quadratic_poisson(2)
    recs = an.pointwise_errors(SolverHandle(prob), prob.exact, (0.5, 0.5), range(1, 6))
    assert all(r.error < 1e-9 for r in recs)
    assert [r.n for r in recs] == [1, 2, 3, 4, 5]


def test_pointwise_d1_quarter():
    prob = gaussian_poisson(1)
    recs = an.pointwise_errors(SolverHandle(prob), prob.exact, (0.5,), range(3, 10))
    rates = an.convergence_rates(recs)
    assert rates[-1] == pytest.approx(2.0, abs=0.05)


def test_pointwise_d2_monotone():
    prob = gaussian_poisson(2)
    recs = an.pointwise_errors(SolverHandle(prob), prob.exact, (0.5, 0.5), [7, 8])
    assert recs[1].error < recs[0].error


def test_surplus_errors_exact_problem():
    prob = quadratic_poisson(2)
    recs = an.surplus_errors(SolverHandle(prob), (0.5, 0.5), range(1, 5))
    assert all(r.error < 1e-9 for r in recs)
    with pytest.raises(ValueError):
        an.surplus_errors(SolverHandle(prob), (0.5, 0.5), [3])


def test_surplus_record_dof_is_next_level():
    prob = gaussian_poisson(2)
    handle = SolverHandle(prob)
    recs = an.surplus_errors(handle, (0.5, 0.5), [3, 4])
    point = an.pointwise_errors(handle, prob.exact, (0.5, 0.5), [3, 4, 5])
    assert [r.dof for r in recs] == [point[1].dof, point[2].dof]
    assert recs[0].signed == point[1].value - point[0].value
    assert recs[1].error == abs(point[2].value - point[1].value)


def test_normalized_errors():
    recs = [ConvergenceRecord(n, n * 4.0**-n, 1) for n in range(1, 6)]
    assert an.normalized_errors(recs, 2) == [1.0] * 5
