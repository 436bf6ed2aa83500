import json

import numpy as np
import pytest

from sgcombi.combination import (
    ComponentSolveError,
    SolverHandle,
    combination_terms,
    combine,
    evaluate,
    full_grid_reference,
    surplus_at,
    surplus_grids,
    surplus_norm,
    surplus_sum,
)
from sgcombi.grid import GridFunction, enumerate_index_set, enumerate_level_set
from sgcombi.interp import interp_eval
from sgcombi.problems import constant_poisson, gaussian_poisson
from sgcombi.solvers import SolverConfig


def smooth(x):
    out = 1.0
    for k, xk in enumerate(x):
        out = out * np.exp(np.sin(2.0 * np.asarray(xk) + 0.3 * k))
    return out


def test_terms_d1():
    assert combination_terms(1, 5) == [(1, (5,))]


def test_terms_d2_n2():
    terms = combination_terms(2, 2)
    plus = {lv for c, lv in terms if c == 1}
    minus = {lv for c, lv in terms if c == -1}
    assert plus == {(2, 0), (1, 1), (0, 2)}
    assert minus == {(1, 0), (0, 1)}
    assert [lv for _, lv in terms] == sorted(lv for _, lv in terms)


def test_terms_d3_n4():
    terms = combination_terms(3, 4)
    counts = {c: sum(1 for cc, _ in terms if cc == c) for c in (1, -2)}
    assert len(terms) == 31
    assert counts[-2] == 10
    assert sum(1 for c, lv in terms if c == 1 and sum(lv) == 4) == 15
    assert sum(1 for c, lv in terms if c == 1 and sum(lv) == 2) == 6


def test_terms_d2_n6():
    terms = combination_terms(2, 6)
    assert len(terms) == 13
    assert sum(c > 0 for c, _ in terms) == 7


def test_truncated_level():
    # d = 3, n = 1: S(1) - 2 S(0)
    terms = combination_terms(3, 1)
    assert sorted(terms) == sorted([(1, (0, 0, 1)), (1, (0, 1, 0)), (1, (1, 0, 0)), (-2, (0, 0, 0))])
    cs = combine(SolverHandle.from_function(smooth, 3), 3, 1)
    assert cs.truncated


@pytest.mark.parametrize("d", range(1, 7))
def test_constant_consistency(d):
    handle = SolverHandle.from_function(lambda x: 3.25, d)
    x = [0.3] * d
    for n in range(0, 11 if d <= 4 else 7):
        assert evaluate(combine(handle, d, n), x) == 3.25


def test_constant_poisson_consistency():
    handle = SolverHandle(constant_poisson(3, 2.0))
    for n in range(6):
        assert evaluate(combine(handle, 3, n), (0.4, 0.6, 0.2)) == pytest.approx(2.0, abs=1e-12)


@pytest.mark.parametrize("n", range(0, 11))
def test_d1_bit_exact(n):
    handle = SolverHandle(gaussian_poisson(1))
    cs = combine(handle, 1, n)
    full = full_grid_reference(handle, n, 1)
    assert len(cs.terms) == 1
    for x in np.linspace(0, 1, 13):
        assert evaluate(cs, (x,)) == interp_eval(full, (x,))


def test_surplus_grids():
    assert sorted(surplus_grids((1, 1))) == sorted([(1, (1, 1)), (-1, (0, 1)), (-1, (1, 0)), (1, (0, 0))])
    assert surplus_grids((0, 0)) == [(1, (0, 0))]
    assert sorted(surplus_grids((0, 2))) == sorted([(1, (0, 2)), (-1, (0, 1))])


def test_surplus_at_example():
    handle = SolverHandle.from_function(smooth, 2)
    x = (0.3, 0.7)
    expected = sum(s * interp_eval(handle(lv), x) for s, lv in [(1, (1, 1)), (-1, (1, 0)), (-1, (0, 1)), (1, (0, 0))])
    assert surplus_at(handle, (1, 1), x) == pytest.approx(expected, abs=1e-15)
    assert surplus_at(handle, (0, 0), x) == interp_eval(handle((0, 0)), x)


@pytest.mark.parametrize("d,n_max", [(1, 6), (2, 6), (3, 5)])
def test_telescoping(d, n_max):
    handle = SolverHandle.from_function(smooth, d)
    rng = np.random.default_rng(d)
    x = tuple(rng.uniform(0, 1, d))
    for n in range(n_max + 1):
        comb = evaluate(combine(handle, d, n), x)
        assert surplus_sum(handle, d, n, x) == pytest.approx(comb, rel=1e-12, abs=1e-14)


def test_telescoping_pde():
    handle = SolverHandle(gaussian_poisson(2))
    x = (0.5, 0.5)
    for n in range(6):
        assert surplus_sum(handle, 2, n, x) == pytest.approx(evaluate(combine(handle, 2, n), x), rel=1e-12)


def test_order_independence():
    handle = SolverHandle(gaussian_poisson(3))
    cs = combine(handle, 3, 6)
    x = (0.5, 0.5, 0.5)
    a, b = evaluate(cs, x), evaluate(cs, x, reverse=True)
    assert abs(a - b) <= 1e-13 * abs(a)


def test_cache_and_determinism():
    handle = SolverHandle(gaussian_poisson(2))
    first = handle((3, 2))
    assert handle((3, 2)) is first
    other = SolverHandle(gaussian_poisson(2))((3, 2))
    np.testing.assert_array_equal(first.values, other.values)


def test_parallel_matches_serial():
    prob = gaussian_poisson(2)
    serial = combine(SolverHandle(prob), 2, 5)
    parallel = combine(SolverHandle(prob, workers=2), 2, 5)
    for (c1, g1), (c2, g2) in zip(serial.terms, parallel.terms):
        assert c1 == c2 and g1.levels == g2.levels
        np.testing.assert_array_equal(g1.values, g2.values)
    x = (0.5, 0.5)
    assert evaluate(serial, x) == evaluate(parallel, x)


def test_component_failure_names_grid():
    handle = SolverHandle(gaussian_poisson(2), SolverConfig(node_cap=100))
    with pytest.raises(ComponentSolveError) as info:
        combine(handle, 2, 8)
    assert info.value.levels in {lv for _, lv in combination_terms(2, 8)}


def test_negative_level():
    with pytest.raises(ValueError):
        combine(SolverHandle.from_function(smooth, 2), 2, -1)


def test_export(tmp_path):
    cs = combine(SolverHandle(gaussian_poisson(2)), 2, 3)
    manifest = cs.export(tmp_path / "out")
    data = json.loads(manifest.read_text())
    assert data["level"] == 3 and data["dim"] == 2 and not data["truncated"]
    assert [t["coefficient"] for t in data["terms"]] == [c for c, _ in cs.terms]
    for entry, (_, gf) in zip(data["terms"], cs.terms):
        back = GridFunction.load(tmp_path / "out" / entry["path"])
        assert list(back.levels) == entry["levels"]
        np.testing.assert_array_equal(back.values, gf.values)


def test_dof():
    cs = combine(SolverHandle.from_function(smooth, 2), 2, 2)
    # +{(0,2),(1,1),(2,0)}, -{(0,1),(1,0)}: 10 + 9 + 10 + 6 + 6 nodes
    assert cs.dof == 41
    assert cs.dof == sum(gf.grid.n_nodes for _, gf in cs.terms)


def test_surplus_decay_sampled():
    handle = SolverHandle.from_function(smooth, 2)
    probes = np.random.default_rng(0).uniform(0, 1, (200, 2))
    levels = list(range(2, 10))
    norms = [max(surplus_norm(handle, lv, probes) for lv in enumerate_level_set(2, l)) for l in levels]
    slope = np.polyfit(levels, np.log2(norms), 1)[0]
    assert -slope == pytest.approx(2.0, abs=0.3)


def test_index_set_sum_of_surpluses_is_sparse_solution():
    handle = SolverHandle.from_function(smooth, 2)
    x = (0.1, 0.9)
    total = sum(surplus_at(handle, i, x) for i in enumerate_index_set(2, 4))
    assert total == pytest.approx(evaluate(combine(handle, 2, 4), x), rel=1e-12)


def test_values_at_matches_combine():
    prob = gaussian_poisson(3)
    x = (0.5, 0.3, 0.7)
    plan = combination_terms(3, 5)
    streamed = SolverHandle(prob)
    vals = streamed.values_at([lv for _, lv in plan], x)
    assert streamed.cached() == []
    total = 0.0
    for c, lv in plan:
        total += c * vals[lv]
    assert total == evaluate(combine(SolverHandle(prob), 3, 5), x)
    parallel = SolverHandle(prob, workers=2).values_at([lv for _, lv in plan], x)
    assert parallel == vals
