import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sgcombi.combinatorics import grids_on_level
from sgcombi.grid import (
    CapacityError,
    DataError,
    GridFunction,
    enumerate_index_set,
    enumerate_level_set,
    make_grid,
    node_count,
    sample,
)
from sgcombi.interp import interp_eval

level_vectors = st.lists(st.integers(0, 4), min_size=1, max_size=3).map(tuple)


def test_grid_geometry():
    g = make_grid((1, 1))
    assert g.shape == (3, 3) and g.n_nodes == 9
    assert make_grid((0, 0, 0)).n_nodes == 8
    g = make_grid((3, 0))
    assert g.shape == (9, 2)
    assert g.spacing == (0.125, 1.0)
    np.testing.assert_array_equal(g.axis(0), np.arange(9) / 8)


def test_points_lexicographic():
    pts = make_grid((1, 0)).points()
    np.testing.assert_array_equal(pts, [[0, 0], [0, 1], [0.5, 0], [0.5, 1], [1, 0], [1, 1]])


def test_boundary_mask():
    mask = make_grid((2, 1)).boundary_mask()
    assert mask.sum() == 15 - 3
    assert not mask[1:-1, 1:-1].any()


def test_capacity():
    with pytest.raises(CapacityError):
        make_grid((10, 10), node_cap=1000)
    assert node_count((10, 10)) == 1025**2


def test_bad_levels():
    with pytest.raises(ValueError):
        make_grid((1, -1))
    with pytest.raises(ValueError):
        make_grid(())
    with pytest.raises(ValueError):
        make_grid((0,) * 13)


def test_sample_examples():
    g = make_grid((2, 3))
    assert np.all(sample(g, lambda x: 1.0).values == 1.0)
    np.testing.assert_array_equal(sample(make_grid((1,)), lambda x: x[0]).values, [0, 0.5, 1])
    assert sample(make_grid((1, 1)), lambda x: x[0] * x[1]).values[1, 1] == 0.25


def test_sample_nonfinite():
    with pytest.raises(DataError):
        sample(make_grid((1,)), lambda x: np.where(x[0] > 0.5, np.nan, 1.0))


def test_values_read_only():
    gf = sample(make_grid((1,)), lambda x: x[0])
    with pytest.raises(ValueError):
        gf.values[0] = 3.0


def test_level_sets():
    assert enumerate_level_set(2, 2) == [(0, 2), (1, 1), (2, 0)]
    assert enumerate_level_set(1, 5) == [(5,)]
    assert len(enumerate_level_set(3, 2)) == 6
    assert enumerate_index_set(2, 1) == [(0, 0), (0, 1), (1, 0)]
    assert len(enumerate_index_set(1, 4)) == 5
    assert len(enumerate_index_set(3, 4)) == 35


@pytest.mark.parametrize("d", range(1, 7))
def test_level_set_counts(d):
    for level in range(13):
        vecs = enumerate_level_set(d, level)
        assert len(vecs) == grids_on_level(level, d)
        assert len(set(vecs)) == len(vecs)
        assert vecs == sorted(vecs)
        assert vecs == enumerate_level_set(d, level)


@given(level_vectors, st.data())
def test_node_values_reproduced(levels, data):
    g = make_grid(levels)
    gf = sample(g, lambda x: sum(np.sin(3 * xk + k) for k, xk in enumerate(x)))
    j = tuple(data.draw(st.integers(0, n - 1)) for n in g.shape)
    x = [j[k] * g.spacing[k] for k in range(g.dim)]
    assert interp_eval(gf, x) == gf.values[j]


@given(level_vectors)
def test_save_load_roundtrip(tmp_path_factory, levels):
    path = tmp_path_factory.mktemp("gf") / "g.txt"
    gf = sample(make_grid(levels), lambda x: np.exp(sum(x)) / 3.0)
    gf.save(path)
    back = GridFunction.load(path)
    assert back.levels == gf.levels
    np.testing.assert_array_equal(back.values, gf.values)


def test_load_rejects_bad_file(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("2\n1 1\n1.0\n2.0\n")
    with pytest.raises(DataError):
        GridFunction.load(path)
