import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dgff.lattice import (Region, Vertex, box_center, build_annulus, build_ball, build_box,
                          neighbors)
from oracles import brute_boundary


@pytest.mark.parametrize("n", [2, 3, 4, 7, 16, 64])
def test_box_counts(n):
    reg = build_box(n)
    assert len(reg.vertices) == (n + 1) ** 2
    assert reg.n_interior == (n - 1) ** 2
    assert reg.n_boundary == 4 * n


def test_box_2_has_single_interior_vertex():
    reg = build_box(2)
    assert reg.interior.tolist() == [[1, 1]]


@pytest.mark.parametrize("n", [0, 1, -3])
def test_box_too_small(n):
    with pytest.raises(ValueError):
        build_box(n)


def test_translation():
    a, b = build_box(6), build_box(6, (10, -4))
    assert np.array_equal(a.interior + [10, -4], b.interior)
    assert np.array_equal(a.boundary + [10, -4], b.boundary)
    assert b.box == (Vertex(10, -4), 6)


def test_neighbor_order():
    assert neighbors((0, 0)) == [(1, 0), (-1, 0), (0, 1), (0, -1)]


def test_ball_radius_8_size():
    # Gauss circle count by direct enumeration
    count = sum(1 for x in range(-8, 9) for y in range(-8, 9) if x * x + y * y <= 64)
    assert count == 197
    ball = build_ball((3, -2), 8)
    assert len(ball.region.vertices) == count


def test_ball_radius_too_small():
    with pytest.raises(ValueError):
        build_ball((0, 0), 1)


def test_ball_boundary_matches_brute_force():
    ball = build_ball((0, 0), 6)
    inside, bnd = brute_boundary(ball.region.vertices.tolist())
    assert {tuple(p) for p in ball.region.interior.tolist()} == inside
    assert {tuple(p) for p in ball.region.boundary.tolist()} == bnd


def test_annulus_boundary_is_both_circles():
    ann = build_annulus((0, 0), 4, 10)
    bnd = {tuple(p) for p in ann.region.boundary.tolist()}
    expect = {tuple(p) for p in ann.inner_ball.region.boundary.tolist()} | \
        {tuple(p) for p in ann.outer_ball.region.boundary.tolist()}
    assert bnd == expect


def test_index_lookup():
    reg = build_box(5, (2, 3))
    assert reg.interior_index((3, 4)) == 0
    assert reg.is_boundary((2, 3)) and not reg.is_interior((2, 3))
    assert not reg.contains((100, 100))
    with pytest.raises(ValueError):
        reg.interior_index((2, 3))
    assert reg.interior_indices([(2, 3), (3, 4)]).tolist() == [-1, 0]


def test_arrays_are_read_only():
    reg = build_box(4)
    with pytest.raises(ValueError):
        reg.interior[0, 0] = 7


def test_int32_range():
    with pytest.raises(ValueError):
        Region([(0, 2**31)])


def test_box_center():
    assert box_center(4) == Vertex(2, 2)
    assert box_center(5, (1, 1)) == Vertex(3, 3)


def test_transition_blocks_rows():
    reg = build_box(5)
    p_int, p_bnd = reg.transition_blocks()
    rows = np.asarray(p_int.sum(axis=1)).ravel() + np.asarray(p_bnd.sum(axis=1)).ravel()
    assert np.allclose(rows, 1.0)
    assert set(np.unique(p_int.data)) <= {0.25}


coords = st.tuples(st.integers(-6, 6), st.integers(-6, 6))


@settings(max_examples=60, deadline=None)
@given(st.lists(coords, min_size=1, max_size=60))
def test_region_partition_invariants(pts):
    reg = Region(pts)
    inside, bnd = brute_boundary(pts)
    assert {tuple(p) for p in reg.interior.tolist()} == inside
    assert {tuple(p) for p in reg.boundary.tolist()} == bnd
    assert reg.n_interior + reg.n_boundary == len(set(pts))
    # every interior vertex has all four neighbours in the region
    for v in reg.interior.tolist():
        assert all(reg.contains(w) for w in neighbors(v))
    # dense indexing is a bijection onto 0..m-1
    assert sorted(reg.interior_indices(reg.interior).tolist()) == list(range(reg.n_interior))
