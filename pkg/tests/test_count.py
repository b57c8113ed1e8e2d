import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial import Delaunay

from conjloc import acceptance, count
from conjloc.count import CountField, Level, count_at, count_field, rasterize, topology
from conjloc.errors import ConfigError


@pytest.fixture(scope="module")
def L():
    return acceptance.locus_at(*acceptance.BASE)


@pytest.fixture(scope="module")
def cf():
    return acceptance.count_fixture()


def _tiling(points, M):
    box = np.array([[-1.0, -1.0], [M, -1.0], [M, M], [-1.0, M]])
    pts = np.vstack([box, points])
    return pts[Delaunay(pts).simplices]


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.booleans())
def test_shared_edges_cover_each_cell_once(seed, integer):
    M = 24
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-0.5, M - 0.5, size=(60, 2))
    if integer:
        # vertices and edges through cell centres exercise the tie rule
        pts = np.unique(np.rint(pts), axis=0)
    assert np.all(rasterize(_tiling(pts, M), M) == 1)


def test_lattice_tiling_covers_each_cell_once():
    M = 10
    g = np.stack(np.meshgrid(np.arange(-1.0, M + 1), np.arange(-1.0, M + 1)), -1).reshape(-1, 2)
    tri = g[Delaunay(g).simplices]
    assert np.all(rasterize(tri, M) == 1)


def test_large_triangles_use_unbucketed_path():
    M = 200
    tri = np.array([[[-1.0, -1.0], [M, -1.0], [M, M]], [[-1.0, -1.0], [M, M], [-1.0, M]]])
    assert np.all(rasterize(tri, M) == 1)


def test_orientation_and_degenerate_triangles():
    tri = np.array([[[0.0, 0.0], [3.0, 0.0], [0.0, 3.0]], [[0.0, 0.0], [0.0, 3.0], [3.0, 0.0]],
                    [[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]])
    m = rasterize(tri, 5)
    assert m[1, 1] == 2
    assert m.max() == 2


def test_topology_examples():
    disc = np.zeros((20, 20), dtype=bool)
    disc[5:15, 5:15] = True
    assert topology(disc) == (1, 0, 1)
    ring = disc.copy()
    ring[8:12, 8:12] = False
    assert topology(ring) == (1, 1, 0)
    two = np.zeros((20, 20), dtype=bool)
    two[2:6, 2:6] = True
    two[10:16, 10:16] = True
    assert topology(two) == (2, 0, 2)
    # diagonal contact joins components but does not close a hole
    diag = np.zeros((6, 6), dtype=bool)
    diag[1, 1] = diag[2, 2] = True
    assert topology(diag) == (1, 0, 1)


def _synthetic(levels):
    z = np.zeros((2, 2))
    return CountField(2, z[0], z[0], z.astype(int), z.astype(bool), z.astype(int), levels)


def test_hole_needs_disc_above_synthetic():
    annulus_then_disc = [Level(1, 1, 0, 1), Level(2, 1, 1, 0), Level(3, 1, 0, 1)]
    assert count.holes_have_discs_above(_synthetic(annulus_then_disc))
    annulus_on_top = [Level(1, 1, 0, 1), Level(2, 1, 1, 0)]
    assert not count.holes_have_discs_above(_synthetic(annulus_on_top))
    assert _synthetic(annulus_then_disc).i_mc == 1


def test_field_levels(cf, L):
    assert cf.values == [1, 2]
    assert cf.outer_counts() == [1]
    assert [lv.chi for lv in cf.levels] == [1, 1]
    assert cf.i_mc == L.i == 1
    assert count.holes_have_discs_above(cf)
    assert np.all(cf.closure >= 1)


def test_field_matches_winding_number(cf, L):
    w = count.winding_counts(cf, L)
    keep = ~cf.excluded
    assert np.all(cf.m[keep] == 1 + w[keep])


def test_direct_count_matches_field(cf, L):
    S = L.surface
    rng = np.random.default_rng(7)
    ok = np.argwhere(~cf.excluded)
    picks = [ok[k] for k in rng.choice(len(ok), 2, replace=False)]
    picks.append(np.argwhere((cf.m == 2) & ~cf.excluded)[0])
    for iy, ix in picks:
        o = L.projection.lift(S, np.array([cf.x[ix], cf.y[iy]]))
        assert count_at(S, L.frame, L, o) == cf.m[iy, ix]


def test_count_at_rejects_base_point(L):
    with pytest.raises(ValueError):
        count_at(L.surface, L.frame, L, L.frame.p)


def test_count_field_rejects_tiny_grid(L):
    with pytest.raises(ConfigError):
        count_field(L.surface, L.frame, L, 8)


def test_count_jumps_by_one_across_arcs(cf, L):
    obs = count.crossing_jumps(cf, L)
    assert len(obs["arcs"]) == L.n
    for jumps in obs["arcs"]:
        assert jumps and all(abs(d) == 1 for d in jumps)
    # both sides of each arc agree on direction: the inside of the locus holds more segments
    assert len({d for jumps in obs["arcs"] for d in jumps}) == 1
    assert all(set(v) <= {1, 2} and 1 in v for v in obs["cusps"])
