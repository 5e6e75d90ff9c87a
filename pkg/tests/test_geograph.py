import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import (
    components_by_bfs,
    count_paths,
    floyd_warshall,
    nearest_by_scan,
    pairwise_edges,
    same_partition,
)
from rggfpp.errors import GuardError, ParameterError, SubcriticalError
from rggfpp.geograph import (
    Geograph,
    build_rgg,
    brute_force_edges,
    count_self_avoiding_paths,
    estimate_stretch_factor,
    estimate_theta,
    giant_misses_ball,
    graph_distance,
    grid_component_labels,
    hop_distances,
    nearest_giant_vertex,
    rgg_edges,
    unit_directions,
)
from rggfpp.point_process import Box, PointSet, derive_seed, sample_ppp


def _ps(points, L=10.0):
    pts = np.asarray(points, dtype=float)
    return PointSet(pts, Box(pts.shape[1], L), 1.0)


@given(st.integers(0, 2**32), st.floats(0.3, 2.0), st.sampled_from([2, 3]))
def test_edges_match_pairwise_scan(seed, r, d):
    ps = sample_ppp(1.0, Box(d, 4.0), seed)
    edges = rgg_edges(ps, r)
    assert {tuple(e) for e in edges.tolist()} == pairwise_edges(ps.points.tolist(), r)


def test_edges_are_canonical():
    ps = sample_ppp(2.0, Box(2, 20.0), 3)
    g = build_rgg(ps, 1.5)
    e = g.edges
    assert np.all(e[:, 0] < e[:, 1])
    keys = e[:, 0] * len(ps) + e[:, 1]
    assert np.all(np.diff(keys) > 0)
    assert np.array_equal(e, brute_force_edges(ps.points, 1.5))


def test_strict_boundary_excludes_distance_r():
    g = build_rgg(_ps([[0.0, 0.0], [1.0, 0.0], [0.0, 0.999]], L=20.0), 1.0)
    assert g.edges.tolist() == [[0, 2]]


def test_isolated_point_has_no_edges():
    g = build_rgg(_ps([[0.0, 0.0]], L=20.0), 1.0)
    assert len(g.edges) == 0 and g.giant_fraction == 1.0


def test_radius_warning_and_errors():
    ps = sample_ppp(1.0, Box(2, 5.0), 0)
    with pytest.warns(UserWarning):
        build_rgg(ps, 1.0)
    for r in (0.0, -1.0, math.inf):
        with pytest.raises(ParameterError):
            build_rgg(ps, r)


@given(st.integers(0, 2**32))
def test_components_match_bfs(seed):
    ps = sample_ppp(1.0, Box(2, 8.0), seed)
    g = build_rgg(ps, 0.8)
    oracle = components_by_bfs(len(ps), g.edges.tolist())
    assert same_partition(g.labels.tolist(), oracle)
    assert same_partition(grid_component_labels(ps, 0.8).tolist(), oracle)


def test_grid_labels_without_edges_large():
    ps = sample_ppp(1.0, Box(3, 12.0), 21)
    g = build_rgg(ps, 1.1)
    labels = grid_component_labels(ps, 1.1)
    assert same_partition(labels.tolist(), g.labels.tolist())
    # labels are the smallest vertex in each component
    for lab in np.unique(labels)[:50]:
        assert lab == np.flatnonzero(labels == lab).min()


def test_giant_tie_goes_to_smallest_vertex():
    # two components of equal size: {0, 2} and {1, 3}
    g = build_rgg(_ps([[0, 0], [5, 5], [0.5, 0], [5.5, 5]], L=100.0), 1.0)
    assert set(g.giant_vertices.tolist()) == {0, 2}


def test_hop_distances_match_floyd_warshall():
    ps = sample_ppp(1.0, Box(2, 5.0), 8)
    g = build_rgg(ps, 0.5)
    D = floyd_warshall(len(ps), g.edges.tolist())
    for s in range(0, len(ps), 7):
        assert np.array_equal(hop_distances(g, s), D[s])


def test_graph_distance_examples():
    g = build_rgg(_ps([[0, 0], [0.9, 0], [1.8, 0], [9, 9]], L=100.0), 1.0)
    assert graph_distance(g, 0, 2) == 2
    assert graph_distance(g, 1, 1) == 0
    assert graph_distance(g, 0, 3) is None
    with pytest.raises(ParameterError):
        graph_distance(g, 0, 4)


@given(st.integers(0, 2**32))
def test_nearest_giant_vertex_matches_scan(seed):
    ps = sample_ppp(2.0, Box(2, 6.0), seed)
    g = build_rgg(ps, 0.6)
    rng = np.random.default_rng(seed)
    X = rng.uniform(-6, 6, size=(20, 2))
    got = nearest_giant_vertex(g, X)
    for x, q in zip(X, got):
        assert q == nearest_by_scan(ps.points, g.giant_vertices, x)


def test_nearest_giant_vertex_lexicographic_tie():
    pts = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 0.6], [0.0, -0.6]])
    g = Geograph.from_edges(_ps(pts, L=100.0), 1.0, [[0, 2], [1, 2], [0, 3], [1, 3]])
    assert nearest_giant_vertex(g, [0.0, 0.0]) in (2, 3)
    assert nearest_giant_vertex(g, [0.0, 0.0]) == 3  # (0, -0.6) < (0, 0.6)
    assert nearest_giant_vertex(g, [0.0, 5.0]) == 2
    q = nearest_giant_vertex(g, [[0.0, 0.0], [0.0, 0.0]])
    assert q.tolist() == [3, 3]


def test_empty_giant_raises():
    g = Geograph.from_edges(_ps(np.empty((0, 2)), L=10.0), 1.0, np.empty((0, 2)))
    with pytest.raises(SubcriticalError):
        nearest_giant_vertex(g, [0.0, 0.0])


def test_saw_triangle_and_path_counts():
    g = Geograph.from_edges(_ps([[0, 0], [0.5, 0], [0.25, 0.4]], L=100.0), 1.0, [[0, 1], [1, 2], [0, 2]])
    assert count_self_avoiding_paths(g, 0, 2) == 2
    assert count_self_avoiding_paths(g, 0, 3) == 0
    assert count_self_avoiding_paths(g, 0, 0) == 1
    ps = sample_ppp(3.0, Box(2, 3.0), 4)
    g = build_rgg(ps, 0.3)
    for n in range(5):
        assert count_self_avoiding_paths(g, 0, n) == count_paths(len(ps), g.edges.tolist(), 0, n)


def test_saw_guard_and_errors():
    g = Geograph.from_edges(_ps([[0, 0], [0.5, 0]], L=100.0), 1.0, [[0, 1]])
    with pytest.raises(GuardError):
        count_self_avoiding_paths(g, 0, 7)
    with pytest.raises(ParameterError):
        count_self_avoiding_paths(g, 5, 1)
    with pytest.raises(ParameterError):
        count_self_avoiding_paths(g, 0, -1)


def test_theta_estimators_agree_supercritical():
    ps = sample_ppp(1.0, Box(2, 40.0), derive_seed(2, "theta"))
    g = build_rgg(ps, 2.0)
    est = estimate_theta(g)
    assert 0.9 < est.vertex_fraction <= 1.0
    assert 0.9 < est.ball_hit <= 1.0
    assert est.ball_hit_halfwidth >= 0


def test_giant_misses_ball():
    g = Geograph.from_edges(_ps([[0, 0], [0.5, 0]], L=100.0), 1.0, [[0, 1]])
    assert giant_misses_ball(g, [5.0, 0.0], 1.0)
    assert not giant_misses_ball(g, [0.2, 0.0], 1.0)


def test_stretch_factor_at_least_one_over_r():
    ps = sample_ppp(1.0, Box(2, 40.0), derive_seed(2, "stretch"))
    g = build_rgg(ps, 2.0)
    est = estimate_stretch_factor(g, unit_directions(2, 8), [10.0, 20.0, 30.0])
    assert est.bound_ok
    assert est.rho >= 1 / 2.0
    with pytest.raises(ParameterError):
        estimate_stretch_factor(g, unit_directions(2, 8), [20.0, 10.0])


def test_unit_directions():
    for d in (2, 3):
        u = unit_directions(d, 16)
        assert np.allclose(np.linalg.norm(u, axis=1), 1)
    with pytest.raises(ParameterError):
        unit_directions(4, 3)


def test_graph_ndjson(tmp_path):
    g = build_rgg(_ps([[0, 0], [0.5, 0], [9, 9]], L=100.0), 1.0)
    lines = g.to_ndjson(tmp_path / "g.ndjson").splitlines()
    assert len(lines) == 4
    assert '"giant": true' in lines[0] and '"giant": false' in lines[2]
