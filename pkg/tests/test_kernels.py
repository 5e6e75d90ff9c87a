import numpy as np
import pytest

from rggfpp import kernels
from rggfpp.fpp import PassageSpec, assign_passage_times
from rggfpp.geograph import CellGrid, _component_offsets, _neighbor_offsets, build_rgg
from rggfpp.point_process import Box, sample_ppp

cy = pytest.importorskip("rggfpp._ckernels")
py = kernels.backend("python")


@pytest.fixture(params=[(2, 0), (2, 1), (3, 2)])
def sample(request):
    d, seed = request.param
    return sample_ppp(1.0, Box(d, 10.0), seed), 1.0


def _grid(ps, side):
    return CellGrid.build(ps.points, ps.box.lower, 2 * ps.box.L, side)


def _pairs(mod, ps, r):
    g = _grid(ps, r)
    I, J = mod.grid_pairs(g.points, g.cells, g.cell_start, g.shape, _neighbor_offsets(ps.d), r)
    return sorted(zip(np.minimum(I, J).tolist(), np.maximum(I, J).tolist()))


def test_grid_pairs_agree(sample):
    ps, r = sample
    assert _pairs(cy, ps, r) == _pairs(py, ps, r)


def test_grid_components_agree(sample):
    ps, r = sample
    g = _grid(ps, r / np.sqrt(ps.d) * (1 - 1e-9))
    args = (g.points, g.cells, g.cell_start, g.shape, _component_offsets(ps.d), r)
    a, b = np.asarray(cy.grid_components(*args)), np.asarray(py.grid_components(*args))
    assert np.array_equal(a, b)


def test_dijkstra_and_saw_agree(sample):
    ps, r = sample
    g = build_rgg(ps, r)
    w = assign_passage_times(g, PassageSpec.exponential(), 3)[g.edge_of]
    empty = np.empty(0, dtype=np.int64)
    for src in (0, len(ps) // 2):
        T1 = np.asarray(cy.dijkstra(g.indptr, g.indices, w, src, empty, np.inf))
        T2 = np.asarray(py.dijkstra(g.indptr, g.indices, w, src, empty, np.inf))
        assert np.array_equal(T1, T2)
        for n in range(4):
            assert cy.count_saw(g.indptr, g.indices, src, n) == py.count_saw(g.indptr, g.indices, src, n)


def test_dijkstra_cutoff_agrees(sample):
    ps, r = sample
    g = build_rgg(ps, r)
    w = assign_passage_times(g, PassageSpec.uniform(0.5, 1.5), 9)[g.edge_of]
    empty = np.empty(0, dtype=np.int64)
    T1 = np.asarray(cy.dijkstra(g.indptr, g.indices, w, 0, empty, 2.0))
    T2 = np.asarray(py.dijkstra(g.indptr, g.indices, w, 0, empty, 2.0))
    settled = T1 <= 2.0
    assert np.array_equal(settled, T2 <= 2.0)
    assert np.array_equal(T1[settled], T2[settled])


def test_backend_selector():
    assert kernels.BACKEND in ("cython", "python")
    with pytest.raises(ValueError):
        kernels.backend("fortran")
