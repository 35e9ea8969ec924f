import numpy as np
import pytest

import oracles as O
from kpzlab.bm_core import KpzParams, PathGrid, SeedSpec, sample_path
from kpzlab.errors import ParameterDomainError
from kpzlab.peanomap import EdgeKind, build_mated_crt, cell_minima, degree_stats


def P(l, r):
    return PathGrid(1.0, np.asarray(l, float), np.asarray(r, float))


def labelled(g):
    return {(i, j): EdgeKind(k).label for (i, j), k in zip(g.edges.tolist(), g.kinds.tolist())}


def check_invariants(g):
    e = g.edges
    assert np.all(e[:, 0] < e[:, 1])
    assert len(g.edge_set()) == len(g)
    cons = {(i, i + 1) for i in range(g.n_cells - 1)}
    assert cons <= g.edge_set()
    lab = labelled(g)
    assert all(lab[c] == "consecutive" for c in cons)
    assert g.is_connected()


def test_two_cells():
    g = build_mated_crt(P([0, 1, -1], [0, 2, 1]), 1)
    assert g.edges.tolist() == [[0, 1]] and labelled(g) == {(0, 1): "consecutive"}


def test_decreasing_staircase_has_no_lower_edges():
    r = [8, 7, 6, 5, 4, 3, 2, 1, 0]
    l = [0, 2, 1, 3, 0, 4, 2, 1, 5]
    g = build_mated_crt(P(l, r), 2)
    assert g.n_cells == 4
    assert EdgeKind.LOWER_TREE not in g.kinds.tolist()
    assert labelled(g) == O.mated_crt_edges(l, r, 2)


def test_matches_oracle_small():
    rng = np.random.default_rng(50)
    for trial in range(120):
        k = int(rng.integers(1, 4))
        nc = int(rng.integers(1, 65))
        l, r = O.walk(rng, nc * k, lattice=trial % 2 == 0)
        g = build_mated_crt(P(l, r), k)
        assert labelled(g) == O.mated_crt_edges(l, r, k)
        check_invariants(g)


def test_both_flag():
    rng = np.random.default_rng(51)
    l, r = O.walk(rng, 64, lattice=True)
    g = build_mated_crt(P(l, r), 1)
    ml, mr = cell_minima(l, 1), cell_minima(r, 1)
    for (i, j), kind, both in zip(g.edges.tolist(), g.kinds.tolist(), g.both.tolist()):
        if kind == EdgeKind.CONSECUTIVE:
            assert not both
            continue
        lower = max(mr[i], mr[j]) <= mr[i + 1:j].min()
        upper = max(ml[i], ml[j]) <= ml[i + 1:j].min()
        assert both == (lower and upper)
        assert kind == (EdgeKind.LOWER_TREE if lower else EdgeKind.UPPER_TREE)


def test_reversal_duality():
    rng = np.random.default_rng(52)
    for _ in range(50):
        k = int(rng.integers(1, 4))
        l, r = O.walk(rng, k * int(rng.integers(2, 40)))
        p = P(l, r)
        g = build_mated_crt(p, k)
        h = build_mated_crt(p.reversed().swapped(), k)
        n = g.n_cells
        mapped = {(n - 1 - j, n - 1 - i) for i, j in h.edge_set()}
        assert mapped == g.edge_set()


def test_refinement():
    p = sample_path(512, 1.0, KpzParams(6.0), SeedSpec(3))
    prev = None
    for k in (64, 32, 16, 8, 4, 2, 1):
        g = build_mated_crt(p, k)
        if prev is not None:
            assert g.n_cells == 2 * prev.n_cells
        assert np.all(g.edges[:, 0] != g.edges[:, 1])
        check_invariants(g)
        prev = g


def test_divisibility_and_domain():
    p = P(np.zeros(11), np.zeros(11))
    with pytest.raises(ParameterDomainError):
        build_mated_crt(p, 3)
    with pytest.raises(ParameterDomainError):
        build_mated_crt(p, 0)


def test_cell_minima_closed_cells():
    x = np.array([3.0, 5.0, 1.0, 4.0, 6.0])
    assert cell_minima(x, 2).tolist() == [1.0, 1.0]
    assert cell_minima(x, 1).tolist() == [3.0, 1.0, 1.0, 4.0]


def test_degree_stats_path_graph():
    # strictly decreasing R and L: only consecutive edges
    g = build_mated_crt(P([5, 4, 3, 2, 1, 0], [5, 4, 3, 2, 1, 0]), 1)
    st = degree_stats(g)
    assert st["n_edges"] == 4 and st["histogram"] == {1: 2, 2: 3}
    assert g.degrees()[1:-1].tolist() == [2, 2, 2]


def test_degree_histogram_1000_cells():
    g = build_mated_crt(sample_path(1000, 1.0, KpzParams(6.0), SeedSpec(9)), 1)
    st = degree_stats(g)
    assert st["n_cells"] == 1000 and st["min"] >= 1
    assert sum(st["histogram"].values()) == 1000
    assert st["mean"] == pytest.approx(2 * st["n_edges"] / 1000)


def test_exports():
    g = build_mated_crt(P([0, 1, 0.5, 2], [0, 2, 1, 3]), 1)
    lines = g.edge_list_text().splitlines()
    assert lines[0] == "0 1 consecutive"
    assert len(lines) == len(g)
    adj = g.adjacency_text().splitlines()
    assert len(adj) == g.n_cells and adj[0].startswith("0: ")
