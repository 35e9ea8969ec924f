"""Mated-CRT map: cells of ``cell_steps`` grid steps glued along the two trees.

Cells ``i`` and ``j > i + 1`` are joined through the R tree when a horizontal
segment fits under the graph of R across both cells, i.e. when
``max(min_{c_i} R, min_{c_j} R) <= min of R over the gap``.  The closed gap
``[(i+1)k, jk]`` is the union of the intermediate cells, so the test only
involves cell minima and reduces to a visibility condition solved with a
monotone stack.  The L tree is the same with L (segments above ``C - L``).
"""
from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .bm_core import PathGrid
from .errors import ParameterDomainError


class EdgeKind(enum.IntEnum):
    CONSECUTIVE = 0
    LOWER_TREE = 1  # under the graph of R
    UPPER_TREE = 2  # above the graph of C - L

    @property
    def label(self) -> str:
        return {0: "consecutive", 1: "lower", 2: "upper"}[int(self)]


@dataclass(frozen=True, eq=False)
class PeanoGraph:
    n_cells: int
    edges: np.ndarray  # (E, 2), sorted by (i, j), i < j
    kinds: np.ndarray
    both: np.ndarray  # tree edge present in both trees

    def __len__(self) -> int:
        return self.edges.shape[0]

    def edge_set(self) -> set[tuple[int, int]]:
        return set(map(tuple, self.edges.tolist()))

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.n_cells)

    def neighbours(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n_cells)]
        for i, j in self.edges.tolist():
            adj[i].append(j)
            adj[j].append(i)
        return [sorted(a) for a in adj]

    def is_connected(self) -> bool:
        if self.n_cells <= 1:
            return True
        parent = np.arange(self.n_cells)

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        comps = self.n_cells
        for i, j in self.edges.tolist():
            a, b = find(i), find(j)
            if a != b:
                parent[a] = b
                comps -= 1
        return comps == 1

    def edge_list_text(self) -> str:
        return "".join(f"{i} {j} {EdgeKind(k).label}\n"
                       for (i, j), k in zip(self.edges.tolist(), self.kinds.tolist()))

    def adjacency_text(self) -> str:
        """One line per vertex: ``v: n1 n2 ...``."""
        return "".join(f"{v}: {' '.join(map(str, nb))}\n" for v, nb in enumerate(self.neighbours()))


def cell_minima(x: np.ndarray, cell_steps: int) -> np.ndarray:
    """Minimum of ``x`` over each closed cell ``[i*k, (i+1)*k]``."""
    n_cells = (x.size - 1) // cell_steps
    body = x[:-1].reshape(n_cells, cell_steps).min(axis=1)
    # the right endpoint of a cell is the left endpoint of the next one
    right = x[cell_steps::cell_steps]
    return np.minimum(body, right)


def build_mated_crt(path: PathGrid, cell_steps: int = 1) -> PeanoGraph:
    if cell_steps < 1:
        raise ParameterDomainError("cell_steps must be at least 1")
    if path.n_steps % cell_steps:
        raise ParameterDomainError(
            f"path has {path.n_steps} steps, not divisible by cell_steps={cell_steps}")
    n_cells = path.n_steps // cell_steps
    if n_cells < 1:
        raise ParameterDomainError("path must contain at least one cell")
    mr = cell_minima(path.r_values, cell_steps)
    ml = cell_minima(path.l_values, cell_steps)
    ri, rj = K.visibility_pairs(mr)
    li, lj = K.visibility_pairs(ml)

    n = np.int64(n_cells)
    key_r = ri * n + rj
    key_l = li * n + lj
    both_keys = np.intersect1d(key_r, key_l, assume_unique=True)
    only_l = np.setdiff1d(key_l, key_r, assume_unique=True)
    cons = np.arange(n_cells - 1, dtype=np.int64)
    keys = np.concatenate((cons * n + cons + 1, key_r, only_l))
    kinds = np.concatenate((np.full(cons.size, EdgeKind.CONSECUTIVE, np.int8),
                            np.full(key_r.size, EdgeKind.LOWER_TREE, np.int8),
                            np.full(only_l.size, EdgeKind.UPPER_TREE, np.int8)))
    order = np.argsort(keys, kind="stable")
    keys = keys[order]
    kinds = kinds[order]
    edges = np.column_stack((keys // n, keys % n))
    both = np.isin(keys, both_keys)
    return PeanoGraph(n_cells, edges, kinds, both)


def degree_stats(g: PeanoGraph) -> dict:
    deg = g.degrees()
    hist = Counter(deg.tolist())
    return {
        "n_cells": int(g.n_cells),
        "n_edges": int(len(g)),
        "min": int(deg.min()),
        "max": int(deg.max()),
        "mean": float(deg.mean()),
        "histogram": {int(k): int(v) for k, v in sorted(hist.items())},
    }
