"""Comparison-based time sets of a sampled path Z = (L, R).

Discrete conventions
--------------------
* cone exit ``v(t)``: first ``s > t`` where a coordinate drops *strictly* below
  its value at ``t``; ``u(t)`` is the first time both have dropped.  Censored
  exits use the sentinel ``len(path)`` (forward) or ``-1`` (reversed scan).
* ancestor-free exclusion uses strict domination, so its excluding intervals
  end at the first *weak* drop.
* every detector compares values only, so all index sets are unchanged under
  ``x -> c*x, dt -> c**2 * dt``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple

import numpy as np

from . import _kernels as K
from .bm_core import PathGrid
from .errors import ParameterDomainError


class Side(enum.IntEnum):
    NONE = 0  # exit not observed on the grid
    LEFT = 1
    RIGHT = 2
    TIE = 3


@dataclass(frozen=True, eq=False)
class TimeSet:
    indices: np.ndarray
    grid_dt: float
    source_len: int

    def __post_init__(self):
        idx = np.ascontiguousarray(self.indices, dtype=np.int64)
        if idx.ndim != 1:
            raise ValueError("indices must be 1-d")
        if idx.size:
            if np.any(np.diff(idx) <= 0):
                raise ValueError("indices must be strictly increasing")
            if idx[0] < 0 or idx[-1] >= self.source_len:
                raise IndexError("indices outside [0, source_len)")
        idx.flags.writeable = False
        object.__setattr__(self, "indices", idx)

    @classmethod
    def from_mask(cls, mask: np.ndarray, path: PathGrid) -> "TimeSet":
        return cls(np.flatnonzero(mask), path.dt, len(path))

    def __len__(self) -> int:
        return self.indices.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, TimeSet):
            return NotImplemented
        return (self.source_len == other.source_len
                and np.array_equal(self.indices, other.indices))

    @property
    def times(self) -> np.ndarray:
        return self.indices * self.grid_dt

    def restrict(self, lo: int, hi: int) -> "TimeSet":
        """Indices in [lo, hi)."""
        a, b = np.searchsorted(self.indices, [lo, hi])
        return TimeSet(self.indices[a:b], self.grid_dt, self.source_len)

    def runs(self) -> list[tuple[int, int]]:
        """Maximal runs of consecutive indices as inclusive (start, end) pairs."""
        idx = self.indices
        if idx.size == 0:
            return []
        breaks = np.flatnonzero(np.diff(idx) != 1)
        starts = np.concatenate(([idx[0]], idx[breaks + 1]))
        ends = np.concatenate((idx[breaks], [idx[-1]]))
        return list(zip(starts.tolist(), ends.tolist()))

    def to_text(self, runs: bool = False) -> str:
        if runs:
            lines = [f"{a},{b}" for a, b in self.runs()]
        else:
            lines = [str(i) for i in self.indices.tolist()]
        return "".join(line + "\n" for line in lines)

    @classmethod
    def from_text(cls, text: str, grid_dt: float, source_len: int) -> "TimeSet":
        out: list[int] = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if "," in line:
                a, b = (int(v) for v in line.split(","))
                out.extend(range(a, b + 1))
            else:
                out.append(int(line))
        return cls(np.array(out, dtype=np.int64), grid_dt, source_len)


class ConeRecord(NamedTuple):
    t: int
    v: int
    u: int
    side: Side


@dataclass(frozen=True, eq=False)
class ConeScan:
    """Per-index cone exits, stored column-wise.

    ``sentinel`` marks an exit that does not occur on the grid.
    """

    v: np.ndarray
    u: np.ndarray
    side: np.ndarray
    sentinel: int

    def __len__(self) -> int:
        return self.v.size

    def __getitem__(self, t: int) -> ConeRecord:
        return ConeRecord(int(t), int(self.v[t]), int(self.u[t]), Side(int(self.side[t])))

    def __iter__(self) -> Iterator[ConeRecord]:
        for t in range(len(self)):
            yield self[t]

    @property
    def censored(self) -> np.ndarray:
        """Mask of indices whose cone interval runs past the grid boundary."""
        return self.v == self.sentinel


def _check_from(path: PathGrid, start: int | None) -> int:
    if start is None:
        start = path.origin_index
    if not 0 <= start < len(path):
        raise IndexError(f"start index {start} outside [0, {len(path)})")
    return int(start)


def _classify(l: np.ndarray, r: np.ndarray, v: np.ndarray, sentinel: int) -> np.ndarray:
    side = np.full(l.size, Side.TIE, dtype=np.int8)
    hit = v != sentinel
    vv = np.where(hit, v, 0)
    side[hit & (r[vv] > r)] = Side.RIGHT
    side[hit & (l[vv] > l)] = Side.LEFT
    side[~hit] = Side.NONE
    return side


def running_infima(path: PathGrid, coord: str, start: int | None = None) -> TimeSet:
    """Indices ``i >= start`` at which the coordinate attains its running minimum (ties kept)."""
    start = _check_from(path, start)
    return TimeSet.from_mask(K.running_min_mask(path.coord(coord), start), path)


def simultaneous_infima(path: PathGrid, start: int | None = None) -> TimeSet:
    start = _check_from(path, start)
    mask = K.running_min_mask(path.l_values, start) & K.running_min_mask(path.r_values, start)
    return TimeSet.from_mask(mask, path)


def cone_scan(path: PathGrid) -> ConeScan:
    """Exit times ``v``, ``u`` and side for every index, in O(n)."""
    l, r = path.l_values, path.r_values
    nl = K.next_strictly_below(l)
    nr = K.next_strictly_below(r)
    v = np.minimum(nl, nr)
    u = np.maximum(nl, nr)
    n = len(path)
    return ConeScan(v, u, _classify(l, r, v, n), n)


def reversed_cone_scan(path: PathGrid) -> ConeScan:
    """Cone exits of the time reversal, reported in forward indexing.

    ``v[t]`` is the greatest ``s < t`` where a coordinate is strictly below its
    value at ``t``; ``u[t]`` the greatest ``s`` before which both have dropped.
    The sentinel is -1.
    """
    n = len(path)
    rev = cone_scan(path.reversed())
    v = (n - 1 - rev.v)[::-1].copy()
    u = (n - 1 - rev.u)[::-1].copy()
    return ConeScan(v, u, rev.side[::-1].copy(), -1)


def cone_times(path: PathGrid, min_duration: float, scan: ConeScan | None = None) -> TimeSet:
    """Indices whose coordinates both stay weakly above their start values for
    at least ``min_duration``, i.e. ``(v(t) - 1 - t) * dt >= min_duration``.

    A censored interval counts with its observed length, up to the last index.
    """
    if min_duration < path.dt * (1 - 1e-12):
        raise ParameterDomainError("min_duration below the grid resolution dt")
    scan = scan or cone_scan(path)
    stop = np.minimum(scan.v, len(path)) - 1
    steps = (stop - np.arange(len(path))) * path.dt
    return TimeSet.from_mask(steps >= min_duration * (1 - 1e-12), path)


def _weak_exit(path: PathGrid) -> np.ndarray:
    return np.minimum(K.next_weakly_below(path.l_values), K.next_weakly_below(path.r_values))


def ancestor_free_times(path: PathGrid, start: int | None = None) -> TimeSet:
    """Indices not strictly dominated since some earlier index in [start, s)."""
    start = _check_from(path, start)
    n = len(path)
    covered = K.cover_open_intervals(np.arange(n, dtype=np.int64), _weak_exit(path), n, start)
    mask = ~covered
    mask[:start] = False
    return TimeSet.from_mask(mask, path)


def ancestor_cover(path: PathGrid, start: int | None = None) -> TimeSet:
    """Union of the strict-domination cone intervals starting in [start, end)."""
    start = _check_from(path, start)
    n = len(path)
    covered = K.cover_open_intervals(np.arange(n, dtype=np.int64), _weak_exit(path), n, start)
    return TimeSet.from_mask(covered, path)


def left_cone_complement(path: PathGrid, start: int | None = None,
                         scan: ConeScan | None = None) -> TimeSet:
    """Indices in [start, end) outside every left cone interval (t, v(t)) with t >= start.

    Tie and censored records contribute no interval.
    """
    start = _check_from(path, start)
    scan = scan or cone_scan(path)
    n = len(path)
    left = np.flatnonzero(scan.side == Side.LEFT)
    left = left[left >= start]
    covered = K.cover_open_intervals(left.astype(np.int64), scan.v[left], n, start)
    mask = ~covered
    mask[:start] = False
    return TimeSet.from_mask(mask, path)


# ---------------------------------------------------------------------------
# (m-2)-tuple cone vectors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConeVector:
    indices: tuple[int, ...]
    closing_index: int
    m: int
    max_residual: float

    @property
    def chain(self) -> tuple[int, ...]:
        return self.indices + (self.closing_index,)


def default_tuple_tol(path: PathGrid) -> float:
    """One step's standard deviation, ``sqrt(a*dt)``."""
    a = path.params.a if path.params is not None else 1.0
    return math.sqrt(a * path.dt)


class _ChainSearch:
    """Backtracking search for type (I) chains t_0, ..., t_{m-1}.

    Links (odd o, neighbour p, coordinate X) with p = o-1 for X = L and
    p = o+1 for X = R (when p <= m-1) require ``t_p < t_o``,
    ``|X[t_o] - X[t_p]| <= tol`` and ``min X[t_p..t_o] >= X[t_o] - tol``.
    Even interior times are forward cone times: both coordinates stay above
    ``X[t_e] - tol`` up to the nearer neighbour.  ``t_0`` is a forward
    running infimum of L up to ``t_1`` within tol, the closing time is after
    ``t_0``, and all m times are pairwise more than ``gap`` steps apart.
    Assignment order is t_1, t_0, t_2, t_3, ...
    """

    def __init__(self, path: PathGrid, m: int, gap: int, tol: float):
        self.l = path.l_values
        self.r = path.r_values
        self.n = len(path)
        self.m = m
        self.gap = gap
        self.tol = tol
        self.st_l = K.sparse_table(self.l)
        self.st_r = K.sparse_table(self.r)
        self.back_l = K.backward_exits(self.l, self.st_l, tol)
        self.back_r = K.backward_exits(self.r, self.st_r, tol)

    def _min(self, coord: int, lo: int, hi: int) -> float:
        return K.range_min(self.st_l if coord == 0 else self.st_r, lo, hi)

    def first_candidates(self) -> np.ndarray:
        t = np.arange(self.n)
        g = self.gap
        ok = (t - self.back_l > g + 1) & (t - self.back_r > g + 1)
        return np.flatnonzero(ok)

    def _separated(self, s: np.ndarray, chosen: list[int]) -> np.ndarray:
        ok = np.ones(s.size, dtype=bool)
        for c in chosen:
            ok &= np.abs(s - c) > self.gap
        return ok

    def _candidates(self, k: int, t: list[int]) -> np.ndarray:
        l, r, tol = self.l, self.r, self.tol
        if k == 1:
            # t_0: L-partner of t_1, and forward running infimum of L up to t_1
            t1 = t[0]
            lo = self.back_l[t1] + 1
            seg = l[lo:t1 + 1]
            sufmin = np.minimum.accumulate(seg[::-1])[::-1]
            ok = (seg <= l[t1] + tol) & (sufmin >= seg - tol)
            s = np.flatnonzero(ok[:-1]) + lo
            return s[self._separated(s, t)]
        prev = t[k - 1]
        if k % 2 == 0:
            # R-partner of the odd time t_{k-1}, earlier than it
            lo = self.back_r[prev] + 1
            seg = r[lo:prev]
            s = np.flatnonzero(seg <= r[prev] + tol) + lo
        else:
            # odd time whose L-partner is t_{k-1}, later than it
            base = l[prev]
            hi = K.first_below_after(self.st_l, prev, base - 2 * tol)
            seg = l[prev:hi]
            premin = np.minimum.accumulate(seg)
            ok = (np.abs(seg - base) <= tol) & (premin >= seg - tol)
            s = np.flatnonzero(ok[1:]) + prev + 1
            if k <= self.m - 2:
                s = s[s - self.back_r[s] > self.gap + 1]
        return s[self._separated(s, t)]

    def _even_cone_ok(self, e_time: int, a: int, b: int) -> bool:
        stop = min(a, b)
        tol = self.tol
        return (self._min(0, e_time, stop) >= self.l[e_time] - tol
                and self._min(1, e_time, stop) >= self.r[e_time] - tol)

    def _accept_partial(self, k: int, t: list[int]) -> bool:
        # once t_k (odd, k >= 3) is placed, the even time t_{k-1} has both neighbours
        if k >= 3 and k % 2 == 1:
            return self._even_cone_ok(t[k - 1], t[k - 2], t[k])
        return True

    def chains_from(self, t1: int, first_only: bool) -> Iterator[list[int]]:
        m = self.m
        chain = [t1]
        stack = [iter(self._candidates(1, chain))]
        while stack:
            k = len(chain)
            nxt = next(stack[-1], None)
            if nxt is None:
                stack.pop()
                chain.pop()
                continue
            chain.append(int(nxt))
            if not self._accept_partial(k, self._ordered(chain)):
                chain.pop()
                continue
            if k == m - 1:
                ordered = self._ordered(chain)
                if ordered[m - 1] > ordered[0]:
                    yield ordered
                    if first_only:
                        return
                chain.pop()
                continue
            stack.append(iter(self._candidates(k + 1, self._ordered(chain))))

    @staticmethod
    def _ordered(chain: list[int]) -> list[int]:
        # assignment order is t_1, t_0, t_2, ...; return t_0, t_1, t_2, ...
        if len(chain) < 2:
            return list(chain)
        return [chain[1], chain[0]] + chain[2:]

    def residual(self, t: list[int]) -> float:
        worst = 0.0
        m = self.m
        for o in range(1, m, 2):
            worst = max(worst, abs(self.l[t[o]] - self.l[t[o - 1]]))
            if o + 1 <= m - 1:
                worst = max(worst, abs(self.r[t[o]] - self.r[t[o + 1]]))
        return float(worst)


def _tuple_search(path: PathGrid, m: int, delta: float, tol: float | None) -> _ChainSearch:
    if m < 3:
        raise ParameterDomainError("m must be at least 3")
    if not delta > path.dt:
        raise ParameterDomainError("delta must exceed the grid spacing dt")
    if m * delta >= path.duration:
        raise ParameterDomainError("m * delta must be below the path duration")
    if tol is None:
        tol = default_tuple_tol(path)
    if not tol >= 0:
        raise ParameterDomainError("tol must be nonnegative")
    gap = int(math.floor(delta / path.dt * (1 + 1e-12)))
    return _ChainSearch(path, m, gap, float(tol))


def m_tuple_cone_vectors(path: PathGrid, m: int, delta: float, tol: float | None = None,
                         first_only: bool = False) -> list[ConeVector]:
    """Approximate type (I) (m-2)-tuple cone vectors of ``path``.

    ``delta`` is the minimum pairwise separation (time units) and ``tol`` the
    slack on every boundary-value comparison (value units); ``tol`` defaults
    to one step's standard deviation.  With ``first_only`` a single chain per
    distinct t_1 is returned, the first in scan order.  Type (II) vectors are
    obtained by running on ``path.reversed()``.
    """
    search = _tuple_search(path, m, delta, tol)
    out: list[ConeVector] = []
    for t1 in search.first_candidates():
        for chain in search.chains_from(int(t1), first_only):
            out.append(ConeVector(tuple(chain[:m - 1]), chain[m - 1], m, search.residual(chain)))
    out.sort(key=lambda cv: cv.chain)
    return out


def m_tuple_cone_times(path: PathGrid, m: int, delta: float, tol: float | None = None) -> TimeSet:
    """Projection onto t_1 of the cone vectors, without enumerating all of them."""
    return project_first(m_tuple_cone_vectors(path, m, delta, tol, first_only=True), path)


def project_first(vectors: Iterable[ConeVector], path: PathGrid | None = None) -> TimeSet:
    """Sorted distinct t_1 components."""
    ts = np.unique(np.array([cv.indices[1] for cv in vectors], dtype=np.int64))
    if path is None:
        return TimeSet(ts, 1.0, int(ts[-1]) + 1 if ts.size else 0)
    return TimeSet(ts, path.dt, len(path))


def vectors_as_points(vectors: Iterable[ConeVector], m: int | None = None) -> np.ndarray:
    """(t_0, ..., t_{m-2}) rows; pass ``m`` to keep the shape of an empty result."""
    pts = np.array([cv.indices for cv in vectors], dtype=np.float64)
    if m is not None:
        pts = pts.reshape(-1, m - 1)
    return pts
