"""Ranges of alpha-stable subordinators and their compositions.

Jumps of size at least ``min_jump`` form a Poisson point process on
``[0, horizon] x [min_jump, inf)`` with intensity ``dt (x) alpha u**(-1-alpha) du``.
Jumps below the threshold are replaced by their mean, the drift
``alpha/(1-alpha) * min_jump**(1-alpha)``, so the truncated process keeps the
same first moment on every time interval.

A range is stored exactly as the sorted list of closed segments swept by the
drift between consecutive jumps; grid points at spacing ``resolution`` are
only materialised on request.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bm_core import SeedSpec
from .errors import ParameterDomainError


@dataclass(frozen=True)
class SubordinatorSpec:
    alpha: float
    horizon: float = 1.0
    min_jump: float = 1e-6
    drift: bool = True

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ParameterDomainError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if not self.horizon > 0:
            raise ParameterDomainError("horizon must be positive")
        if not self.min_jump > 0:
            raise ParameterDomainError("min_jump must be positive")

    @classmethod
    def with_jump_count(cls, alpha: float, n_jumps: float, horizon: float = 1.0,
                        drift: bool = True) -> "SubordinatorSpec":
        """Choose the threshold so that the expected number of jumps is ``n_jumps``."""
        return cls(alpha, horizon, (n_jumps / horizon) ** (-1.0 / alpha), drift)

    @property
    def jump_rate(self) -> float:
        """Mass of the Levy measure above the threshold."""
        return self.min_jump ** -self.alpha

    @property
    def expected_jumps(self) -> float:
        return self.horizon * self.jump_rate

    @property
    def drift_rate(self) -> float:
        if not self.drift:
            return 0.0
        a = self.alpha
        return a / (1.0 - a) * self.min_jump ** (1.0 - a)


@dataclass(frozen=True, eq=False)
class RangeSet:
    """Closed range as disjoint sorted segments ``[starts[k], starts[k] + lengths[k]]``.

    Sampled ranges keep their jump skeleton (jump times, sizes, drift rate and
    horizon) so the subordinator can be evaluated at arbitrary times.
    """

    starts: np.ndarray
    lengths: np.ndarray
    total: float
    resolution: float
    jump_times: np.ndarray | None = field(default=None, repr=False)
    jump_sizes: np.ndarray | None = field(default=None, repr=False)
    drift_rate: float = 0.0
    horizon: float | None = None

    def __post_init__(self):
        for name in ("starts", "lengths"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if self.starts.shape != self.lengths.shape:
            raise ValueError("starts and lengths differ in shape")

    @property
    def ends(self) -> np.ndarray:
        return self.starts + self.lengths

    @property
    def n_segments(self) -> int:
        return self.starts.size

    @property
    def has_skeleton(self) -> bool:
        return self.jump_times is not None

    @property
    def points(self) -> np.ndarray:
        """Segment endpoints plus grid fill at ``resolution`` (sorted, unique)."""
        return np.unique(_fill(self.starts, self.lengths, self.resolution))

    def evaluate(self, x) -> np.ndarray:
        """Right-continuous S(x) for x in [0, horizon]."""
        if not self.has_skeleton:
            raise ValueError("range has no jump skeleton to evaluate")
        x = np.asarray(x, dtype=np.float64)
        csum = np.concatenate(([0.0], np.cumsum(self.jump_sizes)))
        k = np.searchsorted(self.jump_times, x, side="right")
        return self.drift_rate * x + csum[k]

    def covered_length(self) -> float:
        return float(self.lengths.sum())

    def gap_fraction(self) -> float:
        """Share of ``[0, total]`` not covered by the range."""
        if self.total <= 0:
            return 0.0
        return (self.total - self.covered_length()) / self.total

    def gaps(self) -> np.ndarray:
        """Complementary gaps as (start, end) rows, in order."""
        e = self.ends
        a, b = e[:-1], self.starts[1:]
        keep = b > a
        return np.column_stack((a[keep], b[keep]))

    def gaps_text(self) -> str:
        return "".join(f"{a!r},{b!r}\n" for a, b in self.gaps().tolist())

    def scaled(self, c: float) -> "RangeSet":
        """Range of c*S: every length times c (the time axis is unchanged)."""
        if not c > 0:
            raise ParameterDomainError("scale factor must be positive")
        sizes = None if self.jump_sizes is None else self.jump_sizes * c
        return RangeSet(self.starts * c, self.lengths * c, self.total * c, self.resolution * c,
                        self.jump_times, sizes, self.drift_rate * c, self.horizon)

    def count_boxes(self, eps: float) -> int:
        """Number of cells ``[k*eps, (k+1)*eps)`` meeting some segment."""
        lo = np.floor(self.starts / eps)
        hi = np.floor(self.ends / eps)
        shared = np.count_nonzero(lo[1:] == hi[:-1])
        return int(np.sum(hi - lo + 1) - shared)


def _fill(starts: np.ndarray, lengths: np.ndarray, step: float) -> np.ndarray:
    """Grid points ``start + i*step`` in every ``[start, start + length]``, endpoints included."""
    k = np.floor(lengths / step).astype(np.int64) + 1
    seg = np.repeat(np.arange(starts.size), k)
    first = np.cumsum(k) - k
    offs = (np.arange(seg.size) - np.repeat(first, k)) * step
    pts = starts[seg] + offs
    ends = starts + lengths
    return np.concatenate((pts, ends[lengths > 0]))


def _merge_touching(starts: np.ndarray, lengths: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Coalesce consecutive segments that touch (zero-length gaps)."""
    if starts.size <= 1:
        return starts, lengths
    ends = starts + lengths
    new = np.concatenate(([True], starts[1:] > ends[:-1]))
    idx = np.flatnonzero(new)
    last = np.concatenate((idx[1:] - 1, [starts.size - 1]))
    return starts[idx], ends[last] - starts[idx]


def sample_subordinator_range(spec: SubordinatorSpec, seed: SeedSpec) -> RangeSet:
    rng = seed.generator()
    n = rng.poisson(spec.expected_jumps)
    times = np.sort(rng.uniform(0.0, spec.horizon, n))
    # Pareto tail above min_jump: P(J > u) = (u / min_jump)**-alpha
    sizes = spec.min_jump * rng.uniform(0.0, 1.0, n) ** (-1.0 / spec.alpha)
    b = spec.drift_rate
    csum = np.concatenate(([0.0], np.cumsum(sizes)))
    bounds = np.concatenate(([0.0], times, [spec.horizon]))
    starts = b * bounds[:-1] + csum
    lengths = b * np.diff(bounds)
    total = float(starts[-1] + lengths[-1])
    starts, lengths = _merge_touching(starts, lengths)
    return RangeSet(starts, lengths, total, spec.min_jump, times, sizes, b, spec.horizon)


def compose_ranges(outer: RangeSet, inner: RangeSet) -> RangeSet:
    """Image of the inner range under the outer subordinator, ``{S_outer(x) : x in inner}``.

    Each inner segment ``[a, b]`` is cut at the outer jump times it contains;
    a piece ``[s, e)`` free of jumps maps onto ``[S(s), S(s) + drift*(e - s)]``.
    The result has no skeleton.  Its resolution is the larger of the outer
    threshold and the outer drift over one inner resolution cell.
    """
    if not outer.has_skeleton:
        raise ValueError("outer range must carry its jump skeleton")
    if inner.n_segments and inner.ends[-1] > outer.horizon * (1 + 1e-12):
        raise ParameterDomainError(
            f"inner range reaches {inner.ends[-1]:g}, beyond the outer horizon {outer.horizon:g}")
    a = inner.starts
    b = np.minimum(inner.ends, outer.horizon)
    tau = outer.jump_times
    lo = np.searchsorted(tau, a, side="right")
    hi = np.searchsorted(tau, b, side="right")
    inside = hi - lo
    # piece boundaries per inner segment: a, tau[lo..hi-1], b
    n_pieces = inside + 1
    seg = np.repeat(np.arange(a.size), n_pieces)
    first = np.cumsum(n_pieces) - n_pieces
    rank = np.arange(seg.size) - np.repeat(first, n_pieces)
    jidx = np.repeat(lo, n_pieces) + rank - 1  # jump that opens the piece (rank >= 1)
    s = np.where(rank == 0, a[seg], tau[np.clip(jidx, 0, max(tau.size - 1, 0))] if tau.size else a[seg])
    nxt = np.repeat(lo, n_pieces) + rank  # jump that closes the piece, if any
    is_last = rank == inside[seg]
    e = np.where(is_last, b[seg], tau[np.clip(nxt, 0, max(tau.size - 1, 0))] if tau.size else b[seg])
    starts = outer.evaluate(s)
    lengths = outer.drift_rate * (e - s)
    starts, lengths = _merge_touching(starts, lengths)
    total = float(outer.evaluate(min(inner.total, outer.horizon)))
    res = outer.resolution
    if outer.drift_rate > 0:
        res = max(res, outer.drift_rate * inner.resolution)
    return RangeSet(starts, lengths, total, res)


def identity_range(horizon: float, resolution: float) -> RangeSet:
    """Pure-drift unit-rate subordinator S(x) = x on [0, horizon]."""
    return RangeSet(np.array([0.0]), np.array([horizon]), horizon, resolution,
                    np.empty(0), np.empty(0), 1.0, horizon)


def point_range(x: float = 0.0, resolution: float = 1.0) -> RangeSet:
    return RangeSet(np.array([x]), np.array([0.0]), x, resolution)
