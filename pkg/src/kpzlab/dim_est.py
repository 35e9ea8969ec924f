"""Box-counting dimension via dyadic occupied-box counts and OLS on log-log axes."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptySetError, ScaleRangeError


@dataclass(frozen=True)
class ScalePolicy:
    """Dyadic scale window: ``eps_k = coarsest_fraction * extent * 2**-k`` for k < n_scales,
    keeping only boxes of size at least ``finest_multiple * resolution``."""

    n_scales: int = 10
    coarsest_fraction: float = 1.0 / 8.0
    finest_multiple: float = 16.0

    def __post_init__(self):
        if self.n_scales < 3:
            raise ScaleRangeError("n_scales must be at least 3")
        if not 0.0 < self.coarsest_fraction <= 1.0:
            raise ScaleRangeError("coarsest_fraction must lie in (0, 1]")
        if not self.finest_multiple >= 2.0:
            raise ScaleRangeError("finest_multiple must be at least 2")

    def scales(self, extent: float, resolution: float) -> np.ndarray:
        eps = self.coarsest_fraction * extent * 2.0 ** -np.arange(self.n_scales)
        eps = eps[eps >= self.finest_multiple * resolution * (1 - 1e-12)]
        if eps.size < 3:
            raise ScaleRangeError(
                f"only {eps.size} scales between {self.coarsest_fraction * extent:g} "
                f"and {self.finest_multiple * resolution:g}")
        return eps


@dataclass(frozen=True)
class DimEstimate:
    slope: float
    stderr: float
    r_squared: float
    scales: np.ndarray = field(repr=False)
    counts: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "slope": float(self.slope),
            "stderr": float(self.stderr),
            "r_squared": float(self.r_squared),
            "scales": [float(x) for x in self.scales],
            "counts": [int(x) for x in self.counts],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "DimEstimate":
        return cls(d["slope"], d["stderr"], d["r_squared"],
                   np.asarray(d["scales"], float), np.asarray(d["counts"], np.int64))


def fit_loglog(scales: np.ndarray, counts: np.ndarray) -> DimEstimate:
    """OLS of log N against log(1/eps)."""
    scales = np.asarray(scales, dtype=np.float64)
    counts = np.asarray(counts, dtype=np.int64)
    x = np.log(1.0 / scales)
    y = np.log(counts.astype(np.float64))
    k = x.size
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    sxy = float(np.sum((x - xm) * (y - ym)))
    syy = float(np.sum((y - ym) ** 2))
    slope = sxy / sxx
    resid = y - (ym + slope * (x - xm))
    sse = float(np.sum(resid ** 2))
    stderr = math.sqrt(sse / (k - 2) / sxx) if k > 2 else float("nan")
    # constant counts: the fit is exact
    r2 = 1.0 if syy <= 1e-300 else max(0.0, 1.0 - sse / syy)
    return DimEstimate(slope, stderr, r2, scales, counts)


def count_boxes_1d(points: np.ndarray, eps: float, origin: float = 0.0) -> int:
    """Number of cells ``[origin + k*eps, origin + (k+1)*eps)`` holding a point (points sorted)."""
    cells = np.floor((points - origin) / eps).astype(np.int64)
    return int(1 + np.count_nonzero(np.diff(cells)))


# range positions carry about 52 bits; keep boxes well above that
_RANGE_PRECISION = 2.0 ** -40


def box_dim_1d(obj, policy: ScalePolicy | None = None, *, extent: float | None = None,
               resolution: float | None = None, origin: float | None = None) -> DimEstimate:
    """Box dimension of a TimeSet, RangeSet or 1-d array of points.

    TimeSets are counted in index units, index i owning the unit cell
    [i, i+1), over the whole source grid (extent ``source_len``, resolution
    one step); the reported scales are converted to time units.  RangeSets are counted exactly from their segments on
    ``[0, total]``.  ``extent``, ``resolution`` and ``origin`` override the
    domain length, grid resolution and cell origin.
    """
    from .cone_detect import TimeSet
    from .levy import RangeSet

    policy = policy or ScalePolicy()
    unit = 1.0
    if isinstance(obj, TimeSet):
        if len(obj) == 0:
            raise EmptySetError("cannot estimate the dimension of an empty set")
        pts = obj.indices.astype(np.float64)
        ext, res, start, unit = float(obj.source_len), 1.0, 0.0, obj.grid_dt
        counter = lambda e: count_boxes_1d(pts, e, start)
    elif isinstance(obj, RangeSet):
        if obj.n_segments == 0:
            raise EmptySetError("cannot estimate the dimension of an empty set")
        ext = obj.total if obj.total > 0 else 1.0
        res = max(obj.resolution, ext * _RANGE_PRECISION)
        start = 0.0
        counter = obj.count_boxes
    else:
        pts = np.sort(np.asarray(obj, dtype=np.float64).ravel())
        if pts.size == 0:
            raise EmptySetError("cannot estimate the dimension of an empty set")
        start = float(pts[0])
        ext = float(pts[-1] - pts[0]) or 1.0
        res = ext * 2.0 ** -60
        counter = lambda e: count_boxes_1d(pts, e, start)
    if extent is not None:
        ext = float(extent)
    if resolution is not None:
        res = float(resolution)
    if origin is not None:
        if isinstance(obj, RangeSet):
            raise ValueError("origin override is not supported for ranges")
        start = float(origin)
    eps = policy.scales(ext, res)
    counts = np.array([counter(e) for e in eps], dtype=np.int64)
    return fit_loglog(eps * unit, counts)


def count_boxes_kd(points: np.ndarray, eps: float, origin: np.ndarray) -> int:
    keys = np.floor((points - origin) / eps).astype(np.int64)
    keys -= keys.min(axis=0)
    span = keys.max(axis=0) + 1
    if float(np.prod(span.astype(np.float64))) < 2.0 ** 62:
        # mixed-radix code per box, much cheaper than unique rows
        code = np.zeros(keys.shape[0], dtype=np.int64)
        for d in range(keys.shape[1]):
            code = code * span[d] + keys[:, d]
        return int(np.unique(code).size)
    return int(np.unique(keys, axis=0).shape[0])


def box_dim_kd(points: np.ndarray, k: int | None = None, policy: ScalePolicy | None = None, *,
               extent: float | None = None, resolution: float | None = None) -> DimEstimate:
    """Box dimension of a point cloud in R^k with cubic dyadic boxes.

    The domain extent is the largest side of the bounding box unless given;
    ``resolution`` is the finest meaningful length (default: extent / 2**20).
    """
    policy = policy or ScalePolicy()
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    if k is not None and pts.shape[1] != k:
        raise ValueError(f"points have dimension {pts.shape[1]}, expected {k}")
    if pts.shape[0] == 0:
        raise EmptySetError("cannot estimate the dimension of an empty set")
    lo = pts.min(axis=0)
    ext = float(extent) if extent is not None else float(np.max(pts.max(axis=0) - lo))
    if ext <= 0:
        ext = 1.0
    res = float(resolution) if resolution is not None else ext * 2.0 ** -20
    eps = policy.scales(ext, res)
    counts = np.array([count_boxes_kd(pts, e, lo) for e in eps], dtype=np.int64)
    return fit_loglog(eps, counts)
