import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kpzlab.bm_core import KpzParams, SeedSpec, sample_path
from kpzlab.cone_detect import TimeSet
from kpzlab.dim_est import (DimEstimate, ScalePolicy, box_dim_1d, box_dim_kd, count_boxes_1d,
                            count_boxes_kd, fit_loglog)
from kpzlab.errors import EmptySetError, ScaleRangeError

CANTOR_DIM = math.log(2) / math.log(3)


def cantor_left_endpoints(level):
    c = np.array([0.0])
    for _ in range(level):
        c = np.concatenate((c / 3, c / 3 + 2 / 3))
    return c


def unit_square(n):
    g = (np.arange(n) + 0.5) / n
    x, y = np.meshgrid(g, g)
    return np.column_stack((x.ravel(), y.ravel()))


def test_full_grid():
    e = box_dim_1d(TimeSet(np.arange(2 ** 20), 1.0, 2 ** 20))
    assert abs(e.slope - 1.0) <= 0.01


def test_single_point():
    e = box_dim_1d(TimeSet(np.array([12345]), 1.0, 2 ** 20))
    assert abs(e.slope) <= 0.01
    assert e.r_squared == 1.0


def test_cantor_level_12():
    e = box_dim_1d(cantor_left_endpoints(12), resolution=3.0 ** -12)
    assert abs(e.slope - CANTOR_DIM) <= 0.02


def test_filled_unit_square():
    e = box_dim_kd(unit_square(2048), 2, extent=1.0, resolution=1 / 2048)
    assert abs(e.slope - 2.0) <= 0.02


def test_line_segment_in_plane():
    t = (np.arange(4096) + 0.5) / 4096
    e = box_dim_kd(np.column_stack((t, 0.5 * t)), 2, extent=1.0, resolution=1 / 4096)
    assert abs(e.slope - 1.0) <= 0.02


def test_planar_bm_points():
    # 1e5 samples of a planar BM path, boxes down to twice the step size.
    # The range carries a log correction at this size; see the decisions ledger.
    p = sample_path(10 ** 5, 1.0, KpzParams(8.0), SeedSpec(0))
    pts = np.column_stack((p.l_values, p.r_values))
    e = box_dim_kd(pts, 2, ScalePolicy(10, 1 / 8, 2), resolution=1.0)
    assert abs(e.slope - 2.0) <= 0.05, f"slope {e.slope:.3f}"


def test_time_units_reported():
    ts = TimeSet(np.arange(2 ** 12), 0.25, 2 ** 12)
    e = box_dim_1d(ts, ScalePolicy(5, 1 / 8, 16))
    assert e.scales[0] == pytest.approx(2 ** 12 / 8 * 0.25)


def test_empty_and_scale_errors():
    with pytest.raises(EmptySetError):
        box_dim_1d(TimeSet(np.array([], dtype=np.int64), 1.0, 100))
    with pytest.raises(EmptySetError):
        box_dim_kd(np.empty((0, 2)))
    with pytest.raises(ScaleRangeError):
        box_dim_1d(TimeSet(np.arange(50), 1.0, 50))  # fewer than 3 usable scales
    with pytest.raises(ScaleRangeError):
        ScalePolicy(n_scales=2)
    with pytest.raises(ValueError):
        box_dim_kd(np.zeros((3, 2)), k=3)


def test_estimate_json_export():
    e = fit_loglog(np.array([0.5, 0.25, 0.125]), np.array([2, 4, 8]))
    d = json.loads(e.to_json())
    assert set(d) == {"slope", "stderr", "r_squared", "scales", "counts"}
    assert d["slope"] == pytest.approx(1.0)
    back = DimEstimate.from_dict(d)
    assert back.slope == e.slope and back.counts.tolist() == [2, 4, 8]


def test_fit_recovers_power_law():
    eps = 2.0 ** -np.arange(8)
    e = fit_loglog(eps, np.round(3 * eps ** -0.7).astype(int) + 0)
    assert abs(e.slope - 0.7) < 0.02 and e.r_squared > 0.99


point_sets = st.lists(st.floats(0, 1000, allow_nan=False), min_size=1, max_size=200).map(
    lambda v: np.sort(np.array(v)))


@settings(max_examples=100, deadline=None)
@given(point_sets)
def test_counts_monotone(pts):
    counts = [count_boxes_1d(pts, e) for e in 1000 * 2.0 ** -np.arange(12)]
    assert all(a <= b for a, b in zip(counts, counts[1:]))


@settings(max_examples=100, deadline=None)
@given(point_sets, point_sets, st.floats(0.01, 100))
def test_counts_subadditive(a, b, eps):
    both = np.sort(np.concatenate((a, b)))
    assert count_boxes_1d(both, eps) <= count_boxes_1d(a, eps) + count_boxes_1d(b, eps)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 10), st.floats(0, 10)), min_size=2, max_size=100),
       st.floats(0.01, 5))
def test_kd_counts_subadditive(pairs, eps):
    pts = np.array(pairs)
    h = pts.shape[0] // 2
    o = np.zeros(2)
    whole = count_boxes_kd(pts, eps, o)
    assert whole <= count_boxes_kd(pts[:h], eps, o) + count_boxes_kd(pts[h:], eps, o)


@pytest.mark.parametrize("shift", [0.0137, 0.3, 0.77])
def test_translation_invariance(shift):
    pts = cantor_left_endpoints(12)
    base = box_dim_1d(pts, resolution=3.0 ** -12, origin=0.0)
    moved = box_dim_1d(pts, resolution=3.0 ** -12, origin=-shift / 8)
    for a, b in zip(base.counts, moved.counts):
        assert b <= 2 * a and a <= 2 * b
    assert abs(base.slope - moved.slope) < 0.01
    sq = unit_square(512)
    s0 = box_dim_kd(sq, 2, extent=1.0, resolution=1 / 512)
    s1 = box_dim_kd(sq + shift, 2, extent=1.0, resolution=1 / 512)
    assert abs(s0.slope - s1.slope) < 0.01
