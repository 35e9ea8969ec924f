import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kpzlab.bm_core import SeedSpec
from kpzlab.dim_est import box_dim_1d
from kpzlab.errors import ParameterDomainError
from kpzlab.harness import RANGE_POLICY
from kpzlab.levy import (RangeSet, SubordinatorSpec, compose_ranges, identity_range, point_range,
                         sample_subordinator_range)


def sample(alpha, n_jumps=1e4, seed=0, rep=0, drift=True, horizon=1.0):
    spec = SubordinatorSpec.with_jump_count(alpha, n_jumps, horizon, drift)
    return sample_subordinator_range(spec, SeedSpec(seed, rep))


@pytest.mark.parametrize("alpha", [0.0, 1.0, -0.2, 1.5])
def test_alpha_domain(alpha):
    with pytest.raises(ParameterDomainError):
        SubordinatorSpec(alpha)


def test_spec_rates():
    s = SubordinatorSpec.with_jump_count(0.5, 400.0, horizon=2.0)
    assert s.expected_jumps == pytest.approx(400.0)
    assert s.drift_rate == pytest.approx(0.5 / 0.5 * s.min_jump ** 0.5)
    assert SubordinatorSpec(0.5, drift=False).drift_rate == 0.0


def test_segments_sorted_and_disjoint():
    rs = sample(0.6, 5e3)
    assert np.all(rs.lengths >= 0)
    assert np.all(rs.starts[1:] > rs.ends[:-1])
    assert rs.starts[0] == 0.0 and rs.ends[-1] == pytest.approx(rs.total)
    pts = rs.points
    assert np.all(np.diff(pts) > 0)


def test_evaluate_is_right_continuous_and_increasing():
    rs = sample(0.5, 200)
    x = np.linspace(0, 1, 5001)
    y = rs.evaluate(x)
    assert np.all(np.diff(y) >= 0)
    j = rs.jump_times[3]
    assert rs.evaluate(j) == pytest.approx(rs.evaluate(j - 1e-12) + rs.jump_sizes[3], rel=1e-9)


def test_gap_fraction_trend_as_alpha_to_one():
    alphas = (0.5, 0.7, 0.9, 0.97)
    means = [np.mean([sample(a, 1e4, 1, i).gap_fraction() for i in range(100)]) for a in alphas]
    assert all(a > b for a, b in zip(means, means[1:]))
    assert means[-1] < 0.5


def test_no_jumps_without_drift_is_origin():
    spec = SubordinatorSpec(0.5, horizon=1.0, min_jump=1e12, drift=False)
    for rep in range(20):
        rs = sample_subordinator_range(spec, SeedSpec(3, rep))
        if rs.jump_times.size == 0:
            assert rs.points.tolist() == [0.0] and rs.total == 0.0
            break
    else:
        pytest.fail("expected a draw without jumps")


def test_no_jumps_with_drift_is_full_interval():
    spec = SubordinatorSpec(0.5, horizon=1.0, min_jump=1e12)
    rs = sample_subordinator_range(spec, SeedSpec(3, 0))
    assert rs.jump_times.size == 0
    assert rs.n_segments == 1 and rs.gap_fraction() == 0.0
    assert rs.total == pytest.approx(spec.drift_rate)


def test_half_stable_dimension():
    slopes = [box_dim_1d(sample(0.5, 3e5, 2, i), RANGE_POLICY).slope for i in range(4)]
    assert abs(np.mean(slopes) - 0.5) <= 0.05


def test_scaling_invariance():
    rs = sample(0.5, 3e5, 4)
    base = box_dim_1d(rs, RANGE_POLICY)
    for c in (0.01, 7.3, 1e3):
        sc = rs.scaled(c)
        assert np.allclose(sc.starts, rs.starts * c) and np.allclose(sc.lengths, rs.lengths * c)
        assert sc.total == pytest.approx(rs.total * c)
        assert abs(box_dim_1d(sc, RANGE_POLICY).slope - base.slope) < 0.01


def test_compose_with_origin_inner():
    outer = sample(0.5, 1e3)
    out = compose_ranges(outer, point_range(0.0, outer.resolution))
    assert out.points.tolist() == [0.0]


def test_compose_with_identity_outer():
    inner = sample(0.6, 2e3, 5)
    out = compose_ranges(identity_range(inner.total, inner.resolution), inner)
    assert np.allclose(out.starts, inner.starts) and np.allclose(out.lengths, inner.lengths)
    assert np.allclose(out.points, inner.points)


def test_compose_pointwise():
    # every grid point x of the inner range maps to S_outer(x), which lies in the result
    inner = sample(0.5, 300, 7)
    inner = RangeSet(inner.starts, inner.lengths, inner.total, inner.resolution)
    outer = sample(0.7, 500, 6, horizon=inner.total)
    y = outer.evaluate(inner.points)
    out = compose_ranges(outer, inner)
    k = np.searchsorted(out.starts, y, side="right") - 1
    assert np.all(k >= 0)
    assert np.all(y <= out.ends[k] + 1e-12 * max(1.0, out.total))
    assert np.all(np.diff(out.points) > 0)


def test_compose_rejects_inner_beyond_horizon():
    outer = sample(0.5, 100, horizon=1.0)
    with pytest.raises(ParameterDomainError):
        compose_ranges(outer, identity_range(2.0, 1e-3))


def test_compose_needs_skeleton():
    with pytest.raises(ValueError):
        compose_ranges(point_range(0.0), point_range(0.0))


def test_composed_product_dimension():
    # kappa' = 6: alpha1 = kappa'/4 - 1 = 1/2 and alpha2 = 1/2
    slopes = []
    for i in range(4):
        inner = sample(0.5, 3e5, 8, i)
        outer = sample_subordinator_range(
            SubordinatorSpec.with_jump_count(0.5, 3e5, horizon=inner.total), SeedSpec(9, i))
        slopes.append(box_dim_1d(compose_ranges(outer, inner), RANGE_POLICY).slope)
    assert abs(np.mean(slopes) - 0.25) <= 0.05


def test_gaps_export():
    rs = sample(0.5, 50)
    g = rs.gaps()
    assert g.shape[1] == 2 and np.all(g[:, 1] > g[:, 0])
    lines = rs.gaps_text().splitlines()
    assert len(lines) == g.shape[0]
    a, b = (float(v) for v in lines[0].split(","))
    assert (a, b) == tuple(g[0])


@settings(max_examples=60, deadline=None)
@given(st.floats(0.1, 0.95), st.integers(0, 2 ** 32))
def test_range_structure_property(alpha, seed):
    rs = sample(alpha, 300, seed)
    assert np.all(np.diff(rs.starts) > 0)
    assert rs.covered_length() <= rs.total * (1 + 1e-12)
    assert 0.0 <= rs.gap_fraction() <= 1.0
    eps = rs.total / 64 if rs.total > 0 else 1.0
    assert rs.count_boxes(eps) <= 65
