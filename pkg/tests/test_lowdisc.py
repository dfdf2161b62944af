import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qmc_oracle import oracle_directions, oracle_point
from rwpf import lowdisc
from rwpf.errors import UnsupportedDimensionError

KS_CRIT_999 = 1.94947  # asymptotic two-sided Kolmogorov critical value at alpha=0.001


@pytest.mark.parametrize("dim", [1, 2, 3, 4, 8, 32, 64])
def test_base_matches_independent_expansion(dim):
    ps = lowdisc.generate_base(dim, 16)
    directions = oracle_directions(dim)
    for i in range(16):
        assert ps.points[i, dim - 1] == oracle_point(i, directions)


def test_base_matches_scipy_sobol_as_set():
    from scipy.stats import qmc
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for d, m in [(1, 64), (2, 64), (8, 128), (64, 32)]:
            mine = lowdisc.generate_base(d, m).points
            ref = qmc.Sobol(d=d, scramble=False).random(m)
            assert set(map(tuple, mine)) == set(map(tuple, ref))


def test_first_points_convention():
    assert lowdisc.generate_base(1, 1).points.tolist() == [[0.0]]
    assert lowdisc.generate_base(1, 3).points.tolist() == [[0.0], [0.5], [0.25]]


def _net_boxes_ok(points: np.ndarray) -> bool:
    """(0, m, 2)-net check: every elementary dyadic box of volume 1/M holds
    exactly one point, for every box shape."""
    m_total = len(points)
    m = m_total.bit_length() - 1
    assert 2**m == m_total
    for k1 in range(m + 1):
        k2 = m - k1
        cells = ((points[:, 0] * 2**k1).astype(int) * 2**k2
                 + (points[:, 1] * 2**k2).astype(int))
        if not np.array_equal(np.sort(cells), np.arange(m_total)):
            return False
    return True


@pytest.mark.parametrize("count", [4, 16, 64])
def test_net_property_base_and_shifted(count):
    base = lowdisc.generate_base(2, count)
    assert _net_boxes_ok(base.points)
    for seed in (0, 1, 7, 12345):
        shifted = lowdisc.randomize(base, "digital-shift", seed)
        assert _net_boxes_ok(shifted.points)


def test_dimension_and_count_errors():
    with pytest.raises(UnsupportedDimensionError):
        lowdisc.generate_base(65, 8)
    with pytest.raises(UnsupportedDimensionError):
        lowdisc.generate_base(0, 8)
    with pytest.raises(ValueError):
        lowdisc.generate_base(2, 0)


@pytest.mark.parametrize("scheme", ["digital-shift", "owen-scramble"])
def test_randomize_deterministic(scheme):
    base = lowdisc.generate_base(3, 32)
    a = lowdisc.randomize(base, scheme, 99)
    b = lowdisc.randomize(base, scheme, 99)
    assert np.array_equal(a.ipoints, b.ipoints)
    assert np.array_equal(a.points, b.points)
    c = lowdisc.randomize(base, scheme, 100)
    assert not np.array_equal(a.ipoints, c.ipoints)
    assert a.randomization == scheme and a.seed == 99


def test_randomize_rejects_randomized_input_and_bad_scheme():
    base = lowdisc.generate_base(2, 8)
    shifted = lowdisc.randomize(base, "digital-shift", 1)
    with pytest.raises(ValueError):
        lowdisc.randomize(shifted, "digital-shift", 2)
    with pytest.raises(ValueError):
        lowdisc.randomize(base, "latin", 2)


def test_digital_shift_identity_and_half():
    base = lowdisc.generate_base(1, 1)
    same = lowdisc.apply_digital_shift(base, np.zeros(1, dtype=np.uint64))
    assert same.points.tolist() == [[0.0]]
    half = lowdisc.apply_digital_shift(base, lowdisc.shift_from_floats([0.5]))
    assert half.points.tolist() == [[0.5]]


def test_shift_preserves_count_dimension():
    base = lowdisc.generate_base(5, 17)
    out = lowdisc.randomize(base, "digital-shift", 3)
    assert (out.dimension, out.count) == (5, 17)
    assert out.points.shape == (17, 5)


@pytest.mark.parametrize("scheme", ["digital-shift", "owen-scramble"])
def test_marginal_uniformity_ks(scheme):
    # fixed point index / coordinate over randomization seeds
    from scipy.stats import kstest
    base = lowdisc.generate_base(2, 8)
    n_seeds = 2000
    vals = np.empty((n_seeds, 2))
    for seed in range(n_seeds):
        ps = lowdisc.randomize(base, scheme, seed)
        vals[seed, 0] = ps.points[0, 0]   # the origin point
        vals[seed, 1] = ps.points[3, 1]
    for col in range(2):
        stat = kstest(vals[:, col], "uniform").statistic
        assert stat < KS_CRIT_999 / np.sqrt(n_seeds)


def test_first_point_mean_over_seeds():
    base = lowdisc.generate_base(1, 1)
    n = 10_000
    vals = [lowdisc.randomize(base, "digital-shift", s).points[0, 0]
            for s in range(n)]
    assert abs(np.mean(vals) - 0.5) < 3.0 / np.sqrt(12.0 * n)


def test_randomized_average_unbiased_for_integrals():
    # f(u) = u and f(u) = u^2 against 1/2 and 1/3, over randomization seeds
    base = lowdisc.generate_base(1, 8)
    n = 10_000
    means_u = np.empty(n)
    means_u2 = np.empty(n)
    for s in range(n):
        pts = lowdisc.randomize(base, "digital-shift", s).points[:, 0]
        means_u[s] = pts.mean()
        means_u2[s] = (pts**2).mean()
    for sample, target in [(means_u, 0.5), (means_u2, 1.0 / 3.0)]:
        se = sample.std(ddof=1) / np.sqrt(n)
        assert abs(sample.mean() - target) < 4 * se


def test_projection_quality_net_vs_iid():
    base = lowdisc.generate_base(2, 256)
    report = lowdisc.projection_quality(base)
    assert not report.insufficient_points
    assert report.max_stat <= report.threshold_999
    # digital shift preserves the (0,2)-net cell counts exactly
    shifted = lowdisc.randomize(base, "digital-shift", 5)
    assert lowdisc.projection_quality(shifted).max_stat == 0.0

    rng = np.random.default_rng(11)
    wins = 0
    for s in range(100):
        net = lowdisc.randomize(base, "digital-shift", s)
        iid_pts = rng.random((256, 2))
        iid = lowdisc.PointSet(2, 256, iid_pts, "none", None,
                               lowdisc.shift_from_floats(iid_pts))
        net_stat = lowdisc.projection_quality(net).max_stat
        iid_stat = lowdisc.projection_quality(iid).max_stat
        wins += net_stat <= iid_stat
    assert wins >= 90


def test_projection_quality_insufficient_points():
    report = lowdisc.projection_quality(lowdisc.generate_base(2, 1))
    assert report.insufficient_points
    assert report.pair_stats == {}


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 8), st.integers(1, 128), st.integers(0, 2**31))
def test_points_in_unit_cube_and_reproducible(dim, count, seed):
    a = lowdisc.randomize(lowdisc.generate_base(dim, count), "digital-shift", seed)
    b = lowdisc.randomize(lowdisc.generate_base(dim, count), "digital-shift", seed)
    assert a.points.shape == (count, dim)
    assert np.all(a.points >= 0.0) and np.all(a.points < 1.0)
    assert np.array_equal(a.points, b.points)
