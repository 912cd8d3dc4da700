import math

import numpy as np
import pytest
from scipy.stats import jarque_bera

from linflow.noise import (
    TimeGrid,
    load_paths,
    normal_stream,
    sample_brownian_sheet,
    sample_homogeneous_field,
    sample_wiener,
    save_paths,
    sup_statistic,
)
from linflow.stats import linear_fit


def test_grid_validation():
    with pytest.raises(ValueError):
        TimeGrid(1.0, 1.0, 4)
    with pytest.raises(ValueError):
        TimeGrid(0.0, 1.0, 0)
    g = TimeGrid(0.25, 1.25, 8)
    assert g.points[0] == 0.25 and g.points[-1] == 1.25
    assert np.all(np.diff(g.points) > 0)


def test_paths_start_at_zero():
    p = sample_wiener(TimeGrid(0.0, 2.0, 37), 4, 99)
    assert np.all(p.values[:, 0] == 0.0)


def test_determinism_bitwise():
    g = TimeGrid(0.0, 1.0, 64)
    a = sample_wiener(g, 3, 42)
    b = sample_wiener(g, 3, 42)
    assert np.array_equal(a.values, b.values)
    c = sample_wiener(g, 3, 43)
    assert not np.array_equal(a.values, c.values)


def test_path_extension_consistency():
    g = TimeGrid(0.0, 1.0, 128)
    small = sample_wiener(g, 3, 7)
    big = sample_wiener(g, 5, 7)
    assert np.array_equal(small.values, big.values[:3])


def test_grid_refinement_consistency():
    for steps in (64, 96):  # power of two and even-with-odd-part
        coarse = sample_wiener(TimeGrid(0.0, 1.5, steps), 2, 11)
        fine = sample_wiener(TimeGrid(0.0, 1.5, 2 * steps), 2, 11)
        assert np.array_equal(fine.values[:, ::2], coarse.values)


def test_increment_variance_within_two_percent():
    # 10^5 pooled increments; the sample variance concentrates within 2%
    g = TimeGrid(0.0, 1.0, 1000)
    p = sample_wiener(g, 100, 5)
    increments = p.increments.ravel()
    ratio = increments.var() / g.dt
    assert 0.98 <= ratio <= 1.02


def test_normality_jarque_bera():
    g = TimeGrid(0.0, 1.0, 1000)
    p = sample_wiener(g, 100, 17)
    z = p.increments.ravel() / math.sqrt(g.dt)
    assert jarque_bera(z).pvalue > 1e-3


def test_binary_dump_roundtrip(tmp_path):
    p = sample_wiener(TimeGrid(0.0, 0.75, 33), 4, 123456789)
    f = tmp_path / "paths.bin"
    save_paths(p, f)
    q = load_paths(f)
    assert q.seed == p.seed
    assert q.K == p.K
    assert q.grid.steps == p.grid.steps
    assert q.grid.dt == pytest.approx(p.grid.dt, rel=0, abs=0)
    assert np.array_equal(q.values, p.values)
    # header layout: seed, N, K, dt as little-endian 64-bit words
    raw = f.read_bytes()
    assert int.from_bytes(raw[0:8], "little") == 123456789
    assert int.from_bytes(raw[8:16], "little") == 33
    assert int.from_bytes(raw[16:24], "little") == 4


def test_sheet_zero_on_boundary_and_determinism():
    t = TimeGrid(0.0, 1.0, 4)
    axes = [np.array([0.0, 0.5, 1.0]), np.array([0.25, 0.75])]
    s1 = sample_brownian_sheet(t, axes, 9)
    s2 = sample_brownian_sheet(t, axes, 9)
    assert np.array_equal(s1.values, s2.values)
    assert np.all(s1.values[0] == 0.0)       # t = 0
    assert np.all(s1.values[:, 0, :] == 0.0)  # xi_1 = 0


def test_sheet_rejects_unbounded_domain():
    with pytest.raises(ValueError, match="finite"):
        sample_brownian_sheet(TimeGrid(0.0, 1.0, 2), [np.array([1.0, np.inf])], 0)


def test_sheet_variance_and_covariance_monte_carlo():
    # node variance t * prod(xi), two-node covariance (t ^ s) prod(xi ^ eta)
    t = TimeGrid(0.0, 1.0, 2)
    axes = [np.array([0.3, 0.7])]
    n = 10**5
    at_node = np.empty(n)
    pair = np.empty((n, 2))
    for i in range(n):
        sh = sample_brownian_sheet(t, axes, 10_000 + i)
        at_node[i] = sh.values[-1, 1]
        pair[i] = sh.values[1, 0], sh.values[-1, 1]
    var = at_node.var()
    se_var = var * math.sqrt(2.0 / n)
    assert abs(var - 0.7) <= 3 * se_var
    prod = pair[:, 0] * pair[:, 1]
    cov = prod.mean()
    se_cov = prod.std(ddof=1) / math.sqrt(n)
    assert abs(cov - 0.5 * 0.3) <= 3 * se_cov


def test_field_single_term_is_brownian_constant_in_space():
    t = TimeGrid(0.0, 1.0, 16)
    field = sample_homogeneous_field([1.0], [[0.0]], t, [[0.0], [2.0], [-5.0]], 3)
    w = sample_wiener(t, 2, 3).values[0]
    for col in range(3):
        assert np.allclose(field[:, col], w, rtol=0, atol=1e-12)


def test_field_variance_and_shift_invariance():
    amps = [0.5, 0.3]
    freqs = [[1.0], [2.5]]
    pts = [[0.0], [1.7], [10.0], [11.7]]
    t = TimeGrid(0.0, 1.0, 1)
    n = 4 * 10**4
    samples = np.empty((n, 4))
    for i in range(n):
        samples[i] = sample_homogeneous_field(amps, freqs, t, pts, 200_000 + i)[-1]
    total = sum(a * a for a in amps)
    var = samples.var(axis=0)
    se = total * math.sqrt(2.0 / n)
    assert np.all(np.abs(var - total) <= 3 * se)
    # two-point covariance depends on the separation only
    cov_a = (samples[:, 0] * samples[:, 1]).mean()
    cov_b = (samples[:, 2] * samples[:, 3]).mean()
    se_a = (samples[:, 0] * samples[:, 1]).std(ddof=1) / math.sqrt(n)
    se_b = (samples[:, 2] * samples[:, 3]).std(ddof=1) / math.sqrt(n)
    analytic = sum(a * a * math.cos(1.7 * f[0]) for a, f in zip(amps, freqs))
    assert abs(cov_a - analytic) <= 3 * se_a
    assert abs(cov_b - analytic) <= 3 * se_b
    assert abs(cov_a - cov_b) <= 3 * math.hypot(se_a, se_b)


def test_sup_statistic_zero_transform():
    assert sup_statistic(np.zeros(10)) == 0.0


def test_sup_statistic_extreme_value_growth():
    # max of K standard normals grows like sqrt(2 log K); the median against
    # sqrt(log K) has slope sqrt(2) up to a finite-K correction within 15%
    ladder = [2**j for j in range(6, 15)]
    n_seeds = 200
    medians = []
    draws = [normal_stream(7000 + i, 0).standard_normal(ladder[-1]) for i in range(n_seeds)]
    for k in ladder:
        medians.append(np.median([sup_statistic(z[:k]) for z in draws]))
    fit = linear_fit(np.sqrt(np.log(ladder)), medians)
    assert abs(fit.slope - math.sqrt(2.0)) <= 0.15 * math.sqrt(2.0)


def test_sup_statistic_bounded_for_decaying_weights():
    # weights 1/k^2 pin the supremum to the first indices; the median stops
    # moving between K = 2^10 and 2^14 (same draws, prefix consistency)
    small, big = [], []
    for i in range(200):
        z = normal_stream(8000 + i, 0).standard_normal(2**14)
        weighted = lambda k, v: v / k**2
        small.append(sup_statistic(z[: 2**10], weighted))
        big.append(sup_statistic(z, weighted))
    assert np.median(big) == pytest.approx(np.median(small), abs=1e-12)
