import math

import numpy as np
import pytest

from linflow.flows import euler_flow
from linflow.noise import TimeGrid, normal_stream, sample_wiener
from linflow.operators import OperatorFamily, TruncatedOperator, operator_norm
from linflow.operators import schatten_norm
from linflow.schatten import (
    PicardDivergenceError,
    SpectrumModel,
    apply_semigroup,
    check_smoothing,
    choose_lattice_cutoff,
    dirichlet_laplacian_spectrum,
    picard_mild_solver,
    schatten_norms_batch,
    semigroup_schatten_norm,
    semigroup_schatten_tail,
)


def test_semigroup_norm_single_zero_eigenvalue():
    spec = SpectrumModel(eigenvalues=[0.0])
    for t in (0.1, 1.0):
        for p in (1.0, 2.0, 4.0):
            assert semigroup_schatten_norm(spec, t, p) == pytest.approx(1.0, rel=1e-14)


def test_semigroup_norm_geometric_series():
    # lam_j = j, p = 1, t = 1: sum e^-j = 1/(e-1)
    spec = SpectrumModel(eigenvalues=np.arange(1, 60, dtype=float))
    value = semigroup_schatten_norm(spec, 1.0, 1.0)
    assert value == pytest.approx(1.0 / (math.e - 1.0), rel=1e-12)


def test_semigroup_norm_small_time_lattice_ratio():
    # 2-D lattice spectrum behaves like (1/(2tp))^(1/p) for small t
    spec = dirichlet_laplacian_spectrum(512)
    p = 3.0
    for t in (1e-4, 1e-3, 1e-2):
        value = semigroup_schatten_norm(spec, t, p)
        ratio = value / (1.0 / (2.0 * t * p)) ** (1.0 / p)
        assert 0.8 <= ratio <= 1.25


def test_semigroup_norm_decreasing_in_t_and_p():
    spec = dirichlet_laplacian_spectrum(40)
    values_t = [semigroup_schatten_norm(spec, t, 3.0) for t in (0.01, 0.1, 0.5, 1.0)]
    assert all(b < a for a, b in zip(values_t, values_t[1:]))
    values_p = [semigroup_schatten_norm(spec, 0.05, p) for p in (2.0, 3.0, 4.0, 6.0)]
    assert all(b < a for a, b in zip(values_p, values_p[1:]))


def test_semigroup_norm_validations():
    spec = SpectrumModel(eigenvalues=[1.0])
    with pytest.raises(ValueError):
        semigroup_schatten_norm(spec, 0.0, 2.0)
    with pytest.raises(ValueError):
        semigroup_schatten_norm(spec, 1.0, 0.5)
    with pytest.raises(ValueError):
        SpectrumModel(eigenvalues=[-1.0])


def test_dirichlet_spectrum_enumeration():
    assert np.array_equal(dirichlet_laplacian_spectrum(1).eigenvalues, [2.0])
    assert np.array_equal(dirichlet_laplacian_spectrum(2).eigenvalues, [2.0, 5.0, 5.0, 8.0])
    assert dirichlet_laplacian_spectrum(7).eigenvalues.size == 49


def test_lattice_tail_is_a_true_overestimate():
    big = dirichlet_laplacian_spectrum(256)
    small = dirichlet_laplacian_spectrum(32)
    for t in (0.01, 0.05):
        p = 2.0
        missing = (np.sum(np.exp(-p * t * big.eigenvalues))
                   - np.sum(np.exp(-p * t * small.eigenvalues)))
        bound = semigroup_schatten_tail(small, t, p)
        assert bound >= missing


def test_choose_lattice_cutoff_meets_tolerance():
    m = choose_lattice_cutoff(2.0, 1e-4, 1e-12)
    spec = dirichlet_laplacian_spectrum(min(m, 1024))
    assert semigroup_schatten_tail(spec, 1e-4, 2.0) <= 1e-12


def test_semigroup_ideal_property():
    # ||S(t) T||_p <= ||e^(tA)|| ||T||_p for random T
    spec = SpectrumModel(eigenvalues=[0.5, 1.0, 2.0, 4.0])
    rng = np.random.default_rng(3)
    for _ in range(50):
        t = rng.uniform(0.01, 2.0)
        m = rng.standard_normal((4, 4))
        lhs = schatten_norm(TruncatedOperator(apply_semigroup(spec, t, m)), 3.0)
        rhs = math.exp(-0.5 * t) * schatten_norm(TruncatedOperator(m), 3.0)
        assert lhs <= rhs * (1 + 1e-10)


def test_check_smoothing_gamma_matches_decay_rate():
    spec = dirichlet_laplacian_spectrum(512)
    t_grid = np.geomspace(1e-4, 1e-2, 12)
    for p in (2.5, 3.0, 4.0, 6.0):
        rep = check_smoothing(spec, p, t_grid)
        assert abs(rep.fitted_gamma - 1.0 / p) <= 0.05
        assert rep.r_squared >= 0.99
        assert rep.meets_smoothing_bound is True
        assert not rep.truncation_dominated
    rep2 = check_smoothing(spec, 2.0, t_grid)
    assert rep2.meets_smoothing_bound is False


def test_check_smoothing_flags_truncated_fit():
    # a fixed small spectrum saturates at small t: gamma near 0, flagged
    spec = SpectrumModel(eigenvalues=[2.0, 5.0, 5.0, 8.0])
    rep = check_smoothing(spec, 3.0, np.geomspace(1e-4, 1e-2, 12))
    assert rep.truncation_dominated
    assert abs(rep.fitted_gamma) < 0.1


def test_check_smoothing_validations():
    spec = dirichlet_laplacian_spectrum(8)
    with pytest.raises(ValueError, match="8 grid"):
        check_smoothing(spec, 3.0, np.geomspace(1e-3, 1e-2, 5))
    with pytest.raises(ValueError, match="log-spaced"):
        check_smoothing(spec, 3.0, np.linspace(0.001, 0.9, 12))
    with pytest.raises(ValueError, match="\\(0, 1\\]"):
        check_smoothing(spec, 3.0, np.geomspace(0.1, 2.0, 12))


def _bounded_noise_family(dim, norms, seed):
    def draw(index, norm):
        m = normal_stream(seed, index).standard_normal((dim, dim))
        return TruncatedOperator(m * norm / operator_norm(m))
    return OperatorFamily(drift=TruncatedOperator.zero(dim),
                          noise=tuple(draw(i + 1, s) for i, s in enumerate(norms)))


def test_picard_zero_noise_converges_immediately():
    spec = SpectrumModel(eigenvalues=[1.0, 2.0])
    fam = OperatorFamily(drift=TruncatedOperator.zero(2), noise=())
    paths = sample_wiener(TimeGrid(0.0, 1.0, 32), 1, 0)
    result = picard_mild_solver(spec, fam, paths, 2.0, 3)
    assert result.residuals[0] == 0.0
    expected = np.exp(-np.outer(paths.grid.points, spec.eigenvalues))
    for j in (0, 16, 32):
        assert np.allclose(np.diag(result.flow.frames[j]), expected[j], rtol=1e-14)


def test_picard_scalar_closed_form():
    lam, sigma = 1.5, 0.6
    spec = SpectrumModel(eigenvalues=[lam])
    fam = OperatorFamily(drift=TruncatedOperator.zero(1),
                         noise=(TruncatedOperator([[sigma]]),))
    grid = TimeGrid(0.0, 1.0, 2048)
    paths = sample_wiener(grid, 1, 8)
    result = picard_mild_solver(spec, fam, paths, 2.0, 30, stop_tol=1e-13)
    w = paths.values[0, -1]
    exact = math.exp(-lam + sigma * w - 0.5 * sigma**2)
    assert result.flow.terminal[0, 0] == pytest.approx(exact, abs=5 * math.sqrt(grid.dt))


def test_picard_fixed_point_is_exponential_euler():
    spec = dirichlet_laplacian_spectrum(2)
    fam = _bounded_noise_family(4, [0.3, 0.2], 11)
    grid = TimeGrid(0.0, 1.0, 256)
    paths = sample_wiener(grid, 2, 5)
    result = picard_mild_solver(spec, fam, paths, 3.0, 30, stop_tol=1e-13)
    reference = euler_flow(TruncatedOperator.diagonal(-spec.eigenvalues), fam, paths)
    gap = float(np.max(schatten_norms_batch(result.flow.frames - reference.frames, 3.0)))
    assert gap <= 1e-10


def test_picard_residuals_contract_and_shrink_with_horizon():
    spec = dirichlet_laplacian_spectrum(2)
    fam = _bounded_noise_family(4, [0.3, 0.2], 11)

    def late_ratio(t_end):
        grid = TimeGrid(0.0, t_end, 512)
        paths = sample_wiener(grid, 2, 5)
        res = picard_mild_solver(spec, fam, paths, 3.0, 12, stop_tol=1e-11)
        r = res.residuals
        return float(np.max(r[3:] / r[2:-1])) if r.size > 3 else 0.0

    full, half = late_ratio(1.0), late_ratio(0.5)
    assert full < 0.9
    assert half < full


def test_picard_divergence_raises_with_factor():
    # large noise over a long horizon: the iteration map is expanding
    spec = SpectrumModel(eigenvalues=np.zeros(2))
    fam = _bounded_noise_family(2, [3.0], 4)
    paths = sample_wiener(TimeGrid(0.0, 4.0, 64), 1, 9)
    with pytest.raises(PicardDivergenceError) as err:
        picard_mild_solver(spec, fam, paths, 2.0, 40)
    assert err.value.contraction_estimate > 1.0


def test_picard_dimension_validation():
    spec = SpectrumModel(eigenvalues=[1.0, 2.0, 3.0])
    fam = _bounded_noise_family(2, [0.1], 1)
    paths = sample_wiener(TimeGrid(0.0, 1.0, 8), 1, 0)
    with pytest.raises(Exception, match="dimension|truncation"):
        picard_mild_solver(spec, fam, paths, 2.0, 3)
