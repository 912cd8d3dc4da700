import json
import math

import numpy as np
import pytest

from linflow.cli import main
from linflow.config import ConfigError, get_int, get_ladder, load_config, merge_config
from linflow.experiments import (
    commuting_test_family,
    default_config,
    diagonal_family,
    experiment_names,
    run_experiment,
    run_indexed,
)
from linflow.flows import commutative_ito_flow, euler_flow
from linflow.noise import TimeGrid, normal_stream, sample_wiener
from linflow.operators import operator_norm
from linflow.reporting import flow_frames_to_csv, format_value, write_csv
from linflow.stats import (
    MonteCarloNoiseError,
    holder_slope,
    jackknife_se,
    linear_fit,
    mc_moment,
    skorokhod_growth,
)


def test_jackknife_matches_classic_se():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(500)
    classic = x.std(ddof=1) / math.sqrt(x.size)
    assert jackknife_se(x) == pytest.approx(classic, rel=1e-10)


def test_linear_fit_recovers_exact_line():
    x = np.linspace(0, 1, 20)
    fit = linear_fit(x, 3.0 * x - 2.0)
    assert fit.slope == pytest.approx(3.0, abs=1e-12)
    assert fit.intercept == pytest.approx(-2.0, abs=1e-12)
    assert fit.slope_stderr == pytest.approx(0.0, abs=1e-10)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)


def test_mc_moment_deterministic_flow_zero_se():
    fam = commuting_test_family()
    zero_noise = type(fam)(drift=fam.drift, noise=())
    grid = TimeGrid(0.0, 1.0, 32)

    def builder(seed):
        return commutative_ito_flow(zero_noise, sample_wiener(grid, 1, seed))

    est = mc_moment(builder, 2.0, 8, 1)
    expected = operator_norm(
        commutative_ito_flow(zero_noise, sample_wiener(grid, 1, 0)).terminal) ** 2
    assert est.stderr == 0.0
    assert est.value == pytest.approx(expected, rel=1e-12)


def test_mc_moment_scalar_gbm_second_moment():
    # E|X(t)|^2 = exp(sigma^2 t) for the lognormal closed form
    sigma, t_end = 0.6, 1.0

    def builder(seed):
        w = normal_stream(seed, 0).standard_normal(1)[0] * math.sqrt(t_end)
        return np.array([[math.exp(sigma * w - 0.5 * sigma**2 * t_end)]])

    est = mc_moment(builder, 2.0, 20000, 77)
    assert abs(est.value - math.exp(sigma**2 * t_end)) <= 3 * est.stderr


def test_mc_moment_diagonal_bracketed_by_closed_forms():
    sigmas = np.array([0.6, 0.3])
    alphas = np.array([-0.2, 0.1])
    delta = 0.5

    def builder(seed):
        z = normal_stream(seed, 0).standard_normal(2)
        zeta = np.exp(sigmas * math.sqrt(delta) * z + (alphas - 0.5 * sigmas**2) * delta)
        return np.diag(zeta)

    est = mc_moment(builder, 2.0, 20000, 3)
    second = np.exp((2 * alphas + sigmas**2) * delta)
    assert est.value + 3 * est.stderr >= second.max()
    assert est.value - 3 * est.stderr <= second.sum()


def test_holder_slope_noise_error():
    def builder(seed, delta):
        # one wild heavy-tailed draw dominates: the stderr check must trip
        z = normal_stream(seed, 0).standard_normal(1)[0]
        return np.zeros((1, 1)), np.array([[math.exp(6 * z) * delta]])

    with pytest.raises(MonteCarloNoiseError, match="widen"):
        holder_slope(builder, 2, np.geomspace(0.01, 0.5, 5), 25, 5)


def test_holder_slope_deterministic_quadratic_scaling():
    # deterministic flow increments scale like delta^(2L)
    def builder(seed, delta):
        return np.array([[1.0]]), np.array([[1.0 + delta]])

    report = holder_slope(builder, 2, np.geomspace(0.01, 0.5, 6), 5, 0)
    assert report.slope == pytest.approx(4.0, abs=1e-9)
    assert report.passes_bound()


def test_holder_slope_two_parameter_version():
    # moments against |u-s| + |t-v| with (u, v) = (s+h, t-h) on shared noise
    sigmas = np.array([0.2, 0.15, 0.1, 0.05])
    s, t = 0.0, 1.0

    def builder(seed, h):
        z = normal_stream(seed, 0).standard_normal((3, 4))
        legs = [math.sqrt(h) * z[0], math.sqrt(t - s - 2 * h) * z[1],
                math.sqrt(h) * z[2]]
        def zeta(dw, dt):
            return np.exp(sigmas * dw - 0.5 * sigmas**2 * dt)
        inner = zeta(legs[1], t - s - 2 * h)
        full = inner * zeta(legs[0], h) * zeta(legs[2], h)
        return np.diag(inner), np.diag(full)

    report = holder_slope(builder, 2, np.geomspace(0.005, 0.3, 6), 4000, 11)
    assert report.slope >= 2 - 1 - 0.15


def test_skorokhod_growth_validations():
    with pytest.raises(ValueError):
        skorokhod_growth(0.0, 1.0, [2, 4], 3, 0)
    curve = skorokhod_growth(1.0, 1.0, [16, 64, 256], 9, 0)
    assert np.all(np.diff(curve.medians) >= 0)


def test_run_indexed_thread_count_invariance():
    def work(i):
        return float(np.sum(normal_stream(0, i).standard_normal(100)))

    serial = run_indexed(work, 16, 1)
    threaded = run_indexed(work, 16, 8)
    assert serial == threaded


# ---------------------------------------------------------------------------
# config and reporting
# ---------------------------------------------------------------------------

def test_merge_config_deep():
    merged = merge_config({"a": {"b": 1, "c": 2}, "d": 3}, {"a": {"b": 9}})
    assert merged == {"a": {"b": 9, "c": 2}, "d": 3}


def test_config_typed_getters():
    cfg = {"mc": {"n_paths": 10, "seed": 1}, "grid": {"n_ladder": [2, 4, 8]}}
    assert get_int(cfg, "mc.n_paths", minimum=1) == 10
    assert get_ladder(cfg, "grid.n_ladder") == [2, 4, 8]
    with pytest.raises(ConfigError, match="mc.n_paths"):
        get_int({"mc": {"n_paths": "many"}}, "mc.n_paths")
    with pytest.raises(ConfigError, match="missing"):
        get_int(cfg, "mc.n_draws")
    with pytest.raises(ConfigError, match="increasing"):
        get_ladder({"grid": {"n_ladder": [4, 2]}}, "grid.n_ladder")


def test_load_config_yaml(tmp_path):
    f = tmp_path / "c.yaml"
    f.write_text("experiment: three_series\nmodel:\n  k_max: 2000\n")
    cfg = load_config(f)
    assert cfg == {"experiment": "three_series", "model": {"k_max": 2000}}


def test_unknown_experiment_is_schema_error():
    with pytest.raises(ConfigError, match="unknown name"):
        run_experiment({"experiment": "does_not_exist"})
    with pytest.raises(ConfigError, match="required"):
        run_experiment({})
    with pytest.raises(ConfigError, match="unknown name"):
        default_config("nope")


def test_csv_format_full_precision(tmp_path):
    path = write_csv(tmp_path / "x.csv", ["a", "b"], [(1.0 / 3.0, 10), (True, "s")])
    lines = path.read_text().splitlines()
    assert lines[0] == "a,b"
    assert lines[1].startswith("0.33333333333333331")
    assert lines[2] == "true,s"
    assert format_value(np.float64(2.0)) == "2"


def test_flow_frames_csv_layout(tmp_path):
    fam = diagonal_family([0.5])
    paths = sample_wiener(TimeGrid(0.0, 1.0, 4), 1, 3)
    flow = euler_flow(None, fam, paths)
    path = flow_frames_to_csv(flow, tmp_path / "frames.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "time,m00"
    assert len(lines) == 6
    assert lines[1].split(",") == ["0", "1"]


def test_run_experiment_writes_verdict(tmp_path):
    cfg = merge_config(default_config("three_series"), {"model": {"k_max": 2000}})
    result = run_experiment(cfg, out_dir=tmp_path)
    assert result.passed
    verdict = json.loads(result.verdict_file.read_text())
    assert verdict["experiment"] == "three_series"
    assert verdict["passed"] is True
    assert all("threshold" in c for c in verdict["criteria"])
    assert (tmp_path / "three_series.csv").exists()


def test_experiment_registry_names():
    names = experiment_names()
    for expected in ("cross_solver_agreement", "inverse_flow_convergence",
                     "schatten_gamma", "picard_fixed_point", "orthogonality"):
        assert expected in names


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

def test_cli_unknown_experiment_exit_2(tmp_path):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("experiment: not_a_thing\n")
    code = main(["diagonal", "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert code == 2


def test_cli_three_series_runs(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("experiment: three_series\nmodel:\n  k_max: 2000\n")
    code = main(["diagonal", "--config", str(cfg), "--out", str(tmp_path / "o")])
    out = capsys.readouterr().out
    assert code == 0
    assert "[PASS]" in out
    assert (tmp_path / "o" / "three_series_verdict.json").exists()


def test_cli_seed_override(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("experiment: trace_plateau\nmodel:\n  k_max: 5000\n")
    out1 = tmp_path / "o1"
    out2 = tmp_path / "o2"
    assert main(["diagonal", "--config", str(cfg), "--out", str(out1), "--seed", "5"]) == 0
    assert main(["diagonal", "--config", str(cfg), "--out", str(out2), "--seed", "6"]) == 0
    a = (out1 / "trace_plateau.csv").read_bytes()
    b = (out2 / "trace_plateau.csv").read_bytes()
    assert a != b
