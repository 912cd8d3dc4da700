"""Named experiments: each ties one checkable claim to a runnable,
deterministic procedure with CSV artifacts and a machine-readable verdict.

Every experiment is a pure function of its configuration; reruns with the
same configuration produce bit-identical CSV files, and the thread count
only distributes independent per-seed work (results are reduced in index
order), so it never changes numbers.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import diagonal as diag
from . import rules
from .config import (
    ConfigError,
    get_float,
    get_floats,
    get_int,
    get_ladder,
    merge_config,
)
from .flows import (
    ChaosConfig,
    chaos_flow,
    chaos_tail_bound,
    commutative_ito_flow,
    commutative_strat_flow,
    euler_flow,
    inverse_flow,
)
from .noise import TimeGrid, normal_stream, sample_wiener
from .operators import OperatorFamily, TruncatedOperator, operator_norm
from .reporting import (
    Criterion,
    flow_frames_to_csv,
    three_series_to_csv,
    trace_to_csv,
    write_csv,
    write_verdict,
)
from .schatten import (
    choose_lattice_cutoff,
    check_smoothing,
    dirichlet_laplacian_spectrum,
    picard_mild_solver,
    schatten_norms_batch,
)
from .stats import holder_slope, linear_fit, skorokhod_growth


def run_indexed(fn, n: int, threads: int) -> list:
    """Evaluate fn(0..n-1), optionally on a thread pool; results keep index order."""
    if threads <= 1 or n <= 1:
        return [fn(i) for i in range(n)]
    results = [None] * n
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = {pool.submit(fn, i): i for i in range(n)}
        for fut in futures:
            results[futures[fut]] = fut.result()
    return results


# ---------------------------------------------------------------------------
# fixture families
# ---------------------------------------------------------------------------

_COMMUTING_CORE = np.array([
    [0.60, 0.20, 0.00, 0.10],
    [0.20, 0.50, 0.30, 0.00],
    [0.00, 0.30, 0.40, 0.20],
    [0.10, 0.00, 0.20, 0.70],
])


def commuting_test_family() -> OperatorFamily:
    """Commuting non-diagonal 4x4 family: polynomials in one symmetric core."""
    c = _COMMUTING_CORE
    return OperatorFamily(
        drift=TruncatedOperator(0.15 * c - 0.05 * np.eye(4)),
        noise=(
            TruncatedOperator(0.35 * c),
            TruncatedOperator(0.25 * (c @ c) - 0.10 * c),
        ),
    )


def random_family(dim: int, drift_norm: float, noise_norms, seed: int) -> OperatorFamily:
    """Generic dense family with prescribed operator norms (deterministic in seed)."""
    def draw(index: int, norm: float) -> TruncatedOperator:
        m = normal_stream(seed, index).standard_normal((dim, dim))
        return TruncatedOperator(m * (norm / operator_norm(m)))

    return OperatorFamily(
        drift=draw(0, drift_norm),
        noise=tuple(draw(i + 1, s) for i, s in enumerate(noise_norms)),
    )


def skew_commuting_family() -> OperatorFamily:
    """Two commuting skew-symmetric 4x4 operators (shared rotation blocks)."""
    def blocks(a: float, b: float) -> np.ndarray:
        j = np.array([[0.0, 1.0], [-1.0, 0.0]])
        out = np.zeros((4, 4))
        out[:2, :2] = a * j
        out[2:, 2:] = b * j
        return out

    return OperatorFamily(
        drift=TruncatedOperator.zero(4),
        noise=(TruncatedOperator(blocks(0.8, 0.3)),
               TruncatedOperator(blocks(-0.2, 0.5))),
    )


def diagonal_family(sigmas) -> OperatorFamily:
    """Diagonal family sigma_k e_k (x) e_k with zero drift."""
    sigmas = np.asarray(sigmas, dtype=np.float64)
    dim = sigmas.size
    noise = []
    for k, s in enumerate(sigmas, start=1):
        m = np.zeros((dim, dim))
        m[k - 1, k - 1] = s
        noise.append(TruncatedOperator(m))
    return OperatorFamily(drift=TruncatedOperator.zero(dim), noise=tuple(noise))


# ---------------------------------------------------------------------------
# registry plumbing
# ---------------------------------------------------------------------------

@dataclass
class ExperimentResult:
    name: str
    criteria: list[Criterion]
    csv_files: list[Path] = field(default_factory=list)
    verdict_file: Path | None = None
    wall_time_s: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.criteria)


_REGISTRY: dict[str, tuple[dict, object]] = {}


def _experiment(name: str, defaults: dict):
    def deco(fn):
        _REGISTRY[name] = (defaults, fn)
        return fn
    return deco


def experiment_names() -> list[str]:
    return list(_REGISTRY)


def default_config(name: str) -> dict:
    if name not in _REGISTRY:
        raise ConfigError(f"experiment: unknown name {name!r}; "
                          f"known: {', '.join(_REGISTRY)}")
    return merge_config(_REGISTRY[name][0], {"experiment": name})


def run_experiment(config: dict, *, out_dir=".", threads: int = 1) -> ExperimentResult:
    """Run one named experiment end to end and write CSV + verdict files."""
    if "experiment" not in config:
        raise ConfigError("experiment: required field is missing")
    name = config["experiment"]
    if name not in _REGISTRY:
        raise ConfigError(f"experiment: unknown name {name!r}; "
                          f"known: {', '.join(_REGISTRY)}")
    defaults, runner = _REGISTRY[name]
    cfg = merge_config(defaults, config)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    criteria, csv_files = runner(cfg, out, threads)
    wall = time.perf_counter() - start
    budget = cfg.get("runtime_budget_s")
    if budget is not None:
        criteria.append(Criterion("runtime_s", wall < budget, wall, f"< {budget} s"))
    verdict = write_verdict(out / f"{name}_verdict.json", name, criteria, cfg, wall)
    return ExperimentResult(name=name, criteria=criteria, csv_files=csv_files,
                            verdict_file=verdict, wall_time_s=wall)


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

@_experiment("cross_solver_agreement", {
    "grid": {"s": 0.0, "t_end": 1.0},
    "mc": {"seed": 2026},
    "solver": {"n_fine": 16384, "chaos_order": 8,
               "n_ladder": [128, 256, 512, 1024, 2048, 4096, 8192, 16384],
               "frames_csv_steps": 512},
    "tolerances": {"pairwise": 1e-2, "slope": [0.4, 0.6]},
    "runtime_budget_s": 60,
})
def _run_cross_solver(cfg, out, threads):
    family = commuting_test_family()
    s = get_float(cfg, "grid.s")
    t_end = get_float(cfg, "grid.t_end")
    seed = get_int(cfg, "mc.seed", minimum=0)
    n_fine = get_int(cfg, "solver.n_fine", minimum=2)
    order = get_int(cfg, "solver.chaos_order", minimum=1)
    ladder = get_ladder(cfg, "solver.n_ladder")
    tol_pair = get_float(cfg, "tolerances.pairwise", minimum=0.0)
    slope_lo, slope_hi = get_floats(cfg, "tolerances.slope")

    grid = TimeGrid(s, t_end, n_fine)
    paths = sample_wiener(grid, family.n_noise, seed)
    eu = euler_flow(None, family, paths)
    ch = chaos_flow(family, paths, ChaosConfig(order, family.n_noise))
    ci = commutative_ito_flow(family, paths)
    gaps = {
        ("euler", "chaos"): operator_norm(eu.terminal - ch.terminal),
        ("euler", "commutative_ito"): operator_norm(eu.terminal - ci.terminal),
        ("chaos", "commutative_ito"): operator_norm(ch.terminal - ci.terminal),
    }

    def ladder_gap(i):
        n = ladder[i]
        p = sample_wiener(TimeGrid(s, t_end, n), family.n_noise, seed)
        return operator_norm(euler_flow(None, family, p).terminal - ci.terminal)

    ladder_gaps = run_indexed(ladder_gap, len(ladder), threads)
    dts = [(t_end - s) / n for n in ladder]
    fit = linear_fit(np.log(dts), np.log(ladder_gaps))

    csvs = [
        write_csv(out / "cross_solver_gaps.csv", ["solver_a", "solver_b", "gap"],
                  [(a, b, g) for (a, b), g in gaps.items()]),
        write_csv(out / "cross_solver_ladder.csv", ["n_steps", "dt", "gap"],
                  zip(ladder, dts, ladder_gaps)),
    ]
    n_frames = get_int(cfg, "solver.frames_csv_steps", minimum=2)
    demo = euler_flow(None, family, sample_wiener(TimeGrid(s, t_end, n_frames),
                                                  family.n_noise, seed))
    csvs.append(flow_frames_to_csv(demo, out / "euler_frames.csv"))

    criteria = [
        Criterion(f"gap_{a}_{b}", g <= tol_pair, g, f"<= {tol_pair}")
        for (a, b), g in gaps.items()
    ]
    criteria.append(Criterion("euler_gap_slope",
                              slope_lo <= fit.slope <= slope_hi, fit.slope,
                              f"in [{slope_lo}, {slope_hi}]"))
    return criteria, csvs


@_experiment("chaos_expansion", {
    "grid": {"s": 0.0, "t_end": 1.0},
    "mc": {"seed": 2026},
    "solver": {"n_steps": 4096, "orders": [1, 2, 3, 4, 5, 6, 7, 8], "reference_order": 10,
               "L": 2},
    "tolerances": {"final_gap": 1e-2, "decay_ratio": 0.25},
    "runtime_budget_s": 60,
})
def _run_chaos_expansion(cfg, out, threads):
    del threads
    family = commuting_test_family()
    s = get_float(cfg, "grid.s")
    t_end = get_float(cfg, "grid.t_end")
    seed = get_int(cfg, "mc.seed", minimum=0)
    n = get_int(cfg, "solver.n_steps", minimum=2)
    orders = get_ladder(cfg, "solver.orders")
    ref_order = get_int(cfg, "solver.reference_order", minimum=max(orders) + 1)
    L = get_int(cfg, "solver.L", minimum=1)
    tol_final = get_float(cfg, "tolerances.final_gap", minimum=0.0)
    decay = get_float(cfg, "tolerances.decay_ratio", minimum=0.0)

    grid = TimeGrid(s, t_end, n)
    paths = sample_wiener(grid, family.n_noise, seed)
    reference = chaos_flow(family, paths, ChaosConfig(ref_order, family.n_noise)).terminal
    gaps, bounds = [], []
    for order in orders:
        frame = chaos_flow(family, paths, ChaosConfig(order, family.n_noise)).terminal
        gaps.append(operator_norm(frame - reference))
        bounds.append(chaos_tail_bound(family.M, t_end - s, L, order))
    csvs = [write_csv(out / "chaos_orders.csv", ["order", "gap_to_reference", "tail_bound"],
                      zip(orders, gaps, bounds))]
    # skip-one ratios are robust against accidental near-cancellations at a
    # single order; factorial decay keeps them far below the threshold
    ratios = [b / a for a, b in zip(gaps, gaps[2:]) if a > 0]
    criteria = [
        Criterion("final_gap", gaps[-1] <= tol_final, gaps[-1], f"<= {tol_final}"),
        Criterion("gap_decay", all(r < decay for r in ratios),
                  max(ratios) if ratios else 0.0, f"order-(n+2) to order-n ratios < {decay}"),
        Criterion("tail_bound_decreasing",
                  all(b2 < b1 for b1, b2 in zip(bounds, bounds[1:])),
                  bounds[-1], "strictly decreasing in the order"),
    ]
    return criteria, csvs


@_experiment("inverse_flow_convergence", {
    "grid": {"s": 0.0, "t_end": 1.0, "n_ladder": [256, 512, 1024, 2048, 4096, 8192]},
    "mc": {"n_paths": 100, "seed": 2026},
    "model": {"dim": 3, "drift_norm": 0.4, "noise_norms": [0.3, 0.25], "seed": 7},
    "tolerances": {"slope": [0.4, 0.6]},
    "runtime_budget_s": 120,
})
def _run_inverse_flow(cfg, out, threads):
    s = get_float(cfg, "grid.s")
    t_end = get_float(cfg, "grid.t_end")
    ladder = get_ladder(cfg, "grid.n_ladder")
    n_paths = get_int(cfg, "mc.n_paths", minimum=1)
    seed = get_int(cfg, "mc.seed", minimum=0)
    family = random_family(
        get_int(cfg, "model.dim", minimum=1),
        get_float(cfg, "model.drift_norm", minimum=0.0),
        get_floats(cfg, "model.noise_norms"),
        get_int(cfg, "model.seed", minimum=0),
    )
    slope_lo, slope_hi = get_floats(cfg, "tolerances.slope")
    eye = np.eye(family.dim)

    def one_path(i):
        defects = np.empty(len(ladder))
        for j, n in enumerate(ladder):
            paths = sample_wiener(TimeGrid(s, t_end, n), family.n_noise, seed + i)
            forward = euler_flow(None, family, paths)
            dual = inverse_flow(None, family, paths)
            defects[j] = operator_norm(dual.terminal.T @ forward.terminal - eye)
        return defects

    defects = np.vstack(run_indexed(one_path, n_paths, threads))
    means = defects.mean(axis=0)
    stderrs = defects.std(axis=0, ddof=1) / math.sqrt(n_paths)
    dts = [(t_end - s) / n for n in ladder]
    fit = linear_fit(np.log(dts), np.log(means))
    csvs = [write_csv(out / "inverse_flow_ladder.csv",
                      ["n_steps", "dt", "mean_defect", "stderr"],
                      zip(ladder, dts, means, stderrs))]
    criteria = [Criterion("inverse_defect_slope",
                          slope_lo <= fit.slope <= slope_hi, fit.slope,
                          f"in [{slope_lo}, {slope_hi}]")]
    return criteria, csvs


@_experiment("moment_bound", {
    "mc": {"n_paths": 10000, "seed": 2026},
    "model": {"sigmas": [0.2, 0.15, 0.1, 0.05], "base_time": 0.5},
    "solver": {"L": 2, "delta_min": 0.01, "delta_max": 0.5, "n_deltas": 8},
    "tolerances": {"slope_min": 0.85},
    "runtime_budget_s": 300,
})
def _run_moment_bound(cfg, out, threads):
    del threads
    sigmas = np.asarray(get_floats(cfg, "model.sigmas"))
    base_time = get_float(cfg, "model.base_time", minimum=0.0)
    L = get_int(cfg, "solver.L", minimum=1)
    n_paths = get_int(cfg, "mc.n_paths", minimum=2)
    seed = get_int(cfg, "mc.seed", minimum=0)
    deltas = np.geomspace(get_float(cfg, "solver.delta_min", minimum=0.0),
                          get_float(cfg, "solver.delta_max", minimum=0.0),
                          get_int(cfg, "solver.n_deltas", minimum=3))
    slope_min = get_float(cfg, "tolerances.slope_min")

    def pair_builder(path_seed, delta):
        z1 = normal_stream(path_seed, 1).standard_normal(sigmas.size)
        z2 = normal_stream(path_seed, 2).standard_normal(sigmas.size)
        zeta_u = np.exp(sigmas * math.sqrt(base_time) * z1 - 0.5 * sigmas**2 * base_time)
        zeta_d = np.exp(sigmas * math.sqrt(delta) * z2 - 0.5 * sigmas**2 * delta)
        return np.diag(zeta_u), np.diag(zeta_u * zeta_d)

    report = holder_slope(pair_builder, L, deltas, n_paths, seed)
    csvs = [write_csv(out / "moment_bound_ladder.csv",
                      ["delta", "moment", "stderr"],
                      zip(report.deltas, report.moments, report.stderrs))]
    criteria = [Criterion("increment_moment_slope", report.slope >= slope_min,
                          report.slope, f">= {slope_min}")]
    return criteria, csvs


@_experiment("diagonal_moments", {
    "mc": {"n_draws": 100000, "seed": 2032},
    "model": {"alphas": [-1.0, 0.0, 0.5], "sigmas": [0.0, 0.7, 1.5],
              "s": 0.0, "t": 0.5},
    "tolerances": {"n_stderr": 3.0},
    "runtime_budget_s": 60,
})
def _run_diagonal_moments(cfg, out, threads):
    del threads
    alphas = get_floats(cfg, "model.alphas")
    sigmas = get_floats(cfg, "model.sigmas")
    s = get_float(cfg, "model.s")
    t = get_float(cfg, "model.t")
    n_draws = get_int(cfg, "mc.n_draws", minimum=2)
    seed = get_int(cfg, "mc.seed", minimum=0)
    n_se = get_float(cfg, "tolerances.n_stderr", minimum=0.0)
    delta = t - s

    rows = []
    worst = 0.0
    all_pass = True
    for idx, (a, sg) in enumerate((a, sg) for a in alphas for sg in sigmas):
        z = normal_stream(seed, idx).standard_normal(n_draws)
        zeta = np.exp(sg * math.sqrt(delta) * z + (a - 0.5 * sg**2) * delta)
        mean, mean_se = zeta.mean(), zeta.std(ddof=1) / math.sqrt(n_draws)
        zeta2 = zeta**2
        m2, m2_se = zeta2.mean(), zeta2.std(ddof=1) / math.sqrt(n_draws)
        exact_mean = math.exp(a * delta)
        exact_m2 = math.exp((2 * a + sg**2) * delta)
        ok = (abs(mean - exact_mean) <= n_se * mean_se + 1e-12
              and abs(m2 - exact_m2) <= n_se * m2_se + 1e-12)
        all_pass &= ok
        for diff, se in ((mean - exact_mean, mean_se), (m2 - exact_m2, m2_se)):
            # deterministic entries (sigma = 0) agree to rounding; only count
            # genuinely stochastic deviations against their standard errors
            if abs(diff) > 1e-12 and se > 0:
                worst = max(worst, abs(diff) / se)
        rows.append((a, sg, mean, mean_se, exact_mean, m2, m2_se, exact_m2, ok))
    csvs = [write_csv(out / "diagonal_moments.csv",
                      ["alpha", "sigma", "mean", "mean_se", "mean_exact",
                       "second_moment", "second_moment_se", "second_moment_exact",
                       "within_band"],
                      rows)]
    criteria = [Criterion("moments_within_3se", all_pass, worst,
                          f"all deviations <= {n_se} standard errors")]
    return criteria, csvs


@_experiment("skorokhod_growth", {
    "mc": {"n_seeds": 100, "seed": 2026},
    "model": {"sigma": 1.0, "delta": 1.0,
              "k_ladder": [64, 256, 1024, 4096, 16384, 65536]},
    "tolerances": {"final_over_initial": 5.0, "reference_band": [0.3, 3.0]},
    "runtime_budget_s": 120,
})
def _run_skorokhod(cfg, out, threads):
    del threads
    sigma = get_float(cfg, "model.sigma", minimum=0.0)
    delta = get_float(cfg, "model.delta", minimum=0.0)
    ladder = get_ladder(cfg, "model.k_ladder")
    n_seeds = get_int(cfg, "mc.n_seeds", minimum=1)
    seed = get_int(cfg, "mc.seed", minimum=0)
    ratio_min = get_float(cfg, "tolerances.final_over_initial", minimum=0.0)
    band_lo, band_hi = get_floats(cfg, "tolerances.reference_band")

    curve = skorokhod_growth(sigma, delta, ladder, n_seeds, seed)
    ratios = curve.ratios
    csvs = [write_csv(out / "skorokhod_growth.csv",
                      ["K", "median_max", "reference", "ratio"],
                      zip(curve.k_ladder, curve.medians, curve.reference, ratios))]
    growth = curve.medians[-1] / curve.medians[0]
    criteria = [
        Criterion("median_monotone", bool(np.all(np.diff(curve.medians) >= 0)),
                  float(np.min(np.diff(curve.medians))), "nondecreasing in K"),
        Criterion("growth_ratio", growth > ratio_min, growth, f"> {ratio_min}"),
        Criterion("reference_band",
                  bool(np.all((ratios >= band_lo) & (ratios <= band_hi))),
                  float(ratios[-1]), f"in [{band_lo}, {band_hi}]"),
    ]
    return criteria, csvs


@_experiment("trace_plateau", {
    "mc": {"seed": 2026},
    "model": {"s": 0.0, "t": 4.0, "k_max": 100000},
    "tolerances": {"relative_change": 1e-4},
    "runtime_budget_s": 120,
})
def _run_trace_plateau(cfg, out, threads):
    del threads
    s = get_float(cfg, "model.s")
    t = get_float(cfg, "model.t")
    k_max = get_int(cfg, "model.k_max", minimum=100)
    seed = get_int(cfg, "mc.seed", minimum=0)
    tol = get_float(cfg, "tolerances.relative_change", minimum=0.0)

    model = diag.DiagonalModel(alpha=rules.constant(0.0),
                               sigma=rules.log_power(1.0, 1.0), cutoff=k_max)
    trace = diag.sample_trace(model, s, t, seed, k_max)
    change = ((trace.partial_sums[-1] - trace.partial_sums[k_max // 10 - 1])
              / trace.partial_sums[-1])
    classification = diag.classify_spectrum(model, s, t).classification
    csvs = [trace_to_csv(trace, out / "trace_plateau.csv")]
    criteria = [
        Criterion("sampled_trace_plateau", change < tol, change,
                  f"relative change over the last decade < {tol}"),
        Criterion("mean_trace_diverges",
                  trace.analytic_mean[-1] == float(k_max),
                  trace.analytic_mean[-1], f"analytic mean = K = {k_max}"),
        Criterion("classification", classification == diag.TRACE_CLASS_AS,
                  classification, "trace_class_as"),
    ]
    return criteria, csvs


@_experiment("three_series", {
    "model": {"s": 0.0, "t": 1.0, "k_max": 100000},
    "runtime_budget_s": 60,
})
def _run_three_series(cfg, out, threads):
    del threads
    s = get_float(cfg, "model.s")
    t = get_float(cfg, "model.t")
    k_max = get_int(cfg, "model.k_max", minimum=100)
    model = diag.DiagonalModel(alpha=rules.constant(0.0),
                               sigma=rules.log_power(1.0, 1.0), cutoff=k_max)
    report = diag.three_series_diagnostic(model, s, t, k_max)
    csvs = [three_series_to_csv(report, out / "three_series.csv")]
    names = ("prob_exceed", "mean_truncated", "var_truncated")
    criteria = [
        Criterion(f"{name}_converges", verdict,
                  float(r[-1]) if r.size else 0.0,
                  f"last {diag.SUSTAINED_BLOCKS} block ratios < {diag.TAIL_RATIO_BOUND}")
        for name, verdict, r in zip(names, report.verdicts, report.block_ratios)
    ]
    margin = float(np.max(report.var_truncated - report.mean_truncated))
    criteria.append(Criterion("var_below_mean_termwise", margin <= 0.0,
                              margin, "Var Y_k <= E Y_k for every k"))
    return criteria, csvs


@_experiment("schatten_gamma", {
    "model": {"p_values": [2.0, 2.5, 3.0, 4.0, 6.0], "lattice_n_max": 0},
    "solver": {"t_min": 1e-4, "t_max": 1e-2, "n_times": 12, "tail_tol": 1e-12},
    "tolerances": {"gamma_band": 0.05},
    "runtime_budget_s": 60,
})
def _run_schatten_gamma(cfg, out, threads):
    del threads
    p_values = get_floats(cfg, "model.p_values")
    t_min = get_float(cfg, "solver.t_min", minimum=0.0)
    t_max = get_float(cfg, "solver.t_max", minimum=0.0)
    n_times = get_int(cfg, "solver.n_times", minimum=8)
    tail_tol = get_float(cfg, "solver.tail_tol", minimum=0.0)
    band = get_float(cfg, "tolerances.gamma_band", minimum=0.0)
    n_max = get_int(cfg, "model.lattice_n_max", minimum=0)
    if n_max == 0:
        n_max = choose_lattice_cutoff(min(p_values), t_min, tail_tol)
    spec = dirichlet_laplacian_spectrum(n_max)
    t_grid = np.geomspace(t_min, t_max, n_times)

    rows, curve_rows = [], []
    reports = {}
    for p in p_values:
        rep = check_smoothing(spec, p, t_grid)
        reports[p] = rep
        rows.append((p, rep.fitted_gamma, rep.stderr, rep.r_squared,
                     "true" if rep.meets_smoothing_bound
                     else "false" if rep.meets_smoothing_bound is False
                     else "undetermined",
                     rep.truncation_dominated))
        curve_rows.extend((p, t, v) for t, v in zip(rep.t_grid, rep.norms))
    csvs = [
        write_csv(out / "schatten_gamma.csv",
                  ["p", "fitted_gamma", "stderr", "r_squared",
                   "meets_smoothing_bound", "truncation_dominated"], rows),
        write_csv(out / "schatten_norm_curves.csv", ["p", "t", "norm"], curve_rows),
    ]
    criteria = []
    for p in p_values:
        if p <= 2.0:
            continue
        gamma = reports[p].fitted_gamma
        criteria.append(Criterion(f"gamma_p{p:g}", abs(gamma - 1.0 / p) <= band,
                                  gamma, f"within {band} of {1.0 / p:.4f}"))
    if 2.0 in [float(p) for p in p_values]:
        criteria.append(Criterion("smoothing_verdict_p2",
                                  reports[2.0].meets_smoothing_bound is False,
                                  str(reports[2.0].meets_smoothing_bound), "false"))
    if 3.0 in [float(p) for p in p_values]:
        criteria.append(Criterion("smoothing_verdict_p3",
                                  reports[3.0].meets_smoothing_bound is True,
                                  str(reports[3.0].meets_smoothing_bound), "true"))
    return criteria, csvs


@_experiment("picard_fixed_point", {
    "grid": {"s": 0.0, "t_end": 1.0, "n_steps": 1024},
    "mc": {"seed": 2026},
    "model": {"lattice_n_max": 3, "noise_norms": [0.3, 0.2], "noise_seed": 11, "p": 3.0},
    "solver": {"n_iter": 25, "burn_in": 3, "stop_tol": 1e-12},
    "tolerances": {"contraction": 0.9, "euler_gap_factor": 10.0},
    "runtime_budget_s": 120,
})
def _run_picard(cfg, out, threads):
    del threads
    s = get_float(cfg, "grid.s")
    t_end = get_float(cfg, "grid.t_end")
    n = get_int(cfg, "grid.n_steps", minimum=2)
    seed = get_int(cfg, "mc.seed", minimum=0)
    p = get_float(cfg, "model.p", minimum=1.0)
    n_iter = get_int(cfg, "solver.n_iter", minimum=2)
    burn_in = get_int(cfg, "solver.burn_in", minimum=0)
    contraction = get_float(cfg, "tolerances.contraction", minimum=0.0)
    gap_factor = get_float(cfg, "tolerances.euler_gap_factor", minimum=0.0)

    spec = dirichlet_laplacian_spectrum(get_int(cfg, "model.lattice_n_max", minimum=1))
    d = spec.cutoff
    family = random_family(d, 0.0, get_floats(cfg, "model.noise_norms"),
                           get_int(cfg, "model.noise_seed", minimum=0))
    family = OperatorFamily(drift=TruncatedOperator.zero(d), noise=family.noise)
    grid = TimeGrid(s, t_end, n)
    paths = sample_wiener(grid, family.n_noise, seed)
    # stop above the floating-point floor so ratios measure the contraction,
    # not rounding noise
    stop_tol = get_float(cfg, "solver.stop_tol", minimum=0.0)
    result = picard_mild_solver(spec, family, paths, p, n_iter, stop_tol=stop_tol)
    ratios = result.residuals[burn_in + 1:] / result.residuals[burn_in:-1]
    gen = TruncatedOperator.diagonal(-spec.eigenvalues)
    reference = euler_flow(gen, family, paths)
    gap = float(np.max(schatten_norms_batch(result.flow.frames - reference.frames, p)))
    dt = grid.dt
    csvs = [write_csv(out / "picard_residuals.csv", ["iteration", "residual"],
                      enumerate(result.residuals))]
    criteria = [
        Criterion("residual_contraction",
                  bool(ratios.size and np.all(ratios < contraction)),
                  float(np.max(ratios)) if ratios.size else math.inf,
                  f"all post-burn-in ratios < {contraction}"),
        Criterion("matches_euler", gap <= gap_factor * math.sqrt(dt), gap,
                  f"<= {gap_factor} * sqrt(dt) = {gap_factor * math.sqrt(dt):.4g}"),
    ]
    return criteria, csvs


@_experiment("orthogonality", {
    "grid": {"s": 0.0, "t_end": 1.0, "n_steps": 256},
    "mc": {"n_paths": 100, "seed": 2026},
    "tolerances": {"defect": 1e-9},
    "runtime_budget_s": 120,
})
def _run_orthogonality(cfg, out, threads):
    s = get_float(cfg, "grid.s")
    t_end = get_float(cfg, "grid.t_end")
    n = get_int(cfg, "grid.n_steps", minimum=2)
    n_paths = get_int(cfg, "mc.n_paths", minimum=1)
    seed = get_int(cfg, "mc.seed", minimum=0)
    tol = get_float(cfg, "tolerances.defect", minimum=0.0)
    family = skew_commuting_family()
    grid = TimeGrid(s, t_end, n)
    eye = np.eye(family.dim)

    def one_path(i):
        paths = sample_wiener(grid, family.n_noise, seed + i)
        flow = commutative_strat_flow(family, paths)
        defects = np.linalg.norm(
            np.swapaxes(flow.frames, 1, 2) @ flow.frames - eye, ord=2, axis=(1, 2))
        return float(np.max(defects))

    defects = run_indexed(one_path, n_paths, threads)
    csvs = [write_csv(out / "orthogonality.csv", ["path_seed", "max_defect"],
                      [(seed + i, d) for i, d in enumerate(defects)])]
    worst = max(defects)
    criteria = [Criterion("orthogonality_defect", worst <= tol, worst, f"<= {tol}")]
    return criteria, csvs


VALIDATE_SEQUENCE = (
    "cross_solver_agreement",
    "chaos_expansion",
    "inverse_flow_convergence",
    "moment_bound",
    "diagonal_moments",
    "skorokhod_growth",
    "trace_plateau",
    "three_series",
    "schatten_gamma",
    "picard_fixed_point",
    "orthogonality",
)
