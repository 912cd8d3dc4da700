"""Monte Carlo statistics for flow experiments: norm moments, increment
scaling exponents, and extreme-value growth curves.

Builders are callables that map a seed (and possibly an increment size) to
flow frames; all estimators draw their per-path seeds as ``base + index``,
so a run is a pure function of the base seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .diagonal import DiagonalModel, sample_prefix_max
from .flows import FlowSample
from .operators import operator_norm


class MonteCarloNoiseError(RuntimeError):
    """Raised when estimates are too noisy to use; increase the path count."""


def jackknife_se(values) -> float:
    """Leave-one-out jackknife standard error of the sample mean."""
    x = np.asarray(values, dtype=np.float64)
    n = x.size
    if n < 2:
        return 0.0
    total = x.sum()
    loo = (total - x) / (n - 1)
    return float(np.sqrt((n - 1) / n * np.sum((loo - loo.mean()) ** 2)))


@dataclass(frozen=True)
class MomentEstimate:
    value: float
    stderr: float
    n_paths: int


def _terminal(frame) -> np.ndarray:
    if isinstance(frame, FlowSample):
        return frame.terminal
    return np.asarray(frame, dtype=np.float64)


def mc_moment(flow_builder, q: float, n_paths: int, seed: int) -> MomentEstimate:
    """Mean of the q-th power of the terminal frame norm over independent paths.

    ``flow_builder(seed_i)`` returns a terminal frame (or a FlowSample);
    path i uses seed ``seed + i``.  The standard error is jackknifed.
    """
    if q < 1:
        raise ValueError(f"need moment exponent q >= 1, got {q}")
    if n_paths < 1:
        raise ValueError(f"need n_paths >= 1, got {n_paths}")
    values = np.empty(n_paths)
    for i in range(n_paths):
        values[i] = operator_norm(_terminal(flow_builder(seed + i))) ** q
    return MomentEstimate(float(values.mean()), jackknife_se(values), n_paths)


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    slope_stderr: float
    r_squared: float


def linear_fit(x, y) -> FitResult:
    """Ordinary least squares y = a + b x with the slope standard error."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = x.size
    if n < 2:
        raise ValueError("need at least two points to fit a line")
    xc = x - x.mean()
    sxx = float(np.sum(xc * xc))
    if sxx == 0.0:
        raise ValueError("degenerate fit: all abscissae equal")
    slope = float(np.sum(xc * (y - y.mean())) / sxx)
    intercept = float(y.mean() - slope * x.mean())
    resid = y - intercept - slope * x
    ssr = float(np.sum(resid**2))
    sst = float(np.sum((y - y.mean()) ** 2))
    stderr = math.sqrt(ssr / (n - 2) / sxx) if n > 2 else math.inf
    r2 = 1.0 if sst == 0.0 else 1.0 - ssr / sst
    return FitResult(slope, intercept, stderr, r2)


@dataclass(frozen=True)
class MomentReport:
    """Increment moments E||Y(t) - Y(u)||^(2L) against the increment ladder,
    with the fitted log-log slope."""

    L: int
    deltas: np.ndarray
    moments: np.ndarray
    stderrs: np.ndarray
    slope: float
    slope_stderr: float
    intercept: float

    def passes_bound(self, margin: float = 0.15) -> bool:
        """Slope at least L - 1 - margin, the scaling the moment bound demands."""
        return self.slope >= self.L - 1 - margin


def holder_slope(pair_builder, L: int, deltas, n_paths: int, seed: int) -> MomentReport:
    """Log-log regression of increment moments against the increment size.

    ``pair_builder(seed_i, delta)`` returns the two frames whose difference
    realizes an increment of size ``delta``; the 2L-th moment of the norm
    of the difference is averaged over ``n_paths`` seeds per ladder point.
    Raises :class:`MonteCarloNoiseError` when any ladder point has a
    standard error above 30% of its estimate.
    """
    if L < 1:
        raise ValueError(f"need L >= 1, got {L}")
    deltas = np.asarray(deltas, dtype=np.float64)
    if deltas.size < 3:
        raise ValueError("need at least three ladder points")
    span = math.log10(deltas.max() / deltas.min())
    if span < 1.5:
        raise ValueError(f"increment ladder must span >= 1.5 decades, got {span:.2f}")
    moments = np.empty(deltas.size)
    stderrs = np.empty(deltas.size)
    for j, delta in enumerate(deltas):
        vals = np.empty(n_paths)
        for i in range(n_paths):
            a, b = pair_builder(seed + i, float(delta))
            vals[i] = operator_norm(_terminal(b) - _terminal(a)) ** (2 * L)
        moments[j] = vals.mean()
        stderrs[j] = jackknife_se(vals)
        if stderrs[j] > 0.3 * moments[j]:
            raise MonteCarloNoiseError(
                f"standard error {stderrs[j]:.3g} exceeds 30% of the estimate "
                f"{moments[j]:.3g} at delta={delta:g}; widen n_paths")
    fit = linear_fit(np.log(deltas), np.log(moments))
    return MomentReport(L=L, deltas=deltas, moments=moments, stderrs=stderrs,
                        slope=fit.slope, slope_stderr=fit.slope_stderr,
                        intercept=fit.intercept)


@dataclass(frozen=True)
class GrowthCurve:
    """Median extreme-value growth of the diagonal eigenvalue maxima."""

    k_ladder: np.ndarray
    medians: np.ndarray
    reference: np.ndarray | None

    @property
    def ratios(self) -> np.ndarray | None:
        if self.reference is None:
            return None
        return self.medians / self.reference


def diagonal_growth_medians(model: DiagonalModel, s: float, t: float,
                            k_ladder, n_seeds: int, seed: int) -> np.ndarray:
    """Median over seeds of max_{k <= K} zeta_k at each ladder point K.

    Prefix-consistent draws make each per-seed curve nondecreasing in K, so
    the medians are directly comparable along the ladder.
    """
    ladder = np.asarray(k_ladder, dtype=np.int64)
    if np.any(np.diff(ladder) <= 0) or ladder[0] < 1:
        raise ValueError("K ladder must be strictly increasing and positive")
    k_max = int(ladder[-1])
    samples = np.empty((n_seeds, ladder.size))
    for i in range(n_seeds):
        running = sample_prefix_max(model, s, t, seed + i, k_max)
        samples[i] = running[ladder - 1]
    return np.median(samples, axis=0)


def skorokhod_growth(sigma: float, delta: float, k_ladder, n_seeds: int,
                     seed: int) -> GrowthCurve:
    """Growth of median max_k zeta_k for constant noise strength sigma.

    The reference curve is exp(sigma sqrt(2 delta log K)), the extreme-value
    growth rate of independent lognormals; a flow failure shows up as the
    medians tracking this unbounded reference instead of flattening.
    """
    if sigma <= 0:
        raise ValueError(f"need sigma > 0, got {sigma}")
    from .rules import constant

    ladder = np.asarray(k_ladder, dtype=np.int64)
    model = DiagonalModel(alpha=constant(0.0), sigma=constant(sigma),
                          cutoff=int(ladder[-1]))
    medians = diagonal_growth_medians(model, 0.0, delta, ladder, n_seeds, seed)
    reference = np.exp(sigma * np.sqrt(2.0 * delta * np.log(ladder)))
    return GrowthCurve(k_ladder=ladder, medians=medians, reference=reference)
