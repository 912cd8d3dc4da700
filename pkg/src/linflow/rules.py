"""Closed-form index sequences with decidable tail behavior.

The diagonal criteria quantify over all indices k, so the supported
sequence rules are products c * k^p * log(k+1)^l (covering constants,
powers, and log-powers) plus explicit finite lists.  For the product rules
the limit along k and the convergence of associated series are decided
exactly from the exponents; suprema are evaluated by exact enumeration over
small k combined with a continuous search in u = log k, where integers are
dense enough that the relaxation is harmless.

log(k+1) is used inside the rules so that log-power rules are finite at
k = 1; criteria keep their printed log k factors, which vanish there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# |sum of coefficients| below this times the coefficient scale counts as an
# exact cancellation when grouping asymptotic terms
_CANCEL_RTOL = 1e-12

_ENUM_LIMIT = 10**6
_ENUM_CHUNK = 1 << 20


@dataclass(frozen=True)
class SequenceRule:
    """k -> coeff * k^k_power * log(k+1)^log_power, defined for k >= 1."""

    coeff: float
    k_power: float = 0.0
    log_power: float = 0.0

    def __call__(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=np.float64)
        out = np.full(k.shape, self.coeff)
        if self.k_power != 0.0:
            out = out * k ** self.k_power
        if self.log_power != 0.0:
            out = out * np.log1p(k) ** self.log_power
        return out

    def eval_logk(self, u) -> np.ndarray:
        """Evaluate at k = e^u without forming k (safe for huge u)."""
        u = np.asarray(u, dtype=np.float64)
        log_k1 = np.where(u > 30.0, u, np.log1p(np.exp(np.minimum(u, 30.0))))
        out = np.full(u.shape, self.coeff)
        if self.k_power != 0.0:
            out = out * np.exp(self.k_power * u)
        if self.log_power != 0.0:
            out = out * log_k1 ** self.log_power
        return out

    def asymptotics(self) -> tuple[float, float, float]:
        """(power, log power, coefficient) of the leading behavior."""
        if self.coeff == 0.0:
            return (0.0, 0.0, 0.0)
        return (self.k_power, self.log_power, self.coeff)

    def describe(self) -> str:
        return f"{self.coeff:g} * k^{self.k_power:g} * log(k+1)^{self.log_power:g}"


@dataclass(frozen=True)
class ExplicitRule:
    """Explicit finite list of values for k = 1..len(values)."""

    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if len(vals) == 0:
            raise ValueError("an explicit rule needs at least one value")
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("explicit rule values must be finite")
        object.__setattr__(self, "values", vals)

    def __call__(self, k) -> np.ndarray:
        k = np.asarray(k)
        if np.any(k < 1) or np.any(k > len(self.values)):
            raise IndexError(f"explicit rule defined for k = 1..{len(self.values)}")
        return np.asarray(self.values, dtype=np.float64)[np.asarray(k, dtype=np.int64) - 1]

    def asymptotics(self) -> None:
        return None

    def describe(self) -> str:
        return f"explicit[{len(self.values)}]"


Rule = SequenceRule | ExplicitRule


def constant(c: float) -> SequenceRule:
    return SequenceRule(float(c))


def power(c: float, a: float) -> SequenceRule:
    return SequenceRule(float(c), k_power=float(a))


def log_power(c: float, a: float) -> SequenceRule:
    return SequenceRule(float(c), log_power=float(a))


def combine_terms(terms) -> list[tuple[float, float, float]]:
    """Group (p, l, c) terms by scale, summing coefficients; drop exact cancellations."""
    groups: dict[tuple[float, float], float] = {}
    scale = 0.0
    for p, l, c in terms:
        if c == 0.0:
            continue
        groups[(p, l)] = groups.get((p, l), 0.0) + c
        scale = max(scale, abs(c))
    out = []
    for (p, l), c in groups.items():
        if abs(c) > _CANCEL_RTOL * scale:
            out.append((p, l, c))
    out.sort(reverse=True)
    return out


def limit_of_terms(terms) -> float:
    """Limit as k -> inf of sum c * k^p * (log k)^l over the given terms."""
    grouped = combine_terms(terms)
    if not grouped:
        return 0.0
    p, l, c = grouped[0]
    if p > 0 or (p == 0 and l > 0):
        return math.inf if c > 0 else -math.inf
    if p == 0 and l == 0:
        return c
    return 0.0


@dataclass(frozen=True)
class SupremumResult:
    """Supremum of a sequence over all k >= 1.

    ``arg`` is the attaining index when the supremum was found by exact
    enumeration, and ``None`` when it is only approached (at infinity or at
    astronomically large k found by the continuous search).
    ``undetermined_beyond_cutoff`` marks explicit rules, where nothing is
    known past the listed range.
    """

    value: float
    arg: int | None
    diverges: bool
    undetermined_beyond_cutoff: bool = False


def sequence_supremum(
    eval_int,
    eval_logk,
    terms,
    *,
    enum_limit: int = _ENUM_LIMIT,
    explicit_range: int | None = None,
) -> SupremumResult:
    """Supremum of a sequence given exact and log-parametrized evaluators.

    ``terms`` carries the asymptotic (p, l, c) decomposition, or ``None``
    for explicit rules (then only k <= explicit_range is inspected).
    """
    if terms is None:
        k = np.arange(1, explicit_range + 1)
        vals = eval_int(k)
        arg = int(np.argmax(vals))
        return SupremumResult(float(vals[arg]), arg + 1, False,
                              undetermined_beyond_cutoff=True)

    limit = limit_of_terms(terms)
    if limit == math.inf:
        return SupremumResult(math.inf, None, True)

    best_val, best_arg = -math.inf, None
    for lo in range(1, enum_limit + 1, _ENUM_CHUNK):
        hi = min(lo + _ENUM_CHUNK, enum_limit + 1)
        vals = eval_int(np.arange(lo, hi))
        idx = int(np.argmax(vals))
        if vals[idx] > best_val:
            best_val, best_arg = float(vals[idx]), lo + idx

    # continuous search in u = log k beyond the enumerated range; integers
    # are spaced ~e^-u apart there, so the relaxation cost is negligible.
    # Individual terms may overflow where the combination is dominated
    # negative; a true +inf is excluded by the divergence verdict above, so
    # any non-finite evaluation is treated as -inf for the maximum.
    u_lo = math.log(enum_limit)
    u = np.concatenate([np.linspace(u_lo, 100.0, 2000),
                        np.geomspace(100.0, 1e12, 3000)])
    for _ in range(3):
        with np.errstate(over="ignore", invalid="ignore"):
            vals = np.asarray(eval_logk(u), dtype=np.float64)
        vals = np.where(np.isfinite(vals), vals, -math.inf)
        i = int(np.argmax(vals))
        tail_best = float(vals[i])
        lo = u[max(i - 1, 0)]
        hi = u[min(i + 1, u.size - 1)]
        u = np.linspace(lo, hi, 800)
    if tail_best > best_val:
        best_val, best_arg = tail_best, None
    if limit > best_val:
        best_val, best_arg = limit, None
    return SupremumResult(best_val, best_arg, False)


def series_converges(p: float, l: float) -> bool:
    """Whether sum over k of k^p log^l k converges."""
    if p < -1:
        return True
    if p > -1:
        return False
    return l < -1


@dataclass(frozen=True)
class SeriesValue:
    """Value of an index series together with its convergence verdict."""

    value: float
    converges: bool
    tail_estimate: float = 0.0
    undetermined_beyond_cutoff: bool = False


def rule_series_sum(
    eval_int,
    term: tuple[float, float, float] | None,
    *,
    cutoff: int = _ENUM_LIMIT,
    explicit_range: int | None = None,
) -> SeriesValue:
    """Sum over k >= 1 of a nonnegative sequence with a single (p, l, c) scale.

    Adds an integral-comparison tail estimate beyond the numeric cutoff for
    convergent product rules; explicit rules sum their listed range only.
    """
    if term is None:
        k = np.arange(1, explicit_range + 1)
        return SeriesValue(float(np.sum(eval_int(k))), True,
                           undetermined_beyond_cutoff=True)
    p, l, c = term
    if c == 0.0:
        return SeriesValue(0.0, True)
    if not series_converges(p, l):
        return SeriesValue(math.inf, False)
    partial = 0.0
    for lo in range(1, cutoff + 1, _ENUM_CHUNK):
        hi = min(lo + _ENUM_CHUNK, cutoff + 1)
        partial += float(np.sum(eval_int(np.arange(lo, hi))))
    # integral comparison in u = log x coordinates, where the tail decays
    # exponentially (p < -1) or integrates in closed form (p = -1)
    u0 = math.log(cutoff)
    if p == -1:
        tail = abs(c) * u0 ** (l + 1) / (-l - 1)
    else:
        from scipy.integrate import quad

        tail, _ = quad(lambda u: abs(c) * math.exp((p + 1) * u) * u**l,
                       u0, math.inf, limit=200)
    return SeriesValue(partial + tail, True, tail_estimate=tail)
