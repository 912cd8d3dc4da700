"""Flow solvers: four constructions of the operator-valued flow plus the
inverse flow, all driven by one shared set of Wiener paths so that their
outputs are comparable pathwise.

Solvers
-------
``euler_flow``
    Exponential (semigroup-splitting) Euler stepping of the mild equation
    dX = A X dt + B_0 X dt + sum_k B_k X dW_k;  strong order 1/2.
``chaos_flow``
    Truncated expansion in iterated stochastic integrals
    I + sum_{orders n <= n_max} sum_{words a} I_a B^a, with the nested
    integrals evolved on the grid by left-point (Ito) sums; the time
    direction (digit 0) uses exact trapezoidal integration so purely
    deterministic words are reproduced exactly.
``commutative_ito_flow`` / ``commutative_strat_flow``
    Closed-form exponentials for pairwise commuting families, exact in law
    at the grid points.
``doss_sussmann_flow``
    Splitting X = Y G: closed-form noise factor Y and a pathwise linear ODE
    for G with the generator replaced by its bounded resolvent
    regularization (parameter ``lam``); G is integrated by classical RK4
    with midpoint noise values obtained by bridge refinement.
``inverse_flow``
    Euler solution of the adjoint dual equation, whose transpose converges
    to the inverse of the forward flow.

All solvers are pure functions of their inputs; frames are immutable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .noise import TimeGrid, WienerPaths, sample_wiener
from .operators import (
    OperatorError,
    OperatorFamily,
    TruncatedOperator,
    _expm,
    commutator_defect,
    operator_norm,
)

SOLVER_TAGS = (
    "euler",
    "chaos",
    "commutative_ito",
    "commutative_strat",
    "doss_sussmann",
    "inverse_dual",
    "picard_schatten",
)

COMMUTATOR_TOLERANCE = 1e-10

# refuse chaos expansions beyond this many index words
MAX_CHAOS_WORDS = 10**7


class NonCommutingFamilyError(ValueError):
    """Raised when a closed-form solver receives a non-commuting family."""


class ChaosExplosionError(ValueError):
    """Raised when the requested chaos expansion would enumerate too many words."""


@dataclass(frozen=True, eq=False)
class FlowSample:
    """One realization of the flow on a grid.

    ``frames[j]`` is the matrix of the flow from ``grid.points[start_index]``
    to ``grid.points[start_index + j]``; frame 0 is the identity.
    """

    grid: TimeGrid
    frames: np.ndarray  # (n_frames, dim, dim)
    solver: str
    seed: int
    start_index: int = 0

    def __post_init__(self):
        if self.solver not in SOLVER_TAGS:
            raise ValueError(f"unknown solver tag {self.solver!r}")
        frames = np.asarray(self.frames, dtype=np.float64)
        if frames.ndim != 3 or frames.shape[1] != frames.shape[2]:
            raise ValueError(f"frames must be (n, d, d), got {frames.shape}")
        if not np.all(np.isfinite(frames)):
            raise ValueError("flow frames must be finite")
        if not np.array_equal(frames[0], np.eye(frames.shape[1])):
            raise ValueError("the first frame must be the identity")
        expected = self.grid.steps - self.start_index + 1
        if not 0 <= self.start_index <= self.grid.steps or frames.shape[0] != expected:
            raise ValueError(
                f"expected {expected} frames for start index {self.start_index}, "
                f"got {frames.shape[0]}"
            )
        frames.flags.writeable = False
        object.__setattr__(self, "frames", frames)

    @property
    def dim(self) -> int:
        return self.frames.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.grid.points[self.start_index:]

    @property
    def terminal(self) -> np.ndarray:
        return self.frames[-1]

    def operator(self, j: int) -> TruncatedOperator:
        return TruncatedOperator(self.frames[j])


@dataclass(frozen=True)
class ChaosConfig:
    """Expansion depth, number of participating noises, and the moment
    parameter used for tail bounds."""

    max_order: int
    index_cutoff: int
    L: int = 2

    def __post_init__(self):
        if self.max_order < 1:
            raise ValueError(f"max_order must be >= 1, got {self.max_order}")
        if self.index_cutoff < 0:
            raise ValueError(f"index_cutoff must be >= 0, got {self.index_cutoff}")
        if self.L < 1:
            raise ValueError(f"moment parameter L must be >= 1, got {self.L}")


def _validate_driving(family: OperatorFamily, paths: WienerPaths, start_index: int) -> None:
    if paths.K < family.n_noise:
        raise ValueError(
            f"family has {family.n_noise} noise operators but paths provide only {paths.K}"
        )
    if not 0 <= start_index <= paths.grid.steps:
        raise ValueError(f"start index {start_index} outside 0..{paths.grid.steps}")


def _require_commuting(family: OperatorFamily) -> None:
    defect, pair = commutator_defect(family)
    if defect > COMMUTATOR_TOLERANCE:
        raise NonCommutingFamilyError(
            f"family members {pair[0]} and {pair[1]} do not commute "
            f"(relative commutator {defect:.3e} > {COMMUTATOR_TOLERANCE:.0e})"
        )


def euler_flow(
    A: TruncatedOperator | None,
    family: OperatorFamily,
    paths: WienerPaths,
    *,
    start_index: int = 0,
    splitting: str = "exponential",
    _tag: str = "euler",
) -> FlowSample:
    """Exponential Euler stepping of the mild equation.

    One step maps X to e^(dt A) (X + dt B_0 X + sum_k dW_k B_k X); with
    ``splitting="plain"`` the generator joins the drift instead (bounded A
    only).  ``A=None`` drops the semigroup factor.
    """
    _validate_driving(family, paths, start_index)
    if splitting not in ("exponential", "plain"):
        raise ValueError(f"unknown splitting {splitting!r}")
    d = family.dim
    if A is not None and A.dim != d:
        raise OperatorError(f"generator dimension {A.dim} does not match family {d}")
    grid = paths.grid
    dt = grid.dt
    n_steps = grid.steps - start_index

    step_ops = np.broadcast_to(np.eye(d), (n_steps, d, d)).copy()
    step_ops += dt * family.drift.entries
    if family.n_noise:
        b_stack = np.stack([b.entries for b in family.noise])
        dw = paths.increments[: family.n_noise, start_index:]
        step_ops += np.einsum("kn,kij->nij", dw, b_stack)
    if A is not None:
        if splitting == "exponential":
            step_ops = _expm(dt * A.entries) @ step_ops
        else:
            step_ops += dt * A.entries

    frames = np.empty((n_steps + 1, d, d))
    frames[0] = np.eye(d)
    x = frames[0]
    for i in range(n_steps):
        x = step_ops[i] @ x
        frames[i + 1] = x
    return FlowSample(grid=grid, frames=frames, solver=_tag, seed=paths.seed,
                      start_index=start_index)


def inverse_flow(
    A: None,
    family: OperatorFamily,
    paths: WienerPaths,
    *,
    start_index: int = 0,
) -> FlowSample:
    """Euler solution of the dual equation driven by the same increments.

    The dual family has drift -B_0^T + (sum_k B_k^2)^T and noise -B_k^T; if
    Z is the returned flow and Y the forward Euler flow on matched paths,
    Z^T Y converges to the identity as dt -> 0.  Only the bounded case is
    supported: fold any generator into the family drift and pass ``A=None``.
    """
    if A is not None:
        raise ValueError("inverse_flow supports the bounded case only; "
                         "fold the generator into the family drift and pass A=None")
    b_sq = sum((b.entries @ b.entries for b in family.noise),
               np.zeros((family.dim, family.dim)))
    dual = OperatorFamily(
        drift=TruncatedOperator((-family.drift.entries + b_sq).T),
        noise=tuple(TruncatedOperator(-b.entries.T) for b in family.noise),
    )
    return euler_flow(None, dual, paths, start_index=start_index, _tag="inverse_dual")


def _commutative_frames(
    exponent_const: np.ndarray,
    family: OperatorFamily,
    paths: WienerPaths,
    start_index: int,
) -> np.ndarray:
    d = family.dim
    j0 = start_index
    tau = paths.grid.points[j0:] - paths.grid.points[j0]
    n_frames = tau.size
    frames = np.empty((n_frames, d, d))
    frames[0] = np.eye(d)
    if family.n_noise:
        b_stack = np.stack([b.entries for b in family.noise])
        w = paths.values[: family.n_noise, j0:] - paths.values[: family.n_noise, j0:j0 + 1]
    for j in range(1, n_frames):
        exponent = exponent_const * tau[j]
        if family.n_noise:
            exponent = exponent + np.tensordot(w[:, j], b_stack, axes=1)
        frames[j] = _expm(exponent)
    return frames


def commutative_ito_flow(
    family: OperatorFamily,
    paths: WienerPaths,
    *,
    start_index: int = 0,
) -> FlowSample:
    """Closed-form Ito flow for a pairwise commuting family.

    Frame j is exp{ B_0 tau + sum_k B_k (W_k(t_j) - W_k(t_0)) -
    (tau/2) sum_k B_k^2 }, exact in law at the grid points (no
    time-discretization error).  Rejects non-commuting families, naming the
    offending pair.
    """
    _validate_driving(family, paths, start_index)
    _require_commuting(family)
    b2 = sum((b.entries @ b.entries for b in family.noise),
             np.zeros((family.dim, family.dim)))
    const = family.drift.entries - 0.5 * b2
    frames = _commutative_frames(const, family, paths, start_index)
    return FlowSample(grid=paths.grid, frames=frames, solver="commutative_ito",
                      seed=paths.seed, start_index=start_index)


def commutative_strat_flow(
    family: OperatorFamily,
    paths: WienerPaths,
    *,
    start_index: int = 0,
) -> FlowSample:
    """Closed-form Stratonovich flow for a pairwise commuting family.

    Frame j is exp{ B_0 tau + sum_k B_k (W_k(t_j) - W_k(t_0)) }; identical
    to the Ito flow of the family whose drift is B_0 + (1/2) sum_k B_k^2.
    For commuting skew-symmetric noise with zero drift every frame is
    orthogonal.
    """
    _validate_driving(family, paths, start_index)
    _require_commuting(family)
    frames = _commutative_frames(family.drift.entries, family, paths, start_index)
    return FlowSample(grid=paths.grid, frames=frames, solver="commutative_strat",
                      seed=paths.seed, start_index=start_index)


# ---------------------------------------------------------------------------
# chaos expansion
# ---------------------------------------------------------------------------

def _word_products(family: OperatorFamily, n_words: int, max_order: int) -> list[np.ndarray]:
    """Stacked ordered products B^a for all words of each order.

    Words of order n are enumerated base (K+1) with the leading (outermost
    integration) digit most significant, so P[n][a] = B_digit @ P[n-1][rest].
    """
    d = family.dim
    members = [family.member(i).entries for i in range(n_words)]
    products = [np.eye(d)[None]]
    for _ in range(max_order):
        prev = products[-1]
        products.append(np.concatenate([m @ prev for m in members]))
    return products[1:]


def chaos_flow(family: OperatorFamily, paths: WienerPaths, cfg: ChaosConfig,
               *, start_index: int = 0) -> FlowSample:
    """Truncated iterated-integral expansion of the flow on the grid.

    The nested integrals are advanced by the recursion
    I_a(t_{i+1}) = I_a(t_i) + I_{rest(a)}(t_i) dW_{lead(a)}(i): left-point
    Ito sums in the noise directions, trapezoidal in the time direction
    (digit 0), which makes purely deterministic words exact.  Only the
    current-time values are stored, so memory is O((K+1)^max_order).
    """
    if cfg.index_cutoff > family.n_noise:
        raise ValueError(
            f"index cutoff {cfg.index_cutoff} exceeds the {family.n_noise} noise operators"
        )
    if cfg.index_cutoff > paths.K:
        raise ValueError(f"index cutoff {cfg.index_cutoff} exceeds the {paths.K} paths")
    _validate_driving(family, paths, start_index)
    n_digits = cfg.index_cutoff + 1
    if n_digits ** cfg.max_order > MAX_CHAOS_WORDS:
        raise ChaosExplosionError(
            f"{n_digits}^{cfg.max_order} index words exceed the {MAX_CHAOS_WORDS} limit"
        )
    d = family.dim
    grid = paths.grid
    dt = grid.dt
    n_steps = grid.steps - start_index
    dw = paths.increments[: cfg.index_cutoff, start_index:]

    products = _word_products(family, n_digits, cfg.max_order)
    flat_products = [p.reshape(p.shape[0], d * d) for p in products]
    values = [np.zeros(n_digits ** n) for n in range(1, cfg.max_order + 1)]

    frames = np.empty((n_steps + 1, d, d))
    frames[0] = np.eye(d)
    eye_flat = np.eye(d).ravel()
    one = np.ones(1)
    for i in range(n_steps):
        lower_old = one
        lower_new = one
        for n in range(cfg.max_order):
            cur = values[n]
            cur_old = cur.copy()
            block = cur.reshape(n_digits, -1)
            block[0] += 0.5 * dt * (lower_old + lower_new)
            if cfg.index_cutoff:
                block[1:] += dw[:, i, None] * lower_old
            lower_old = cur_old
            lower_new = cur
        flat = eye_flat.copy()
        for n in range(cfg.max_order):
            flat += values[n] @ flat_products[n]
        frames[i + 1] = flat.reshape(d, d)
    return FlowSample(grid=grid, frames=frames, solver="chaos", seed=paths.seed,
                      start_index=start_index)


def chaos_tail_bound(M: float, delta: float, L: int, n_max: int) -> float:
    """Upper bound on the 2L-th moment norm of the discarded chaos tail.

    Evaluates sum over orders n > n_max of
    M^n C_L^n (max(1, delta^(2Ln)) / n!)^(1/(2L)) * delta^(1/2 - 1/(2L)),
    with C_L = 2L/(2L-1), summed until the summand falls below 1e-16 of the
    running total.  Returns ``inf`` when the value exceeds the floating
    range (the mathematical sum is always finite).
    """
    if M < 0:
        raise ValueError(f"need M >= 0, got {M}")
    if delta <= 0:
        raise ValueError(f"need delta > 0, got {delta}")
    if int(L) != L or L < 1:
        raise ValueError(f"moment parameter L must be a positive integer, got {L}")
    if n_max < 0:
        raise ValueError(f"need n_max >= 0, got {n_max}")
    if M == 0:
        return 0.0
    two_l = 2 * L
    log_rate = math.log(M) + math.log(two_l / (two_l - 1)) + max(0.0, math.log(delta))
    log_pref = (0.5 - 1.0 / two_l) * math.log(delta)

    total = 0.0
    n0 = n_max + 1
    block = 1 << 16
    for _ in range(512):
        n = np.arange(n0, n0 + block, dtype=np.float64)
        log_terms = n * log_rate - gammaln(n + 1.0) / two_l + log_pref
        if log_terms.max() > 709.0:
            return math.inf
        terms = np.exp(log_terms)
        total += float(terms.sum())
        if log_terms[-1] < log_terms[0] and terms[-1] < 1e-16 * total:
            return total
        n0 += block
    return math.inf


# ---------------------------------------------------------------------------
# resolvent regularization and the pathwise-ODE splitting
# ---------------------------------------------------------------------------

def yosida(A_spectrum, lam: float) -> TruncatedOperator:
    """Bounded regularization lam * A * (lam - A)^(-1) of a diagonal generator.

    ``A_spectrum`` lists the (nonpositive) eigenvalues mu_j; the result is
    diagonal with entries lam * mu_j / (lam - mu_j), which increase to mu_j
    as lam grows.
    """
    if lam <= 0:
        raise ValueError(f"regularization parameter must be positive, got {lam}")
    mu = np.asarray(A_spectrum, dtype=np.float64)
    if mu.ndim != 1 or mu.size == 0:
        raise ValueError("spectrum must be a nonempty 1-D sequence")
    if np.any(mu > 0):
        raise ValueError("only dissipative diagonal generators (spectrum <= 0) are supported")
    return TruncatedOperator.diagonal(lam * mu / (lam - mu))


def yosida_lambda_ladder(A_spectrum, factors=(10.0, 100.0, 1000.0)) -> tuple[float, ...]:
    """Default regularization ladder: factors times the largest |eigenvalue|.

    Convergence studies in the regularization parameter step through these
    values; the base scale keeps the relative defect comparable across
    spectra."""
    mu = np.asarray(A_spectrum, dtype=np.float64)
    scale = float(np.max(np.abs(mu))) if mu.size else 1.0
    scale = scale if scale > 0 else 1.0
    return tuple(f * scale for f in factors)


def doss_sussmann_flow(
    A_spectrum,
    family: OperatorFamily,
    paths: WienerPaths,
    lam: float,
    *,
    start_index: int = 0,
) -> FlowSample:
    """Flow via the splitting X = Y G with regularized generator.

    Y is the closed-form commuting flow with compensating drift
    (1/2) sum B_k^2, which collapses to exp{sum_k B_k dW_k}; G solves the
    pathwise linear ODE dG = Y^(-1) (A_lam - (1/2) sum B_k^2) Y G dt and is
    integrated by classical fixed-step RK4 on the grid, with midpoint noise
    values drawn by one level of bridge refinement of the same seeded
    construction.  Converges to the Euler flow of (A, noise) as the step
    shrinks and lam grows.

    Requires a commuting noise family with zero drift and a diagonal
    generator given by its spectrum.
    """
    _validate_driving(family, paths, start_index)
    if np.any(family.drift.entries != 0.0):
        raise ValueError("pass the noise-only family (zero drift); the splitting "
                         "introduces its own compensating drift")
    _require_commuting(family)
    d = family.dim
    mu = np.asarray(A_spectrum, dtype=np.float64)
    if mu.size != d:
        raise OperatorError(f"spectrum length {mu.size} does not match family dimension {d}")
    a_lam = yosida(mu, lam).entries

    b0 = 0.5 * sum((b.entries @ b.entries for b in family.noise), np.zeros((d, d)))
    coeff_core = a_lam - b0

    fine = sample_wiener(paths.grid.refine(2), max(paths.K, 1), paths.seed)
    if not np.array_equal(fine.values[: paths.K, ::2], paths.values):
        raise ValueError("paths are not bridge-refinable; generate them with "
                         "sample_wiener on the same grid and seed")
    n_noise = family.n_noise
    if n_noise:
        b_stack = np.stack([b.entries for b in family.noise])
        w_fine = fine.values[:n_noise]

    j0 = start_index
    n_steps = paths.grid.steps - start_index
    dt = paths.grid.dt

    def noise_exponent(fine_idx: int) -> np.ndarray:
        if not n_noise:
            return np.zeros((d, d))
        dw = w_fine[:, fine_idx] - w_fine[:, 2 * j0]
        return np.tensordot(dw, b_stack, axes=1)

    def coeff_pair(fine_idx: int) -> tuple[np.ndarray, np.ndarray]:
        m = noise_exponent(fine_idx)
        y = _expm(m)
        y_inv = _expm(-m)
        return y, y_inv @ coeff_core @ y

    frames = np.empty((n_steps + 1, d, d))
    frames[0] = np.eye(d)
    g = np.eye(d)
    y_right, c_right = coeff_pair(2 * j0)
    for i in range(n_steps):
        c_left = c_right
        _, c_mid = coeff_pair(2 * (j0 + i) + 1)
        y_right, c_right = coeff_pair(2 * (j0 + i) + 2)
        k1 = c_left @ g
        k2 = c_mid @ (g + 0.5 * dt * k1)
        k3 = c_mid @ (g + 0.5 * dt * k2)
        k4 = c_right @ (g + dt * k3)
        g = g + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        frames[i + 1] = y_right @ g
    return FlowSample(grid=paths.grid, frames=frames, solver="doss_sussmann",
                      seed=paths.seed, start_index=start_index)


def cocycle_defect(flow: FlowSample, i: int, j: int, l: int, restart: FlowSample) -> float:
    """Norm of restart(t_j, t_l) flow(t_i, t_j) - flow(t_i, t_l).

    ``restart`` must be the same solver re-run from grid index j on the same
    grid with the same seed (hence the identical noise tail); exact flows
    make this zero up to rounding, truncated expansions leave a residual.
    """
    if flow.seed != restart.seed:
        raise ValueError(f"seed mismatch between flow ({flow.seed}) and restart ({restart.seed})")
    if flow.solver != restart.solver:
        raise ValueError(f"solver mismatch: {flow.solver} vs {restart.solver}")
    g, h = flow.grid, restart.grid
    if (g.s, g.t_end, g.steps) != (h.s, h.t_end, h.steps):
        raise ValueError("flow and restart must share one grid")
    if flow.start_index != i:
        raise ValueError(f"flow starts at index {flow.start_index}, expected {i}")
    if restart.start_index != j:
        raise ValueError(f"restart starts at index {restart.start_index}, expected {j}")
    if not i <= j <= l <= g.steps:
        raise ValueError(f"need i <= j <= l <= {g.steps}, got {(i, j, l)}")
    composed = restart.frames[l - j] @ flow.frames[j - i]
    return operator_norm(composed - flow.frames[l - i])
