"""Reproducible driving noises: Brownian families, the Brownian sheet, and
trigonometric spatially homogeneous fields.

Reproducibility contracts
-------------------------
The Wiener sampler is a pure function of ``(grid, K, seed)`` built from
counter-based streams keyed by ``(seed, path index, refinement level)``:

* extension: path k never depends on K, so enlarging the family keeps the
  existing paths bit-identical (common random numbers);
* refinement: doubling the step count refines each path by midpoint bridge
  draws, so the values at shared time points are bit-identical across
  nested grids;
* determinism: no global RNG state is read or written anywhere.

Index 0 of the driving system is the deterministic path W_0(t) = t.  It is
applied by the solvers directly and never stored here; row k of
``WienerPaths.values`` drives noise operator k+1.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1

# domain tags keep independent consumers on disjoint Philox key ranges
_DOMAIN_WIENER = 1
_DOMAIN_SHEET = 2
_DOMAIN_SCALAR = 3


def normal_stream(seed: int, index: int, level: int = 0, domain: int = _DOMAIN_SCALAR) -> np.random.Generator:
    """Counter-based generator keyed by (seed, domain, index, level).

    Draws are sequential within a stream, so the first n values do not depend
    on how many are requested.
    """
    if not 0 <= seed <= _MASK64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    if not 0 <= index < (1 << 40):
        raise ValueError(f"stream index {index} outside 0..2^40")
    if not 0 <= level < (1 << 16):
        raise ValueError(f"stream level {level} outside 0..2^16")
    key = np.array([seed, (domain << 56) | (index << 16) | level], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Uniform grid t_0 = s < t_1 < ... < t_N = t_end."""

    s: float
    t_end: float
    steps: int

    def __post_init__(self):
        if not np.isfinite(self.s) or not np.isfinite(self.t_end):
            raise ValueError("grid endpoints must be finite")
        if self.s < 0:
            raise ValueError(f"start time must be >= 0, got {self.s}")
        if self.t_end <= self.s:
            raise ValueError(f"need t_end > s, got [{self.s}, {self.t_end}]")
        if self.steps < 1:
            raise ValueError(f"need at least one step, got {self.steps}")

    @property
    def dt(self) -> float:
        return (self.t_end - self.s) / self.steps

    @property
    def span(self) -> float:
        return self.t_end - self.s

    @property
    def points(self) -> np.ndarray:
        # i * dt keeps shared points bit-identical across factor-of-two
        # refinements (dt halves exactly in binary floating point)
        pts = self.s + np.arange(self.steps + 1) * self.dt
        pts[-1] = self.t_end
        return pts

    def refine(self, factor: int = 2) -> "TimeGrid":
        return TimeGrid(self.s, self.t_end, self.steps * factor)


@dataclass(frozen=True, eq=False)
class WienerPaths:
    """K independent Brownian paths on a shared grid, all started at 0."""

    grid: TimeGrid
    values: np.ndarray  # (K, N+1), values[k][0] = 0
    seed: int

    @property
    def K(self) -> int:
        return self.values.shape[0]

    @property
    def increments(self) -> np.ndarray:
        """Per-step increments, shape (K, N)."""
        return np.diff(self.values, axis=1)


def _odd_part(n: int) -> tuple[int, int]:
    m = 0
    while n % 2 == 0:
        n //= 2
        m += 1
    return n, m


def _bridge_path(seed: int, path_index: int, steps: int, span: float) -> np.ndarray:
    """One path on [0, span] with ``steps`` uniform steps, via midpoint bridging.

    Level 0 lays down the odd-part coarse walk; each further level keyed by
    (seed, path, level) fills midpoints, which is what makes nested grids
    agree at shared points.
    """
    n0, m_levels = _odd_part(steps)
    z = normal_stream(seed, path_index, 0, _DOMAIN_WIENER).standard_normal(n0)
    w = np.empty(n0 + 1)
    w[0] = 0.0
    np.cumsum(np.sqrt(span / n0) * z, out=w[1:])
    h = span / n0
    for level in range(1, m_levels + 1):
        z = normal_stream(seed, path_index, level, _DOMAIN_WIENER).standard_normal(w.size - 1)
        mid = 0.5 * (w[:-1] + w[1:]) + np.sqrt(h / 4.0) * z
        out = np.empty(2 * w.size - 1)
        out[0::2] = w
        out[1::2] = mid
        w = out
        h /= 2.0
    return w


def sample_wiener(grid: TimeGrid, K: int, seed: int) -> WienerPaths:
    """Sample K independent Brownian paths on ``grid``.

    Deterministic in ``(grid, K, seed)``.  Path k depends only on
    ``(seed, k)`` and on the chain ``(span, odd part of N)``, so enlarging K
    or refining the grid by factors of two preserves existing values.
    """
    if K < 1:
        raise ValueError(f"need K >= 1 paths, got {K}")
    values = np.empty((K, grid.steps + 1))
    for k in range(K):
        values[k] = _bridge_path(seed, k, grid.steps, grid.span)
    values.flags.writeable = False
    return WienerPaths(grid=grid, values=values, seed=seed)


@dataclass(frozen=True, eq=False)
class SheetSample:
    """Brownian sheet sampled on a product grid over time and [0, L)^d.

    ``values[i, j_1, ..., j_d]`` is the field at (t_i, axes[0][j_1], ...);
    the value is exactly 0 whenever any coordinate is 0, and the node
    covariance is exactly (t ^ s) * prod(xi_r ^ eta_r) in distribution.
    """

    tgrid: TimeGrid
    axes: tuple[np.ndarray, ...]
    values: np.ndarray
    seed: int


def sample_brownian_sheet(tgrid: TimeGrid, axes, seed: int) -> SheetSample:
    """Sample the sheet by scaled independent cell increments.

    ``axes`` is one strictly increasing array of nonnegative nodes per
    spatial dimension; the spatial domain must be bounded.
    """
    axes = tuple(np.asarray(a, dtype=np.float64) for a in axes)
    if len(axes) == 0:
        raise ValueError("need at least one spatial axis")
    for a in axes:
        if a.ndim != 1 or a.size == 0:
            raise ValueError("each axis must be a nonempty 1-D array")
        if not np.all(np.isfinite(a)):
            raise ValueError("unbounded spatial domain is not supported (all nodes must be finite)")
        if np.any(a < 0) or np.any(np.diff(a) <= 0):
            raise ValueError("axis nodes must be nonnegative and strictly increasing")

    # cell edges always start at the origin of each coordinate
    tpoints = tgrid.points
    edges = []
    for arr in (tpoints,) + axes:
        edges.append(arr if arr[0] == 0.0 else np.concatenate(([0.0], arr)))
    widths = [np.diff(e) for e in edges]
    shape = tuple(w.size for w in widths)

    gen = normal_stream(seed, 0, 0, _DOMAIN_SHEET)
    cells = gen.standard_normal(shape)
    vol = np.ones(shape)
    for ax, w in enumerate(widths):
        vol *= w.reshape([-1 if i == ax else 1 for i in range(len(shape))])
    field = np.sqrt(vol) * cells
    for ax in range(len(shape)):
        field = np.cumsum(field, axis=ax)
        pad_shape = list(field.shape)
        pad_shape[ax] = 1
        field = np.concatenate([np.zeros(pad_shape), field], axis=ax)
    # drop the synthetic origin plane on axes that did not request node 0
    slices = []
    for arr in (tpoints,) + axes:
        slices.append(slice(None) if arr[0] == 0.0 else slice(1, None))
    values = field[tuple(slices)]
    values.flags.writeable = False
    return SheetSample(tgrid=tgrid, axes=axes, values=values, seed=seed)


def sample_homogeneous_field(amplitudes, frequencies, tgrid: TimeGrid, points, seed: int) -> np.ndarray:
    """Truncated spatially homogeneous Gaussian field on given points.

    W(t, x) = sum_k a_k (W_k(t) cos<x, eta_k> + V_k(t) sin<x, eta_k>) with
    independent Brownian W_k, V_k.  Returns shape (N+1, n_points); the
    variance at any point is t * sum(a_k^2) and two-point covariances depend
    on the difference of the points only.
    """
    a = np.asarray(amplitudes, dtype=np.float64)
    eta = np.atleast_2d(np.asarray(frequencies, dtype=np.float64))
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if a.ndim != 1 or a.size == 0:
        raise ValueError("amplitudes must be a nonempty 1-D sequence")
    if eta.shape[0] != a.size:
        raise ValueError(f"got {a.size} amplitudes but {eta.shape[0]} frequency vectors")
    if pts.shape[1] != eta.shape[1]:
        raise ValueError("points and frequencies must share one spatial dimension")
    K = a.size
    # interleave (cos, sin) drivers so extending the truncation keeps
    # earlier terms on the same streams
    paths = sample_wiener(tgrid, 2 * K, seed)
    w_cos = paths.values[0::2]
    w_sin = paths.values[1::2]
    phase = pts @ eta.T  # (n_points, K)
    cos_part = np.cos(phase) * a
    sin_part = np.sin(phase) * a
    return w_cos.T @ cos_part.T + w_sin.T @ sin_part.T


def sup_statistic(values, transform=None) -> float:
    """Maximum of a per-index transform over a finite index range.

    ``values`` holds one scalar per index k = 1..K (for instance Brownian
    increments); ``transform(k, values)`` maps them elementwise.  Used with
    growing K to probe almost-sure finiteness of index suprema.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("values must be a nonempty 1-D array")
    if transform is not None:
        k = np.arange(1, v.size + 1)
        v = np.asarray(transform(k, v), dtype=np.float64)
    return float(np.max(v))


_HEADER = struct.Struct("<QQQd")


def save_paths(paths: WienerPaths, filename) -> None:
    """Binary dump: little-endian header (seed, N, K, dt) then row-major doubles."""
    with open(filename, "wb") as fh:
        fh.write(_HEADER.pack(paths.seed, paths.grid.steps, paths.K, paths.grid.dt))
        fh.write(np.ascontiguousarray(paths.values, dtype="<f8").tobytes())


def load_paths(filename) -> WienerPaths:
    """Read a dump written by :func:`save_paths`.

    The header stores no start time, so the replay grid starts at 0; the
    values (which are relative to the start) are restored bit-exactly.
    """
    with open(filename, "rb") as fh:
        seed, steps, K, dt = _HEADER.unpack(fh.read(_HEADER.size))
        raw = np.frombuffer(fh.read(), dtype="<f8")
    if raw.size != K * (steps + 1):
        raise ValueError(f"payload holds {raw.size} doubles, expected {K * (steps + 1)}")
    values = raw.reshape(K, steps + 1).astype(np.float64)
    values.flags.writeable = False
    grid = TimeGrid(0.0, dt * steps, int(steps))
    return WienerPaths(grid=grid, values=values, seed=int(seed))
