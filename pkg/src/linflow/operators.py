"""Dense operator algebra on a truncated orthonormal basis.

Everything downstream (flow solvers, diagonal diagnostics, Schatten-class
experiments) manipulates bounded operators through their matrices on
span{e_1, ..., e_n}.  This module provides the matrix wrapper, operator
families, multi-index products, and the norms used throughout: the operator
(spectral) norm and the Schatten p-norms.

All singular values come from a dense deterministic SVD, so repeated runs are
bit-stable for fixed inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg


class OperatorError(ValueError):
    """Raised when a matrix fails the finite/square/dimension contracts."""


def _as_matrix(entries) -> np.ndarray:
    arr = np.array(entries, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise OperatorError(f"expected a square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise OperatorError("operator entries must be finite (no NaN/Inf)")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class TruncatedOperator:
    """A bounded operator restricted to the first ``dim`` basis vectors.

    Immutable: the entry matrix is copied on construction and marked
    read-only, so instances are safe to share across workers.
    """

    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "entries", _as_matrix(self.entries))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    # -- constructors -------------------------------------------------
    @classmethod
    def identity(cls, dim: int) -> "TruncatedOperator":
        return cls(np.eye(dim))

    @classmethod
    def zero(cls, dim: int) -> "TruncatedOperator":
        return cls(np.zeros((dim, dim)))

    @classmethod
    def diagonal(cls, values) -> "TruncatedOperator":
        return cls(np.diag(np.asarray(values, dtype=np.float64)))

    @classmethod
    def basis_projection(cls, dim: int, k: int) -> "TruncatedOperator":
        """Rank-one projection e_k (x) e_k, with 1-based index k."""
        if not 1 <= k <= dim:
            raise OperatorError(f"basis index {k} outside 1..{dim}")
        m = np.zeros((dim, dim))
        m[k - 1, k - 1] = 1.0
        return cls(m)

    # -- algebra ------------------------------------------------------
    def __matmul__(self, other: "TruncatedOperator") -> "TruncatedOperator":
        self._check_dim(other)
        return TruncatedOperator(self.entries @ other.entries)

    def __add__(self, other: "TruncatedOperator") -> "TruncatedOperator":
        self._check_dim(other)
        return TruncatedOperator(self.entries + other.entries)

    def __sub__(self, other: "TruncatedOperator") -> "TruncatedOperator":
        self._check_dim(other)
        return TruncatedOperator(self.entries - other.entries)

    def __mul__(self, scalar: float) -> "TruncatedOperator":
        return TruncatedOperator(self.entries * float(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "TruncatedOperator":
        return TruncatedOperator(-self.entries)

    @property
    def T(self) -> "TruncatedOperator":
        """Adjoint (real transpose)."""
        return TruncatedOperator(self.entries.T)

    def _check_dim(self, other: "TruncatedOperator") -> None:
        if self.dim != other.dim:
            raise OperatorError(f"dimension mismatch: {self.dim} vs {other.dim}")


@dataclass(frozen=True, eq=False)
class OperatorFamily:
    """Drift plus an ordered list of noise operators, with cached norms.

    ``M`` is the sum of the noise operator norms; the drift does not
    contribute.  All members must share one truncation level.
    """

    drift: TruncatedOperator
    noise: tuple[TruncatedOperator, ...]
    norms: tuple[float, ...] = field(init=False)
    M: float = field(init=False)

    def __post_init__(self):
        noise = tuple(self.noise)
        object.__setattr__(self, "noise", noise)
        for b in noise:
            if b.dim != self.drift.dim:
                raise OperatorError("all family members must share one dimension")
        norms = tuple(operator_norm(b) for b in noise)
        object.__setattr__(self, "norms", norms)
        object.__setattr__(self, "M", float(sum(norms)))

    @property
    def dim(self) -> int:
        return self.drift.dim

    @property
    def n_noise(self) -> int:
        return len(self.noise)

    def member(self, index: int) -> TruncatedOperator:
        """Member by multi-index digit: 0 is the drift, k >= 1 is noise k."""
        if index == 0:
            return self.drift
        if 1 <= index <= len(self.noise):
            return self.noise[index - 1]
        raise OperatorError(f"family index {index} outside 0..{len(self.noise)}")


@dataclass(frozen=True)
class MultiIndex:
    """Word over the alphabet {0, 1, ..., K}; 0 selects the drift."""

    entries: tuple[int, ...]

    def __post_init__(self):
        entries = tuple(int(e) for e in self.entries)
        if len(entries) == 0:
            raise OperatorError("a multi-index must be nonempty")
        if any(e < 0 for e in entries):
            raise OperatorError("multi-index entries must be >= 0")
        object.__setattr__(self, "entries", entries)

    @property
    def order(self) -> int:
        return len(self.entries)


def operator_norm(T: TruncatedOperator | np.ndarray) -> float:
    """Largest singular value of ``T`` (norm on the space of bounded operators)."""
    m = T.entries if isinstance(T, TruncatedOperator) else _as_matrix(T)
    return float(np.linalg.svd(m, compute_uv=False)[0])


def schatten_norm(T: TruncatedOperator | np.ndarray, p: float) -> float:
    """Schatten p-norm (sum of p-th powers of singular values)^(1/p).

    ``p = 1`` is the trace norm, ``p = 2`` the Hilbert-Schmidt (Frobenius)
    norm; the value is nonincreasing in p and always dominates the operator
    norm.
    """
    if p < 1:
        raise ValueError(f"Schatten exponent must satisfy p >= 1, got {p}")
    m = T.entries if isinstance(T, TruncatedOperator) else _as_matrix(T)
    s = np.linalg.svd(m, compute_uv=False)
    if np.isinf(p):
        return float(s[0])
    top = s[0]
    if top == 0.0:
        return 0.0
    # factor out the top singular value so s**p cannot overflow
    return float(top * np.sum((s / top) ** p) ** (1.0 / p))


def matrix_exponential(T: TruncatedOperator) -> TruncatedOperator:
    """Matrix exponential e^T.

    Diagonal matrices are exponentiated entrywise; otherwise a dense
    scaling-and-squaring Pade evaluation is used.  Raises ``OverflowError``
    (naming the operator norm) if the result leaves the representable range.
    """
    m = T.entries
    result = _expm(m)
    if not np.all(np.isfinite(result)):
        raise OverflowError(
            f"matrix exponential overflowed (operator norm {operator_norm(T):.6g})"
        )
    return TruncatedOperator(result)


def _expm(m: np.ndarray) -> np.ndarray:
    d = np.diag(m)
    if np.count_nonzero(m - np.diag(d)) == 0:
        # overflow surfaces as inf and is rejected by the caller's finiteness check
        with np.errstate(over="ignore"):
            return np.diag(np.exp(d))
    return scipy.linalg.expm(m)


def multi_index_operator(family: OperatorFamily, alpha: MultiIndex) -> TruncatedOperator:
    """Ordered product B_{a_1} B_{a_2} ... B_{a_n} over the family members."""
    out = family.member(alpha.entries[0]).entries.copy()
    for a in alpha.entries[1:]:
        out = out @ family.member(a).entries
    return TruncatedOperator(out)


def family_bound(family: OperatorFamily) -> float:
    """Sum of the noise operator norms (the boundedness constant of the family)."""
    return family.M


def commutator_defect(family: OperatorFamily) -> tuple[float, tuple[int, int]]:
    """Worst relative commutator among all family members, with the offending pair.

    Returns ``(max ||B_i B_j - B_j B_i|| / (||B_i|| ||B_j||), (i, j))`` over all
    member pairs (0 = drift).  Pairs with a zero norm contribute 0.
    """
    members = [family.drift] + list(family.noise)
    norms = [operator_norm(b) for b in members]
    worst, pair = 0.0, (0, 0)
    for i in range(len(members)):
        for j in range(i + 1, len(members)):
            denom = norms[i] * norms[j]
            if denom == 0.0:
                continue
            mi, mj = members[i].entries, members[j].entries
            defect = operator_norm(mi @ mj - mj @ mi) / denom
            if defect > worst:
                worst, pair = defect, (i, j)
    return worst, pair
