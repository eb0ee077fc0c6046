"""Primal/dual vectors and the inner-product (Riesz map) geometry.

Points live in the primal space X, covectors (derivatives) in its dual.
They are deliberately separate types: a derivative only becomes a search
direction after passing through :func:`riesz_inverse`, which is where a
preconditioner enters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ContractError, OperatorError

__all__ = [
    "Point",
    "Covector",
    "InnerProductOperator",
    "riesz_inverse",
    "riesz_map",
    "dual_pair",
    "dual_norm_sq",
    "primal_norm_sq",
    "axpy",
]


@dataclass(frozen=True, eq=False)
class _Vector:
    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=np.float64)
        if a.ndim != 1:
            raise ContractError(f"expected a 1-d array, got shape {a.shape}")
        if not np.isfinite(a).all():
            raise ContractError(f"{type(self).__name__} has non-finite entries")
        a.flags.writeable = False
        object.__setattr__(self, "entries", a)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __len__(self):
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.entries
        return self.entries.astype(dtype)

    def __repr__(self):
        return f"{type(self).__name__}({np.array2string(self.entries, threshold=8)})"


class Point(_Vector):
    """Element of the primal space X (iterates, gradients, directions)."""

    def __add__(self, other):
        _check_same(self, other, Point)
        return Point(self.entries + other.entries)

    def __sub__(self, other):
        _check_same(self, other, Point)
        return Point(self.entries - other.entries)

    def __mul__(self, a):
        return Point(float(a) * self.entries)

    __rmul__ = __mul__


class Covector(_Vector):
    """Element of the dual space X* (derivatives of sampled functions)."""

    def __add__(self, other):
        _check_same(self, other, Covector)
        return Covector(self.entries + other.entries)

    def __sub__(self, other):
        _check_same(self, other, Covector)
        return Covector(self.entries - other.entries)

    def __mul__(self, a):
        return Covector(float(a) * self.entries)

    __rmul__ = __mul__


def _check_same(a, b, kind):
    if not isinstance(b, kind):
        raise ContractError(f"cannot combine {type(a).__name__} with {type(b).__name__}")
    if a.dim != b.dim:
        raise ContractError(f"dimension mismatch: {a.dim} vs {b.dim}")


class InnerProductOperator:
    """Symmetric positive definite operator H: X -> X*.

    Either the identity on R^n or an explicit matrix, whose Cholesky factor
    is computed once at construction.
    """

    def __init__(self, n, matrix=None, *, _cho=None):
        self.n = int(n)
        self._matrix = matrix
        self._cho = _cho

    @classmethod
    def identity(cls, n):
        if int(n) < 1:
            raise ContractError("dimension must be positive")
        return cls(n)

    @classmethod
    def from_matrix(cls, matrix, rtol=1e-12):
        m = np.array(matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise OperatorError(f"operator must be a square matrix, got shape {m.shape}")
        if not np.isfinite(m).all():
            raise OperatorError("operator has non-finite entries")
        scale = np.abs(m).max()
        if np.abs(m - m.T).max() > rtol * scale:
            raise OperatorError("operator is not symmetric")
        try:
            cho = scipy.linalg.cho_factor(m, lower=True, check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise OperatorError("operator is not positive definite") from exc
        if not (np.diag(cho[0]) > 0).all():
            raise OperatorError("operator is not positive definite")
        m.flags.writeable = False
        return cls(m.shape[0], m, _cho=cho)

    @property
    def is_identity(self):
        return self._matrix is None

    @property
    def matrix(self):
        if self._matrix is None:
            return np.eye(self.n)
        return self._matrix

    def solve(self, d):
        """Return H^{-1} d for a raw array."""
        if self._cho is None:
            return np.array(d, dtype=np.float64)
        return scipy.linalg.cho_solve(self._cho, d, check_finite=False)

    def apply(self, v):
        """Return H v for a raw array."""
        if self._matrix is None:
            return np.array(v, dtype=np.float64)
        return self._matrix @ v

    def __repr__(self):
        kind = "identity" if self.is_identity else "matrix"
        return f"InnerProductOperator({kind}, n={self.n})"


def _check_dim(H, v):
    if v.dim != H.n:
        raise ContractError(f"dimension mismatch: operator has n={H.n}, vector has {v.dim}")


def riesz_inverse(H: InnerProductOperator, d: Covector) -> Point:
    """Gradient g = H^{-1} d, the Riesz representer of the derivative d."""
    if not isinstance(d, Covector):
        raise ContractError(f"riesz_inverse expects a Covector, got {type(d).__name__}")
    _check_dim(H, d)
    return Point(H.solve(d.entries))


def riesz_map(H: InnerProductOperator, v: Point) -> Covector:
    """Covector H v."""
    if not isinstance(v, Point):
        raise ContractError(f"riesz_map expects a Point, got {type(v).__name__}")
    _check_dim(H, v)
    return Covector(H.apply(v.entries))


def dual_pair(d: Covector, v: Point) -> float:
    if not isinstance(d, Covector) or not isinstance(v, Point):
        raise ContractError("dual_pair expects (Covector, Point)")
    if d.dim != v.dim:
        raise ContractError(f"dimension mismatch: {d.dim} vs {v.dim}")
    return float(np.dot(d.entries, v.entries))


def dual_norm_sq(H: InnerProductOperator, d: Covector) -> float:
    """||d||^2 in X*, i.e. <d, H^{-1} d>."""
    return dual_pair(d, riesz_inverse(H, d))


def primal_norm_sq(H: InnerProductOperator, v: Point) -> float:
    """||v||^2 in X, i.e. <H v, v>."""
    return dual_pair(riesz_map(H, v), v)


def axpy(w: Point, a: float, v: Point) -> Point:
    """w + a v."""
    _check_same(w, v, Point)
    if not isinstance(w, Point):
        raise ContractError("axpy expects Points")
    return Point(w.entries + float(a) * v.entries)
