"""Finite-dimensional vector arithmetic under an SPD metric M.

Vectors are plain 1-d ``numpy`` float arrays. The metric defines the inner
product ``<a, b>_M = <a, M b>`` together with the induced norm and the norm in
the inverse metric. The identity metric reduces everything to the Euclidean
operations bit-for-bit.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.linalg

from .errors import DimensionMismatchError, MetricError

__all__ = ["Metric", "as_vector"]

_SYM_TOL = 1e-10
_NEG_RADICAND_TOL = -1e-14


def as_vector(x, dim: int | None = None) -> np.ndarray:
    """Coerce to a finite 1-d float64 array, optionally checking the dimension."""
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        v = v.reshape(-1)
    if not np.all(np.isfinite(v)):
        raise ValueError("vector entries must be finite")
    if dim is not None and v.shape[0] != dim:
        raise DimensionMismatchError(f"expected dimension {dim}, got {v.shape[0]}")
    return v


class Metric:
    """Dense SPD metric with a precomputed Cholesky factorization.

    Validation happens once at construction: the matrix must be symmetric up
    to ``1e-10`` (relative to its largest entry) and admit a Cholesky
    factorization. Instances are immutable and safe to share across
    concurrent solver runs.
    """

    def __init__(self, matrix):
        mat = np.asarray(matrix, dtype=float)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise MetricError("metric must be a square matrix")
        if not np.all(np.isfinite(mat)):
            raise MetricError("metric entries must be finite")
        scale = max(1.0, float(np.max(np.abs(mat))))
        if float(np.max(np.abs(mat - mat.T))) > _SYM_TOL * scale:
            raise MetricError("metric matrix is not symmetric")
        self.mat = 0.5 * (mat + mat.T)
        self.dim = mat.shape[0]
        self._identity = bool(np.array_equal(self.mat, np.eye(self.dim)))
        self._diagonal = bool(np.count_nonzero(self.mat - np.diag(np.diag(self.mat))) == 0)
        try:
            self._chol = scipy.linalg.cho_factor(self.mat, lower=True)
        except scipy.linalg.LinAlgError as exc:
            raise MetricError("metric matrix is not positive definite") from exc

    @classmethod
    def identity(cls, dim: int) -> "Metric":
        return cls(np.eye(dim))

    @property
    def is_identity(self) -> bool:
        return self._identity

    @property
    def is_diagonal(self) -> bool:
        return self._diagonal

    def diagonal(self) -> np.ndarray:
        return np.diag(self.mat)

    def _check_dim(self, *vecs: np.ndarray) -> None:
        for v in vecs:
            if v.shape[0] != self.dim:
                raise DimensionMismatchError(
                    f"vector of dimension {v.shape[0]} incompatible with metric of dimension {self.dim}"
                )

    def apply(self, v: np.ndarray) -> np.ndarray:
        """M v."""
        self._check_dim(v)
        if self._identity:
            return v
        return self.mat @ v

    def apply_inverse(self, v: np.ndarray) -> np.ndarray:
        """M^{-1} v via the cached factorization."""
        self._check_dim(v)
        if self._identity:
            return v
        return scipy.linalg.cho_solve(self._chol, v)

    def inner(self, a: np.ndarray, b: np.ndarray) -> float:
        """<a, M b>; symmetric in (a, b)."""
        self._check_dim(a, b)
        if self._identity:
            return float(np.dot(a, b))
        return float(np.dot(a, self.mat @ b))

    def norm_sq(self, a: np.ndarray) -> float:
        q = self.inner(a, a)
        if q < _NEG_RADICAND_TOL:
            raise MetricError(f"negative quadratic form {q:.3e}; metric is not SPD")
        return max(q, 0.0)

    def norm(self, a: np.ndarray) -> float:
        """sqrt(<a, M a>) >= 0, zero iff a = 0."""
        return math.sqrt(self.norm_sq(a))

    def inner_inv(self, a: np.ndarray, b: np.ndarray) -> float:
        """<a, M^{-1} b>."""
        self._check_dim(a, b)
        if self._identity:
            return float(np.dot(a, b))
        return float(np.dot(a, self.apply_inverse(b)))

    def norm_inv_sq(self, a: np.ndarray) -> float:
        q = self.inner_inv(a, a)
        if q < _NEG_RADICAND_TOL:
            raise MetricError(f"negative quadratic form {q:.3e}; metric is not SPD")
        return max(q, 0.0)

    def norm_inv(self, a: np.ndarray) -> float:
        """sqrt(<a, M^{-1} a>)."""
        return math.sqrt(self.norm_inv_sq(a))

    @classmethod
    def from_json_obj(cls, obj) -> "Metric":
        """Build from a row-major nested-list matrix literal."""
        return cls(np.asarray(obj, dtype=float))

    def __repr__(self) -> str:
        kind = "identity" if self._identity else ("diagonal" if self._diagonal else "dense")
        return f"Metric(dim={self.dim}, {kind})"
