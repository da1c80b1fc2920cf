"""Operator oracles: set-valued monotone part A and single-valued cocoercive part C.

A is accessed only through its metric resolvent ``r -> p`` solving
``M p + gamma a = r`` with ``a in A p``; C through plain evaluation plus its
declared cocoercivity constant ``beta`` (user-supplied, never estimated).
Linear operators expose their matrices so solvers can precompute affine
forward-backward maps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import ConfigurationError, DimensionMismatchError, OperatorContractError
from .metric import Metric, as_vector

__all__ = [
    "MonotoneOp",
    "LinearMonotoneOp",
    "ZeroMonotoneOp",
    "BoxNormalConeOp",
    "CocoerciveOp",
    "ZeroCocoerciveOp",
    "AffineCocoerciveOp",
    "NonexpansiveResidualOp",
    "ProblemInstance",
    "quad_cocoercivity_bound",
    "check_cocoercivity",
    "check_resolvent_contraction",
]


class MonotoneOp:
    """Maximally monotone operator exposed through its metric resolvent."""

    dim: int

    def resolvent(self, metric: Metric, gamma: float, r: np.ndarray) -> np.ndarray:
        """Unique p with M p + gamma a = r for some a in A p."""
        raise NotImplementedError

    #: dense matrix G when the operator is x -> G x, else None
    matrix: np.ndarray | None = None


class LinearMonotoneOp(MonotoneOp):
    """A x = G x for a square G whose symmetric part is positive semidefinite.

    Resolvents solve (M + gamma G) p = r by direct factorization; the
    factorization is cached per (metric, gamma) pair so constant-step runs
    pay a single factorization.
    """

    def __init__(self, G):
        G = np.asarray(G, dtype=float)
        if G.ndim != 2 or G.shape[0] != G.shape[1]:
            raise ConfigurationError("operator matrix must be square")
        sym = 0.5 * (G + G.T)
        eigmin = float(scipy.linalg.eigvalsh(sym)[0])
        if eigmin < -1e-10 * max(1.0, float(np.max(np.abs(G)))):
            raise ConfigurationError(
                f"symmetric part has a negative eigenvalue ({eigmin:.3e}); operator is not monotone"
            )
        self.matrix = G
        self.dim = G.shape[0]
        self._cache: dict[tuple[int, float], tuple[Metric, tuple]] = {}

    def _factorization(self, metric: Metric, gamma: float):
        key = (id(metric), float(gamma))
        hit = self._cache.get(key)
        if hit is not None and hit[0] is metric:
            return hit[1]
        fact = scipy.linalg.lu_factor(metric.mat + gamma * self.matrix)
        self._cache[key] = (metric, fact)
        return fact

    def resolvent(self, metric: Metric, gamma: float, r: np.ndarray) -> np.ndarray:
        if gamma <= 0:
            raise ConfigurationError("resolvent step gamma must be positive")
        if r.shape[0] != self.dim:
            raise DimensionMismatchError("right-hand side dimension mismatch")
        try:
            return scipy.linalg.lu_solve(self._factorization(metric, gamma), r)
        except (scipy.linalg.LinAlgError, ValueError) as exc:
            raise OperatorContractError("resolvent solve failed; operator violates monotonicity") from exc


class ZeroMonotoneOp(MonotoneOp):
    """A = 0; the resolvent reduces to p = M^{-1} r."""

    def __init__(self, dim: int):
        self.dim = int(dim)
        self.matrix = np.zeros((self.dim, self.dim))

    def resolvent(self, metric: Metric, gamma: float, r: np.ndarray) -> np.ndarray:
        if gamma <= 0:
            raise ConfigurationError("resolvent step gamma must be positive")
        return metric.apply_inverse(r)


class BoxNormalConeOp(MonotoneOp):
    """Normal cone of the box [lo, hi]; resolvent is the componentwise projection.

    Only identity or diagonal metrics are supported: the projection then
    separates per coordinate. A dense metric would turn it into a QP.
    """

    matrix = None

    def __init__(self, lo, hi):
        self.lo = as_vector(lo)
        self.hi = as_vector(hi)
        if self.lo.shape != self.hi.shape or np.any(self.lo > self.hi):
            raise ConfigurationError("box bounds must satisfy lo <= hi componentwise")
        self.dim = self.lo.shape[0]

    def resolvent(self, metric: Metric, gamma: float, r: np.ndarray) -> np.ndarray:
        if gamma <= 0:
            raise ConfigurationError("resolvent step gamma must be positive")
        if not metric.is_diagonal:
            raise ConfigurationError(
                "box normal-cone resolvent requires an identity or diagonal metric"
            )
        base = r if metric.is_identity else r / metric.diagonal()
        return np.clip(base, self.lo, self.hi)


class CocoerciveOp:
    """Single-valued cocoercive operator with declared constant beta >= 0."""

    dim: int
    beta: float

    def __call__(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def linear_coeffs(self) -> tuple[np.ndarray, np.ndarray] | None:
        """(Q, q) when C x = Q x + q, else None."""
        return None


class ZeroCocoerciveOp(CocoerciveOp):
    """C = 0 with beta = 0 (constant operators are 0-cocoercive)."""

    def __init__(self, dim: int):
        self.dim = int(dim)
        self.beta = 0.0

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.zeros(self.dim)

    def linear_coeffs(self):
        return np.zeros((self.dim, self.dim)), np.zeros(self.dim)


class AffineCocoerciveOp(CocoerciveOp):
    """C x = Q x + q with a user-declared cocoercivity constant.

    For a symmetric positive semidefinite Q this is the gradient of the
    quadratic ``x -> x'Qx/2 + q'x``; the tight constant in the metric M is
    the largest generalized eigenvalue of (Q, M), see
    :func:`quad_cocoercivity_bound`.
    """

    def __init__(self, Q, q=None, beta=None):
        Q = np.asarray(Q, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise ConfigurationError("operator matrix must be square")
        self.Q = Q
        self.q = np.zeros(Q.shape[0]) if q is None else as_vector(q, Q.shape[0])
        if beta is None:
            raise ConfigurationError("cocoercivity constant beta must be declared")
        if beta < 0:
            raise ConfigurationError("beta must be nonnegative")
        self.beta = float(beta)
        self.dim = Q.shape[0]

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.Q @ x + self.q

    def linear_coeffs(self):
        return self.Q, self.q


class NonexpansiveResidualOp(CocoerciveOp):
    """Encode a nonexpansive map N (in the M-norm) as C = (beta/2) M (Id - N).

    Then C is 1/beta-cocoercive w.r.t. M and the forward step with gamma =
    2/beta evaluates exactly N: y - gamma M^{-1} C y = N y. Used to drive
    anchored iterations with arbitrary nonexpansive targets.
    """

    def __init__(self, n_map, metric: Metric, beta: float = 1.0,
                 n_matrix: np.ndarray | None = None, n_offset: np.ndarray | None = None):
        if beta <= 0:
            raise ConfigurationError("beta must be positive for a nonexpansive encoding")
        self._n_map = n_map
        self._metric = metric
        self.beta = float(beta)
        self.dim = metric.dim
        self._n_matrix = None if n_matrix is None else np.asarray(n_matrix, dtype=float)
        self._n_offset = np.zeros(self.dim) if n_offset is None else as_vector(n_offset, self.dim)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return 0.5 * self.beta * self._metric.apply(x - self._n_map(x))

    def target_map(self, x: np.ndarray) -> np.ndarray:
        return self._n_map(x)

    def linear_coeffs(self):
        if self._n_matrix is None:
            return None
        Q = 0.5 * self.beta * (self._metric.mat @ (np.eye(self.dim) - self._n_matrix))
        q = -0.5 * self.beta * (self._metric.mat @ self._n_offset)
        return Q, q


def quad_cocoercivity_bound(Q, metric: Metric) -> float:
    """Tight cocoercivity constant of x -> Qx (Q symmetric PSD) in the M-norm.

    beta <x-y, Qx-Qy> >= |Qx-Qy|_{M^{-1}}^2 holds iff beta >= lambda_max of
    the generalized problem Q v = lambda M v.
    """
    Q = np.asarray(Q, dtype=float)
    vals = scipy.linalg.eigh(Q, metric.mat, eigvals_only=True)
    return max(float(vals[-1]), 0.0)


@dataclass
class CocoercivityReport:
    min_slack: float
    witness: tuple[np.ndarray, np.ndarray]

    @property
    def certified(self) -> bool:
        return self.min_slack >= -1e-10


def check_cocoercivity(C: CocoerciveOp, metric: Metric, samples: int = 100,
                       seed: int = 0, scale: float = 2.0) -> CocoercivityReport:
    """Sample pairs and report the worst slack of the cocoercivity inequality.

    Slack at (x, y) is ``beta <Cx-Cy, x-y> - |Cx-Cy|_{M^{-1}}^2``; a negative
    value beyond roundoff means the declared beta is too small on the sample.
    This is a certifier over the sample only, not an estimator.
    """
    if samples < 1:
        raise ConfigurationError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    worst = np.inf
    witness = None
    for _ in range(samples):
        x = scale * rng.standard_normal(C.dim)
        y = scale * rng.standard_normal(C.dim)
        d = C(x) - C(y)
        slack = C.beta * float(np.dot(d, x - y)) - metric.norm_inv_sq(d)
        if slack < worst:
            worst = slack
            witness = (x, y)
    return CocoercivityReport(min_slack=worst, witness=witness)


def check_resolvent_contraction(A: MonotoneOp, metric: Metric, gamma: float = 1.0,
                                samples: int = 1000, seed: int = 0) -> float:
    """Worst slack of <r1-r2, p1-p2> >= |p1-p2|_M^2 over random right-hand sides.

    The inequality follows from monotonicity of A; a violation beyond
    roundoff indicates a broken resolvent oracle.
    """
    rng = np.random.default_rng(seed)
    worst = np.inf
    for _ in range(samples):
        r1 = rng.standard_normal(A.dim)
        r2 = rng.standard_normal(A.dim)
        p1 = A.resolvent(metric, gamma, r1)
        p2 = A.resolvent(metric, gamma, r2)
        dp = p1 - p2
        worst = min(worst, float(np.dot(r1 - r2, dp)) - metric.norm_sq(dp))
    return worst


@dataclass
class ProblemInstance:
    """Monotone inclusion 0 in A x + C x under the metric M.

    ``solution`` is an optional known zero of A + C; when present it is
    verified to be a fixed point of the forward-backward map at construction.
    """

    A: MonotoneOp
    C: CocoerciveOp
    M: Metric
    solution: np.ndarray | None = None
    name: str = field(default="problem")

    def __post_init__(self):
        if not (self.A.dim == self.C.dim == self.M.dim):
            raise DimensionMismatchError(
                f"operator/metric dimensions disagree: A={self.A.dim}, C={self.C.dim}, M={self.M.dim}"
            )
        if self.solution is not None:
            self.solution = as_vector(self.solution, self.M.dim)
            probe_gamma = 1.0
            xs = self.solution
            p = self.A.resolvent(self.M, probe_gamma,
                                 self.M.apply(xs) - probe_gamma * self.C(xs))
            if float(np.linalg.norm(p - xs)) > 1e-9:
                raise ConfigurationError(
                    "declared solution is not a fixed point of the forward-backward map"
                )

    @property
    def dim(self) -> int:
        return self.M.dim

    def fb_step(self, gamma: float, y: np.ndarray) -> np.ndarray:
        """One forward-backward application p = (M + gamma A)^{-1}(M y - gamma C y)."""
        return self.A.resolvent(self.M, gamma, self.M.apply(y) - gamma * self.C(y))
