"""Closed-form special cases of the safeguarded splitting loop.

All of them choose the deviations as fixed linear combinations of past
iterates so the norm condition holds by construction:

* ``parallel_x_form`` / ``parallel_y_form`` -- the general family with
  deviations parallel to the budget's leading norm argument, driven by a
  scalar sequence kappa_n with kappa_n^2 (lambda_{n+1}/lambda_n)^2 <=
  zeta_{n+1} (plain kappa_n^2 <= zeta_{n+1} under constant relaxation); the
  y-form eliminates the x-sequence and produces identical (y_n, p_n).
* ``constant_kappa`` -- constant relaxation (lambda0 = 1) and constant
  kappa in (-1, 1); a two-sequence recursion in (p, u).
* ``tunable_e`` -- kappa_n = (lambda_{n+1} - lambda0)/lambda_{n+1} with
  lambda_n = (1 - gamma*beta_bar/4)^e (1+n)^e; interpolates between plain
  relaxed forward-backward (e = 0) and the anchored accelerated method
  (e = 1), with the squared residual decaying as O(1/n^{2e}).
* ``accelerated_fb`` -- the e = 1 case written as a four-term recursion.
* ``halpern`` -- the anchored fixed-point iteration
  y_{n+1} = y_0/(n+2) + (n+1)/(n+2) N y_n for a nonexpansive N, reached from
  the accelerated method when A = 0 and gamma*beta = 2.

Affine problems run through precomputed forward-backward matrices and the
JIT kernels in :mod:`devsplit._fast`; anything else falls back to the
operator oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg

from . import _fast
from .engine import ParallelDeviations, init, step
from .errors import ConfigurationError, SafeguardViolationError
from .metric import Metric, as_vector
from .operators import NonexpansiveResidualOp, ProblemInstance, ZeroMonotoneOp
from .records import RunRecord, StoppingRule, Trace
from .schedules import (GrowthFunction, Schedule, constant_growth, linear_growth,
                        power_growth)

__all__ = [
    "VariantConfig",
    "fb_affine_map",
    "run_parallel_x_form",
    "run_parallel_y_form",
    "run_constant_kappa",
    "run_tunable",
    "run_accelerated_fb",
    "run_halpern",
    "halpern_problem",
    "tunable_rate_constant",
    "EmbeddingReport",
    "embed_to_general",
    "run_variant",
    "VARIANT_KINDS",
]

VARIANT_KINDS = ("parallel_x_form", "parallel_y_form", "constant_kappa",
                 "tunable_e", "accelerated_fb", "halpern")


@dataclass
class VariantConfig:
    """Scalar knobs selecting and parameterizing a special case."""

    kind: str
    gamma: float = 0.1
    beta_bar: float = 0.001
    e: float = 0.0
    kappa: float | Callable[[int], float] | None = None
    lambda0: float | None = None
    growth: GrowthFunction | None = None
    eps0: float = 0.0
    eps: float = 1e-9

    def __post_init__(self):
        if self.kind not in VARIANT_KINDS:
            raise ConfigurationError(f"unknown variant kind {self.kind!r}")
        if self.gamma <= 0:
            raise ConfigurationError("gamma must be positive")
        if self.beta_bar < 0:
            raise ConfigurationError("beta_bar must be nonnegative")

    @property
    def gb(self) -> float:
        return self.gamma * self.beta_bar

    def kappa_fn(self) -> Callable[[int], float]:
        if self.kappa is None:
            return lambda n: 0.0
        if callable(self.kappa):
            return self.kappa
        return lambda n, k=float(self.kappa): k

    def resolved_lambda0(self) -> float:
        if self.kind == "constant_kappa":
            return 1.0
        if self.kind == "tunable_e":
            return (1.0 - self.gb / 4.0) ** self.e
        if self.kind in ("accelerated_fb", "halpern"):
            return 1.0 - self.gb / 4.0
        return 1.0 if self.lambda0 is None else float(self.lambda0)

    def resolved_growth(self) -> GrowthFunction:
        if self.kind == "constant_kappa":
            return constant_growth()
        if self.kind == "tunable_e":
            return power_growth(self.e)
        if self.kind in ("accelerated_fb", "halpern"):
            return linear_growth()
        return self.growth if self.growth is not None else constant_growth()

    def schedule(self) -> Schedule:
        """Parameter schedule of the equivalent general run."""
        return Schedule(lambda0=self.resolved_lambda0(), growth=self.resolved_growth(),
                        gamma=self.gamma, beta_bar=self.beta_bar,
                        eps=self.eps, eps0=self.eps0)


def fb_affine_map(problem: ProblemInstance, gamma: float
                  ) -> tuple[np.ndarray, np.ndarray] | None:
    """(W, w) with FB(y) = W y + w when both operators are affine, else None."""
    G = getattr(problem.A, "matrix", None)
    coeffs = problem.C.linear_coeffs()
    if G is None or coeffs is None:
        return None
    Q, q = coeffs
    lhs = problem.M.mat + gamma * G
    W = scipy.linalg.solve(lhs, problem.M.mat - gamma * Q)
    w = scipy.linalg.solve(lhs, -gamma * q)
    return W, w


# -- shared run plumbing -----------------------------------------------------


def _stop_code(stop: StoppingRule, x_star, dim: int):
    if stop.tol is None:
        return 0.0, _fast.STOP_NONE, np.zeros(dim)
    if stop.kind == "dist":
        if x_star is None:
            raise ConfigurationError("distance stopping requires a known solution")
        code = _fast.STOP_DIST_M if stop.metric_norm else _fast.STOP_DIST
        return float(stop.tol), code, np.asarray(x_star, dtype=float)
    return float(stop.tol), _fast.STOP_FPRES, (np.asarray(x_star, dtype=float)
                                               if x_star is not None else np.zeros(dim))


def _kernel_record(algo, kernel, args, problem, stop, x_star, trace,
                   rate_c=0.0, meta=None) -> RunRecord:
    """Two-pass kernel driver: count first, then re-run recording the trace."""
    d = problem.dim
    empty_p = np.empty((0, d))
    empty_n = np.empty(0, dtype=np.int64)
    p_last = np.zeros(d)
    y_last = np.zeros(d)
    tail = [rate_c] if rate_c is not None else []
    out = kernel(*args, 0, empty_p, empty_p, empty_n, p_last, y_last, *tail)
    count, converged = int(out[0]), bool(out[1])
    max_gap = out[3] if len(out) > 3 else None
    if trace is not None and trace.stride > 0 and count > 0:
        rows = count // trace.stride + 1
        tp = np.empty((rows, d))
        ty = np.empty((rows, d))
        tn = np.empty(rows, dtype=np.int64)
        out2 = kernel(*args, trace.stride, tp, ty, tn, np.zeros(d), np.zeros(d), *tail)
        written = int(out2[2])
        for i in range(written):
            p_row, y_row = tp[i], ty[i]
            dist = (float(np.linalg.norm(p_row - x_star)) if x_star is not None else np.nan)
            fp = problem.M.norm(p_row - y_row)
            trace.append(int(tn[i]), p_row, y_row, dist, fp)
    rec = RunRecord(algo=algo, iterations=count, converged=converged,
                    trace=trace if trace is not None else Trace(stride=0),
                    final_p=p_last,
                    final_dist=(float(np.linalg.norm(p_last - x_star))
                                if x_star is not None else None),
                    final_fp_res=problem.M.norm(p_last - y_last) if count else None)
    rec.meta.update(meta or {})
    if max_gap is not None and rate_c:
        rec.meta["max_rate_gap"] = float(max_gap)
    return rec


class _PyRun:
    """Bookkeeping shared by the pure-Python variant loops."""

    def __init__(self, problem, stop, x_star, trace, rate_fn=None):
        self.problem = problem
        self.stop = stop
        self.x_star = x_star
        self.trace = trace
        self.rate_fn = rate_fn
        self.max_rate_gap = -math.inf
        self.count = 0
        self.converged = False
        self.final_p = None

    def observe(self, n, p, y) -> bool:
        """Record iteration n; True means the stopping rule fired."""
        self.count = n + 1
        self.final_p = p
        M = self.problem.M
        dist = (float(np.linalg.norm(p - self.x_star))
                if self.x_star is not None else None)
        fp = M.norm(p - y)
        if self.rate_fn is not None:
            gap = M.norm_sq(p - y) - self.rate_fn(n)
            self.max_rate_gap = max(self.max_rate_gap, gap)
        if self.trace is not None and self.trace.wants(n):
            self.trace.append(n, p, y, dist if dist is not None else np.nan, fp)
        if self.stop.tol is None:
            return False
        if self.stop.kind == "dist":
            value = (self.problem.M.norm(p - self.x_star) if self.stop.metric_norm
                     else dist)
        else:
            value = fp
        if value is not None and value <= self.stop.tol:
            self.converged = True
            return True
        return False

    def record(self, algo, meta=None) -> RunRecord:
        rec = RunRecord(algo=algo, iterations=self.count, converged=self.converged,
                        trace=self.trace if self.trace is not None else Trace(stride=0),
                        final_p=(np.array(self.final_p) if self.final_p is not None
                                 else np.zeros(self.problem.dim)),
                        final_dist=(float(np.linalg.norm(self.final_p - self.x_star))
                                    if self.final_p is not None and self.x_star is not None
                                    else None))
        rec.meta.update(meta or {})
        if self.rate_fn is not None:
            rec.meta["max_rate_gap"] = self.max_rate_gap
        return rec


# -- the parallel-deviation family (reference loops) -------------------------


def _scalar_norm_condition(kappa_n: float, lam0: float, growth, n: int) -> float:
    """Scalar form of the deviation norm condition for the parallel family.

    The admissible budget fraction is zeta_{n+1}; the proposed pair consumes
    kappa_n^2 (lambda_{n+1}/lambda_n)^2 of it (the relaxation ratio enters
    because the weights in the norm condition sit at index n+1 while the
    budget's leading term scales with lambda_n^2). Constant relaxation
    reduces this to plain kappa_n^2.
    """
    ratio = growth(n + 1) / growth(n)
    return kappa_n * kappa_n * ratio * ratio


def run_parallel_x_form(cfg: VariantConfig, problem: ProblemInstance, x0,
                        stop: StoppingRule, trace: Trace | None = None,
                        on_iter=None) -> RunRecord:
    """Momentum + parallel-deviation loop keeping the x-sequence explicit.

    Per iteration: y_n = x_n + a_n (y_{n-1} - x_n) + u_n with
    a_n = (lambda_n - lambda0)/lambda_n, then a forward-backward step on y_n,
    x_{n+1} = x_n + lambda_n (p_n - y_n) + (lambda_n - lambda0)(y_{n-1} - p_{n-1}),
    and the next deviation is kappa_n (4 - gb - 2 lambda0)/2 times the running
    correction vector. Start: y_{-1} = p_{-1} = x_0, u_0 = 0.
    """
    lam0 = cfg.resolved_lambda0()
    growth = cfg.resolved_growth()
    kappa = cfg.kappa_fn()
    gb = cfg.gb
    zeta = 1.0 - cfg.eps0
    x = as_vector(x0, problem.dim)
    y_prev = x.copy()
    p_prev = x.copy()
    u = np.zeros(problem.dim)
    runner = _PyRun(problem, stop, problem.solution, trace)
    cu = 0.5 * (4.0 - gb - 2.0 * lam0)
    cw = (2.0 - gb - 2.0 * lam0) / (4.0 - gb - 2.0 * lam0)
    for n in range(stop.max_iter):
        k = kappa(n)
        scalar = _scalar_norm_condition(k, lam0, growth, n)
        if scalar > zeta + 1e-12:
            raise SafeguardViolationError(scalar, zeta)
        lam = lam0 * growth(n)
        a = (lam - lam0) / lam
        y = x + a * (y_prev - x) + u
        p = problem.fb_step(cfg.gamma, y)
        if on_iter is not None:
            on_iter(n, y, p, u, x)
        hit = runner.observe(n, p, y)
        if hit:
            break
        x_next = x + lam * (p - y) + (lam - lam0) * (y_prev - p_prev)
        u_next = k * cu * (p - x + a * (x - p_prev) - cw * u)
        x, y_prev, p_prev, u = x_next, y, p, u_next
    return runner.record("parallel_x_form")


def run_parallel_y_form(cfg: VariantConfig, problem: ProblemInstance, y0,
                        stop: StoppingRule, trace: Trace | None = None,
                        on_iter=None) -> RunRecord:
    """x-eliminated form of the parallel family; same (y_n, p_n) sequences.

    Requires the common start y_{-1} = p_{-1} = y_0.
    """
    lam0 = cfg.resolved_lambda0()
    growth = cfg.resolved_growth()
    kappa = cfg.kappa_fn()
    gb = cfg.gb
    zeta = 1.0 - cfg.eps0
    y = as_vector(y0, problem.dim)
    y_prev = y.copy()
    p_prev = y.copy()
    u = np.zeros(problem.dim)
    runner = _PyRun(problem, stop, problem.solution, trace)
    cu = 0.5 * (4.0 - gb - 2.0 * lam0)
    for n in range(stop.max_iter):
        k = kappa(n)
        scalar = _scalar_norm_condition(k, lam0, growth, n)
        if scalar > zeta + 1e-12:
            raise SafeguardViolationError(scalar, zeta)
        lam = lam0 * growth(n)
        lam_next = lam0 * growth(n + 1)
        a = (lam - lam0) / lam
        p = problem.fb_step(cfg.gamma, y)
        hit = runner.observe(n, p, y)
        u_next = k * (cu * (p - y - a * (p_prev - y_prev)) + u)
        if on_iter is not None:
            on_iter(n, y, p, u_next, None)
        if hit:
            break
        y_next = (y + (lam0 * lam / lam_next) * (p - y) + u_next - (lam / lam_next) * u
                  + ((lam - lam0) / lam_next) * ((y - y_prev) + lam0 * (y_prev - p_prev)))
        y_prev, p_prev, y, u = y, p, y_next, u_next
    return runner.record("parallel_y_form")


# -- closed-form specials ----------------------------------------------------


def run_constant_kappa(cfg: VariantConfig, problem: ProblemInstance, p_init,
                       stop: StoppingRule, trace: Trace | None = None) -> RunRecord:
    """Constant-relaxation two-sequence recursion; kappa in (-1, 1).

    p_n = FB(p_{n-1} + u_n - u_{n-1}),
    u_{n+1} = kappa ((2 - gb)/2 (p_n - p_{n-1} + u_{n-1}) + gb/2 u_n),
    started from u_{-1} = u_0 = 0 and p_{-1} = p_init.
    """
    if cfg.kappa is None or callable(cfg.kappa):
        raise ConfigurationError("constant_kappa needs a scalar kappa")
    k = float(cfg.kappa)
    if not -1.0 < k < 1.0:
        raise ConfigurationError(f"kappa must lie in (-1, 1), got {k}")
    p0 = as_vector(p_init, problem.dim)
    x_star = problem.solution
    affine = fb_affine_map(problem, cfg.gamma)
    if affine is not None:
        W, w = affine
        tol, code, xs = _stop_code(stop, x_star, problem.dim)
        args = (W, w, problem.M.mat, p0, xs, k, cfg.gb, tol, code, stop.max_iter)
        return _kernel_record("constant_kappa", _fast.constant_kappa_kernel, args,
                              problem, stop, x_star, trace, rate_c=None,
                              meta={"kappa": k})
    p_prev = p0.copy()
    u_prev = np.zeros(problem.dim)
    u = np.zeros(problem.dim)
    runner = _PyRun(problem, stop, x_star, trace)
    gb = cfg.gb
    for n in range(stop.max_iter):
        y = p_prev + u - u_prev
        p = problem.fb_step(cfg.gamma, y)
        if runner.observe(n, p, y):
            break
        u_next = k * (0.5 * (2.0 - gb) * (p - p_prev + u_prev) + 0.5 * gb * u)
        p_prev, u_prev, u = p, u, u_next
    return runner.record("constant_kappa", meta={"kappa": k})


def tunable_rate_constant(cfg: VariantConfig, metric: Metric, y0, x_star) -> float:
    """Envelope constant: |p_n - y_n|_M^2 <= const / (1+n)^{2e}."""
    lam0 = cfg.resolved_lambda0()
    v0 = metric.norm_sq(as_vector(y0) - as_vector(x_star))
    return 2.0 * v0 / ((4.0 - cfg.gb - 2.0 * lam0) * lam0)


def run_tunable(cfg: VariantConfig, problem: ProblemInstance, y0,
                stop: StoppingRule, trace: Trace | None = None,
                rate_check: bool = False) -> RunRecord:
    """Rate-tunable interpolation with exponent e in [0, 1].

    lambda_n = (1 - gb/4)^e (1+n)^e; e = 0 is plain forward-backward,
    e = 1 the anchored accelerated method. ``rate_check`` tracks the worst
    violation of the residual envelope (needs a known solution) in
    ``meta["max_rate_gap"]``.
    """
    if not 0.0 <= cfg.e <= 1.0:
        raise ConfigurationError(f"exponent e must lie in [0, 1], got {cfg.e}")
    y0 = as_vector(y0, problem.dim)
    lam0 = cfg.resolved_lambda0()
    x_star = problem.solution
    rate_c = 0.0
    if rate_check:
        if x_star is None:
            raise ConfigurationError("rate check requires a known solution")
        if cfg.e > 0.0:
            rate_c = tunable_rate_constant(cfg, problem.M, y0, x_star)
    affine = fb_affine_map(problem, cfg.gamma)
    meta = {"e": cfg.e, "rate_const": rate_c}
    if affine is not None:
        W, w = affine
        tol, code, xs = _stop_code(stop, x_star, problem.dim)
        args = (W, w, problem.M.mat, y0, xs, lam0, cfg.e, cfg.gb, tol, code,
                stop.max_iter)
        return _kernel_record("tunable_e", _fast.tunable_kernel, args, problem,
                              stop, x_star, trace, rate_c=rate_c, meta=meta)
    rate_fn = (lambda n: rate_c * (1.0 + n) ** (-2.0 * cfg.e)) if rate_c > 0 else None
    runner = _PyRun(problem, stop, x_star, trace, rate_fn=rate_fn)
    y_prev = y0.copy()
    y = y0.copy()
    p_prev = y0.copy()
    lam = lam0
    gb = cfg.gb
    c3 = 0.5 * (4.0 - gb)
    for n in range(stop.max_iter):
        p = problem.fb_step(cfg.gamma, y)
        if runner.observe(n, p, y):
            break
        lam_next = lam0 * (2.0 + n) ** cfg.e
        c1 = lam0 * lam / lam_next + (lam_next - lam0) / lam_next * 0.5 * (4.0 - gb - 2.0 * lam0)
        c2 = (lam - lam0) / lam_next
        y_next = y + c1 * (p - y) + c2 * ((y - y_prev) + c3 * (y_prev - p_prev))
        y_prev, y, p_prev, lam = y, y_next, p, lam_next
    return runner.record("tunable_e", meta=meta)


def run_accelerated_fb(cfg: VariantConfig, problem: ProblemInstance, y0,
                       stop: StoppingRule, trace: Trace | None = None,
                       rate_check: bool = False) -> RunRecord:
    """Four-term accelerated recursion (the e = 1 case written out).

    y_{n+1} = gb(1+n)/(4+2n) y_n + n(2-gb)/(4+2n) y_{n-1}
              + (1+n)(4-gb)/(4+2n) p_n - n(4-gb)/(4+2n) p_{n-1}.
    With beta_bar -> 0 the weights tend to the anchored proximal-point ones.
    """
    y0 = as_vector(y0, problem.dim)
    x_star = problem.solution
    gb = cfg.gb
    rate_c = 0.0
    if rate_check:
        if x_star is None:
            raise ConfigurationError("rate check requires a known solution")
        rate_c = 16.0 * problem.M.norm_sq(y0 - x_star) / ((4.0 - gb) ** 2)
    affine = fb_affine_map(problem, cfg.gamma)
    meta = {"rate_const": rate_c}
    if affine is not None:
        W, w = affine
        tol, code, xs = _stop_code(stop, x_star, problem.dim)
        args = (W, w, problem.M.mat, y0, xs, gb, tol, code, stop.max_iter)
        return _kernel_record("accelerated_fb", _fast.accel_fb_kernel, args,
                              problem, stop, x_star, trace, rate_c=rate_c, meta=meta)
    rate_fn = (lambda n: rate_c / (1.0 + n) ** 2) if rate_c > 0 else None
    runner = _PyRun(problem, stop, x_star, trace, rate_fn=rate_fn)
    y_prev = y0.copy()
    y = y0.copy()
    p_prev = y0.copy()
    for n in range(stop.max_iter):
        p = problem.fb_step(cfg.gamma, y)
        if runner.observe(n, p, y):
            break
        den = 4.0 + 2.0 * n
        y_next = (gb * (1.0 + n) / den * y + n * (2.0 - gb) / den * y_prev
                  + (1.0 + n) * (4.0 - gb) / den * p - n * (4.0 - gb) / den * p_prev)
        y_prev, y, p_prev = y, y_next, p
    return runner.record("accelerated_fb", meta=meta)


def halpern_problem(problem: ProblemInstance, gamma: float,
                    beta: float = 1.0) -> ProblemInstance:
    """Encode the forward-backward map of ``problem`` as an anchored target.

    The map N = FB(gamma, .) is nonexpansive in the metric norm; the returned
    instance has A = 0 and C = (beta/2) M (Id - N), so the anchored iteration
    with step 2/beta evaluates N exactly. The solution carries over.
    """
    affine = fb_affine_map(problem, gamma)
    n_matrix, n_offset = (affine if affine is not None else (None, None))
    c_op = NonexpansiveResidualOp(lambda y: problem.fb_step(gamma, y), problem.M,
                                  beta=beta, n_matrix=n_matrix, n_offset=n_offset)
    return ProblemInstance(A=ZeroMonotoneOp(problem.dim), C=c_op, M=problem.M,
                           solution=problem.solution,
                           name=f"anchored[{problem.name}]")


def run_halpern(problem: ProblemInstance, y0, stop: StoppingRule,
                gamma: float | None = None, trace: Trace | None = None,
                rate_check: bool = False) -> RunRecord:
    """Anchored iteration y_{n+1} = y_0/(n+2) + (n+1)/(n+2) N y_n.

    Expects an instance with A = 0 and cocoercive C with beta > 0; the step
    size is pinned to gamma = 2/beta so the forward step evaluates the
    nonexpansive target N = Id - (2/beta) M^{-1} C. Use
    :func:`halpern_problem` to wrap an arbitrary problem's forward-backward
    map first. The residual obeys |p_n - y_n|_M^2 <= 4 |y_0 - x*|_M^2/(1+n)^2.
    """
    G = getattr(problem.A, "matrix", None)
    if G is None or np.any(G != 0.0):
        raise ConfigurationError(
            "anchored iteration requires A = 0; wrap the problem with halpern_problem()")
    beta = problem.C.beta
    if beta <= 0:
        raise ConfigurationError("anchored iteration requires a cocoercive C with beta > 0")
    if gamma is None:
        gamma = 2.0 / beta
    if abs(gamma * beta - 2.0) > 1e-12:
        raise ConfigurationError(
            f"anchored iteration requires gamma*beta = 2, got {gamma * beta:.6g}")
    y0 = as_vector(y0, problem.dim)
    x_star = problem.solution
    rate_c = 0.0
    if rate_check:
        if x_star is None:
            raise ConfigurationError("rate check requires a known solution")
        rate_c = 4.0 * problem.M.norm_sq(y0 - x_star)
    affine = fb_affine_map(problem, gamma)
    meta = {"rate_const": rate_c, "gamma": gamma}
    if affine is not None:
        W, w = affine
        tol, code, xs = _stop_code(stop, x_star, problem.dim)
        args = (W, w, problem.M.mat, y0, xs, tol, code, stop.max_iter)
        return _kernel_record("halpern", _fast.halpern_kernel, args, problem,
                              stop, x_star, trace, rate_c=rate_c, meta=meta)
    rate_fn = (lambda n: rate_c / (1.0 + n) ** 2) if rate_c > 0 else None
    runner = _PyRun(problem, stop, x_star, trace, rate_fn=rate_fn)
    y = y0.copy()
    for n in range(stop.max_iter):
        p = problem.fb_step(gamma, y)
        if runner.observe(n, p, y):
            break
        y = y0 / (n + 2.0) + (n + 1.0) / (n + 2.0) * p
    return runner.record("halpern", meta=meta)


# -- embedding back into the general loop ------------------------------------


@dataclass
class EmbeddingReport:
    coupling: float
    coupling_identity_residual: float
    max_yz_gap: float
    max_trace_gap: float
    steps: int
    meta: dict = field(default_factory=dict)


def embed_to_general(cfg: VariantConfig, problem: ProblemInstance, x0,
                     steps: int) -> EmbeddingReport:
    """Replay a parallel-family run through the general engine and compare.

    The deviations are reconstructed via the policy u_{n+1} = kappa_n
    (4-gb-2 lambda0)/2 w_n, v_{n+1} = c u_{n+1} with the coupling c =
    (2-gb)/(2-lambda0 gb); the engine's y and z sequences must coincide and
    the (y_n, p_n) trace must match the closed-form loop.
    """
    if cfg.kind not in ("parallel_x_form", "parallel_y_form", "constant_kappa",
                        "tunable_e"):
        raise ConfigurationError("embedding applies to the parallel-deviation family")
    schedule = cfg.schedule()
    if cfg.kind == "tunable_e":
        growth = cfg.resolved_growth()
        lam0 = cfg.resolved_lambda0()
        kappa = lambda n: (lam0 * growth(n + 1) - lam0) / (lam0 * growth(n + 1))
    else:
        kappa = cfg.kappa_fn()
    policy = ParallelDeviations(kappa, schedule)
    gb = cfg.gb
    lam0 = cfg.resolved_lambda0()
    coupling_residual = abs((1.0 - lam0) * gb / (2.0 - lam0 * gb)
                            + (2.0 - gb) / (2.0 - lam0 * gb) - 1.0)

    variant_y: list[np.ndarray] = []
    variant_p: list[np.ndarray] = []
    nostop = StoppingRule(max_iter=steps, tol=None)
    if cfg.kind == "constant_kappa":
        x_cfg = VariantConfig(kind="parallel_x_form", gamma=cfg.gamma,
                              beta_bar=cfg.beta_bar, kappa=cfg.kappa,
                              lambda0=1.0, eps0=cfg.eps0)
    elif cfg.kind == "tunable_e":
        x_cfg = VariantConfig(kind="parallel_x_form", gamma=cfg.gamma,
                              beta_bar=cfg.beta_bar, kappa=kappa,
                              lambda0=lam0, growth=cfg.resolved_growth(),
                              eps0=cfg.eps0)
    else:
        x_cfg = cfg
    run_parallel_x_form(x_cfg, problem, x0, nostop,
                        on_iter=lambda n, y, p, u, x: (variant_y.append(y.copy()),
                                                       variant_p.append(p.copy())))

    state = init(problem, schedule, x0)
    max_yz = 0.0
    max_gap = 0.0
    for n in range(steps):
        state = step(state, problem, schedule, policy)
        view = state.last
        max_yz = max(max_yz, float(np.max(np.abs(view.y - view.z))))
        max_gap = max(max_gap,
                      float(np.max(np.abs(view.y - variant_y[n]))),
                      float(np.max(np.abs(view.p - variant_p[n]))))
    return EmbeddingReport(coupling=parallel_coupling_value(cfg),
                           coupling_identity_residual=coupling_residual,
                           max_yz_gap=max_yz, max_trace_gap=max_gap, steps=steps)


def parallel_coupling_value(cfg: VariantConfig) -> float:
    gb = cfg.gb
    lam0 = cfg.resolved_lambda0()
    return (2.0 - gb) / (2.0 - lam0 * gb)


# -- dispatcher ---------------------------------------------------------------


def run_variant(cfg: VariantConfig, problem: ProblemInstance, x0,
                stop: StoppingRule, trace: Trace | None = None,
                rate_check: bool = False) -> RunRecord:
    """Run the special case selected by ``cfg.kind`` from the common start x0."""
    if cfg.kind == "parallel_x_form":
        return run_parallel_x_form(cfg, problem, x0, stop, trace)
    if cfg.kind == "parallel_y_form":
        return run_parallel_y_form(cfg, problem, x0, stop, trace)
    if cfg.kind == "constant_kappa":
        return run_constant_kappa(cfg, problem, x0, stop, trace)
    if cfg.kind == "tunable_e":
        return run_tunable(cfg, problem, x0, stop, trace, rate_check=rate_check)
    if cfg.kind == "accelerated_fb":
        return run_accelerated_fb(cfg, problem, x0, stop, trace, rate_check=rate_check)
    if cfg.kind == "halpern":
        target = problem
        G = getattr(problem.A, "matrix", None)
        if G is None or np.any(G != 0.0) or problem.C.beta <= 0:
            target = halpern_problem(problem, cfg.gamma)
        return run_halpern(target, x0, stop, trace=trace, rate_check=rate_check)
    raise ConfigurationError(f"unknown variant kind {cfg.kind!r}")
