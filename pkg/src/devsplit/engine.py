"""The general safeguarded splitting loop.

One iteration, starting from x_n with deviations (u_n, v_n) and the previous
iterates (y_{n-1}, z_{n-1}, p_{n-1}):

    y_n     = x_n + alpha_n (y_{n-1} - x_n) + u_n
    z_n     = x_n + alpha_n (p_{n-1} - x_n) + alpha_bar_n (z_{n-1} - p_{n-1})
              + (theta_bar_n gamma_n beta_bar / theta_hat_n) u_n + v_n
    p_n     = (M + gamma_n A)^{-1} (M z_n - gamma_n C y_n)
    x_{n+1} = x_n + lambda_n (p_n - z_n) + alpha_bar_n lambda_n (z_{n-1} - p_{n-1})

after which the next deviations (u_{n+1}, v_{n+1}) may be chosen freely in
direction but must satisfy the weighted norm condition

    (lambda + mu)_{n+1} (theta_tilde/theta_hat |u|_M^2
                         + theta_hat/theta |v|_M^2)_{n+1}  <=  zeta_{n+1} ell_n,

where ell_n (see :func:`compute_ell`) is computable from the current state.
The engine re-verifies the condition on whatever a policy returns; violating
proposals raise instead of being silently rescaled (wrap a heuristic policy
in :class:`ClipPolicy` for intentional rescaling).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np

from .errors import ConfigurationError, SafeguardViolationError
from .metric import Metric, as_vector
from .operators import ProblemInstance
from .records import RunRecord, StoppingRule, Trace
from .schedules import DerivedParams, Schedule, validate_schedule

__all__ = [
    "StepView",
    "SolverState",
    "DeviationPolicy",
    "ZeroDeviations",
    "ClipPolicy",
    "RandomDeviations",
    "ParallelDeviations",
    "parallel_coupling",
    "init",
    "step",
    "run",
    "compute_ell",
    "ell_norm_argument",
    "safeguard_lhs",
    "SAFEGUARD_SLACK",
]

#: additive-plus-relative tolerance used when re-verifying policy proposals
SAFEGUARD_SLACK = 1e-12


@dataclass(frozen=True)
class StepView:
    """Everything produced by iteration n, frozen for policies and diagnostics."""

    n: int
    x: np.ndarray        # x_n
    y: np.ndarray        # y_n
    z: np.ndarray        # z_n
    p: np.ndarray        # p_n
    x_next: np.ndarray   # x_{n+1}
    u: np.ndarray        # u_n
    v: np.ndarray        # v_n
    prev_y: np.ndarray   # y_{n-1}
    prev_z: np.ndarray   # z_{n-1}
    prev_p: np.ndarray   # p_{n-1}
    ell: float           # ell_n
    ell_prev: float      # ell_{n-1}
    gamma_prev: float    # gamma_{n-1}
    params: DerivedParams


@dataclass
class SolverState:
    """Iterate bundle after ``n`` completed iterations.

    ``y``, ``z``, ``p`` hold the latest computed iterates (the start values
    at n = 0), ``ell`` the latest budget quantity (0 at n = 0), and ``last``
    the full record of the most recent iteration for diagnostics.
    """

    n: int
    x: np.ndarray
    u: np.ndarray
    v: np.ndarray
    y: np.ndarray
    z: np.ndarray
    p: np.ndarray
    ell: float
    gamma_prev: float
    last: StepView | None = None


class DeviationPolicy(Protocol):
    def propose(self, view: StepView, budget: float,
                params_next: DerivedParams) -> tuple[np.ndarray, np.ndarray]:
        """Return (u_{n+1}, v_{n+1}); the engine re-verifies the norm condition."""
        ...


class ZeroDeviations:
    """u = v = 0, always admissible; recovers the plain momentum scheme."""

    def propose(self, view, budget, params_next):
        dim = view.x.shape[0]
        return np.zeros(dim), np.zeros(dim)


class ClipPolicy:
    """Rescale an inner policy's proposal onto the admissible ball.

    If the weighted norm exceeds the budget both vectors are scaled by
    sqrt(budget / lhs), preserving direction and meeting the condition with
    equality.
    """

    def __init__(self, inner: DeviationPolicy, metric: Metric):
        self.inner = inner
        self.metric = metric

    def propose(self, view, budget, params_next):
        u, v = self.inner.propose(view, budget, params_next)
        lhs = safeguard_lhs(u, v, params_next, self.metric)
        if lhs > budget:
            if budget <= 0.0:
                return np.zeros_like(u), np.zeros_like(v)
            scale = np.sqrt(budget / lhs)
            u, v = scale * u, scale * v
        return u, v


class RandomDeviations:
    """Random directions filling a fixed fraction of the budget (for fuzzing).

    Wrap in :class:`ClipPolicy` when the fill fraction may exceed 1.
    """

    def __init__(self, rng: np.random.Generator, metric: Metric, fill: float | None = None):
        self.rng = rng
        self.metric = metric
        self.fill = fill

    def propose(self, view, budget, params_next):
        dim = view.x.shape[0]
        u = self.rng.standard_normal(dim)
        v = self.rng.standard_normal(dim)
        lhs = safeguard_lhs(u, v, params_next, self.metric)
        if lhs <= 0.0 or budget <= 0.0:
            return np.zeros(dim), np.zeros(dim)
        frac = self.fill if self.fill is not None else self.rng.uniform(0.0, 1.0)
        scale = np.sqrt(frac * budget / lhs)
        return scale * u, scale * v


def parallel_coupling(gamma: float, beta_bar: float, lambda0: float) -> float:
    """Coupling coefficient c with v_n = c u_n that makes y_n = z_n.

    c = (2 - gamma beta_bar) / (2 - lambda0 gamma beta_bar); together with the
    z-update coefficient it satisfies
    (1-lambda0) gb / (2 - lambda0 gb) + (2 - gb) / (2 - lambda0 gb) = 1.
    """
    gb = gamma * beta_bar
    den = 2.0 - lambda0 * gb
    if den <= 0:
        raise ConfigurationError("2 - lambda0*gamma*beta_bar must be positive")
    return (2.0 - gb) / den


class ParallelDeviations:
    """Deviations parallel to the budget's leading norm argument.

    u_{n+1} = kappa_n * (4 - gb - 2 lambda0)/2 * w_n with w_n the vector inside
    the leading norm of ell_n, and v_{n+1} the coupled multiple that keeps
    y = z. Admissible by construction whenever kappa_n^2 <= zeta_{n+1};
    requires a constant step size.
    """

    def __init__(self, kappa: float | Callable[[int], float], schedule: Schedule):
        if callable(schedule.gamma):
            raise ConfigurationError("parallel deviations require a constant step size")
        self.kappa = kappa if callable(kappa) else (lambda n, k=float(kappa): k)
        self.lambda0 = schedule.lambda0
        self.gb = schedule.gamma_at(0) * schedule.beta_bar
        self.coupling = parallel_coupling(schedule.gamma_at(0), schedule.beta_bar,
                                          schedule.lambda0)

    def propose(self, view, budget, params_next):
        w = ell_norm_argument(view)
        u_next = self.kappa(view.n) * 0.5 * (4.0 - self.gb - 2.0 * self.lambda0) * w
        return u_next, self.coupling * u_next


# -- scalar building blocks --------------------------------------------------


def safeguard_lhs(u: np.ndarray, v: np.ndarray, params: DerivedParams,
                  metric: Metric) -> float:
    """Weighted squared norm of a deviation pair at the given index."""
    return params.lam_mu * (
        params.theta_tilde / params.theta_hat * metric.norm_sq(u)
        + params.theta_hat / params.theta * metric.norm_sq(v)
    )


def ell_norm_argument(view: StepView) -> np.ndarray:
    """Vector inside the leading norm of ell_n.

    The u-coefficient gamma*beta_bar*lambda^2/theta_hat is recovered from
    theta_tilde = (lambda + mu) * gamma * beta_bar.
    """
    pr = view.params
    gb = pr.theta_tilde / pr.lam_mu
    return (view.p - view.x + pr.alpha * (view.x - view.prev_p)
            + (gb * pr.lam ** 2 / pr.theta_hat) * view.u
            - (2.0 * pr.theta_bar / pr.theta) * view.v)


def compute_ell(metric: Metric, params: DerivedParams, beta_bar: float, *,
                x, y, z, p, prev_y, prev_z, prev_p, u, v, gamma_prev) -> float:
    """Budget quantity ell_n; nonnegative for every admissible configuration.

    Three terms: the weighted leading norm, a cross term pairing consecutive
    scaled residuals with the p-increment, and the squared increment of the
    forward-backward residual.
    """
    pr = params
    w = (p - x + pr.alpha * (x - prev_p)
         + (pr.gamma * beta_bar * pr.lam ** 2 / pr.theta_hat) * u
         - (2.0 * pr.theta_bar / pr.theta) * v)
    term1 = 0.5 * pr.theta * metric.norm_sq(w)
    term2 = 2.0 * pr.mu * pr.gamma * metric.inner(
        (z - p) / pr.gamma - (prev_z - prev_p) / gamma_prev, p - prev_p)
    term3 = 0.5 * pr.mu * pr.gamma * beta_bar * metric.norm_sq(p - y - (prev_p - prev_y))
    return term1 + term2 + term3


# -- the loop -----------------------------------------------------------------


def init(problem: ProblemInstance, schedule: Schedule, x0,
         validate: bool = True, validate_horizon: int = 256) -> SolverState:
    """State at n = 0: start iterates equal x0, deviations zero, budget zero."""
    x0 = as_vector(x0, problem.dim)
    if validate:
        report = validate_schedule(schedule, problem.C.beta, horizon=validate_horizon)
        if not report.ok:
            fails = "; ".join(f"{it.name}: {it.detail}" for it in report.failures())
            raise ConfigurationError(f"schedule not admissible for this problem: {fails}")
    zero = np.zeros(problem.dim)
    return SolverState(n=0, x=x0, u=zero.copy(), v=zero.copy(),
                       y=x0.copy(), z=x0.copy(), p=x0.copy(),
                       ell=0.0, gamma_prev=schedule.gamma_at(0))


def step(state: SolverState, problem: ProblemInstance, schedule: Schedule,
         policy: DeviationPolicy, enforce: bool = True) -> SolverState:
    """Advance one iteration; raises SafeguardViolationError on bad proposals.

    ``enforce=False`` skips the norm-condition check (the descent guarantee
    is then void); intended for experiments that study violations.
    """
    n = state.n
    pr = schedule.derived(n)
    M = problem.M
    x, u, v = state.x, state.u, state.v
    beta_bar = schedule.beta_bar

    y = x + pr.alpha * (state.y - x) + u
    z = (x + pr.alpha * (state.p - x) + pr.alpha_bar * (state.z - state.p)
         + (pr.theta_bar * pr.gamma * beta_bar / pr.theta_hat) * u + v)
    p = problem.A.resolvent(M, pr.gamma, M.apply(z) - pr.gamma * problem.C(y))
    x_next = x + pr.lam * (p - z) + pr.alpha_bar * pr.lam * (state.z - state.p)

    ell = compute_ell(M, pr, beta_bar, x=x, y=y, z=z, p=p,
                      prev_y=state.y, prev_z=state.z, prev_p=state.p,
                      u=u, v=v, gamma_prev=state.gamma_prev)

    view = StepView(n=n, x=x, y=y, z=z, p=p, x_next=x_next, u=u, v=v,
                    prev_y=state.y, prev_z=state.z, prev_p=state.p,
                    ell=ell, ell_prev=state.ell, gamma_prev=state.gamma_prev,
                    params=pr)

    params_next = schedule.derived(n + 1)
    budget = schedule.zeta_at(n + 1) * ell
    u_next, v_next = policy.propose(view, budget, params_next)
    u_next = as_vector(u_next, problem.dim)
    v_next = as_vector(v_next, problem.dim)
    lhs = safeguard_lhs(u_next, v_next, params_next, M)
    if enforce and lhs > budget + SAFEGUARD_SLACK * max(1.0, budget):
        raise SafeguardViolationError(lhs, budget)

    return SolverState(n=n + 1, x=x_next, u=u_next, v=v_next,
                       y=y, z=z, p=p, ell=ell, gamma_prev=pr.gamma, last=view)


def run(problem: ProblemInstance, schedule: Schedule, policy: DeviationPolicy,
        x0, stop: StoppingRule, trace: Trace | None = None,
        x_star: np.ndarray | None = None,
        diagnostics: bool = False,
        on_view: Callable[[StepView], None] | None = None,
        algo: str = "general") -> RunRecord:
    """Iterate to the stopping rule; returns the (optionally thinned) trace.

    The stopping criterion is evaluated on p_n right after the backward step
    of iteration n; the reported iteration count is the number of completed
    forward-backward steps. Diagnostics (Lyapunov columns in the trace) need
    a reference solution and retain one extra state per step.
    """
    from .diagnostics import LyapunovTracker  # local import to avoid a cycle

    if x_star is None and problem.solution is not None:
        x_star = problem.solution
    if stop.tol is not None and stop.kind == "dist" and x_star is None:
        raise ConfigurationError("distance stopping requires a known solution")
    if diagnostics and x_star is None:
        raise ConfigurationError("diagnostics require a reference solution")

    tracker = LyapunovTracker(problem.M, schedule, x_star, x0) if diagnostics else None
    state = init(problem, schedule, x0)
    converged = False
    iterations = 0
    view = None
    for _ in range(stop.max_iter):
        state = step(state, problem, schedule, policy)
        view = state.last
        iterations = state.n
        rec = tracker.update(view) if tracker is not None else None
        if on_view is not None:
            on_view(view)

        dist = None
        if x_star is not None:
            dist = (problem.M.norm(view.p - x_star) if stop.metric_norm
                    else float(np.linalg.norm(view.p - x_star)))
        fp_res = problem.M.norm(view.p - view.y)
        if trace is not None and trace.wants(view.n):
            trace.append(view.n, view.p, view.y,
                         dist if dist is not None else np.nan, fp_res,
                         V=None if rec is None else rec.V,
                         ell=None if rec is None else rec.ell,
                         delta=None if rec is None else rec.delta)
        if stop.tol is not None:
            value = dist if stop.kind == "dist" else fp_res
            if value is not None and value <= stop.tol:
                converged = True
                break

    final_p = view.p if view is not None else as_vector(x0, problem.dim)
    final_dist = (float(np.linalg.norm(final_p - x_star)) if x_star is not None else None)
    final_fp = problem.M.norm(final_p - view.y) if view is not None else None
    rec = RunRecord(algo=algo, iterations=iterations, converged=converged,
                    trace=trace if trace is not None else Trace(stride=0),
                    final_p=final_p, final_dist=final_dist, final_fp_res=final_fp)
    if tracker is not None:
        rec.meta["lyapunov_records"] = tracker.records
    return rec
