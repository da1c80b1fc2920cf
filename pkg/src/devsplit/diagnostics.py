"""Lyapunov quantities and numeric certification of the solver's invariants.

For a reference solution x* the run is scored by

    phi_n = <(z_n - p_n)/gamma_n, p_n - x*>_M + (beta_bar/4) |y_n - p_n|_M^2
    V_0   = |x_0 - x*|_M^2
    V_(n+1) = |x_(n+1) - x*|_M^2 + 2 lambda_(n+1) gamma_(n+1) alpha_(n+1) phi_n + ell_n

and the iteration satisfies, exactly in real arithmetic,

    V_(n+1) - V_n + 2 gamma_n (lambda_n - alpha_bar_(n+1) lambda_(n+1)) phi_n
        + ell_(n-1)
        - (lambda+mu)_n (theta_tilde/theta_hat |u_n|_M^2 + theta_hat/theta |v_n|_M^2)
        = 0,

whose floating-point residual ``delta`` is tracked per step. Under the
safeguard it weakens to the descent inequality whose slack is tracked as
``descent_slack`` (nonnegative up to roundoff). All tolerances downstream are
scaled by max(1, V_0) to stay meaningful across problem scalings.

These are pure functions over iteration snapshots; they never recompute
schedule parameters through a different path than the engine used.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import StepView, ell_norm_argument, safeguard_lhs
from .metric import Metric
from .schedules import Schedule

__all__ = [
    "LyapunovRecord",
    "phi_value",
    "lyapunov_initial",
    "LyapunovTracker",
    "correction_vector_forms",
    "residual_envelope_slack",
]


@dataclass
class LyapunovRecord:
    """Per-iteration certification values; V is V_{n+1}, phi is phi_n."""

    n: int
    V: float
    phi: float
    ell: float
    delta: float
    descent_slack: float
    rate_slack: float | None = None


def phi_value(metric: Metric, gamma: float, beta_bar: float,
              z: np.ndarray, p: np.ndarray, y: np.ndarray,
              x_star: np.ndarray) -> float:
    """Inner-product gap pairing the scaled residual with the solution offset."""
    return (metric.inner((z - p) / gamma, p - x_star)
            + 0.25 * beta_bar * metric.norm_sq(y - p))


def lyapunov_initial(metric: Metric, x0: np.ndarray, x_star: np.ndarray) -> float:
    return metric.norm_sq(np.asarray(x0, dtype=float) - x_star)


class LyapunovTracker:
    """Accumulates LyapunovRecords along a run given consecutive step views."""

    def __init__(self, metric: Metric, schedule: Schedule, x_star, x0):
        self.metric = metric
        self.schedule = schedule
        self.x_star = np.asarray(x_star, dtype=float)
        self.v0 = lyapunov_initial(metric, x0, self.x_star)
        self.v_prev = self.v0
        self.records: list[LyapunovRecord] = []

    def update(self, view: StepView) -> LyapunovRecord:
        s, m = self.schedule, self.metric
        pr = view.params
        nxt = s.derived(view.n + 1)
        phi = phi_value(m, pr.gamma, s.beta_bar, view.z, view.p, view.y, self.x_star)
        v_next = (m.norm_sq(view.x_next - self.x_star)
                  + 2.0 * nxt.lam * nxt.gamma * nxt.alpha * phi
                  + view.ell)
        dev_term = safeguard_lhs(view.u, view.v, pr, m)
        coupling = 2.0 * pr.gamma * (pr.lam - nxt.alpha_bar * nxt.lam)
        delta = v_next - self.v_prev + coupling * phi + view.ell_prev - dev_term
        descent = (self.v_prev - v_next - coupling * phi
                   - (1.0 - s.zeta_at(view.n)) * view.ell_prev)
        rec = LyapunovRecord(n=view.n, V=v_next, phi=phi, ell=view.ell,
                             delta=delta, descent_slack=descent)
        self.v_prev = v_next
        self.records.append(rec)
        return rec


def correction_vector_forms(view: StepView, metric: Metric
                            ) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """Three expressions for the correction vector that must agree.

    (1) from p_n, x_n, p_{n-1} and the deviations; (2) from the full iterate
    set with the auxiliary coefficient theta_prime; (3) from the x-increment.
    Returns the vectors and their maximum pairwise gap in the metric norm.
    """
    pr = view.params
    gb = pr.theta_tilde / pr.lam_mu  # gamma_n * beta_bar
    w1 = ell_norm_argument(view)
    w2 = (view.p
          - (2.0 * pr.theta_bar / pr.theta) * view.z
          + (pr.theta_tilde / pr.theta) * view.y
          - (2.0 * pr.lam / pr.theta) * view.x
          - (pr.theta_prime / pr.theta) * view.prev_p
          + (2.0 * pr.theta_bar * pr.alpha_bar / pr.theta) * view.prev_z
          - (pr.theta_tilde * pr.alpha / pr.theta) * view.prev_y)
    w3 = ((view.x_next - view.x) / pr.lam
          + (pr.theta_tilde / pr.theta_hat) * view.u
          + ((2.0 - gb) * pr.lam_mu / pr.theta) * view.v)
    gap = max(metric.norm(w1 - w2), metric.norm(w1 - w3), metric.norm(w2 - w3))
    return w1, w2, w3, gap


def residual_envelope_slack(view: StepView, schedule: Schedule, metric: Metric,
                            v0: float) -> float | None:
    """Slack of the correction-norm envelope for unbounded relaxation growth.

    |w_n|_M^2 <= 2 lambda0 V_0 / ((4 - gamma_n beta_bar - 2 lambda0) lambda_n^2);
    returns bound - value (nonnegative up to roundoff), or None when the
    growth profile is bounded and the envelope does not apply.
    """
    if not schedule.growth.unbounded:
        return None
    pr = view.params
    gb = pr.gamma * schedule.beta_bar
    bound = 2.0 * schedule.lambda0 * v0 / ((4.0 - gb - 2.0 * schedule.lambda0) * pr.lam ** 2)
    return bound - metric.norm_sq(ell_norm_argument(view))
