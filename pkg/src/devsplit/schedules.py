"""Parameter schedules and derived per-iteration coefficients.

The solver is driven by a relaxation sequence lambda_n = f(n) * lambda0 built
from a concave non-decreasing growth function f with f(0) = 1, a step size
gamma_n (constant in all shipped presets), a cocoercivity margin beta_bar,
and the safeguard fraction zeta_n. Every other coefficient is derived:

    mu_n         = lambda_n^2 / lambda0 - lambda_n
    alpha_n      = mu_n / (lambda_n + mu_n)
    alpha_bar_n  = gamma_n mu_n / (gamma_{n-1} (lambda_n + mu_n))
    theta_n      = (4 - gamma_n beta_bar)(lambda_n + mu_n) - 2 lambda_n^2
    theta_hat_n  = 2 lambda_n + 2 mu_n - gamma_n beta_bar lambda_n^2
    theta_bar_n  = lambda_n + mu_n - lambda_n^2
    theta_tilde_n = (lambda_n + mu_n) gamma_n beta_bar
    theta_prime_n = (2 - gamma_n beta_bar) mu_n + 2 alpha_bar_n theta_bar_n
    omega_n      = alpha_bar_n lambda_n - (gamma_n / gamma_{n-1}) mu_n

The derived coefficients also admit closed forms quadratic in lambda_n; both
paths are implemented and cross-checked, with the general definitions kept
verbatim (no algebraic rearrangement) because downstream identity checks are
sensitive to formula drift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

from .errors import ConfigurationError

__all__ = [
    "GrowthFunction",
    "constant_growth",
    "power_growth",
    "log_growth",
    "linear_growth",
    "growth_from_json",
    "schedule_from_json",
    "DerivedParams",
    "Schedule",
    "CheckItem",
    "ScheduleReport",
    "validate_schedule",
    "GrowthReport",
    "validate_growth",
    "ParamIdentityReport",
    "check_parameter_identities",
]


@dataclass(frozen=True)
class GrowthFunction:
    """Relaxation growth profile f with f(0) = 1.

    ``derivative_at_zero`` is f'(0); when it is below 1 a strictly positive
    increment margin eps1 = (1 - f'(0)) * gamma * lambda0 is admissible.
    ``unbounded`` marks profiles with f(n) -> infinity, which is what the
    accelerated residual envelopes require.
    """

    fn: Callable[[float], float]
    derivative_at_zero: float
    label: str
    unbounded: bool = True

    def __call__(self, n) -> float:
        return float(self.fn(n))


def constant_growth() -> GrowthFunction:
    return GrowthFunction(lambda n: 1.0, 0.0, "constant", unbounded=False)


def power_growth(e: float) -> GrowthFunction:
    if not 0.0 <= e <= 1.0:
        raise ConfigurationError(f"power growth exponent must lie in [0, 1], got {e}")
    if e == 0.0:
        return constant_growth()
    return GrowthFunction(lambda n: (1.0 + n) ** e, float(e), f"power[{e}]")


def log_growth() -> GrowthFunction:
    return GrowthFunction(lambda n: math.log(n + 2.0) / math.log(2.0),
                          1.0 / (2.0 * math.log(2.0)), "log")


def linear_growth() -> GrowthFunction:
    return GrowthFunction(lambda n: 1.0 + n, 1.0, "linear")


def growth_from_json(obj) -> GrowthFunction:
    """{"kind": "power", "e": x} | {"kind": "log"} | {"kind": "constant"} | {"kind": "linear"}."""
    kind = obj.get("kind")
    if kind == "power":
        return power_growth(float(obj["e"]))
    if kind == "log":
        return log_growth()
    if kind == "constant":
        return constant_growth()
    if kind == "linear":
        return linear_growth()
    raise ConfigurationError(f"unknown growth kind: {kind!r}")


@dataclass(frozen=True)
class DerivedParams:
    """Coefficient bundle for one iteration index."""

    n: int
    lam: float
    mu: float
    gamma: float
    gamma_prev: float
    alpha: float
    alpha_bar: float
    theta: float
    theta_hat: float
    theta_bar: float
    theta_tilde: float
    theta_prime: float
    omega: float

    @property
    def lam_mu(self) -> float:
        return self.lam + self.mu


@dataclass
class Schedule:
    """User-chosen parameter sequences plus the derived-coefficient factory.

    ``gamma`` may be a constant or a callable n -> gamma_n; gamma_{-1} is
    defined as gamma_0. ``zeta`` defaults to the constant 1 - eps0.
    """

    lambda0: float
    growth: GrowthFunction = field(default_factory=constant_growth)
    gamma: float | Callable[[int], float] = 0.1
    beta_bar: float = 0.001
    eps: float = 1e-9
    eps0: float = 0.0
    eps1: float = 0.0
    zeta: Callable[[int], float] | None = None

    def __post_init__(self):
        if self.lambda0 <= 0:
            raise ConfigurationError("lambda0 must be positive")
        if self.eps <= 0:
            raise ConfigurationError("eps must be positive")
        if self.eps0 < 0 or self.eps1 < 0:
            raise ConfigurationError("eps0 and eps1 must be nonnegative")
        if self.beta_bar < 0:
            raise ConfigurationError("beta_bar must be nonnegative")

    # -- raw sequences ----------------------------------------------------

    def lam(self, n: int) -> float:
        return self.lambda0 * self.growth(n)

    def mu(self, n: int) -> float:
        lam = self.lam(n)
        return lam * lam / self.lambda0 - lam

    def gamma_at(self, n: int) -> float:
        if callable(self.gamma):
            return float(self.gamma(max(n, 0)))
        return float(self.gamma)

    def zeta_at(self, n: int) -> float:
        if self.zeta is not None:
            return float(self.zeta(n))
        return 1.0 - self.eps0

    # -- derived coefficients ---------------------------------------------

    def derived(self, n: int) -> DerivedParams:
        """Coefficients at index n from their defining expressions."""
        lam = self.lam(n)
        mu = self.mu(n)
        gam = self.gamma_at(n)
        gam_prev = self.gamma_at(n - 1)
        gb = gam * self.beta_bar
        lam_mu = lam + mu
        if lam_mu <= 0:
            raise ConfigurationError("lambda_n + mu_n must be positive")
        alpha = mu / lam_mu
        alpha_bar = gam * mu / (gam_prev * lam_mu)
        theta = (4.0 - gb) * lam_mu - 2.0 * lam * lam
        theta_hat = 2.0 * lam + 2.0 * mu - gb * lam * lam
        theta_bar = lam_mu - lam * lam
        theta_tilde = lam_mu * gb
        theta_prime = (2.0 - gb) * mu + 2.0 * alpha_bar * theta_bar
        omega = alpha_bar * lam - (gam / gam_prev) * mu
        return DerivedParams(n=n, lam=lam, mu=mu, gamma=gam, gamma_prev=gam_prev,
                             alpha=alpha, alpha_bar=alpha_bar, theta=theta,
                             theta_hat=theta_hat, theta_bar=theta_bar,
                             theta_tilde=theta_tilde, theta_prime=theta_prime,
                             omega=omega)

    def derived_closed_form(self, n: int) -> DerivedParams:
        """Same coefficients via the closed forms quadratic in lambda_n."""
        lam = self.lam(n)
        lam0 = self.lambda0
        gam = self.gamma_at(n)
        gam_prev = self.gamma_at(n - 1)
        gb = gam * self.beta_bar
        mu = lam * lam / lam0 - lam
        alpha = (lam - lam0) / lam
        alpha_bar = (gam / gam_prev) * (lam - lam0) / lam
        theta = ((4.0 - gb - 2.0 * lam0) / lam0) * lam * lam
        theta_hat = ((2.0 - lam0 * gb) / lam0) * lam * lam
        theta_bar = ((1.0 - lam0) / lam0) * lam * lam
        theta_tilde = (gb / lam0) * lam * lam
        theta_prime = (2.0 - gb) * mu + 2.0 * alpha_bar * theta_bar
        omega = alpha_bar * lam - (gam / gam_prev) * mu
        return DerivedParams(n=n, lam=lam, mu=mu, gamma=gam, gamma_prev=gam_prev,
                             alpha=alpha, alpha_bar=alpha_bar, theta=theta,
                             theta_hat=theta_hat, theta_bar=theta_bar,
                             theta_tilde=theta_tilde, theta_prime=theta_prime,
                             omega=omega)


def schedule_from_json(obj: dict) -> Schedule:
    """Build a schedule from its JSON form.

    {"lambda0": x, "growth": {"kind": "power", "e": x} | {"kind": "log"} |
     {"kind": "constant"} | {"kind": "linear"}, "gamma": x, "beta_bar": x,
     "zeta": "one-minus-eps0", "eps": x, "eps0": x, "eps1": x}

    Only the constant safeguard fraction 1 - eps0 is expressible here; a
    per-iteration zeta needs the programmatic interface. A "kappa" entry, if
    present, belongs to the variant configuration and is ignored here.
    """
    zeta = obj.get("zeta", "one-minus-eps0")
    if zeta != "one-minus-eps0":
        raise ConfigurationError(f"unsupported zeta spec {zeta!r}")
    return Schedule(lambda0=float(obj["lambda0"]),
                    growth=growth_from_json(obj.get("growth", {"kind": "constant"})),
                    gamma=float(obj.get("gamma", 0.1)),
                    beta_bar=float(obj.get("beta_bar", 0.001)),
                    eps=float(obj.get("eps", 1e-9)),
                    eps0=float(obj.get("eps0", 0.0)),
                    eps1=float(obj.get("eps1", 0.0)))


# -- admissibility checks ---------------------------------------------------


@dataclass
class CheckItem:
    name: str
    ok: bool
    detail: str = ""


@dataclass
class ScheduleReport:
    items: list[CheckItem]

    @property
    def ok(self) -> bool:
        return all(it.ok for it in self.items)

    def failures(self) -> list[CheckItem]:
        return [it for it in self.items if not it.ok]

    def __str__(self) -> str:
        return "\n".join(f"[{'pass' if it.ok else 'FAIL'}] {it.name}: {it.detail}"
                         for it in self.items)


def validate_schedule(schedule: Schedule, beta: float, horizon: int = 256) -> ScheduleReport:
    """Check the four admissibility conditions over n = 0..horizon.

    (a) 0 <= zeta_n <= 1 - eps0,
    (b) eps <= gamma_n beta_bar <= 4 - 2 lambda0 - eps,
    (c) lambda_n non-decreasing with gamma_n lambda_n - gamma_{n-1} lambda_{n-1}
        <= gamma_n lambda0 - eps1,
    (d) beta_bar >= beta.
    """
    if horizon < 1:
        raise ConfigurationError("horizon must be >= 1")
    s = schedule
    items: list[CheckItem] = []

    bad = None
    for n in range(horizon + 1):
        z = s.zeta_at(n)
        if not (0.0 <= z <= 1.0 - s.eps0):
            bad = (n, z)
            break
    items.append(CheckItem(
        "zeta_range", bad is None,
        "0 <= zeta_n <= 1 - eps0" if bad is None
        else f"zeta_{bad[0]} = {bad[1]:.6g} outside [0, {1.0 - s.eps0:.6g}]"))

    bad = None
    for n in range(horizon + 1):
        gb = s.gamma_at(n) * s.beta_bar
        if not (s.eps <= gb <= 4.0 - 2.0 * s.lambda0 - s.eps):
            bad = (n, gb)
            break
    items.append(CheckItem(
        "step_window", bad is None,
        "eps <= gamma_n*beta_bar <= 4 - 2*lambda0 - eps" if bad is None
        else f"gamma_{bad[0]}*beta_bar = {bad[1]:.6g} outside "
             f"[{s.eps:.3g}, {4.0 - 2.0 * s.lambda0 - s.eps:.6g}]"))

    bad = None
    for n in range(1, horizon + 1):
        lam_n, lam_p = s.lam(n), s.lam(n - 1)
        if lam_n < lam_p - 1e-12 * max(1.0, lam_p):
            bad = (n, "lambda decreased")
            break
        incr = s.gamma_at(n) * lam_n - s.gamma_at(n - 1) * lam_p
        cap = s.gamma_at(n) * s.lambda0 - s.eps1
        if incr > cap + 1e-12 * max(1.0, abs(cap)):
            bad = (n, f"increment {incr:.6g} exceeds {cap:.6g}")
            break
    items.append(CheckItem(
        "relaxation_growth", bad is None,
        "lambda non-decreasing with bounded increments" if bad is None
        else f"n={bad[0]}: {bad[1]}"))

    ok = s.beta_bar >= beta
    items.append(CheckItem(
        "beta_margin", ok,
        f"beta_bar = {s.beta_bar:.6g} >= beta = {beta:.6g}" if ok
        else f"beta_bar = {s.beta_bar:.6g} < beta = {beta:.6g}"))

    return ScheduleReport(items)


@dataclass
class GrowthReport:
    items: list[CheckItem]
    eps1_max: float | None

    @property
    def ok(self) -> bool:
        return all(it.ok for it in self.items)

    def __str__(self) -> str:
        lines = [f"[{'pass' if it.ok else 'FAIL'}] {it.name}: {it.detail}" for it in self.items]
        if self.eps1_max is not None:
            lines.append(f"eps1 can be chosen up to {self.eps1_max:.6g}")
        return "\n".join(lines)


def validate_growth(growth: GrowthFunction, horizon: int = 10_000,
                    gamma: float = 1.0, lambda0: float = 1.0) -> GrowthReport:
    """Grid-check the growth profile: f(0)=1, non-decreasing, concave, f(n) <= 1+n.

    Properties are validated on the integer grid 0..horizon only; f is user
    code, so nothing symbolic is attempted. When f'(0) < 1 the report carries
    the largest admissible increment margin eps1 = (1 - f'(0)) * gamma * lambda0.
    """
    if horizon < 2:
        raise ConfigurationError("horizon must be >= 2")
    vals = [growth(n) for n in range(horizon + 1)]
    items = [CheckItem("anchor", vals[0] == 1.0, f"f(0) = {vals[0]!r}")]

    mono = all(vals[n + 1] >= vals[n] - 1e-12 for n in range(horizon))
    items.append(CheckItem("non_decreasing", mono, "f non-decreasing on grid"
                           if mono else "f decreases somewhere on the grid"))

    concave = all(vals[n + 2] - 2.0 * vals[n + 1] + vals[n] <= 1e-12
                  for n in range(horizon - 1))
    items.append(CheckItem("concave", concave, "second differences <= 0"
                           if concave else "positive second difference found"))

    linbound = all(vals[n] <= 1.0 + n + 1e-9 for n in range(horizon + 1))
    items.append(CheckItem("linear_bound", linbound, "f(n) <= 1 + n"
                           if linbound else "f exceeds 1 + n"))

    d0 = growth.derivative_at_zero
    deriv_ok = 0.0 <= d0 <= 1.0
    items.append(CheckItem("derivative_range", deriv_ok, f"f'(0) = {d0:.6g}"))

    eps1_max = (1.0 - d0) * gamma * lambda0 if (deriv_ok and d0 < 1.0) else None
    return GrowthReport(items, eps1_max)


# -- algebraic identities and bounds ----------------------------------------


@dataclass
class ParamIdentityReport:
    residuals: tuple[float, float, float]
    positivity_ok: bool
    bounds_ok: bool
    detail: str = ""

    def max_residual(self) -> float:
        return max(abs(r) for r in self.residuals)

    @property
    def ok(self) -> bool:
        return self.positivity_ok and self.bounds_ok

    def within(self, tol_factor: float = 1e-10, theta_scale: float = 1.0) -> bool:
        return self.ok and self.max_residual() <= tol_factor * max(1.0, theta_scale)


def check_parameter_identities(schedule: Schedule, n: int) -> ParamIdentityReport:
    """Residuals of the three coefficient identities plus positivity/boundedness.

    Identities (exact in reals):
        theta = (2 - gamma*beta_bar) theta_bar + theta_hat
        theta = 2 theta_bar + (2 - gamma*beta_bar)(lambda + mu)
        lambda^2 theta = theta_hat (lambda + mu) - 2 theta_bar^2

    Positivity: theta, theta_hat, theta_tilde > 0 with the explicit ratio
    floors theta_tilde/theta_hat >= eps/2, theta_hat/theta >= lambda0*eps/4,
    theta/lambda^2 >= eps/lambda0. Boundedness: theta_tilde/theta_hat <=
    4/(lambda0*eps), lambda^2/theta_hat <= 1/eps, |theta_bar/theta| <=
    |1-lambda0|/eps, |(2-gamma*beta_bar)(lambda+mu)/theta| <= 2/eps.
    """
    d = schedule.derived(n)
    gb = d.gamma * schedule.beta_bar
    r1 = d.theta - ((2.0 - gb) * d.theta_bar + d.theta_hat)
    r2 = d.theta - (2.0 * d.theta_bar + (2.0 - gb) * d.lam_mu)
    r3 = d.lam * d.lam * d.theta - (d.theta_hat * d.lam_mu - 2.0 * d.theta_bar ** 2)

    eps, lam0 = schedule.eps, schedule.lambda0
    positivity = (
        d.theta > 0.0 and d.theta_hat > 0.0 and d.theta_tilde > 0.0
        and d.theta_tilde / d.theta_hat >= eps / 2.0 - 1e-15
        and d.theta_hat / d.theta >= lam0 * eps / 4.0 - 1e-15
        and d.theta / (d.lam * d.lam) >= eps / lam0 - 1e-15
    )
    bounds = (
        d.theta_tilde / d.theta_hat <= 4.0 / (lam0 * eps) + 1e-15
        and d.lam * d.lam / d.theta_hat <= 1.0 / eps + 1e-15
        and abs(d.theta_bar / d.theta) <= abs(1.0 - lam0) / eps + 1e-15
        and abs((2.0 - gb) * d.lam_mu / d.theta) <= 2.0 / eps + 1e-15
    )
    return ParamIdentityReport(
        residuals=(r1, r2, r3),
        positivity_ok=positivity,
        bounds_ok=bounds,
        detail=f"n={n}, lambda={d.lam:.6g}, theta={d.theta:.6g}",
    )
