"""Acceptance gate: every criterion at its stated tolerance.

Iteration-count reproductions allow +-1% or +-3 iterations, whichever is
larger; runtime budgets are measured after a one-time JIT warmup. The
terminal summary prints one line per criterion (see conftest).
"""

import time

import numpy as np
import pytest
from conftest import record_criterion

from devsplit import (ParallelDeviations, Schedule, StoppingRule, Trace,
                      VariantConfig, ZeroDeviations, embed_to_general,
                      halpern_problem, init, run, run_accelerated_fb,
                      run_constant_kappa, run_halpern, run_parallel_x_form,
                      run_parallel_y_form, run_tunable, safeguard_lhs, step)
from devsplit.engine import ell_norm_argument
from devsplit.metric import Metric
from devsplit.operators import (AffineCocoerciveOp, BoxNormalConeOp,
                                ProblemInstance, ZeroMonotoneOp)
from devsplit.problems import skew2d
from devsplit.schedules import constant_growth, power_growth
from devsplit.verify import identity_suite, lyapunov_suite

START = np.array([3.0, 3.0])
TOL_STOP = StoppingRule(max_iter=50_000_000, tol=1e-6)

TUNABLE_COUNTS = {0.0: 3068, 0.1: 1131, 0.2: 580, 0.3: 314, 0.4: 170,
                  0.5: 212, 0.6: 471, 0.7: 771, 0.8: 1961, 0.9: 10625,
                  1.0: 21213167}
KAPPA_COUNTS = {-0.9: 58350, -0.8: 27653, -0.7: 17414, -0.6: 12292,
                -0.5: 9219, -0.4: 7170, -0.3: 5706, -0.2: 4607, -0.1: 3752,
                0.0: 3068, 0.1: 2507, 0.2: 2040, 0.3: 1643, 0.4: 1302,
                0.5: 1005, 0.6: 741, 0.7: 501, 0.8: 258, 0.9: 288}
KAPPA_FINE_COUNTS = {0.80: 258, 0.82: 179, 0.84: 180, 0.86: 213, 0.88: 238,
                     0.90: 288}


def within_count_tol(got: int, expected: int) -> bool:
    return abs(got - expected) <= max(3, 0.01 * expected)


@pytest.fixture(scope="module", autouse=True)
def jit_warmup():
    """Compile every kernel once so runtime budgets measure the solve only."""
    pb = skew2d()
    short = StoppingRule(max_iter=5, tol=None)
    run_tunable(VariantConfig(kind="tunable_e", e=0.5), pb, START, short)
    run_constant_kappa(VariantConfig(kind="constant_kappa", kappa=0.5), pb, START, short)
    run_accelerated_fb(VariantConfig(kind="accelerated_fb"), pb, START, short)
    run_halpern(halpern_problem(pb, 0.1), START, short)


@pytest.fixture(scope="module")
def fuzz_report():
    t0 = time.perf_counter()
    rep = lyapunov_suite(trials=200, steps=200, seed=0, dim_range=(2, 8))
    rep.elapsed = time.perf_counter() - t0
    return rep


def test_criterion_1_tunable_grid():
    pb = skew2d()
    t0 = time.perf_counter()
    got = {}
    for e in sorted(TUNABLE_COUNTS):
        rec = run_tunable(VariantConfig(kind="tunable_e", e=e), pb, START, TOL_STOP,
                          rate_check=False)
        got[e] = rec.iterations
        assert rec.converged
    elapsed = time.perf_counter() - t0
    ok = all(within_count_tol(got[e], TUNABLE_COUNTS[e]) for e in TUNABLE_COUNTS)
    ok_time = elapsed < 30.0
    record_criterion("criterion 1: tunable-exponent iteration counts", ok and ok_time,
                     f"counts {list(got.values())}, {elapsed:.2f}s (< 30 s)")
    assert ok, f"counts off: {got}"
    assert ok_time, f"{elapsed:.2f}s exceeds the 30 s budget"


def test_criterion_2_kappa_grid():
    pb = skew2d()
    t0 = time.perf_counter()
    got = {}
    for k in sorted(KAPPA_COUNTS):
        rec = run_constant_kappa(VariantConfig(kind="constant_kappa", kappa=k),
                                 pb, START, TOL_STOP)
        got[k] = rec.iterations
        assert rec.converged
    elapsed = time.perf_counter() - t0
    ok = all(within_count_tol(got[k], KAPPA_COUNTS[k]) for k in KAPPA_COUNTS)
    ok_time = elapsed < 5.0
    record_criterion("criterion 2: constant-kappa iteration counts", ok and ok_time,
                     f"19 values, {elapsed:.2f}s (< 5 s)")
    assert ok, f"counts off: {got}"
    assert ok_time, f"{elapsed:.2f}s exceeds the 5 s budget"


def test_criterion_3_kappa_fine_grid():
    pb = skew2d()
    t0 = time.perf_counter()
    got = {k: run_constant_kappa(VariantConfig(kind="constant_kappa", kappa=k),
                                 pb, START, TOL_STOP).iterations
           for k in sorted(KAPPA_FINE_COUNTS)}
    elapsed = time.perf_counter() - t0
    ok = all(within_count_tol(got[k], KAPPA_FINE_COUNTS[k]) for k in KAPPA_FINE_COUNTS)
    ok_time = elapsed < 1.0
    record_criterion("criterion 3: fine kappa grid counts", ok and ok_time,
                     f"counts {list(got.values())}, {elapsed:.2f}s (< 1 s)")
    assert ok, f"counts off: {got}"
    assert ok_time, f"{elapsed:.2f}s exceeds the 1 s budget"


def test_criterion_4_energy_identity_fuzz(fuzz_report):
    check = next(c for c in fuzz_report.checks if c.name.startswith("identity_residual"))
    ok_time = fuzz_report.elapsed < 60.0
    record_criterion("criterion 4: energy identity on randomized runs",
                     check.ok and ok_time,
                     f"worst |delta|/max(1,V_n) = {check.value:.2e} (<= 1e-8), "
                     f"{fuzz_report.elapsed:.1f}s (< 60 s)")
    assert check.ok, f"identity residual {check.value:.3e} above 1e-8"
    assert ok_time


def test_criterion_5_descent_and_nonnegativity(fuzz_report):
    names = ("descent_slack/max(1,V_0)", "ell/max(1,V_0)", "phi/max(1,V_0)",
             "V/max(1,V_0)")
    checks = [c for c in fuzz_report.checks if c.name in names]
    assert len(checks) == 4
    ok = all(c.ok for c in checks)
    worst = min(c.value for c in checks)
    record_criterion("criterion 5: descent inequality and term nonnegativity", ok,
                     f"worst scaled slack {worst:.2e} (>= -1e-10)")
    assert ok, str(fuzz_report)


def _trace_gap(t1: Trace, t2: Trace) -> float:
    gp = max(np.max(np.abs(a - b)) for a, b in zip(t1.p, t2.p))
    gy = max(np.max(np.abs(a - b)) for a, b in zip(t1.y, t2.y))
    return float(max(gp, gy))


def test_criterion_6_variant_equivalences():
    pb = skew2d()
    nostop = lambda k: StoppingRule(max_iter=k, tol=None)

    cfg = VariantConfig(kind="parallel_x_form", kappa=0.5, growth=power_growth(0.5))
    tx, ty = Trace(1), Trace(1)
    run_parallel_x_form(cfg, pb, START, nostop(500), tx)
    run_parallel_y_form(cfg, pb, START, nostop(500), ty)
    gap_a = _trace_gap(tx, ty)

    t1, t2 = Trace(1), Trace(1)
    run_tunable(VariantConfig(kind="tunable_e", e=1.0), pb, START, nostop(500), t1)
    run_accelerated_fb(VariantConfig(kind="accelerated_fb"), pb, START, nostop(500), t2)
    gap_b = _trace_gap(t1, t2)

    anch = halpern_problem(pb, gamma=0.1)
    cfg_c = VariantConfig(kind="accelerated_fb", gamma=2.0 / anch.C.beta,
                          beta_bar=anch.C.beta)
    t3, t4 = Trace(1), Trace(1)
    run_accelerated_fb(cfg_c, anch, START, nostop(1000), t3)
    run_halpern(anch, START, nostop(1000), trace=t4)
    gap_c = _trace_gap(t3, t4)

    emb = embed_to_general(VariantConfig(kind="parallel_x_form", kappa=0.5),
                           pb, START, 50)
    gap_d = max(emb.max_trace_gap, emb.max_yz_gap)

    ok = max(gap_a, gap_b, gap_c, gap_d) <= 1e-10
    record_criterion("criterion 6: variant equivalences (a-d)", ok,
                     f"gaps a={gap_a:.1e} b={gap_b:.1e} c={gap_c:.1e} d={gap_d:.1e} (<= 1e-10)")
    assert gap_a <= 1e-10 and gap_b <= 1e-10
    assert gap_c <= 1e-10 and gap_d <= 1e-10


def test_criterion_7_rate_envelopes():
    pb = skew2d()
    gaps = {}
    for e in (0.25, 0.5, 0.75, 1.0):
        rec = run_tunable(VariantConfig(kind="tunable_e", e=e), pb, START, TOL_STOP,
                          rate_check=True)
        gaps[e] = rec.meta["max_rate_gap"]
    anch = halpern_problem(pb, gamma=0.1)
    rec = run_halpern(anch, START, StoppingRule(max_iter=5000, tol=None),
                      rate_check=True)
    gaps["anchored"] = rec.meta["max_rate_gap"]
    ok = all(g <= 1e-9 for g in gaps.values())
    record_criterion("criterion 7: residual rate envelopes", ok,
                     "worst gap %.2e (<= 1e-9)" % max(gaps.values()))
    assert ok, gaps


def test_criterion_8_scalar_safeguard_equality():
    # Constant relaxation with zeta = kappa^2: the vector norm condition
    # collapses to the scalar kappa^2 <= zeta and the parallel family meets
    # the budget with equality at every step. Under growing relaxation the
    # collapse carries the factor (lambda_{n+1}/lambda_n)^2 (the index-(n+1)
    # weights against the index-n budget); that corrected identity is
    # verified on a run whose kappa_n consumes the whole budget.
    pb = skew2d()
    worst_eq = 0.0
    for kappa in (0.3, 0.8, -0.6):
        sched = Schedule(lambda0=1.0, growth=constant_growth(), gamma=0.1,
                         beta_bar=0.001, eps0=1.0 - kappa ** 2)
        policy = ParallelDeviations(kappa, sched)
        st = init(pb, sched, START)
        for _ in range(500):
            st = step(st, pb, sched, policy)
            budget = sched.zeta_at(st.n) * st.last.ell
            lhs = safeguard_lhs(st.u, st.v, sched.derived(st.n), pb.M)
            if budget > 1e-250:
                worst_eq = max(worst_eq, abs(lhs - budget) / budget)

    growth = power_growth(0.5)
    sched_grow = Schedule(lambda0=1.0, growth=growth, gamma=0.1, beta_bar=0.001)
    kappa_fn = lambda n: growth(n) / growth(n + 1) * 0.999  # scalar form ~ 1
    policy = ParallelDeviations(kappa_fn, sched_grow)
    st = init(pb, sched_grow, START)
    worst_collapse = 0.0
    for _ in range(500):
        st = step(st, pb, sched_grow, policy)
        pr = st.last.params
        n = st.last.n
        leading = 0.5 * pr.theta * pb.M.norm_sq(ell_norm_argument(st.last))
        ratio = growth(n + 1) / growth(n)
        scaled = (kappa_fn(n) * ratio) ** 2 * leading
        lhs = safeguard_lhs(st.u, st.v, sched_grow.derived(n + 1), pb.M)
        if scaled > 1e-250:
            worst_collapse = max(worst_collapse, abs(lhs - scaled) / scaled)
        budget = sched_grow.zeta_at(n + 1) * st.last.ell
        assert lhs <= budget + 1e-12 * max(1.0, budget)

    ok = worst_eq <= 1e-10 and worst_collapse <= 1e-10
    record_criterion("criterion 8: scalar safeguard collapse", ok,
                     f"equality case {worst_eq:.1e}, collapse {worst_collapse:.1e} (<= 1e-10)")
    assert ok, (worst_eq, worst_collapse)


def _fb_reduction_problems():
    yield "skew2d", skew2d(), 0.1, 0.001
    box = ProblemInstance(
        A=BoxNormalConeOp([0.0, 0.0], [1.0, 1.0]),
        C=AffineCocoerciveOp(np.diag([2.0, 1.0]), q=[-3.0, -0.5], beta=2.0),
        M=Metric.identity(2), name="box-quad")
    yield "box-quad", box, 0.4, 2.0
    quad = ProblemInstance(
        A=ZeroMonotoneOp(2),
        C=AffineCocoerciveOp(np.array([[2.0, 0.5], [0.5, 1.0]]), q=[1.0, -1.0],
                             beta=2.25), M=Metric.identity(2), name="quad")
    yield "quad", quad, 0.4, 2.25


def test_criterion_9_fb_reduction():
    worst = 0.0
    for name, pb, gamma, beta_bar in _fb_reduction_problems():
        sched = Schedule(lambda0=1.0, growth=constant_growth(), gamma=gamma,
                         beta_bar=beta_bar)
        st = init(pb, sched, START)
        x = START.copy()
        for _ in range(200):
            st = step(st, pb, sched, ZeroDeviations())
            x = x + 1.0 * (pb.fb_step(gamma, x) - x)
            worst = max(worst, float(np.max(np.abs(st.x - x))))
    ok = worst <= 1e-12
    record_criterion("criterion 9: plain forward-backward reduction", ok,
                     f"worst per-step gap {worst:.1e} (<= 1e-12) on 3 presets")
    assert ok, worst


def test_criterion_10_identity_fuzz():
    rep = identity_suite(trials=1000, seed=0)
    record_criterion("criterion 10: coefficient/vector identity fuzz", rep.ok,
                     "; ".join(f"{c.name} {c.value:.1e}" for c in rep.checks))
    assert rep.ok, str(rep)
