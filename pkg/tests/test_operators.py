import numpy as np
import pytest

from devsplit import (AffineCocoerciveOp, BoxNormalConeOp, ConfigurationError,
                      LinearMonotoneOp, Metric, ProblemInstance,
                      ZeroCocoerciveOp, ZeroMonotoneOp, check_cocoercivity,
                      check_resolvent_contraction, quad_cocoercivity_bound)
from devsplit.problems import SKEW2D_MATRIX, skew2d


I2 = Metric.identity(2)


class TestResolvent:
    def test_skew_closed_form(self):
        A = LinearMonotoneOp(SKEW2D_MATRIX)
        gamma = 0.1
        r = np.array([3.0, 3.0])
        p = A.resolvent(I2, gamma, r)
        closed = np.array([[1.0, gamma], [-gamma, 1.0]]) @ r / (1.0 + gamma ** 2)
        assert np.max(np.abs(p - closed)) <= 1e-12

    def test_zero_operator_returns_rhs(self):
        A = ZeroMonotoneOp(2)
        r = np.array([5.0, -2.0])
        assert np.array_equal(A.resolvent(I2, 0.7, r), r)

    def test_box_projection(self):
        A = BoxNormalConeOp([0.0, 0.0], [1.0, 1.0])
        p = A.resolvent(I2, 1.0, np.array([2.0, -1.0]))
        assert np.array_equal(p, np.array([1.0, 0.0]))

    def test_box_rejects_dense_metric(self):
        A = BoxNormalConeOp([0.0], [1.0])
        dense = Metric(np.array([[2.0, 0.3], [0.3, 1.0]]))
        box2 = BoxNormalConeOp([0.0, 0.0], [1.0, 1.0])
        with pytest.raises(ConfigurationError):
            box2.resolvent(dense, 1.0, np.array([0.5, 0.5]))
        del A

    def test_linear_residual_is_tiny(self):
        rng = np.random.default_rng(0)
        G = np.array([[1.0, -2.0], [2.0, 3.0]])
        A = LinearMonotoneOp(G)
        for _ in range(20):
            r = rng.standard_normal(2)
            p = A.resolvent(I2, 0.5, r)
            res = np.linalg.norm((I2.mat + 0.5 * G) @ p - r)
            assert res <= 1e-10 * max(1.0, np.linalg.norm(r))


class TestMonotonicityGate:
    def test_skew_accepted(self):
        LinearMonotoneOp(SKEW2D_MATRIX)

    def test_identity_accepted(self):
        LinearMonotoneOp(np.eye(2))

    def test_negative_identity_rejected(self):
        with pytest.raises(ConfigurationError):
            LinearMonotoneOp(-np.eye(2))


class TestCocoercive:
    def test_zero_eval(self):
        C = ZeroCocoerciveOp(2)
        assert np.array_equal(C(np.array([5.0, -2.0])), np.zeros(2))

    def test_identity_gradient(self):
        C = AffineCocoerciveOp(np.eye(2), beta=1.0)
        assert np.array_equal(C(np.array([1.0, 2.0])), np.array([1.0, 2.0]))

    def test_diagonal_matvec(self):
        C = AffineCocoerciveOp(np.diag([2.0, 1.0]), beta=2.0)
        assert np.array_equal(C(np.array([1.0, 1.0])), np.array([2.0, 1.0]))

    def test_check_zero_operator(self):
        rep = check_cocoercivity(ZeroCocoerciveOp(3), Metric.identity(3), samples=50)
        assert rep.min_slack == 0.0

    def test_check_identity_tight(self):
        C = AffineCocoerciveOp(np.eye(2), beta=1.0)
        rep = check_cocoercivity(C, I2, samples=200, seed=1)
        assert rep.min_slack >= -1e-12

    def test_check_understated_beta_fails(self):
        C = AffineCocoerciveOp(np.eye(2), beta=0.5)
        rep = check_cocoercivity(C, I2, samples=200, seed=1)
        assert rep.min_slack < 0
        assert rep.witness is not None

    def test_tight_constant_identity_metric(self):
        Q = np.diag([3.0, 1.0])
        assert quad_cocoercivity_bound(Q, I2) == pytest.approx(3.0)

    def test_tight_constant_general_metric(self):
        rng = np.random.default_rng(5)
        R = rng.standard_normal((4, 4))
        M = Metric(R @ R.T + 4 * np.eye(4))
        D = rng.standard_normal((4, 4))
        Q = D @ D.T
        beta = quad_cocoercivity_bound(Q, M)
        C = AffineCocoerciveOp(Q, beta=beta)
        rep = check_cocoercivity(C, M, samples=300, seed=2)
        assert rep.min_slack >= -1e-9


class TestContractionSlack:
    @pytest.mark.parametrize("op", [
        LinearMonotoneOp(SKEW2D_MATRIX),
        LinearMonotoneOp(np.array([[1.0, -1.0], [1.0, 0.5]])),
        ZeroMonotoneOp(2),
        BoxNormalConeOp([-0.5, -0.5], [0.5, 0.5]),
    ])
    def test_firm_inequality(self, op):
        assert check_resolvent_contraction(op, I2, gamma=0.3, samples=1000) >= -1e-10


class TestProblemInstance:
    def test_solution_fixed_point_check(self):
        pb = skew2d()
        assert np.array_equal(pb.solution, np.zeros(2))

    def test_bad_solution_rejected(self):
        with pytest.raises(ConfigurationError):
            ProblemInstance(A=LinearMonotoneOp(SKEW2D_MATRIX),
                            C=ZeroCocoerciveOp(2), M=I2,
                            solution=np.array([1.0, 0.0]))

    def test_dim_mismatch(self):
        with pytest.raises(Exception):
            ProblemInstance(A=ZeroMonotoneOp(3), C=ZeroCocoerciveOp(2), M=I2)

    def test_zero_cocoercive_with_positive_margin_runs(self):
        # beta_bar above the operator's beta = 0 keeps every update finite
        from devsplit import Schedule, StoppingRule, ZeroDeviations, run
        pb = skew2d()
        sched = Schedule(lambda0=1.0, gamma=0.1, beta_bar=0.001)
        rec = run(pb, sched, ZeroDeviations(), [1.0, 1.0],
                  StoppingRule(max_iter=10, tol=None))
        assert rec.iterations == 10
        assert np.all(np.isfinite(rec.final_p))
