import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from devsplit import DimensionMismatchError, Metric, MetricError


def vec(*xs):
    return np.asarray(xs, dtype=float)


class TestInner:
    def test_identity_reduces_to_dot(self):
        M = Metric.identity(2)
        assert M.inner(vec(1, 2), vec(3, 4)) == 11.0

    def test_diagonal_hand_value(self):
        M = Metric(np.diag([2.0, 3.0]))
        assert M.inner(vec(1, 1), vec(1, 1)) == pytest.approx(5.0, abs=0)

    def test_zero_vector(self):
        M = Metric(np.array([[2.0, 0.5], [0.5, 1.0]]))
        assert M.inner(vec(0, 0), vec(3, -7)) == 0.0

    def test_dimension_mismatch(self):
        M = Metric.identity(2)
        with pytest.raises(DimensionMismatchError):
            M.inner(vec(1, 2, 3), vec(1, 2))


class TestNorm:
    def test_euclidean(self):
        assert Metric.identity(2).norm(vec(3, 4)) == 5.0

    def test_diagonal(self):
        assert Metric(np.diag([4.0, 9.0])).norm(vec(1, 1)) == pytest.approx(math.sqrt(13))

    def test_zero(self):
        assert Metric.identity(3).norm(vec(0, 0, 0)) == 0.0

    def test_inverse_norm_identity(self):
        assert Metric.identity(2).norm_inv(vec(3, 4)) == 5.0

    def test_inverse_norm_diagonal(self):
        # <(2,0), M^{-1}(2,0)> = 4/4 = 1
        assert Metric(np.diag([4.0, 1.0])).norm_inv(vec(2, 0)) == pytest.approx(1.0)

    def test_inverse_norm_zero(self):
        assert Metric(np.diag([4.0, 1.0])).norm_inv(vec(0, 0)) == 0.0


class TestValidation:
    def test_rejects_asymmetric(self):
        with pytest.raises(MetricError):
            Metric(np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_rejects_indefinite(self):
        with pytest.raises(MetricError):
            Metric(np.array([[1.0, 0.0], [0.0, -1.0]]))

    def test_roundtrip_apply_inverse(self):
        rng = np.random.default_rng(7)
        R = rng.standard_normal((5, 5))
        M = Metric(R @ R.T + 5 * np.eye(5))
        v = rng.standard_normal(5)
        back = M.apply(M.apply_inverse(v))
        assert np.max(np.abs(back - v)) <= 1e-12 * max(1.0, np.max(np.abs(v)))


@st.composite
def metric_and_vectors(draw, dim=4):
    entries = st.floats(-2.0, 2.0, allow_nan=False)
    R = np.array(draw(st.lists(st.lists(entries, min_size=dim, max_size=dim),
                               min_size=dim, max_size=dim)))
    M = Metric(R @ R.T + 2 * np.eye(dim))
    a = np.array(draw(st.lists(entries, min_size=dim, max_size=dim)))
    b = np.array(draw(st.lists(entries, min_size=dim, max_size=dim)))
    return M, a, b


@given(metric_and_vectors())
@settings(max_examples=200, deadline=None)
def test_cauchy_schwarz(data):
    M, a, b = data
    lhs = abs(M.inner(a, b))
    rhs = M.norm(a) * M.norm(b)
    assert lhs <= rhs + 1e-9 * max(1.0, rhs)


@given(metric_and_vectors())
@settings(max_examples=200, deadline=None)
def test_norm_duality(data):
    M, a, _ = data
    lhs = M.norm_inv(M.apply(a))
    rhs = M.norm(a)
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-12)


def test_identity_metric_is_bitwise_euclidean():
    rng = np.random.default_rng(3)
    M = Metric.identity(6)
    for _ in range(50):
        a = rng.standard_normal(6)
        b = rng.standard_normal(6)
        assert M.inner(a, b) == float(np.dot(a, b))
        assert M.norm(a) == math.sqrt(np.dot(a, a))
        assert M.norm_inv(a) == math.sqrt(np.dot(a, a))
