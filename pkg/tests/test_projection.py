import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from inspection_game import (
    DomainError,
    OpCounter,
    divergence,
    project_linear,
    project_sorted,
)

from oracles import pgd_entropy_projection


def _random_reference(rng, m):
    """Positive vectors with occasional heavy ties and large spreads."""
    kind = rng.integers(0, 4)
    if kind == 0:
        vec = rng.uniform(0.05, 3.0, m)
    elif kind == 1:
        vec = np.exp(rng.normal(0.0, 1.5, m))
    elif kind == 2:  # heavy ties
        levels = rng.uniform(0.1, 2.0, max(1, m // 3))
        vec = rng.choice(levels, size=m)
    else:  # near the clamp boundary
        vec = np.minimum(rng.uniform(0.3, 1.7, m), 1.0) + rng.normal(0, 1e-9, m)
        vec = np.abs(vec) + 1e-12
    return vec


class TestDivergence:
    def test_identity_is_zero(self):
        v = np.array([0.2, 1.4, 0.7])
        assert divergence(v, v) == pytest.approx(0.0, abs=1e-15)

    def test_zero_entry_convention(self):
        assert divergence(np.array([0.0]), np.array([2.0])) == pytest.approx(2.0)

    def test_hand_value(self):
        expected = math.log(2.0) + 0.5 - 1.0
        assert divergence(np.array([1.0]), np.array([0.5])) == pytest.approx(expected)

    def test_nonnegative(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            m = int(rng.integers(1, 8))
            ref = _random_reference(rng, m)
            rho = rng.uniform(0, 1, m)
            assert divergence(rho, ref) >= -1e-12

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            divergence(np.array([0.5]), np.array([0.0]))
        with pytest.raises(DomainError):
            divergence(np.array([0.5]), np.array([-1.0]))
        with pytest.raises(DomainError):
            divergence(np.array([-0.1]), np.array([1.0]))
        with pytest.raises(DomainError):
            divergence(np.array([0.5, 0.5]), np.array([1.0]))


class TestProjectSorted:
    def test_clamp_only_case(self):
        out = project_sorted(np.array([0.5, 0.5, 1.5]), 2)
        assert out.rho.tolist() == [0.5, 0.5, 1.0]

    def test_scaling_case_no_pin(self):
        out = project_sorted(np.array([2.0, 1.0, 1.0]), 1)
        np.testing.assert_allclose(out.rho, [0.5, 0.25, 0.25])

    def test_scaling_case_with_pin(self):
        out = project_sorted(np.array([3.0, 0.6, 0.6]), 2)
        np.testing.assert_allclose(out.rho, [1.0, 0.5, 0.5])

    def test_positive_required(self):
        with pytest.raises(DomainError):
            project_sorted(np.array([1.0, 0.0]), 1)


class TestProjectLinear:
    @pytest.mark.parametrize(
        "ref,r_a,expected",
        [
            ([0.5, 0.5, 1.5], 2, [0.5, 0.5, 1.0]),
            ([2.0, 1.0, 1.0], 1, [0.5, 0.25, 0.25]),
            ([3.0, 0.6, 0.6], 2, [1.0, 0.5, 0.5]),
            ([5.0], 1, [1.0]),
        ],
    )
    def test_matches_hand_values(self, ref, r_a, expected):
        out = project_linear(np.array(ref), r_a)
        np.testing.assert_allclose(out.rho, expected)

    def test_uniform_scaling(self):
        out = project_linear(np.full(6, 0.9), 2)
        np.testing.assert_allclose(out.rho, np.full(6, 2.0 / 6.0))

    def test_counter_reports_visits(self):
        counter = OpCounter()
        project_linear(np.linspace(0.2, 3.0, 64), 2, counter=counter)
        assert counter.visits >= 64

    @settings(max_examples=200, deadline=None)
    @given(seed=st.integers(0, 100_000), m=st.integers(1, 60), r_a=st.integers(1, 8))
    def test_equivalence_with_sorted(self, seed, m, r_a):
        rng = np.random.default_rng(seed)
        ref = _random_reference(rng, m)
        a = project_sorted(ref, r_a).rho
        b = project_linear(ref, r_a).rho
        np.testing.assert_allclose(a, b, atol=1e-12, rtol=0)


class TestOptimality:
    def test_feasibility_always(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            m = int(rng.integers(1, 30))
            r_a = int(rng.integers(1, 6))
            out = project_linear(_random_reference(rng, m), r_a).rho
            assert np.all(out >= 0) and np.all(out <= 1.0 + 1e-12)
            assert out.sum() <= r_a + 1e-9

    def test_budget_tight_when_scaled(self):
        rng = np.random.default_rng(6)
        for _ in range(200):
            m = int(rng.integers(1, 30))
            r_a = int(rng.integers(1, 6))
            ref = _random_reference(rng, m)
            if np.minimum(ref, 1.0).sum() <= r_a:
                continue
            out = project_sorted(ref, r_a).rho
            assert out.sum() == pytest.approx(r_a, abs=1e-9)

    def test_order_preserved(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            m = int(rng.integers(2, 25))
            ref = _random_reference(rng, m)
            out = project_linear(ref, int(rng.integers(1, 5))).rho
            order = np.argsort(-ref, kind="stable")
            diffs = np.diff(out[order])
            assert np.all(diffs <= 1e-12)

    def test_pin_count_function_is_nondecreasing(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            m = int(rng.integers(2, 20))
            desc = np.sort(_random_reference(rng, m))[::-1]
            suffix = np.concatenate((np.cumsum(desc[::-1])[::-1], [0.0]))
            g = [0.0] + [k + suffix[k] / desc[k - 1] for k in range(1, m + 1)]
            for k in range(m):
                assert g[k] <= g[k + 1] + 1e-12
                if desc[k] > (desc[k + 1] if k + 1 < m else 0.0):
                    assert g[k] < g[k + 1] + 1e-15 or math.isclose(g[k], g[k + 1])

    def test_dominates_random_feasible_points(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            m = int(rng.integers(1, 10))
            r_a = int(rng.integers(1, 4))
            ref = _random_reference(rng, m)
            ours = divergence(project_sorted(ref, r_a), ref)
            for _ in range(300):
                cand = rng.uniform(0, 1, m)
                total = cand.sum()
                if total > r_a:
                    cand *= r_a / total
                assert ours <= divergence(cand, ref) + 1e-9

    def test_matches_convex_solver(self):
        rng = np.random.default_rng(10)
        for _ in range(25):
            m = int(rng.integers(1, 12))
            r_a = int(rng.integers(1, 4))
            ref = rng.uniform(0.05, 3.0, m)
            ours = divergence(project_sorted(ref, r_a), ref)
            _, oracle_value = pgd_entropy_projection(ref, r_a)
            assert ours <= oracle_value + 1e-9
            assert abs(ours - oracle_value) <= 1e-6
