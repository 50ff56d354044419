import numpy as np
import pytest
from scipy.optimize import linprog

from inspection_game import (
    DenseLP,
    DetectorSet,
    InspectionInstance,
    ValidationError,
    build_rmp,
    solve_lp,
)
from inspection_game.colgen import all_columns
from inspection_game.simplex import rmp_crash_basis


class TestSolveLP:
    def test_single_bound_row(self):
        sol = solve_lp(DenseLP(c=[1.0], A=[[1.0]], senses=[">="], b=[3.0]))
        assert sol.status == "optimal"
        assert sol.x[0] == pytest.approx(3.0)
        assert sol.duals[0] == pytest.approx(1.0)
        assert sol.objective == pytest.approx(3.0)

    def test_textbook_maximization(self):
        sol = solve_lp(DenseLP(c=[-1.0, -1.0], A=[[1.0, 1.0]], senses=["<="], b=[1.0]))
        assert sol.status == "optimal"
        assert sol.objective == pytest.approx(-1.0)
        assert sol.duals[0] == pytest.approx(-1.0)  # <= rows price nonpositive

    def test_infeasible(self):
        lp = DenseLP(c=[0.0], A=[[1.0], [1.0]], senses=[">=", "<="], b=[3.0, 2.0])
        assert solve_lp(lp).status == "infeasible"

    def test_unbounded(self):
        lp = DenseLP(c=[-1.0], A=[[0.0]], senses=["<="], b=[1.0])
        assert solve_lp(lp).status == "unbounded"

    def test_equality_rows_and_upper_bounds(self):
        lp = DenseLP(
            c=[1.0, 2.0, -1.0],
            A=[[1.0, 1.0, 1.0], [1.0, -1.0, 0.0]],
            senses=["=", ">="],
            b=[2.0, 0.5],
            ub=[1.5, 1.0, 1.0],
        )
        sol = solve_lp(lp)
        assert sol.status == "optimal"
        assert lp.A[0] @ sol.x == pytest.approx(2.0, abs=1e-9)
        assert lp.A[1] @ sol.x >= 0.5 - 1e-9
        # cross-check against scipy on the same data
        ref = linprog(
            lp.c, A_ub=-lp.A[1:2], b_ub=[-0.5], A_eq=lp.A[:1], b_eq=[2.0],
            bounds=list(zip(lp.lb, lp.ub)), method="highs",
        )
        assert sol.objective == pytest.approx(ref.fun, abs=1e-8)

    def test_validation(self):
        with pytest.raises(ValidationError):
            DenseLP(c=[1.0, 2.0], A=[[1.0]], senses=["="], b=[1.0])
        with pytest.raises(ValidationError):
            DenseLP(c=[np.nan], A=[[1.0]], senses=["="], b=[1.0])
        with pytest.raises(ValidationError):
            DenseLP(c=[1.0], A=[[1.0]], senses=["!"], b=[1.0])


def _random_lp(rng):
    rows = int(rng.integers(1, 6))
    cols = int(rng.integers(1, 8))
    a = rng.normal(0, 1, (rows, cols))
    x0 = rng.uniform(0, 2, cols)
    senses, b = [], []
    for i in range(rows):
        kind = rng.integers(0, 3)
        lhs = float(a[i] @ x0)
        if kind == 0:
            senses.append("<=")
            b.append(lhs + abs(rng.normal()))
        elif kind == 1:
            senses.append(">=")
            b.append(lhs - abs(rng.normal()))
        else:
            senses.append("=")
            b.append(lhs)
    ub = np.where(rng.uniform(size=cols) < 0.5, x0 + rng.uniform(0.5, 2, cols), np.inf)
    c = rng.normal(0, 1, cols)
    return DenseLP(c=c, A=a, senses=senses, b=np.array(b), ub=ub)


def _scipy_solve(lp):
    a_ub, b_ub, a_eq, b_eq = [], [], [], []
    for row, sense, rhs in zip(lp.A, lp.senses, lp.b):
        if sense == "<=":
            a_ub.append(row); b_ub.append(rhs)
        elif sense == ">=":
            a_ub.append(-row); b_ub.append(-rhs)
        else:
            a_eq.append(row); b_eq.append(rhs)
    return linprog(
        lp.c,
        A_ub=np.array(a_ub) if a_ub else None,
        b_ub=np.array(b_ub) if b_ub else None,
        A_eq=np.array(a_eq) if a_eq else None,
        b_eq=np.array(b_eq) if b_eq else None,
        bounds=list(zip(lp.lb, lp.ub)),
        method="highs",
    )


class TestAgainstScipy:
    def test_random_feasible_lps(self):
        rng = np.random.default_rng(31)
        solved = 0
        for _ in range(120):
            lp = _random_lp(rng)
            ref = _scipy_solve(lp)
            sol = solve_lp(lp)
            if ref.status == 3:
                assert sol.status == "unbounded"
            elif ref.status == 2:
                assert sol.status == "infeasible"
            else:
                assert sol.status == "optimal"
                assert sol.objective == pytest.approx(ref.fun, abs=1e-7)
                solved += 1
        assert solved > 50  # the generator must actually produce solvable LPs

    def test_complementary_slackness_spot_checks(self):
        rng = np.random.default_rng(32)
        checked = 0
        for _ in range(60):
            lp = _random_lp(rng)
            sol = solve_lp(lp)
            if sol.status != "optimal":
                continue
            slack = lp.A @ sol.x - lp.b
            for i, sense in enumerate(lp.senses):
                if sense == "=":
                    assert abs(slack[i]) <= 1e-7
                else:
                    assert abs(sol.duals[i] * slack[i]) <= 1e-6
            checked += 1
        assert checked > 25


class TestBuildRMP:
    def test_empty_placement_gives_undefended_value(self, toy_instance):
        lp = build_rmp(toy_instance, [DetectorSet.of(())])
        sol = solve_lp(lp, initial_basis=rmp_crash_basis(1, toy_instance.m))
        assert sol.status == "optimal"
        assert sol.objective == pytest.approx(min(toy_instance.r_A, toy_instance.m))

    def test_matching_pennies_full_columns(self, matching_pennies):
        cols = all_columns(matching_pennies)
        lp = build_rmp(matching_pennies, cols)
        sol = solve_lp(lp, initial_basis=rmp_crash_basis(len(cols), 2))
        assert sol.objective == pytest.approx(0.5, abs=1e-9)

    def test_perfect_coverage_single_column(self):
        inst = InspectionInstance(
            ["v1"], ["e1", "e2"], {"v1": ["e1", "e2"]}, {"v1": 1.0}, 1, 1,
        )
        lp = build_rmp(inst, [DetectorSet.of([0])])
        sol = solve_lp(lp, initial_basis=rmp_crash_basis(1, 2))
        assert sol.objective == pytest.approx(0.0, abs=1e-12)

    def test_duals_form_marginal_vector(self, toy_instance):
        rng = np.random.default_rng(33)
        for _ in range(10):
            size = int(rng.integers(1, 5))
            cols = [DetectorSet.of(())] + [
                DetectorSet.of(
                    rng.choice(4, size=int(rng.integers(1, 3)), replace=False)
                )
                for _ in range(size)
            ]
            cols = list({c.key(): c for c in cols}.values())
            lp = build_rmp(toy_instance, cols)
            sol = solve_lp(lp, initial_basis=rmp_crash_basis(len(cols), 7))
            rho = sol.duals[:7]
            assert np.all(rho >= -1e-9) and np.all(rho <= 1.0 + 1e-9)
            assert rho.sum() <= toy_instance.r_A + 1e-9

    def test_empty_column_set_rejected(self, toy_instance):
        with pytest.raises(ValidationError):
            build_rmp(toy_instance, [])
