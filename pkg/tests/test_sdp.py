"""Interior-point solver: analytic optima, duality gaps, residual reporting."""

import numpy as np
import pytest

from risopt.errors import SolverError
from risopt.sdp import (
    STATUS_OPTIMAL,
    SdpProblem,
    SdpSolution,
    SolverOptions,
    residuals,
    solve_sdp,
)


def e_mat(n, i, j):
    m = np.zeros((n, n))
    m[i, j] = m[j, i] = 1.0
    return m


def trace_problem():
    # min tr(X) s.t. X11 = 1 -> optimum 1 at X = e1 e1^T.
    return SdpProblem(cost=np.eye(2), constraints=[(e_mat(2, 0, 0), 1.0)], block_dim=2)


def amgm_problem():
    # min X11 + X22 s.t. X12 = 1 -> optimum 2 at [[1, 1], [1, 1]].
    return SdpProblem(cost=np.eye(2), constraints=[(e_mat(2, 0, 1), 2.0)], block_dim=2)


def random_feasible(rng, n, m):
    """Strictly feasible random problem: X0 = I satisfies the constraints."""
    amats = []
    b = []
    for _ in range(m):
        a = rng.normal(size=(n, n))
        a = (a + a.T) / 2.0
        amats.append(a)
        b.append(np.trace(a))
    cost = rng.normal(size=(n, n))
    cost = (cost + cost.T) / 2.0 + n * np.eye(n)  # keeps the dual strictly feasible
    return SdpProblem(cost=cost, constraints=list(zip(amats, b)), block_dim=n)


class TestAnalyticProblems:
    def test_forced_corner(self):
        sol = solve_sdp(trace_problem())
        assert sol.status == STATUS_OPTIMAL
        assert sol.primal_obj == pytest.approx(1.0, abs=1e-8)
        assert np.allclose(sol.x, [[1.0, 0.0], [0.0, 0.0]], atol=1e-6)

    def test_am_gm_offdiagonal(self):
        sol = solve_sdp(amgm_problem())
        assert sol.status == STATUS_OPTIMAL
        assert sol.primal_obj == pytest.approx(2.0, abs=1e-8)
        assert np.allclose(sol.x, [[1.0, 1.0], [1.0, 1.0]], atol=1e-5)


class TestRandomProblems:
    def test_duality_gap_on_strictly_feasible(self):
        rng = np.random.default_rng(21)
        for trial in range(10):
            n = int(rng.integers(3, 12))
            m = int(rng.integers(1, n))
            problem = random_feasible(rng, n, m)
            sol = solve_sdp(problem)
            assert sol.status == STATUS_OPTIMAL, f"trial {trial}"
            rel = abs(sol.primal_obj - sol.dual_obj) / (1.0 + abs(sol.primal_obj))
            assert rel <= 1e-8, f"trial {trial}: gap {rel:.3e}"
            assert sol.gap <= 1e-9

    def test_solution_psd_within_tolerance(self):
        rng = np.random.default_rng(22)
        sol = solve_sdp(random_feasible(rng, 8, 4))
        eigs = np.linalg.eigvalsh(sol.x)
        assert eigs[0] >= -1e-9 * np.trace(sol.x)

    def test_determinism(self):
        rng = np.random.default_rng(23)
        problem = random_feasible(rng, 6, 3)
        a = solve_sdp(problem)
        b = solve_sdp(problem)
        assert np.array_equal(a.x, b.x)
        assert a.iterations == b.iterations

    def test_scale_invariance_of_status(self):
        rng = np.random.default_rng(24)
        problem = random_feasible(rng, 6, 3)
        base = solve_sdp(problem)
        s = 100.0
        scaled = SdpProblem(
            cost=s * problem.cost,
            constraints=[(s * a, s * b) for a, b in problem.constraints],
            block_dim=problem.block_dim,
        )
        scaled_sol = solve_sdp(scaled)
        assert scaled_sol.status == base.status
        assert scaled_sol.primal_obj == pytest.approx(s * base.primal_obj, rel=1e-6)


class TestResiduals:
    def test_exact_optimum_residuals(self):
        sol = SdpSolution(
            x=np.array([[1.0, 1.0], [1.0, 1.0]]),
            duals=np.array([1.0]),
            primal_obj=2.0,
            dual_obj=2.0,
            gap=0.0,
            iterations=0,
            status=STATUS_OPTIMAL,
        )
        res = residuals(amgm_problem(), sol)
        assert max(res.values()) <= 1e-12

    def test_perturbation_grows_linearly(self):
        problem = trace_problem()
        vals = []
        for delta in (1e-6, 1e-5, 1e-4):
            x = np.array([[1.0 + delta, 0.0], [0.0, 0.0]])
            sol = SdpSolution(
                x=x, duals=np.zeros(1), primal_obj=0.0, dual_obj=0.0, gap=0.0,
                iterations=0, status=STATUS_OPTIMAL,
            )
            vals.append(residuals(problem, sol)["primal_infeas"])
        assert vals[1] / vals[0] == pytest.approx(10.0, rel=1e-3)
        assert vals[2] / vals[1] == pytest.approx(10.0, rel=1e-3)

    def test_optimal_solution_meets_tolerances(self):
        rng = np.random.default_rng(25)
        problem = random_feasible(rng, 7, 3)
        sol = solve_sdp(problem)
        res = residuals(problem, sol)
        assert res["gap"] <= 1e-9
        assert res["primal_infeas"] <= 1e-7
        assert res["dual_infeas"] <= 1e-9

    def test_shape_mismatch_rejected(self):
        with pytest.raises(SolverError, match="shape"):
            SdpProblem(cost=np.eye(3), constraints=[(np.eye(2), 1.0)], block_dim=3)

    def test_iteration_log_emitted(self):
        lines = []
        solve_sdp(trace_problem(), SolverOptions(log=lines.append))
        assert lines and all("gap" in line for line in lines)
