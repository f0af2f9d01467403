"""Dense primal-dual interior-point solver for one PSD block.

Solves min <F, X> s.t. <A_k, X> = b_k, X >= 0 together with its dual, using
the HKM search direction with Mehrotra predictor-corrector steps.  Dense
factorizations throughout; intended for block dimensions up to a few
hundred, which covers the lifted surface problems comfortably.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import SolverError

STATUS_OPTIMAL = "Optimal"
STATUS_MAX_ITER = "MaxIter"
STATUS_NUMERICAL = "NumericalFailure"


@dataclass(frozen=True)
class SdpProblem:
    """Cost matrix, trace equality constraints and the block dimension."""

    cost: np.ndarray
    constraints: list  # of (symmetric matrix, float)
    block_dim: int

    def __post_init__(self):
        n = self.block_dim
        if self.cost.shape != (n, n):
            raise SolverError(f"cost matrix shape {self.cost.shape} != ({n}, {n})")
        for k, (a, _) in enumerate(self.constraints):
            if a.shape != (n, n):
                raise SolverError(f"constraint {k} shape {a.shape} != ({n}, {n})")


@dataclass(frozen=True)
class SolverOptions:
    tol_gap: float = 1e-9
    tol_feas: float = 1e-9
    max_iter: int = 200
    verbose: bool = False
    log: object = None  # optional callable receiving one text line per iteration
    step_fraction: float = 0.98


@dataclass(frozen=True)
class SdpSolution:
    x: np.ndarray
    duals: np.ndarray
    primal_obj: float
    dual_obj: float
    gap: float
    iterations: int
    status: str
    residual_history: list = field(default_factory=list, compare=False)


def _sym(m):
    return (m + m.T) / 2.0


def _max_step(m, dm):
    """Largest a with m + a*dm >= 0, via the Cholesky-whitened eigenvalue."""
    try:
        ell = np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        return 0.0
    w = scipy.linalg.solve_triangular(ell, dm, lower=True)
    w = scipy.linalg.solve_triangular(ell, w.T, lower=True)
    lo = np.linalg.eigvalsh(_sym(w))[0]
    if lo >= -1e-14:
        return np.inf
    return -1.0 / lo


def solve_sdp(problem: SdpProblem, options: SolverOptions = SolverOptions()) -> SdpSolution:
    """Run the interior-point iteration until gap and feasibility tolerances.

    Deterministic given its inputs.  ``MaxIter`` and ``NumericalFailure``
    solutions carry the last iterate and residuals.
    """
    n = problem.block_dim
    m = len(problem.constraints)
    cost = _sym(np.asarray(problem.cost, dtype=float))
    amats = np.stack([_sym(np.asarray(a, dtype=float)) for a, _ in problem.constraints])
    b = np.array([bk for _, bk in problem.constraints], dtype=float)
    avec = amats.reshape(m, n * n)

    norm_b = np.linalg.norm(b)
    norm_c = np.linalg.norm(cost)
    a_norms = np.linalg.norm(avec, axis=1)
    if np.any(a_norms == 0.0):
        raise SolverError("zero constraint matrix")

    # Identity-based strictly feasible-ish start, scaled to the data.
    xi = n * max(1.0, float(np.max((1.0 + np.abs(b)) / (1.0 + a_norms))))
    eta = max(1.0, (1.0 + max(norm_c, float(np.max(a_norms)))) / np.sqrt(n))
    x = xi * np.eye(n)
    s = eta * np.eye(n)
    y = np.zeros(m)

    history = []
    status = STATUS_MAX_ITER
    it = 0
    best = None  # (merit, x, y, s)

    def residuals_at(x, y, s):
        rp = b - avec @ x.ravel()
        rd = cost - s - np.tensordot(y, amats, axes=1)
        pobj = float(np.vdot(cost, x).real)
        dobj = float(b @ y)
        gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        pinf = np.linalg.norm(rp) / (1.0 + norm_b)
        dinf = np.linalg.norm(rd) / (1.0 + norm_c)
        return rp, rd, pobj, dobj, gap, pinf, dinf

    for it in range(1, options.max_iter + 1):
        rp, rd, pobj, dobj, gap, pinf, dinf = residuals_at(x, y, s)
        mu = float(np.vdot(x, s).real) / n
        history.append({"iter": it, "gap": gap, "pinf": pinf, "dinf": dinf, "mu": mu})
        line = f"iter {it:3d}  gap {gap:9.3e}  pinf {pinf:9.3e}  dinf {dinf:9.3e}  mu {mu:9.3e}"
        if options.verbose:
            print(line)
        if options.log is not None:
            options.log(line)
        merit = max(gap, pinf, dinf)
        if np.isfinite(merit) and (best is None or merit < best[0]):
            best = (merit, x.copy(), y.copy(), s.copy())
        if gap <= options.tol_gap and pinf <= options.tol_feas and dinf <= options.tol_feas:
            status = STATUS_OPTIMAL
            break
        if not np.isfinite(mu) or mu > 1e16 or max(pinf, dinf) > 1e16:
            status = STATUS_NUMERICAL
            break
        # Once nearly converged, ill-conditioning can only corrupt the
        # iterate; stop at the best point seen instead of diverging.
        if best is not None and best[0] < 1e-6 and merit > 1e3 * best[0]:
            status = STATUS_NUMERICAL
            break

        try:
            ell_s = np.linalg.cholesky(s)
        except np.linalg.LinAlgError:
            status = STATUS_NUMERICAL
            break
        s_inv = scipy.linalg.cho_solve((ell_s, True), np.eye(n))
        s_inv = _sym(s_inv)

        # Schur complement M_kl = <A_k, X A_l S^-1>, symmetrized.
        t_mats = np.einsum("ij,kjl,lm->kim", x, amats, s_inv, optimize=True)
        schur = avec @ t_mats.transpose(0, 2, 1).reshape(m, n * n).T
        schur = (schur + schur.T) / 2.0

        a_sinv = avec @ s_inv.ravel()
        x_rd_sinv = x @ rd @ s_inv
        a_xrdsinv = avec @ x_rd_sinv.T.ravel()  # <A_k, X Rd Sinv> = sum(A_k * (X Rd Sinv))

        diag_reg = 1e-13 * max(1.0, float(np.max(np.abs(np.diag(schur)))))
        for attempt in range(8):
            try:
                schur_f = scipy.linalg.cho_factor(
                    schur + diag_reg * (0.0 if attempt == 0 else 10.0**attempt) * np.eye(m)
                )
                break
            except np.linalg.LinAlgError:
                continue
        else:
            status = STATUS_NUMERICAL
            break

        def direction(sigma_mu, correction):
            rhs = b - sigma_mu * a_sinv + a_xrdsinv
            if correction is not None:
                rhs = rhs + avec @ correction.T.ravel()
            dy = scipy.linalg.cho_solve(schur_f, rhs)
            # One round of iterative refinement; the Schur system has
            # condition ~1/mu^2 near the optimum and loses digits otherwise.
            dy = dy + scipy.linalg.cho_solve(schur_f, rhs - schur @ dy)
            ds = rd - np.tensordot(dy, amats, axes=1)
            dx = sigma_mu * s_inv - x - x @ ds @ s_inv
            if correction is not None:
                dx = dx - correction
            return _sym(dx), dy, ds

        # Predictor (affine scaling).
        dx_a, dy_a, ds_a = direction(0.0, None)
        ap = min(1.0, options.step_fraction * _max_step(x, dx_a))
        ad = min(1.0, options.step_fraction * _max_step(s, ds_a))
        mu_aff = float(np.vdot(x + ap * dx_a, s + ad * ds_a).real) / n
        sigma = min(1.0, max(0.0, (mu_aff / mu)) ** 3)

        # Corrector with Mehrotra second-order term.
        corr = dx_a @ ds_a @ s_inv
        dx, dy, ds = direction(sigma * mu, corr)
        ap = min(1.0, options.step_fraction * _max_step(x, dx))
        ad = min(1.0, options.step_fraction * _max_step(s, ds))
        if ap <= 1e-10 or ad <= 1e-10:
            status = STATUS_NUMERICAL
            break

        x = _sym(x + ap * dx)
        y = y + ad * dy
        s = _sym(s + ad * ds)

    rp, rd, pobj, dobj, gap, pinf, dinf = residuals_at(x, y, s)
    merit = max(gap, pinf, dinf)
    if status != STATUS_OPTIMAL and best is not None and (not np.isfinite(merit) or best[0] < merit):
        # Return the best iterate seen, not the one the breakdown left behind.
        _, x, y, s = best
        rp, rd, pobj, dobj, gap, pinf, dinf = residuals_at(x, y, s)
    if status != STATUS_OPTIMAL and gap <= options.tol_gap and pinf <= options.tol_feas and dinf <= options.tol_feas:
        status = STATUS_OPTIMAL
    return SdpSolution(
        x=_sym(x),
        duals=y,
        primal_obj=pobj,
        dual_obj=dobj,
        gap=gap,
        iterations=it,
        status=status,
        residual_history=history,
    )


def residuals(problem: SdpProblem, solution: SdpSolution):
    """Scaled primal/dual infeasibilities and relative gap of a solution."""
    n = problem.block_dim
    m = len(problem.constraints)
    cost = _sym(np.asarray(problem.cost, dtype=float))
    amats = np.stack([_sym(np.asarray(a, dtype=float)) for a, _ in problem.constraints])
    b = np.array([bk for _, bk in problem.constraints], dtype=float)
    avec = amats.reshape(m, n * n)
    rp = b - avec @ solution.x.ravel()
    s_implied = cost - np.tensordot(solution.duals, amats, axes=1)
    dual_eigs = np.linalg.eigvalsh(_sym(s_implied))
    pobj = float(np.vdot(cost, solution.x).real)
    dobj = float(b @ solution.duals)
    return {
        "primal_infeas": float(np.max(np.abs(rp)) / (1.0 + np.max(np.abs(b), initial=0.0))),
        "dual_infeas": float(max(0.0, -dual_eigs[0]) / (1.0 + np.linalg.norm(cost))),
        "gap": abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj)),
    }
