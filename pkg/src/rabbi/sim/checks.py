"""Randomized self-checks for the simplex core.

Feasible bounded programs are generated from known interior points, so
every check has a ground truth: strong duality at the returned basis,
the split-off-one-unit identity, and concavity of the value in the
right-hand side.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import lp


@dataclass(frozen=True)
class LpSuiteResult:
    solved: int
    duality_checked: int
    reduction_checked: int
    concavity_checked: int
    failures: tuple

    @property
    def passed(self) -> bool:
        return not self.failures


def _random_program(rng, n_max: int = 6):
    """Feasible, bounded LP plus a second feasible rhs for concavity."""
    nv = int(rng.integers(1, n_max + 1))
    me = min(int(rng.integers(0, 3)), nv)
    mi = int(rng.integers(0, 3))
    x0 = rng.uniform(0.0, 2.0, size=nv)
    x1 = rng.uniform(0.0, 2.0, size=nv)
    c = rng.normal(size=nv)
    E = rng.integers(-2, 3, size=(me, nv)).astype(float)
    while me and np.linalg.matrix_rank(E) < me:
        E = rng.integers(-2, 3, size=(me, nv)).astype(float)
    A = np.vstack([rng.normal(size=(mi, nv)), np.ones((1, nv))])
    rhs_i0 = np.concatenate([A[:-1] @ x0 + rng.uniform(0.0, 1.0, size=mi),
                             [x0.sum() + rng.uniform(0.5, 2.0)]])
    rhs_i1 = np.concatenate([A[:-1] @ x1 + rng.uniform(0.0, 1.0, size=mi),
                             [x1.sum() + rng.uniform(0.5, 2.0)]])
    program = lp.StandardLp(objective=c, eq_matrix=E, eq_rhs=E @ x0,
                            ineq_matrix=A, ineq_rhs=rhs_i0)
    rhs_a = np.concatenate([program.eq_rhs, program.ineq_rhs])
    rhs_b = np.concatenate([E @ x1 if me else np.zeros(0), rhs_i1])
    return program, rhs_a, rhs_b


def run_lp_suite(count: int = 1000, seed: int = 20240214) -> LpSuiteResult:
    """Solve `count` randomized programs and verify solver identities.

    Checks per program: status is optimal, primal feasibility, strong
    duality within 1e-9, value(lp) = c_j + value(residual) within 1e-8
    when some variable carries a unit, and rhs-concavity at a random
    mixing weight.
    """
    rng = np.random.default_rng(seed)
    failures = []
    duality = reduction = concavity = solved = 0
    for i in range(count):
        program, rhs_a, rhs_b = _random_program(rng)
        sol = lp.solve_lp(program)
        if sol.status != "optimal":
            failures.append(f"program {i}: status {sol.status}")
            continue
        solved += 1
        scale = 1.0 + abs(sol.value)

        slack = program.ineq_rhs - program.ineq_matrix @ sol.primal
        if sol.primal.min(initial=0.0) < -1e-9 or slack.min(initial=0.0) < -1e-9 * scale:
            failures.append(f"program {i}: infeasible vertex returned")
        if program.eq_rhs.size:
            resid = np.abs(program.eq_matrix @ sol.primal - program.eq_rhs).max()
            if resid > 1e-9 * scale:
                failures.append(f"program {i}: equality residual {resid:.2e}")

        dual_value = float(sol.dual_eq @ program.eq_rhs + sol.dual_ineq @ program.ineq_rhs)
        duality += 1
        if abs(dual_value - sol.value) > 1e-9 * scale:
            failures.append(f"program {i}: duality gap {dual_value - sol.value:.2e}")
        if sol.dual_ineq.min(initial=0.0) < -1e-9:
            failures.append(f"program {i}: negative inequality multiplier")

        j = int(np.argmax(sol.primal))
        if sol.primal[j] >= 1.0:
            reduction += 1
            cj, residual = lp.reduce_by_unit(program, j)
            rsol = lp.solve_lp(residual)
            if rsol.status != "optimal":
                failures.append(f"program {i}: residual status {rsol.status}")
            elif abs(sol.value - (cj + rsol.value)) > 1e-8 * scale:
                failures.append(f"program {i}: reduction identity off by "
                                f"{sol.value - cj - rsol.value:.2e}")

        lam = float(rng.uniform())
        concavity += 1
        if not lp.check_concavity(program, rhs_a, rhs_b, lam):
            failures.append(f"program {i}: value not concave in rhs")
    return LpSuiteResult(solved=solved, duality_checked=duality,
                         reduction_checked=reduction,
                         concavity_checked=concavity,
                         failures=tuple(failures))
