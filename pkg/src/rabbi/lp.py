"""Dense simplex for small standard-form linear programs.

Programs are stated as

    max  c'x    s.t.    E x = d,    A x <= b,    x >= 0,

and solved with a two-phase tableau method under Bland's pivoting rule,
which guarantees termination on degenerate instances.  Everything here
is sized for desk-scale programs (tens of variables), so the solver
favours reproducibility over speed: dense arrays, a fixed pivot order,
no scaling heuristics.  Identical inputs produce bitwise-identical
solutions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

FEASIBILITY_TOL = 1e-9
IDENTITY_TOL = 1e-8
_PIVOT_TOL = 1e-10
_RCOST_TOL = 1e-9


class LpError(Exception):
    """Base class for linear programming failures."""


class LpStatusError(LpError):
    """An operation needed an optimal solution but the LP is not optimal."""


class UnitMassAbsentError(LpError):
    """No optimal solution carries a full unit on the requested variable."""


def _as_matrix(m, rows: Optional[int], cols: int) -> np.ndarray:
    if m is None:
        return np.zeros((0, cols))
    out = np.asarray(m, dtype=float)
    if out.ndim == 1:
        out = out.reshape(1, -1) if out.size else out.reshape(0, cols)
    return out


@dataclass
class StandardLp:
    """A maximization LP over nonnegative variables.

    eq_matrix/eq_rhs hold the equality rows, ineq_matrix/ineq_rhs the
    `<=` rows.  Either block may be empty (pass None).
    """

    objective: np.ndarray
    eq_matrix: Optional[np.ndarray] = None
    eq_rhs: Optional[np.ndarray] = None
    ineq_matrix: Optional[np.ndarray] = None
    ineq_rhs: Optional[np.ndarray] = None

    def __post_init__(self):
        self.objective = np.atleast_1d(np.asarray(self.objective, dtype=float))
        nv = self.objective.size
        self.eq_matrix = _as_matrix(self.eq_matrix, None, nv)
        self.ineq_matrix = _as_matrix(self.ineq_matrix, None, nv)
        self.eq_rhs = np.atleast_1d(np.asarray(
            self.eq_rhs if self.eq_rhs is not None else np.zeros(0), dtype=float))
        self.ineq_rhs = np.atleast_1d(np.asarray(
            self.ineq_rhs if self.ineq_rhs is not None else np.zeros(0), dtype=float))
        if self.eq_matrix.shape != (self.eq_rhs.size, nv):
            raise ValueError(
                f"equality block shape {self.eq_matrix.shape} does not match "
                f"rhs length {self.eq_rhs.size} and {nv} variables")
        if self.ineq_matrix.shape != (self.ineq_rhs.size, nv):
            raise ValueError(
                f"inequality block shape {self.ineq_matrix.shape} does not match "
                f"rhs length {self.ineq_rhs.size} and {nv} variables")
        for arr in (self.objective, self.eq_matrix, self.eq_rhs,
                    self.ineq_matrix, self.ineq_rhs):
            if arr.size and not np.all(np.isfinite(arr)):
                raise ValueError("LP data must be finite")

    @property
    def n_vars(self) -> int:
        return self.objective.size


@dataclass
class LpSolution:
    status: str  # "optimal" | "infeasible" | "unbounded"
    value: float
    primal: Optional[np.ndarray] = None
    dual_eq: Optional[np.ndarray] = None
    dual_ineq: Optional[np.ndarray] = None
    basis: Optional[tuple] = None


def _bland_step(tab, rhs, basis, cost, allowed):
    """One pass of the simplex loop; returns 'optimal', 'unbounded' or None."""
    zrow = cost[basis] @ tab - cost
    entering = -1
    for j in allowed:
        if zrow[j] < -_RCOST_TOL:
            entering = j
            break
    if entering < 0:
        return "optimal"
    col = tab[:, entering]
    pos = col > _PIVOT_TOL
    if not pos.any():
        return "unbounded"
    ratios = np.full(col.shape, np.inf)
    ratios[pos] = rhs[pos] / col[pos]
    rmin = ratios.min()
    # Bland: among minimal ratios, leave the basic variable of lowest index.
    cand = np.flatnonzero(ratios <= rmin + 1e-12 * (1.0 + abs(rmin)))
    leave = cand[np.argmin(basis[cand])]
    piv = tab[leave, entering]
    tab[leave] /= piv
    rhs[leave] /= piv
    for i in range(tab.shape[0]):
        if i != leave and tab[i, entering] != 0.0:
            f = tab[i, entering]
            tab[i] -= f * tab[leave]
            rhs[i] -= f * rhs[leave]
    np.clip(rhs, 0.0, None, out=rhs)
    basis[leave] = entering
    return None


def _run_simplex(tab, rhs, basis, cost, allowed):
    limit = 2000 + 200 * (tab.shape[0] + tab.shape[1])
    for _ in range(limit):
        res = _bland_step(tab, rhs, basis, cost, allowed)
        if res is not None:
            return res
    raise LpError("pivot limit exceeded; numerical cycling suspected")


def solve_lp(lp: StandardLp) -> LpSolution:
    """Solve a StandardLp; classifies optimal / infeasible / unbounded.

    On optimal instances the primal/dual vectors are recomputed from the
    final basis against the original data, so residuals are at machine
    precision rather than accumulated pivot error.
    """
    nv = lp.n_vars
    me, mi = lp.eq_rhs.size, lp.ineq_rhs.size
    m = me + mi
    ns = nv + mi  # structural + slack columns

    G = np.zeros((m, ns))
    if me:
        G[:me, :nv] = lp.eq_matrix
    if mi:
        G[me:, :nv] = lp.ineq_matrix
        G[me:, nv:] = np.eye(mi)
    h = np.concatenate([lp.eq_rhs, lp.ineq_rhs])
    cost = np.concatenate([lp.objective, np.zeros(mi)])

    flip = h < 0
    Gw = G.copy()
    Gw[flip] *= -1.0
    hw = h.copy()
    hw[flip] *= -1.0

    # Rows whose slack can start in the basis need no artificial variable.
    needs_art = np.ones(m, dtype=bool)
    basis = np.empty(m, dtype=int)
    for i in range(me, m):
        if not flip[i]:
            needs_art[i] = False
            basis[i] = nv + (i - me)
    art_rows = np.flatnonzero(needs_art)
    na = art_rows.size
    keep = np.arange(m)

    if na:
        tab = np.zeros((m, ns + na))
        tab[:, :ns] = Gw
        for a, i in enumerate(art_rows):
            tab[i, ns + a] = 1.0
            basis[i] = ns + a
        rhs = hw.copy()
        cost1 = np.zeros(ns + na)
        cost1[ns:] = -1.0
        res = _run_simplex(tab, rhs, basis, cost1, range(ns))
        if res == "unbounded":  # cannot happen: phase-1 objective bounded by 0
            raise LpError("phase 1 reported unbounded")
        infeas = -(cost1[basis] @ rhs)
        if infeas > FEASIBILITY_TOL * (1.0 + np.abs(hw).max(initial=0.0)):
            return LpSolution(status="infeasible", value=float("nan"))
        # Pivot leftover artificials out, dropping redundant rows.
        drop = []
        for i in range(m):
            if basis[i] >= ns:
                piv_col = -1
                for j in range(ns):
                    if abs(tab[i, j]) > 1e-8:
                        piv_col = j
                        break
                if piv_col < 0:
                    drop.append(i)
                else:
                    piv = tab[i, piv_col]
                    tab[i] /= piv
                    rhs[i] /= piv
                    for r in range(m):
                        if r != i and tab[r, piv_col] != 0.0:
                            f = tab[r, piv_col]
                            tab[r] -= f * tab[i]
                            rhs[r] -= f * rhs[i]
                    np.clip(rhs, 0.0, None, out=rhs)
                    basis[i] = piv_col
        if drop:
            sel = np.setdiff1d(np.arange(m), drop)
            tab = tab[sel]
            rhs = rhs[sel]
            basis = basis[sel]
            keep = keep[sel]
        tab = tab[:, :ns]
    else:
        tab = Gw.copy()
        rhs = hw.copy()

    res = _run_simplex(tab, rhs, basis, cost, range(ns))
    if res == "unbounded":
        return LpSolution(status="unbounded", value=float("inf"))

    # Rebuild the vertex and duals from original data for clean numerics.
    B = G[keep][:, basis]
    try:
        xb = np.linalg.solve(B, h[keep])
        y = np.linalg.solve(B.T, cost[basis])
    except np.linalg.LinAlgError:  # near-singular basis: least squares fallback
        xb = np.linalg.lstsq(B, h[keep], rcond=None)[0]
        y = np.linalg.lstsq(B.T, cost[basis], rcond=None)[0]
    x_full = np.zeros(ns)
    x_full[basis] = xb
    np.clip(x_full, 0.0, None, out=x_full)

    scale = 1.0 + np.abs(h).max(initial=0.0)
    resid_eq = G[:me] @ x_full - h[:me] if me else np.zeros(0)
    resid_in = G[me:, :nv] @ x_full[:nv] - h[me:] if mi else np.zeros(0)
    if (resid_eq.size and np.abs(resid_eq).max() > IDENTITY_TOL * scale) or (
            resid_in.size and resid_in.max() > IDENTITY_TOL * scale):
        raise LpError("basis identity check failed beyond tolerance")

    dual = np.zeros(m)
    dual[keep] = y
    return LpSolution(
        status="optimal",
        value=float(lp.objective @ x_full[:nv]),
        primal=x_full[:nv],
        dual_eq=dual[:me],
        dual_ineq=dual[me:],
        basis=tuple(int(b) for b in basis),
    )


def _with_optimality_row(lp: StandardLp, value: float):
    """Inequality block extended with `objective'x >= value` (as a <= row)."""
    slack = 1e-9 * (1.0 + abs(value))
    row = -lp.objective.reshape(1, -1)
    mat = np.vstack([lp.ineq_matrix, row])
    rhs = np.concatenate([lp.ineq_rhs, [-(value - slack)]])
    return mat, rhs


def maximize_over_optima(lp: StandardLp, direction: np.ndarray,
                         value: float) -> LpSolution:
    """Maximize `direction'x` over the (near-)optimal face of `lp`.

    `value` must be the optimal value of `lp`; a slack of 1e-9 relative
    size keeps the face nonempty under floating point.
    """
    mat, rhs = _with_optimality_row(lp, value)
    sel = StandardLp(objective=np.asarray(direction, dtype=float),
                     eq_matrix=lp.eq_matrix, eq_rhs=lp.eq_rhs,
                     ineq_matrix=mat, ineq_rhs=rhs)
    return solve_lp(sel)


def reduce_by_unit(lp: StandardLp, j: int):
    """Split one unit of variable j off an optimal solution.

    Requires some optimal solution with x_j >= 1 (re-verified by
    maximizing x_j over the optimal face).  Returns (objective[j],
    residual LP) where the residual has every rhs reduced by column j,
    so that value(lp) = objective[j] + value(residual).
    """
    if not 0 <= j < lp.n_vars:
        raise IndexError(f"variable index {j} out of range")
    sol = solve_lp(lp)
    if sol.status != "optimal":
        raise LpStatusError(f"reduce_by_unit needs an optimal LP, got {sol.status}")
    if sol.primal[j] < 1.0 - FEASIBILITY_TOL:
        e = np.zeros(lp.n_vars)
        e[j] = 1.0
        sel = maximize_over_optima(lp, e, sol.value)
        if sel.status != "optimal" or sel.value < 1.0 - 1e-6:
            raise UnitMassAbsentError(
                f"unit mass absent: max x_{j} over optima is "
                f"{sel.value if sel.status == 'optimal' else sel.status}")
    residual = StandardLp(
        objective=lp.objective.copy(),
        eq_matrix=lp.eq_matrix.copy(),
        eq_rhs=lp.eq_rhs - lp.eq_matrix[:, j] if lp.eq_rhs.size else lp.eq_rhs.copy(),
        ineq_matrix=lp.ineq_matrix.copy(),
        ineq_rhs=lp.ineq_rhs - lp.ineq_matrix[:, j] if lp.ineq_rhs.size else lp.ineq_rhs.copy(),
    )
    return float(lp.objective[j]), residual


def check_concavity(lp_family: StandardLp, rhs_a, rhs_b, lam: float) -> bool:
    """Check value(lam*a + (1-lam)*b) >= lam*value(a) + (1-lam)*value(b).

    The rhs vectors stack the equality rhs followed by the inequality
    rhs.  Returns True when the concavity inequality holds within 1e-9;
    a False on feasible inputs indicates a solver bug.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lambda must lie in [0, 1]")
    me = lp_family.eq_rhs.size
    mi = lp_family.ineq_rhs.size
    rhs_a = np.asarray(rhs_a, dtype=float)
    rhs_b = np.asarray(rhs_b, dtype=float)
    if rhs_a.size != me + mi or rhs_b.size != me + mi:
        raise ValueError(f"rhs vectors must have length {me + mi}")

    def at(rhs, label):
        inst = StandardLp(objective=lp_family.objective,
                          eq_matrix=lp_family.eq_matrix, eq_rhs=rhs[:me],
                          ineq_matrix=lp_family.ineq_matrix, ineq_rhs=rhs[me:])
        sol = solve_lp(inst)
        if sol.status != "optimal":
            raise LpStatusError(f"{label}: {sol.status}")
        return sol.value

    va = at(rhs_a, "rhs_a")
    vb = at(rhs_b, "rhs_b")
    vm = at(lam * rhs_a + (1.0 - lam) * rhs_b, "blend")
    return vm >= lam * va + (1.0 - lam) * vb - 1e-9
