"""Exact l1 minimization via a dense revised simplex method.

Basis Pursuit, Justice Pursuit (coefficients + sqrt(n)-scaled corruption
block) and its noise-dictionary augmented variant are reduced to
standard-form linear programs by splitting each signed variable into a
nonnegative pair. The solver is a two-phase revised simplex with Dantzig
pricing and an automatic Bland fallback, which terminates on degenerate
problems and returns exact basic feasible solutions -- needed downstream
for uniqueness and sign-pattern certification, where first-order solvers
are too loose.

A brute-force vertex enumeration oracle is provided for tiny instances;
it is the independent cross-check used by the test suite.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb
from typing import Optional, Sequence

import numpy as np

from .errors import BudgetExceededError, InputError, SolverFailure

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
TOLERANCE_FAILURE = "tolerance_failure"


@dataclass
class SolverOptions:
    feas_tol: float = 1e-9
    opt_tol: float = 1e-9
    max_pivots: Optional[int] = None  # default 50 * (m + N), set at solve time
    pivot_rule: str = "dantzig_with_bland_fallback"  # or "bland"

    def __post_init__(self):
        if self.feas_tol <= 0 or self.opt_tol <= 0:
            raise InputError("tolerances must be positive")
        if self.max_pivots is not None and self.max_pivots < 1:
            raise InputError("max_pivots must be >= 1")
        if self.pivot_rule not in ("bland", "dantzig_with_bland_fallback"):
            raise InputError(f"unknown pivot rule {self.pivot_rule!r}")


@dataclass
class LpProblem:
    """Standard-form LP: min c'x s.t. a x = b, x >= 0.

    ``var_map`` links each original signed variable to its (positive,
    negative) split pair of columns, so signed optimizers can be
    recomposed from the split solution.
    """

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    var_map: list[tuple[int, int]] = field(default_factory=list)

    def recompose(self, x: np.ndarray) -> np.ndarray:
        """Map a split-variable solution back to the signed variables."""
        out = np.empty(len(self.var_map))
        for k, (pos, neg) in enumerate(self.var_map):
            out[k] = x[pos] - x[neg]
        return out


@dataclass
class JpSolution:
    beta: np.ndarray
    omega: np.ndarray
    gamma: Optional[np.ndarray]
    objective: float
    residual_norm: float
    status: str
    corruption_cols: Optional[np.ndarray] = None  # None means full I_n block


def split_signed_problem(a_signed: np.ndarray, b: np.ndarray,
                         costs: np.ndarray) -> LpProblem:
    """Split free variables into nonnegative pairs: x = u - v.

    ``a_signed`` is m x K with free variables of nonnegative cost
    ``costs``; the result has N = 2K columns ordered [u block, v block].
    """
    a_signed = np.asarray(a_signed, dtype=float)
    b = np.asarray(b, dtype=float)
    costs = np.asarray(costs, dtype=float)
    m, k = a_signed.shape
    a = np.hstack([a_signed, -a_signed])
    c = np.concatenate([costs, costs])
    var_map = [(j, k + j) for j in range(k)]
    return LpProblem(a=a, b=b.copy(), c=c, var_map=var_map)


def formulate_jp(x: np.ndarray, y: np.ndarray, lam: float,
                 corruption_cols: Optional[Sequence[int]] = None) -> LpProblem:
    """LP for min ||beta||_1 + lam ||omega||_1 s.t. X beta + sqrt(n) I_M omega = y.

    When ``corruption_cols`` is None the corruption block spans all n rows;
    otherwise only the listed rows get a corruption column.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if lam <= 0:
        raise InputError(f"lambda must be > 0, got {lam}")
    n, p = x.shape
    if y.shape != (n,):
        raise InputError(f"y must have length {n}, got shape {y.shape}")
    if corruption_cols is None:
        cols = np.arange(n)
    else:
        cols = np.asarray(corruption_cols, dtype=int)
    eye_block = np.zeros((n, cols.size))
    eye_block[cols, np.arange(cols.size)] = np.sqrt(n)
    a_signed = np.hstack([x, eye_block])
    costs = np.concatenate([np.ones(p), np.full(cols.size, lam)])
    return split_signed_problem(a_signed, y, costs)


def formulate_augmented_jp(x: np.ndarray, y: np.ndarray, lam: float,
                           g: np.ndarray) -> LpProblem:
    """LP for the noise-dictionary problem with constraint
    X beta + sqrt(n) omega + G gamma = y and cost
    ||beta||_1 + lam ||omega||_1 + ||gamma||_1."""
    x = np.asarray(x, dtype=float)
    g = np.asarray(g, dtype=float)
    if lam <= 0:
        raise InputError(f"lambda must be > 0, got {lam}")
    n, p = x.shape
    if g.shape != (n, n):
        raise InputError(f"dictionary must be {n}x{n}, got {g.shape}")
    a_signed = np.hstack([x, np.sqrt(n) * np.eye(n), g])
    costs = np.concatenate([np.ones(p), np.full(n, lam), np.ones(n)])
    return split_signed_problem(a_signed, np.asarray(y, dtype=float), costs)


def formulate_bp(x_aug: np.ndarray, y: np.ndarray) -> LpProblem:
    """LP for min ||z||_1 s.t. x_aug z = y."""
    x_aug = np.asarray(x_aug, dtype=float)
    return split_signed_problem(x_aug, np.asarray(y, dtype=float),
                                np.ones(x_aug.shape[1]))


# ---------------------------------------------------------------------------
# Revised simplex
# ---------------------------------------------------------------------------

_REFACTOR_EVERY = 120


def _refactor(a, b, basis):
    binv = np.linalg.inv(a[:, basis])
    xb = binv @ b
    np.clip(xb, 0.0, None, out=xb)
    return binv, xb


def _apply_pivot(binv, xb, basis, d, leave, enter):
    """Update the basis inverse and basic values after a pivot."""
    t = xb[leave] / d[leave]
    dd = d.copy()
    dd[leave] = 0.0
    xb -= t * dd
    xb[leave] = t
    np.clip(xb, 0.0, None, out=xb)
    binv[leave] /= d[leave]
    binv -= np.outer(dd, binv[leave])
    basis[leave] = enter


def _pivot_loop(a, b, c, basis, binv, xb, allowed, opts: SolverOptions,
                max_pivots: int, bland_after: int):
    """Run simplex pivots until optimality/unboundedness/pivot budget.

    ``allowed`` masks the columns permitted to enter the basis.
    Returns a status string; basis/binv/xb are updated in place.
    """
    m, n_tot = a.shape
    c_scale = 1.0 + np.abs(c).max()
    it = 0
    while True:
        if it and it % _REFACTOR_EVERY == 0:
            new = _refactor(a, b, basis)
            binv[:, :] = new[0]
            xb[:] = new[1]
        y = c[basis] @ binv
        reduced = c - y @ a
        reduced[basis] = 0.0
        candidates = allowed & (reduced < -opts.opt_tol * c_scale)
        if not candidates.any():
            return OPTIMAL
        if opts.pivot_rule == "bland" or it >= bland_after:
            enter = int(np.flatnonzero(candidates)[0])
        else:
            masked = np.where(candidates, reduced, 0.0)
            enter = int(np.argmin(masked))
        d = binv @ a[:, enter]
        pos = d > opts.feas_tol
        if not pos.any():
            return UNBOUNDED
        ratios = np.full(m, np.inf)
        ratios[pos] = xb[pos] / d[pos]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + opts.feas_tol)
        # smallest variable index among ties: required for Bland, harmless
        # otherwise
        leave = int(ties[np.argmin(basis[ties])])
        _apply_pivot(binv, xb, basis, d, leave, enter)
        it += 1
        if it >= max_pivots:
            return TOLERANCE_FAILURE


def solve_lp(prob: LpProblem, opts: Optional[SolverOptions] = None):
    """Solve a standard-form LP; returns (x, objective, status).

    At status "optimal" the point is a basic feasible solution whose
    reduced costs are all >= -opt_tol (up to cost scaling).
    """
    if opts is None:
        opts = SolverOptions()
    a = np.asarray(prob.a, dtype=float)
    b = np.asarray(prob.b, dtype=float)
    c = np.asarray(prob.c, dtype=float)
    m, n = a.shape
    max_pivots = opts.max_pivots if opts.max_pivots is not None else 50 * (m + n)
    bland_after = 10 * (m + n)

    # ensure b >= 0 so the artificial identity basis is feasible
    flip = b < 0
    a = a.copy()
    b = b.copy()
    a[flip] *= -1.0
    b[flip] *= -1.0

    # phase 1: artificial variables
    a1 = np.hstack([a, np.eye(m)])
    c1 = np.concatenate([np.zeros(n), np.ones(m)])
    basis = np.arange(n, n + m)
    binv = np.eye(m)
    xb = b.copy()
    allowed1 = np.ones(n + m, dtype=bool)
    status = _pivot_loop(a1, b, c1, basis, binv, xb, allowed1, opts,
                         max_pivots, bland_after)
    if status != OPTIMAL:
        return np.zeros(n), np.nan, TOLERANCE_FAILURE
    b_scale = 1.0 + np.abs(b).max()
    phase1_obj = float(xb[basis >= n].sum())
    if phase1_obj > 1e-7 * b_scale:
        return np.zeros(n), np.nan, INFEASIBLE

    # drive remaining artificials out of the basis (degenerate pivots)
    for leave in np.flatnonzero(basis >= n):
        row = binv[leave] @ a
        pivot_cols = np.flatnonzero(np.abs(row) > 1e-9)
        pivot_cols = [j for j in pivot_cols if j not in set(basis)]
        if pivot_cols:
            enter = int(pivot_cols[0])
            d = binv @ a1[:, enter]
            _apply_pivot(binv, xb, basis, d, leave, enter)
        # else: redundant constraint row; the artificial stays basic at 0
        # and can never move since the row is null on original columns

    # phase 2
    allowed2 = np.concatenate([np.ones(n, dtype=bool), np.zeros(m, dtype=bool)])
    c2 = np.concatenate([c, np.zeros(m)])
    status = _pivot_loop(a1, b, c2, basis, binv, xb, allowed2, opts,
                         max_pivots, bland_after)
    if status == TOLERANCE_FAILURE:
        return np.zeros(n), np.nan, TOLERANCE_FAILURE
    # final refresh for accuracy
    binv, xb = _refactor(a1, b, basis)
    x = np.zeros(n)
    keep = basis < n
    x[basis[keep]] = xb[keep]
    objective = float(c @ x)
    return x, objective, status


# ---------------------------------------------------------------------------
# High-level solves
# ---------------------------------------------------------------------------

def _jp_objective(beta, omega, gamma, lam):
    obj = np.abs(beta).sum() + lam * np.abs(omega).sum()
    if gamma is not None:
        obj += np.abs(gamma).sum()
    return float(obj)


def solve_jp(x: np.ndarray, y: np.ndarray, lam: float,
             corruption_cols: Optional[Sequence[int]] = None,
             opts: Optional[SolverOptions] = None) -> JpSolution:
    """Solve the corruption-aware l1 problem
    min ||beta||_1 + lam ||omega||_1 s.t. X beta + sqrt(n) I_M omega = y."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = x.shape
    prob = formulate_jp(x, y, lam, corruption_cols)
    sol, _, status = solve_lp(prob, opts)
    signed = prob.recompose(sol)
    beta = signed[:p]
    omega = signed[p:]
    if corruption_cols is None:
        cols = None
        fitted = x @ beta + np.sqrt(n) * omega
    else:
        cols = np.asarray(corruption_cols, dtype=int)
        fitted = x @ beta
        fitted[cols] += np.sqrt(n) * omega
    residual = float(np.linalg.norm(y - fitted))
    return JpSolution(beta=beta, omega=omega, gamma=None,
                      objective=_jp_objective(beta, omega, None, lam),
                      residual_norm=residual, status=status,
                      corruption_cols=cols)


def solve_augmented_jp(x: np.ndarray, y: np.ndarray, lam: float, g: np.ndarray,
                       opts: Optional[SolverOptions] = None) -> JpSolution:
    """Solve the noise-dictionary variant with an extra G gamma term."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    g = np.asarray(g, dtype=float)
    n, p = x.shape
    prob = formulate_augmented_jp(x, y, lam, g)
    sol, _, status = solve_lp(prob, opts)
    signed = prob.recompose(sol)
    beta = signed[:p]
    omega = signed[p:p + n]
    gamma = signed[p + n:]
    residual = float(np.linalg.norm(y - x @ beta - np.sqrt(n) * omega - g @ gamma))
    return JpSolution(beta=beta, omega=omega, gamma=gamma,
                      objective=_jp_objective(beta, omega, gamma, lam),
                      residual_norm=residual, status=status)


def solve_bp(x_aug: np.ndarray, y: np.ndarray,
             opts: Optional[SolverOptions] = None):
    """Minimum-l1 solution of y = x_aug z. Returns (z, status)."""
    prob = formulate_bp(x_aug, y)
    sol, _, status = solve_lp(prob, opts)
    return prob.recompose(sol), status


# ---------------------------------------------------------------------------
# Vertex enumeration oracle
# ---------------------------------------------------------------------------

def enumerate_vertex_optima(prob: LpProblem, tol: float = 1e-8,
                            budget: int = 10 ** 6,
                            chunk: int = 20000) -> list[np.ndarray]:
    """All basic feasible solutions attaining the optimal objective.

    Brute force over column subsets; intended as a test oracle on tiny
    instances. Raises BudgetExceededError when C(N, m) exceeds ``budget``.
    """
    a = np.asarray(prob.a, dtype=float)
    b = np.asarray(prob.b, dtype=float)
    c = np.asarray(prob.c, dtype=float)
    m, n = a.shape
    total = comb(n, m)
    if total > budget:
        raise BudgetExceededError(
            f"C({n},{m}) = {total} exceeds enumeration budget {budget}")
    b_scale = 1.0 + np.abs(b).max()
    best = np.inf
    optima: list[tuple[float, np.ndarray]] = []
    combos_iter = itertools.combinations(range(n), m)
    while True:
        block = list(itertools.islice(combos_iter, chunk))
        if not block:
            break
        idx = np.array(block)                       # (k, m)
        bases = a[:, idx].transpose(1, 0, 2)        # (k, m, m)
        dets = np.linalg.det(bases)
        ok = np.abs(dets) > 1e-12
        if not ok.any():
            continue
        idx = idx[ok]
        rhs = np.broadcast_to(b[:, None], (int(ok.sum()), m, 1)).copy()
        sols = np.linalg.solve(bases[ok], rhs)[..., 0]
        resid = np.abs(np.einsum("kij,kj->ki", bases[ok], sols) - b).max(axis=1)
        feas = (sols.min(axis=1) >= -tol) & (resid <= 1e-7 * b_scale)
        if not feas.any():
            continue
        idx = idx[feas]
        sols = sols[feas]
        objs = np.einsum("kj,kj->k", c[idx], sols)
        for combo, sol, obj in zip(idx, sols, objs):
            if obj < best - tol:
                best = obj
                optima = []
            if obj <= best + tol:
                x = np.zeros(n)
                x[combo] = np.clip(sol, 0.0, None)
                optima.append((obj, x))
    if not optima:
        return []
    # re-filter against the final best and deduplicate solutions
    result: list[np.ndarray] = []
    for obj, x in optima:
        if obj > best + tol:
            continue
        if not any(np.abs(x - seen).max() <= 1e-6 for seen in result):
            result.append(x)
    return result


def certify_unique_jp(x: np.ndarray, y: np.ndarray, lam: float,
                      tol: float = 1e-8, budget: int = 10 ** 6):
    """Enumerate optima of the corruption-aware problem at (x, y, lam).

    Returns (unique: bool, optima in recomposed (beta, omega) form).
    """
    prob = formulate_jp(np.asarray(x, float), np.asarray(y, float), lam)
    vertices = enumerate_vertex_optima(prob, tol=tol, budget=budget)
    if not vertices:
        raise SolverFailure("vertex oracle found no feasible basis")
    signed = [prob.recompose(v) for v in vertices]
    distinct: list[np.ndarray] = []
    for s in signed:
        if not any(np.abs(s - seen).max() <= 1e-6 for seen in distinct):
            distinct.append(s)
    return len(distinct) == 1, distinct
