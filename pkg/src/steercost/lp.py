"""Dense two-phase simplex and the polytope-membership LPs built on it.

The solver maximizes ``c @ x`` subject to rows ``A[i] @ x (<=|=|>=) b[i]`` and
``x >= 0``. The entering column follows Bland's rule (smallest index), so runs are
deterministic; in floating point the leaving row is picked by a Harris two-pass
ratio test (ties broken by smallest basic index), which avoids tiny pivots on
the nearly parallel columns of the grid LPs. Passing ``exact=True`` runs the same tableau code on ``Fraction`` object
arrays with zero tolerances.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .boxkit import Box, all_local_det_boxes
from .errors import NumericalFailure, ValidationError

TAU_LP = 1e-9
DUALITY_GAP_TOL = 1e-7
_PIVOT_TOL = 1e-11
_RATIO_PIVOT_TOL = 1e-9
_REFACTOR_EVERY = 20
_HARRIS_DELTA = 1e-10

SENSES = ("<=", "=", ">=")


class Status(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LpProblem:
    c: np.ndarray
    A: np.ndarray
    senses: tuple[str, ...]
    b: np.ndarray

    def __post_init__(self):
        A = self.A
        if A.ndim != 2:
            raise ValidationError("constraint matrix must be 2-D")
        m, n = A.shape
        if self.c.shape != (n,) or self.b.shape != (m,) or len(self.senses) != m:
            raise ValidationError(
                f"inconsistent LP dimensions: A {A.shape}, c {self.c.shape}, b {self.b.shape}, "
                f"{len(self.senses)} senses"
            )
        if any(s not in SENSES for s in self.senses):
            raise ValidationError(f"row senses must be among {SENSES}")
        if A.dtype != object and not (
            np.all(np.isfinite(A)) and np.all(np.isfinite(self.b)) and np.all(np.isfinite(self.c))
        ):
            raise ValidationError("LP data must be finite")


def make_problem(c, A, senses, b) -> LpProblem:
    c = np.asarray(c)
    A = np.asarray(A)
    b = np.asarray(b)
    if A.dtype != object:
        c, A, b = (np.asarray(v, dtype=float) for v in (c, A, b))
    if A.ndim == 1:
        A = A.reshape(1, -1)
    if isinstance(senses, str):
        senses = (senses,) * A.shape[0]
    return LpProblem(c, A, tuple(senses), b)


@dataclass
class LpSolution:
    status: Status
    value: float | Fraction | None = None
    x: np.ndarray | None = None
    dual: np.ndarray | None = None
    dual_value: float | Fraction | None = None
    iterations: int = 0
    max_violation: float = 0.0
    slackness_residual: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def duality_gap(self) -> float:
        if self.value is None or self.dual_value is None:
            return float("nan")
        return float(abs(self.value - self.dual_value))


class _Tableau:
    """Tableau rows ``T`` (constraints, rhs last) and objective row ``R`` = [reduced costs, -z].

    In floating point the tableau is periodically rebuilt from the original
    standard-form data and the current basis, which keeps round-off from
    accumulating over long degenerate runs.
    """

    def __init__(self, T, basis, tol):
        self.T = T
        self.M = T.copy()
        self.basis = basis
        self.tol = tol
        self.R = None
        self.cost = None
        self.iterations = 0

    def set_objective(self, cost):
        # reduced costs c_j - c_B B^-1 A_j, last entry -c_B B^-1 b
        self.cost = cost
        cB = cost[self.basis]
        full = np.concatenate([cost, np.zeros(1, dtype=cost.dtype)])
        self.R = full - cB @ self.T

    def refactor(self):
        if not self.tol:
            return
        B = self.M[:, self.basis]
        try:
            self.T = np.linalg.solve(B, self.M)
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure("singular basis during refactorization") from exc
        self.T[:, -1] = np.maximum(self.T[:, -1], 0.0)
        self.set_objective(self.cost)

    def pivot(self, i, j):
        T = self.T
        piv = T[i, j]
        if self.tol and abs(piv) < _PIVOT_TOL:
            raise NumericalFailure(f"pivot element {piv!r} too small at ({i}, {j})")
        T[i] = T[i] / piv
        col = T[:, j].copy()
        col[i] = 0
        T -= np.outer(col, T[i]) if T.dtype != object else _outer(col, T[i])
        self.R = self.R - self.R[j] * T[i]
        self.basis[i] = j
        self.iterations += 1
        if self.tol and self.iterations % _REFACTOR_EVERY == 0:
            self.refactor()

    def run(self, allowed, max_iter):
        """Bland's rule iterations. Returns True on optimality, False if unbounded."""
        tol = self.tol
        while True:
            if self.iterations > max_iter:
                raise NumericalFailure(f"simplex exceeded {max_iter} iterations")
            rc = self.R[:-1]
            cand = np.flatnonzero((rc > tol) & allowed)
            if len(cand) == 0:
                return True
            j = int(cand[0])
            T = self.T
            col = T[:, j]
            rows = np.flatnonzero(col > (_RATIO_PIVOT_TOL if tol else 0))
            if len(rows) == 0:
                return False
            rhs = T[rows, -1]
            if tol:
                # Harris two-pass test: relax the bound, then take the largest pivot
                rhs = np.maximum(rhs, 0.0)
                bound = ((rhs + _HARRIS_DELTA) / col[rows]).min()
                ties = rows[rhs / col[rows] <= bound]
                piv = col[ties]
                ties = ties[piv >= piv.max() * (1 - 1e-12)]
            else:
                ratios = rhs / col[rows]
                ties = rows[ratios == ratios.min()]
            i = int(ties[np.argmin(self.basis[ties])])
            self.pivot(i, j)


def _outer(u, v):
    out = np.empty((len(u), len(v)), dtype=object)
    for k, uk in enumerate(u):
        out[k] = uk * v
    return out


def solve(problem: LpProblem, exact: bool = False, max_iter: int | None = None) -> LpSolution:
    """Solve ``problem``; Optimal results are certified by primal feasibility and the duality gap."""
    m, n = problem.A.shape
    if exact:
        conv = np.vectorize(Fraction, otypes=[object])
        A, b, c = (conv(np.asarray(v, dtype=object)) for v in (problem.A, problem.b, problem.c))
        zero, one, tol = Fraction(0), Fraction(1), 0
    else:
        A, b, c = (np.array(v, dtype=float) for v in (problem.A, problem.b, problem.c))
        zero, one, tol = 0.0, 1.0, _PIVOT_TOL
    senses = list(problem.senses)
    flip = np.array([bool(bi < 0) for bi in b])
    A[flip] = -A[flip]
    b[flip] = -b[flip]
    for i in np.flatnonzero(flip):
        senses[i] = {"<=": ">=", ">=": "<=", "=": "="}[senses[i]]

    n_ineq = sum(s != "=" for s in senses)
    n_art = sum(s != "<=" for s in senses)
    N = n + n_ineq + n_art
    dtype = object if exact else float
    T = np.full((m, N + 1), zero, dtype=dtype)
    T[:, :n] = A
    T[:, -1] = b
    basis = np.zeros(m, dtype=int)
    unit_col = np.zeros(m, dtype=int)
    artificial = np.zeros(N, dtype=bool)
    s_col, a_col = n, n + n_ineq
    for i, s in enumerate(senses):
        if s == "<=":
            T[i, s_col] = one
            basis[i] = unit_col[i] = s_col
            s_col += 1
        else:
            if s == ">=":
                T[i, s_col] = -one
                s_col += 1
            T[i, a_col] = one
            artificial[a_col] = True
            basis[i] = unit_col[i] = a_col
            a_col += 1

    if max_iter is None:
        max_iter = 50 * (m + N) + 1000
    tab = _Tableau(T, basis, tol)
    feas_tol = TAU_LP if not exact else 0

    if n_art:
        cost1 = np.full(N, zero, dtype=dtype)
        cost1[artificial] = -one
        tab.set_objective(cost1)
        tab.run(np.ones(N, dtype=bool), max_iter)
        if -tab.R[-1] < -feas_tol:
            return LpSolution(Status.INFEASIBLE, iterations=tab.iterations)
        # drive zero-level artificials out of the basis where possible
        for i in range(m):
            if artificial[tab.basis[i]]:
                row = tab.T[i, :N]
                cand = np.flatnonzero((np.abs(row) > tol) & ~artificial) if tol else np.flatnonzero(
                    (row != 0) & ~artificial
                )
                if len(cand):
                    tab.pivot(i, int(cand[0]))

    cost2 = np.full(N, zero, dtype=dtype)
    cost2[:n] = c
    tab.set_objective(cost2)
    if not tab.run(~artificial, max_iter):
        return LpSolution(Status.UNBOUNDED, iterations=tab.iterations)

    tab.refactor()
    xfull = np.full(N, zero, dtype=dtype)
    xfull[tab.basis] = tab.T[:, -1]
    x = xfull[:n]
    value = -tab.R[-1]
    y_std = -tab.R[unit_col]
    dual = np.where(flip, -y_std, y_std)
    dual_value = b @ y_std
    if not exact:
        x = np.where(np.abs(x) < TAU_LP, 0.0, x)
        value = float(value)
        dual_value = float(dual_value)
        dual = dual.astype(float)
    sol = LpSolution(Status.OPTIMAL, value, x, dual, dual_value, iterations=tab.iterations)
    _certify(problem, sol, exact)
    return sol


def _certify(problem: LpProblem, sol: LpSolution, exact: bool) -> None:
    A = problem.A.astype(float)
    b = problem.b.astype(float)
    x = sol.x.astype(float)
    y = sol.dual.astype(float)
    lhs = A @ x
    viol = [max(0.0, -x.min()) if len(x) else 0.0]
    for i, s in enumerate(problem.senses):
        if s == "<=":
            viol.append(lhs[i] - b[i])
        elif s == ">=":
            viol.append(b[i] - lhs[i])
        else:
            viol.append(abs(lhs[i] - b[i]))
    sol.max_violation = max(0.0, max(viol))
    # complementary slackness: y_i * (b_i - A_i x) and x_j * (reduced cost_j)
    rc = problem.c.astype(float) - A.T @ y
    sol.slackness_residual = float(max(np.max(np.abs(y * (b - lhs)), initial=0.0), np.max(np.abs(x * rc), initial=0.0)))
    if exact:
        return
    scale = 1.0 + float(np.max(np.abs(b), initial=0.0))
    if sol.max_violation > TAU_LP * scale:
        raise NumericalFailure(f"solution violates constraints by {sol.max_violation:.3g}")
    if sol.duality_gap > DUALITY_GAP_TOL * scale:
        raise NumericalFailure(f"duality gap {sol.duality_gap:.3g} exceeds tolerance")


# ---------------------------------------------------------------------------
# polytope membership

_DET_MATRIX = np.stack([bx.table.ravel() for bx in all_local_det_boxes()], axis=1)
_DET_MATRIX.setflags(write=False)


def generator_matrix(generators: Sequence[Box] | np.ndarray) -> np.ndarray:
    """16 x K matrix whose columns are the flattened generator tables."""
    if isinstance(generators, np.ndarray):
        G = generators
        if G.ndim != 2 or G.shape[0] != 16:
            raise ValidationError(f"generator matrix must be 16 x K, got {G.shape}")
        return G
    if len(generators) == 0:
        raise ValidationError("need at least one generator")
    return np.stack([g.table.ravel() for g in generators], axis=1)


def conic_weight(box: Box, generators: Sequence[Box] | np.ndarray, exact: bool = False):
    """Largest total weight ``sum(q)`` with ``q >= 0``, ``sum(q) <= 1`` and ``G q <= p`` entrywise.

    Returns ``(weight, q)``. The residual ``p - G q`` is a nonnegative,
    nonsignaling table of mass ``1 - weight``.
    """
    G = generator_matrix(generators)
    K = G.shape[1]
    p = box.table.ravel()
    if exact:
        conv = np.vectorize(Fraction, otypes=[object])
        A = conv(np.vstack([G, np.ones((1, K))]).astype(object))
        rhs = conv(np.append(p, 1.0).astype(object))
        c = np.array([Fraction(1)] * K, dtype=object)
    else:
        A = np.vstack([G, np.ones((1, K))])
        rhs = np.append(p, 1.0)
        c = np.ones(K)
    sol = solve(LpProblem(c, A, ("<=",) * 17, rhs), exact=exact)
    if sol.status is not Status.OPTIMAL:
        # the origin is always feasible and the objective is bounded by 1
        raise NumericalFailure(f"membership LP returned {sol.status.value}")
    q = sol.x
    weight = sol.value
    if not exact:
        weight = min(1.0, max(0.0, weight))
    return weight, q


def local_weight(box: Box, exact: bool = False):
    """Largest local-deterministic weight; coefficients follow :func:`all_local_det_boxes` order."""
    w, q = conic_weight(box, _DET_MATRIX, exact=exact)
    if exact:
        return float(w), np.array([float(v) for v in q])
    return w, q


def nonlocal_cost(box: Box, exact: bool = False) -> float:
    """1 minus the local weight; values within ``TAU_LP`` of zero are reported as 0."""
    w, _ = local_weight(box, exact=exact)
    cost = max(0.0, 1.0 - w)
    return 0.0 if cost <= TAU_LP else float(cost)
