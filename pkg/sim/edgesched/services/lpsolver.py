from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ..core.config import Settings, settings
from ..core.errors import MalformedProgramError, SolverError

logger = logging.getLogger(__name__)


class LpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(slots=True)
class LinearProgram:
    """min c.x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  x >= lower_bounds."""

    objective: np.ndarray
    ineq_rows: list[tuple[np.ndarray, float]] = field(default_factory=list)
    eq_rows: list[tuple[np.ndarray, float]] = field(default_factory=list)
    lower_bounds: np.ndarray | None = None
    names: list[str] | None = None

    @classmethod
    def minimize(
        cls, objective: Sequence[float], names: Sequence[str] | None = None
    ) -> LinearProgram:
        return cls(
            objective=np.asarray(objective, dtype=float),
            names=list(names) if names is not None else None,
        )

    @property
    def num_variables(self) -> int:
        return int(self.objective.size)

    @property
    def bounds(self) -> np.ndarray:
        if self.lower_bounds is None:
            return np.zeros(self.num_variables)
        return np.asarray(self.lower_bounds, dtype=float)

    def add_le(self, coeffs: Sequence[float], rhs: float) -> None:
        self.ineq_rows.append((np.asarray(coeffs, dtype=float), float(rhs)))

    def add_ge(self, coeffs: Sequence[float], rhs: float) -> None:
        self.add_le(-np.asarray(coeffs, dtype=float), -float(rhs))

    def add_eq(self, coeffs: Sequence[float], rhs: float) -> None:
        self.eq_rows.append((np.asarray(coeffs, dtype=float), float(rhs)))

    def set_lower_bound(self, index: int, value: float) -> None:
        bounds = self.bounds.copy()
        bounds[index] = value
        self.lower_bounds = bounds

    def matrices(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        n = self.num_variables
        a_ub = np.array([row for row, _ in self.ineq_rows], dtype=float).reshape(-1, n)
        b_ub = np.array([rhs for _, rhs in self.ineq_rows], dtype=float)
        a_eq = np.array([row for row, _ in self.eq_rows], dtype=float).reshape(-1, n)
        b_eq = np.array([rhs for _, rhs in self.eq_rows], dtype=float)
        return a_ub, b_ub, a_eq, b_eq

    def variable_name(self, index: int) -> str:
        if self.names is not None:
            return self.names[index]
        return f"x{index}"


@dataclass(slots=True)
class LpSolution:
    values: np.ndarray
    objective_value: float
    status: LpStatus
    iterations: int = 0

    @property
    def is_optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


def _check_well_formed(lp: LinearProgram) -> None:
    if lp.objective.ndim != 1 or lp.objective.size == 0:
        raise MalformedProgramError("objective must be a non-empty vector")
    n = lp.num_variables
    if not np.all(np.isfinite(lp.objective)):
        raise MalformedProgramError("objective has non-finite coefficients")
    for kind, rows in (("inequality", lp.ineq_rows), ("equality", lp.eq_rows)):
        for index, (row, rhs) in enumerate(rows):
            if row.shape != (n,):
                raise MalformedProgramError(
                    f"{kind} row {index} has {row.size} coefficients, expected {n}"
                )
            if not (np.all(np.isfinite(row)) and np.isfinite(rhs)):
                raise MalformedProgramError(f"{kind} row {index} is not finite")
    bounds = lp.bounds
    if bounds.shape != (n,) or not np.all(np.isfinite(bounds)):
        raise MalformedProgramError("lower bounds must be finite, one per variable")
    if lp.names is not None and len(lp.names) != n:
        raise MalformedProgramError("one name per variable is required")


def _pivot(tableau: np.ndarray, row: int, col: int) -> None:
    tableau[row] /= tableau[row, col]
    factors = tableau[:, col].copy()
    factors[row] = 0.0
    tableau -= np.outer(factors, tableau[row])


def _iterate(
    tableau: np.ndarray,
    basis: list[int],
    columns: int,
    tol: float,
    max_iterations: int,
) -> tuple[LpStatus, int]:
    """Primal simplex with Bland's rule; the last row holds reduced costs."""
    for iteration in range(max_iterations):
        reduced = tableau[-1, :columns]
        candidates = np.flatnonzero(reduced < -tol)
        if candidates.size == 0:
            return LpStatus.OPTIMAL, iteration
        entering = int(candidates[0])
        column = tableau[:-1, entering]
        rows = np.flatnonzero(column > tol)
        if rows.size == 0:
            return LpStatus.UNBOUNDED, iteration
        ratios = np.maximum(tableau[rows, -1], 0.0) / column[rows]
        best = ratios.min()
        ties = rows[ratios <= best + tol * max(1.0, abs(best))]
        leaving = int(min(ties, key=lambda r: basis[r]))
        _pivot(tableau, leaving, entering)
        basis[leaving] = entering
    raise SolverError(
        f"simplex did not terminate within {max_iterations} iterations",
        iterations=max_iterations,
    )


def _basic_point(
    tableau: np.ndarray, basis: list[int], columns: int, n: int
) -> np.ndarray:
    shifted = np.zeros(columns)
    for row, var in enumerate(basis):
        shifted[var] = max(tableau[row, -1], 0.0)
    return shifted[:n]


def solve(lp: LinearProgram, *, app_settings: Settings | None = None) -> LpSolution:
    """Two-phase dense primal simplex.

    Variables are shifted by their lower bounds, rows are sign-normalised so
    every right-hand side is non-negative, and artificials are added only
    where a slack cannot start in the basis.
    """
    _check_well_formed(lp)
    cfg = app_settings or settings
    tol = cfg.lp_pivot_tolerance
    max_iterations = cfg.lp_max_iterations

    c = lp.objective.astype(float)
    lower = lp.bounds
    n = c.size
    a_ub, b_ub, a_eq, b_eq = lp.matrices()
    b_ub = b_ub - a_ub @ lower
    b_eq = b_eq - a_eq @ lower
    m_ub, m_eq = b_ub.size, b_eq.size
    m = m_ub + m_eq

    if cfg.lp_debug_dump:
        logger.debug("solving LP\n%s", render_program(lp))

    if m == 0:
        if np.any(c < -tol):
            return LpSolution(lower.copy(), float("-inf"), LpStatus.UNBOUNDED)
        return LpSolution(lower.copy(), float(c @ lower), LpStatus.OPTIMAL)

    structural = n + m_ub
    a = np.zeros((m, structural))
    a[:m_ub, :n] = a_ub
    a[:m_ub, n:] = np.eye(m_ub)
    a[m_ub:, :n] = a_eq
    b = np.concatenate([b_ub, b_eq])
    flipped = b < 0
    a[flipped] *= -1.0
    b[flipped] *= -1.0

    artificial_rows = [i for i in range(m) if i >= m_ub or flipped[i]]
    columns = structural + len(artificial_rows)
    tableau = np.zeros((m + 1, columns + 1))
    tableau[:m, :structural] = a
    tableau[:m, -1] = b
    basis = [n + i if i < m_ub else -1 for i in range(m)]
    for offset, row in enumerate(artificial_rows):
        tableau[row, structural + offset] = 1.0
        basis[row] = structural + offset

    iterations = 0
    if artificial_rows:
        tableau[-1, structural:columns] = 1.0
        for row in artificial_rows:
            tableau[-1] -= tableau[row]
        _, used = _iterate(tableau, basis, columns, tol, max_iterations)
        iterations += used
        infeasibility = -tableau[-1, -1]
        scale = max(1.0, float(np.abs(b).max()))
        if infeasibility > cfg.lp_feasibility_tolerance * scale:
            return LpSolution(
                np.full(n, np.nan), float("nan"), LpStatus.INFEASIBLE, iterations
            )

        row = 0
        while row < len(basis):
            if basis[row] >= structural:
                nonzero = np.flatnonzero(np.abs(tableau[row, :structural]) > tol)
                if nonzero.size:
                    _pivot(tableau, row, int(nonzero[0]))
                    basis[row] = int(nonzero[0])
                    row += 1
                else:
                    # redundant constraint
                    tableau = np.delete(tableau, row, axis=0)
                    del basis[row]
            else:
                row += 1
        tableau = np.delete(tableau, np.s_[structural:columns], axis=1)
        columns = structural

    cost = np.zeros(columns)
    cost[:n] = c
    tableau[-1] = 0.0
    tableau[-1, :columns] = cost
    for row, var in enumerate(basis):
        if cost[var] != 0.0:
            tableau[-1] -= cost[var] * tableau[row]

    status, used = _iterate(tableau, basis, columns, tol, max_iterations)
    iterations += used
    values = _basic_point(tableau, basis, columns, n) + lower
    if status is LpStatus.UNBOUNDED:
        # values is the feasible vertex the unbounded ray leaves from
        return LpSolution(values, float("-inf"), status, iterations)
    return LpSolution(values, float(c @ values), LpStatus.OPTIMAL, iterations)


def check_feasible(
    lp: LinearProgram, point: Sequence[float], tol: float = 1e-7
) -> bool:
    x = np.asarray(point, dtype=float)
    if x.shape != (lp.num_variables,):
        return False
    if np.any(x < lp.bounds - tol):
        return False
    a_ub, b_ub, a_eq, b_eq = lp.matrices()
    if b_ub.size and np.any(a_ub @ x > b_ub + tol):
        return False
    if b_eq.size and np.any(np.abs(a_eq @ x - b_eq) > tol):
        return False
    return True


def _format_terms(lp: LinearProgram, row: np.ndarray) -> str:
    terms = [
        f"{value:+.6g} {lp.variable_name(index)}"
        for index, value in enumerate(row)
        if value != 0.0
    ]
    return " ".join(terms) if terms else "0"


def render_program(lp: LinearProgram) -> str:
    """Plain-text dump for triage; one constraint per line."""
    lines = [f"min {_format_terms(lp, lp.objective)}", "subject to"]
    for index, (row, rhs) in enumerate(lp.ineq_rows):
        lines.append(f"  u{index}: {_format_terms(lp, row)} <= {rhs:.6g}")
    for index, (row, rhs) in enumerate(lp.eq_rows):
        lines.append(f"  e{index}: {_format_terms(lp, row)} = {rhs:.6g}")
    lines.append("bounds")
    for index, bound in enumerate(lp.bounds):
        lines.append(f"  {lp.variable_name(index)} >= {bound:.6g}")
    return "\n".join(lines)
