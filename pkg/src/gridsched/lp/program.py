from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.sparse as sp

from gridsched.model import GridschedError

SENSES = ("<=", "==", ">=")


class LpStatus(str, Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


class SolverError(GridschedError):
    """Numerical breakdown the solver could not recover from."""

    def __init__(self, message: str, log: list[str] | None = None):
        super().__init__(message)
        self.log = list(log or [])


@dataclass
class LinearProgram:
    """``min c @ x`` subject to ``A @ x (sense) rhs`` and ``lower <= x <= upper``.

    ``senses`` holds one of ``"<="``, ``"=="``, ``">="`` per row.  Bounds may
    be infinite; all coefficients must be finite.
    """

    c: np.ndarray
    A: sp.csc_matrix
    senses: np.ndarray
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    col_names: list[str] | None = None
    row_names: list[str] | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.size
        A = sp.csc_matrix(self.A, dtype=float)
        if A.shape[1] != n and A.shape[0] == 0:
            A = sp.csc_matrix((0, n))
        A.sum_duplicates()
        A.eliminate_zeros()
        self.A = A
        m = A.shape[0]
        self.senses = np.asarray(self.senses, dtype=object).ravel()
        self.rhs = np.asarray(self.rhs, dtype=float).ravel()
        self.lower = np.broadcast_to(np.asarray(self.lower, dtype=float), (n,)).copy()
        self.upper = np.broadcast_to(np.asarray(self.upper, dtype=float), (n,)).copy()
        if A.shape[1] != n:
            raise ValueError(f"A has {A.shape[1]} columns, c has {n}")
        if self.senses.size != m or self.rhs.size != m:
            raise ValueError("senses/rhs length must match the row count")
        bad = set(self.senses.tolist()) - set(SENSES)
        if bad:
            raise ValueError(f"unknown row senses {bad}")
        if not (np.all(np.isfinite(self.c)) and np.all(np.isfinite(A.data)) and np.all(np.isfinite(self.rhs))):
            raise ValueError("objective, matrix and rhs must be finite")
        if np.any(np.isnan(self.lower)) or np.any(np.isnan(self.upper)):
            raise ValueError("bounds must not be NaN")
        if np.any(self.lower > self.upper):
            raise ValueError("inconsistent bounds: lower > upper")
        if np.any(self.lower == np.inf) or np.any(self.upper == -np.inf):
            raise ValueError("lower bound +inf or upper bound -inf")
        if self.col_names is not None and len(self.col_names) != n:
            raise ValueError("col_names length mismatch")
        if self.row_names is not None and len(self.row_names) != m:
            raise ValueError("row_names length mismatch")

    @property
    def n(self) -> int:
        return self.c.size

    @property
    def m(self) -> int:
        return self.rhs.size

    def row_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Bounds on each row activity ``A @ x`` implied by the senses."""
        lo = np.where(self.senses == "<=", -np.inf, self.rhs)
        hi = np.where(self.senses == ">=", np.inf, self.rhs)
        return lo.astype(float), hi.astype(float)

    def col_name(self, j: int) -> str:
        return self.col_names[j] if self.col_names else f"x{j}"

    def row_name(self, i: int) -> str:
        return self.row_names[i] if self.row_names else f"r{i}"

    def scaled(self, factor: float) -> "LinearProgram":
        return LinearProgram(self.c * factor, self.A, self.senses, self.rhs, self.lower,
                             self.upper, self.col_names, self.row_names)

    @classmethod
    def from_dense(cls, c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, bounds=(0, np.inf)):
        """Build from a linprog-style description (used mostly by tests)."""
        c = np.asarray(c, dtype=float)
        n = c.size
        blocks, senses, rhs = [], [], []
        if A_ub is not None and len(A_ub):
            blocks.append(np.atleast_2d(A_ub))
            senses += ["<="] * len(b_ub)
            rhs += list(b_ub)
        if A_eq is not None and len(A_eq):
            blocks.append(np.atleast_2d(A_eq))
            senses += ["=="] * len(b_eq)
            rhs += list(b_eq)
        A = np.vstack(blocks) if blocks else np.zeros((0, n))
        b = np.asarray(bounds, dtype=float)
        if b.ndim == 1:
            b = np.tile(b, (n, 1))
        return cls(c, sp.csc_matrix(A), np.array(senses, dtype=object), np.array(rhs, dtype=float),
                   np.nan_to_num(b[:, 0], nan=-np.inf), np.nan_to_num(b[:, 1], nan=np.inf))


BASIC, AT_LOWER, AT_UPPER, FREE_ZERO, FIXED = 0, 1, 2, 3, 4


@dataclass
class Basis:
    """Simplex basis over structural columns followed by one logical per row.

    ``status`` uses BASIC / AT_LOWER / AT_UPPER / FREE_ZERO / FIXED codes.
    """

    status: np.ndarray

    def copy(self) -> "Basis":
        return Basis(self.status.copy())


@dataclass
class LpSolution:
    status: LpStatus
    x: np.ndarray
    objective_value: float
    duals: np.ndarray
    iterations: int
    basis: Basis | None = None
    # Infeasible: rows carrying nonzero phase-1 prices, and the summed violation
    certificate_rows: list[int] = field(default_factory=list)
    phase1_residual: float = 0.0
    # Unbounded: improving direction over the structural columns
    ray: np.ndarray | None = None
    log: list[str] = field(default_factory=list)

    @property
    def optimal(self) -> bool:
        return self.status == LpStatus.OPTIMAL
