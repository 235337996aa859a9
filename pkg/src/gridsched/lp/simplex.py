"""Bounded-variable revised primal simplex.

Every row ``i`` gets a logical column ``r_i = A_i @ x`` so the working system
is ``[A  -I] z = 0`` with the row senses turned into bounds on ``r``.
Nonbasic columns sit at one of their bounds (or at zero when free).  Phase 1
minimizes the summed bound violation of the basic variables, which lets the
solver start from any nonsingular basis; phase 2 minimizes ``c @ x``.

The basis inverse is kept as a sparse LU of a reference basis plus a product
of eta columns, rebuilt every ``refactor_interval`` pivots.
"""

from __future__ import annotations

import heapq
import logging
import warnings

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from gridsched.lp.program import (
    AT_LOWER,
    AT_UPPER,
    BASIC,
    FIXED,
    FREE_ZERO,
    Basis,
    LinearProgram,
    LpSolution,
    LpStatus,
    SolverError,
)

logger = logging.getLogger(__name__)

PIVOT_TOL = 1e-9
DENSE_LIMIT = 200
MAX_REPAIRS = 8


class SingularBasis(Exception):
    pass


class BasisFactor:
    """LU of a basis matrix followed by product-form eta updates."""

    def __init__(self, B: sp.csc_matrix):
        m = B.shape[0]
        self.m = m
        self.etas: list[tuple[int, np.ndarray, np.ndarray, float]] = []
        self._dense = m <= DENSE_LIMIT
        if m == 0:
            return
        if self._dense:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                lu, piv = sla.lu_factor(B.toarray(), check_finite=False)
            diag = np.abs(np.diag(lu))
        else:
            try:
                lu = splu(B, permc_spec="COLAMD")
            except RuntimeError as exc:
                raise SingularBasis(str(exc)) from exc
            piv = None
            diag = np.abs(lu.U.diagonal())
        if not np.all(np.isfinite(diag)) or diag.min() <= 1e-11 * max(1.0, diag.max()):
            raise SingularBasis("near-zero pivot in LU")
        self._lu = (lu, piv)

    def _solve(self, rhs: np.ndarray, trans: bool) -> np.ndarray:
        if self.m == 0:
            return rhs.copy()
        lu, piv = self._lu
        if self._dense:
            return sla.lu_solve((lu, piv), rhs, trans=1 if trans else 0, check_finite=False)
        return lu.solve(rhs, trans="T" if trans else "N")

    def ftran(self, a: np.ndarray) -> np.ndarray:
        x = self._solve(a, trans=False)
        for r, idx, vals, piv in self.etas:
            xr = x[r] / piv
            if xr != 0.0:
                x[idx] -= vals * xr
            x[r] = xr
        return x

    def btran(self, c: np.ndarray) -> np.ndarray:
        y = np.array(c, dtype=float)
        for r, idx, vals, piv in reversed(self.etas):
            y[r] = (y[r] - vals @ y[idx]) / piv
        return self._solve(y, trans=True)

    def update(self, r: int, w: np.ndarray) -> None:
        """Column ``r`` of the basis is replaced; ``w`` is the FTRAN'd entering column."""
        idx = np.flatnonzero(np.abs(w) > 1e-14)
        idx = idx[idx != r]
        self.etas.append((r, idx, w[idx].copy(), float(w[r])))


class _Simplex:
    def __init__(self, lp: LinearProgram, tol_feas: float, tol_opt: float,
                 refactor_interval: int, bland_after: int, max_iter: int | None):
        self.lp = lp
        self.n, self.m = lp.n, lp.m
        n, m = self.n, self.m
        self.tol_feas = tol_feas
        self.tol_opt = tol_opt
        self.refactor_interval = max(1, int(refactor_interval))
        self.bland_after = bland_after
        self.max_iter = max_iter if max_iter is not None else max(20000, 20 * (n + m))

        self.K = sp.hstack([lp.A, -sp.identity(m, format="csc")], format="csc")
        self.KT = self.K.T.tocsr()
        self.Kr = self.K.tocsr()
        rlo, rhi = lp.row_bounds()
        self.lo = np.concatenate([lp.lower, rlo])
        self.hi = np.concatenate([lp.upper, rhi])
        self.cost = np.concatenate([lp.c, np.zeros(m)])
        self.N = n + m

        self.state = np.zeros(self.N, dtype=np.int8)
        self.x = np.zeros(self.N)
        self.head = np.zeros(m, dtype=np.int64)
        self.factor: BasisFactor | None = None
        self.since_refactor = 0
        self.iterations = 0
        self.repairs = 0
        self.log: list[str] = []

    # -- basis bookkeeping -------------------------------------------------

    def _nonbasic_state(self, j: np.ndarray) -> np.ndarray:
        lo, hi = self.lo[j], self.hi[j]
        return np.where(lo == hi, FIXED,
                        np.where(np.isfinite(lo), AT_LOWER,
                                 np.where(np.isfinite(hi), AT_UPPER, FREE_ZERO))).astype(np.int8)

    def _place_nonbasic(self, j: np.ndarray) -> None:
        st = self.state[j]
        self.x[j] = np.where((st == AT_LOWER) | (st == FIXED), self.lo[j],
                             np.where(st == AT_UPPER, self.hi[j], 0.0))

    def _crash(self, allowed: np.ndarray | None = None) -> np.ndarray:
        """Lower-triangular crash: repeatedly pick a column that has a single
        nonzero among the rows not yet covered.  Uncovered rows fall back to
        their logical column, so the result is always nonsingular."""
        m, N = self.m, self.N
        K, Kr = self.K, self.Kr
        rng = self.hi - self.lo
        candidate = rng > 0
        if allowed is not None:
            candidate &= allowed
        cls = np.where(np.isinf(self.lo) & np.isinf(self.hi), 0,
                       np.where(np.isinf(self.lo) | np.isinf(self.hi), 1, 2))
        width = np.where(np.isfinite(rng), rng, 0.0)
        count = np.diff(K.indptr).astype(np.int64)
        covered = np.zeros(m, dtype=bool)
        chosen = np.zeros(N, dtype=bool)
        head = np.full(m, -1, dtype=np.int64)
        colmax = np.zeros(N)
        for j in range(N):
            s, e = K.indptr[j], K.indptr[j + 1]
            if e > s:
                colmax[j] = np.abs(K.data[s:e]).max()
        heap = [(int(cls[j]), -float(width[j]), int(j)) for j in np.flatnonzero(candidate & (count == 1))]
        heapq.heapify(heap)
        while heap:
            _, _, j = heapq.heappop(heap)
            if chosen[j] or count[j] != 1:
                continue
            s, e = K.indptr[j], K.indptr[j + 1]
            rows = K.indices[s:e]
            open_rows = ~covered[rows]
            if not open_rows.any():
                continue
            k = np.flatnonzero(open_rows)[0]
            r = rows[k]
            if abs(K.data[s + k]) < 0.01 * colmax[j]:
                continue
            chosen[j] = True
            covered[r] = True
            head[r] = j
            rs, re = Kr.indptr[r], Kr.indptr[r + 1]
            for c in Kr.indices[rs:re]:
                count[c] -= 1
                if count[c] == 1 and candidate[c] and not chosen[c]:
                    heapq.heappush(heap, (int(cls[c]), -float(width[c]), int(c)))
        rest = np.flatnonzero(head < 0)
        head[rest] = self.n + rest
        return head

    def _set_basis(self, head: np.ndarray) -> None:
        self.head = np.asarray(head, dtype=np.int64)
        basic = np.zeros(self.N, dtype=bool)
        basic[self.head] = True
        nb = np.flatnonzero(~basic)
        self.state[self.head] = BASIC
        self.state[nb] = self._nonbasic_state(nb)
        self._place_nonbasic(nb)

    def _load(self, basis: Basis) -> bool:
        st = np.asarray(basis.status)
        if st.shape != (self.N,) or int(np.count_nonzero(st == BASIC)) != self.m:
            return False
        self.head = np.flatnonzero(st == BASIC).astype(np.int64)
        self.state = st.astype(np.int8).copy()
        nb = np.flatnonzero(st != BASIC)
        # keep the hinted side where that bound exists, otherwise the default
        fallback = self._nonbasic_state(nb)
        want = self.state[nb]
        ok = ((want == AT_LOWER) & np.isfinite(self.lo[nb])) | \
             ((want == AT_UPPER) & np.isfinite(self.hi[nb])) | \
             ((want == FREE_ZERO) & np.isinf(self.lo[nb]) & np.isinf(self.hi[nb]))
        self.state[nb] = np.where(self.lo[nb] == self.hi[nb], FIXED, np.where(ok, want, fallback))
        self._place_nonbasic(nb)
        return True

    def _refactor(self) -> None:
        while True:
            B = self.K[:, self.head]
            try:
                self.factor = BasisFactor(sp.csc_matrix(B))
                break
            except SingularBasis as exc:
                self.repairs += 1
                self.log.append(f"iter {self.iterations}: singular basis ({exc}); repairing")
                if self.repairs > MAX_REPAIRS:
                    raise SolverError("basis stayed singular after repeated repair", self.log) from exc
                allowed = np.zeros(self.N, dtype=bool)
                allowed[self.head] = True
                old = self.head.copy()
                new = self._crash(allowed)
                dropped = np.setdiff1d(old, new)
                self.head = new
                self.state[new] = BASIC
                if dropped.size:
                    # move dropped columns to their nearest bound
                    v = self.x[dropped]
                    lo, hi = self.lo[dropped], self.hi[dropped]
                    st = np.where(lo == hi, FIXED,
                                  np.where(np.isfinite(lo) & (~np.isfinite(hi) | (v - lo <= hi - v)), AT_LOWER,
                                           np.where(np.isfinite(hi), AT_UPPER, FREE_ZERO)))
                    self.state[dropped] = st.astype(np.int8)
                    self._place_nonbasic(dropped)
        self.since_refactor = 0
        xn = self.x.copy()
        xn[self.head] = 0.0
        self.x[self.head] = self.factor.ftran(-(self.K @ xn))

    def _column(self, j: int) -> np.ndarray:
        a = np.zeros(self.m)
        s, e = self.K.indptr[j], self.K.indptr[j + 1]
        a[self.K.indices[s:e]] = self.K.data[s:e]
        return a

    # -- main loop ---------------------------------------------------------

    def run(self, hint: Basis | None = None) -> LpSolution:
        if hint is None or not self._load(hint):
            if hint is not None:
                warnings.warn("basis hint is incompatible with the LP; cold start", RuntimeWarning)
                self.log.append("incompatible basis hint ignored")
            self._set_basis(self._crash())
        self._refactor()

        tol, tol_opt = self.tol_feas, self.tol_opt
        degenerate = 0
        while True:
            if self.since_refactor >= self.refactor_interval:
                self._refactor()
            head = self.head
            xB = self.x[head]
            loB, hiB = self.lo[head], self.hi[head]
            below = xB < loB - tol
            above = xB > hiB + tol
            phase1 = bool(below.any() or above.any())
            if phase1:
                cB = above.astype(float) - below.astype(float)
                y = self.factor.btran(cB)
                d = -(self.KT @ y)
            else:
                y = self.factor.btran(self.cost[head])
                d = self.cost - self.KT @ y

            st = self.state
            up = ((st == AT_LOWER) | (st == FREE_ZERO)) & (d < -tol_opt)
            down = ((st == AT_UPPER) | (st == FREE_ZERO)) & (d > tol_opt)
            eligible = up | down
            if not eligible.any():
                if self.since_refactor > 0:
                    self._refactor()
                    continue
                return self._finish(phase1, y, below, above)

            if self.iterations >= self.max_iter:
                raise SolverError(f"iteration limit {self.max_iter} reached", self.log)
            bland = degenerate >= self.bland_after
            if bland:
                q = int(np.argmax(eligible))
            else:
                score = np.where(eligible, np.abs(d), 0.0)
                best = score.max()
                q = int(np.argmax(score >= best - tol_opt))
            direction = 1.0 if up[q] else -1.0

            w = self.factor.ftran(self._column(q))
            delta = -direction * w
            dec = delta < -PIVOT_TOL
            inc = delta > PIVOT_TOL
            if phase1:
                feas = ~(below | above)
                to_lo = (dec & feas & np.isfinite(loB)) | (below & inc)
                to_hi = (inc & feas & np.isfinite(hiB)) | (above & dec)
            else:
                to_lo = dec & np.isfinite(loB)
                to_hi = inc & np.isfinite(hiB)
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.full(self.m, np.inf)
                ratio[to_lo] = (xB[to_lo] - loB[to_lo]) / -delta[to_lo]
                ratio[to_hi] = (hiB[to_hi] - xB[to_hi]) / delta[to_hi]
            np.maximum(ratio, 0.0, out=ratio)
            theta = ratio.min() if self.m else np.inf
            span = self.hi[q] - self.lo[q]

            if np.isinf(theta) and np.isinf(span):
                if phase1:
                    self.log.append(f"iter {self.iterations}: unbounded phase-1 ray; refactoring")
                    if self.since_refactor == 0:
                        raise SolverError("phase-1 direction without a blocking variable", self.log)
                    self._refactor()
                    continue
                ray = np.zeros(self.N)
                ray[q] = direction
                ray[head] = delta
                return self._result(LpStatus.UNBOUNDED, y, ray=ray[: self.n])
            elif span <= theta:
                theta = span
                r = -1
            else:
                ties = np.flatnonzero(ratio <= theta + 1e-12 * (1.0 + theta))
                if bland:
                    r = int(ties[np.argmin(head[ties])])
                else:
                    r = int(ties[np.argmax(np.abs(delta[ties]))])

            if theta > 1e-12:
                degenerate = 0
            else:
                degenerate += 1
            self.iterations += 1
            self.x[q] += direction * theta
            if theta != 0.0:
                self.x[head] += theta * delta
            if r < 0:
                self.state[q] = AT_UPPER if direction > 0 else AT_LOWER
                self.x[q] = self.hi[q] if direction > 0 else self.lo[q]
            else:
                p = int(head[r])
                leave_lo = bool(to_lo[r])
                if self.lo[p] == self.hi[p]:
                    self.state[p] = FIXED
                    self.x[p] = self.lo[p]
                elif leave_lo:
                    self.state[p] = AT_LOWER
                    self.x[p] = self.lo[p]
                else:
                    self.state[p] = AT_UPPER
                    self.x[p] = self.hi[p]
                head[r] = q
                self.state[q] = BASIC
                self.factor.update(r, w)
                self.since_refactor += 1
            if self.iterations % 1000 == 0:
                msg = (f"iter {self.iterations}: phase {1 if phase1 else 2}, "
                       f"obj {self.cost[: self.n] @ self.x[: self.n]:.6g}")
                self.log.append(msg)
                logger.debug(msg)

    def _finish(self, phase1: bool, y, below, above) -> LpSolution:
        if phase1:
            xB = self.x[self.head]
            resid = float(np.sum(np.where(below, self.lo[self.head] - xB, 0.0))
                          + np.sum(np.where(above, xB - self.hi[self.head], 0.0)))
            rows = np.flatnonzero(np.abs(y) > 1e-9).tolist()
            return self._result(LpStatus.INFEASIBLE, y, rows=rows, resid=resid)
        return self._result(LpStatus.OPTIMAL, y)

    def _result(self, status, y, rows=(), resid=0.0, ray=None) -> LpSolution:
        x = self.x[: self.n].copy()
        return LpSolution(
            status=status,
            x=x,
            objective_value=float(self.lp.c @ x) if status == LpStatus.OPTIMAL else float("nan"),
            duals=np.asarray(y, dtype=float).copy(),
            iterations=self.iterations,
            basis=Basis(self.state.copy()),
            certificate_rows=list(rows),
            phase1_residual=resid,
            ray=ray,
            log=self.log,
        )


def solve(lp: LinearProgram, tol_feas: float = 1e-7, tol_opt: float = 1e-9, *,
          refactor_interval: int = 100, bland_after: int = 50, max_iter: int | None = None) -> LpSolution:
    """Solve ``lp`` from a crash basis.

    Raises SolverError when the basis cannot be refactored or the iteration
    limit is hit; infeasibility and unboundedness are reported via status.
    """
    return _Simplex(lp, tol_feas, tol_opt, refactor_interval, bland_after, max_iter).run()


def warm_start_solve(lp: LinearProgram, basis_hint: Basis | None, tol_feas: float = 1e-7,
                     tol_opt: float = 1e-9, **kwargs) -> LpSolution:
    """Like :func:`solve` but starting from ``basis_hint`` when it fits ``lp``.

    An incompatible hint triggers a RuntimeWarning and a cold start.
    """
    return _Simplex(lp, tol_feas, tol_opt, kwargs.get("refactor_interval", 100),
                    kwargs.get("bland_after", 50), kwargs.get("max_iter")).run(basis_hint)
