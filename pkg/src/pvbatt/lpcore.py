"""Sparse bounded-variable linear programming.

The default method is a revised primal simplex that keeps nonbasic variables
at either of their bounds, factorizes the basis with a sparse LU
(``scipy.sparse.linalg.splu``) and applies product-form eta updates between
refactorizations. Phase 1 minimizes the sum of bound infeasibilities of the
basic variables starting from a triangular crash basis, so no artificial
columns are needed.

Pricing is Dantzig (largest scaled reduced cost). After a configurable number
of consecutive degenerate pivots the solver falls back to Bland's rule until
the objective moves again.

Very large models can be routed to HiGHS (``method="highs"``); ``"auto"``
does so above ``HIGHS_THRESHOLD`` variables.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

__all__ = [
    "LE",
    "EQ",
    "GE",
    "LinearProgram",
    "LpSolution",
    "LpStatus",
    "Tolerances",
    "LpError",
    "CyclingError",
    "solve",
    "dump_lp",
    "load_lp",
    "HIGHS_THRESHOLD",
]

LE, EQ, GE = -1, 0, 1
_SENSE_CODES = {"<=": LE, "<": LE, "=": EQ, "==": EQ, ">=": GE, ">": GE, LE: LE, EQ: EQ, GE: GE}
_SENSE_NAMES = {LE: "<=", EQ: "=", GE: ">="}

HIGHS_THRESHOLD = 20_000


class LpError(Exception):
    """Raised for malformed linear programs and solver breakdowns."""


class CyclingError(LpError):
    """The iteration guard was exceeded."""

    def __init__(self, iterations):
        super().__init__(f"simplex iteration limit exceeded after {iterations} iterations")
        self.iterations = iterations


class LpStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class Tolerances:
    feasibility: float = 1e-7
    optimality: float = 1e-9
    pivot: float = 1e-9
    bland_after: int = 50
    refactor_every: int = 64
    max_iterations: int | None = None


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """``min c @ x`` subject to ``A x (<=, =, >=) b`` and ``lower <= x <= upper``.

    ``A`` is given as sparse triplets. Duplicate triplets are summed. Upper
    bounds may be ``inf``; lower bounds must be finite.
    """

    c: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    senses: np.ndarray
    b: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    A: sp.csc_matrix = field(init=False, repr=False)

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).ravel()
        rows = np.asarray(self.rows, dtype=np.int64).ravel()
        cols = np.asarray(self.cols, dtype=np.int64).ravel()
        vals = np.asarray(self.vals, dtype=float).ravel()
        b = np.asarray(self.b, dtype=float).ravel()
        senses = np.array([_sense_code(s) for s in np.asarray(self.senses, dtype=object).ravel()],
                          dtype=np.int8)
        n, m = c.size, b.size
        lower = np.broadcast_to(np.asarray(self.lower, dtype=float), (n,)).copy()
        upper = np.broadcast_to(np.asarray(self.upper, dtype=float), (n,)).copy()

        if not (rows.size == cols.size == vals.size):
            raise LpError("triplet arrays must have equal length")
        if senses.size != m:
            raise LpError(f"{senses.size} row senses given for {m} right-hand sides")
        if rows.size and (rows.min() < 0 or rows.max() >= m):
            raise LpError(f"row index out of range for {m} rows")
        if cols.size and (cols.min() < 0 or cols.max() >= n):
            raise LpError(f"column index out of range for {n} columns")
        for name, arr in (("c", c), ("A", vals), ("b", b)):
            if not np.all(np.isfinite(arr)):
                raise LpError(f"non-finite coefficient in {name}")
        if np.any(~np.isfinite(lower)):
            raise LpError("lower bounds must be finite")
        if np.any(np.isnan(upper)):
            raise LpError("NaN upper bound")
        bad = np.flatnonzero(lower > upper)
        if bad.size:
            raise LpError(f"lower bound exceeds upper bound for variable {int(bad[0])}")

        A = sp.csc_matrix((vals, (rows, cols)), shape=(m, n))
        A.sum_duplicates()
        for name, value in (("c", c), ("rows", rows), ("cols", cols), ("vals", vals),
                            ("senses", senses), ("b", b), ("lower", lower),
                            ("upper", upper), ("A", A)):
            if isinstance(value, np.ndarray):
                value.setflags(write=False)
            object.__setattr__(self, name, value)

    @classmethod
    def from_dense(cls, c, A, senses, b, lower=0.0, upper=np.inf):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        r, k = np.nonzero(A)
        return cls(c=c, rows=r, cols=k, vals=A[r, k], senses=senses, b=b,
                   lower=lower, upper=upper)

    @property
    def n_vars(self):
        return self.c.size

    @property
    def n_rows(self):
        return self.b.size

    def residuals(self, x):
        """Signed violation per row (positive means violated)."""
        ax = self.A @ x
        viol = np.zeros(self.n_rows)
        le, eq, ge = self.senses == LE, self.senses == EQ, self.senses == GE
        viol[le] = ax[le] - self.b[le]
        viol[ge] = self.b[ge] - ax[ge]
        viol[eq] = np.abs(ax[eq] - self.b[eq])
        return viol


@dataclass(frozen=True, eq=False)
class LpSolution:
    status: LpStatus
    objective_value: float
    x: np.ndarray | None
    duals: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    iterations: int = 0
    method: str = "simplex"

    @property
    def optimal(self):
        return self.status is LpStatus.OPTIMAL


def _sense_code(s):
    try:
        return _SENSE_CODES[s]
    except (KeyError, TypeError):
        try:
            return _SENSE_CODES[int(s)]
        except (KeyError, ValueError, TypeError):
            raise LpError(f"unknown row sense {s!r}") from None


def solve(lp: LinearProgram, tolerances: Tolerances | None = None, method: str = "auto") -> LpSolution:
    """Solve ``lp``; ``method`` is ``"simplex"``, ``"highs"`` or ``"auto"``."""
    tol = tolerances or Tolerances()
    if method == "auto":
        method = "highs" if lp.n_vars > HIGHS_THRESHOLD else "simplex"
    if method == "simplex":
        return _Simplex(lp, tol).run()
    if method == "highs":
        return _solve_highs(lp, tol)
    raise ValueError(f"unknown LP method {method!r}")


# ---------------------------------------------------------------------------
# scaling


def _pow2(x):
    return np.exp2(np.round(np.log2(x)))


def _equilibrate(A):
    """Power-of-two row then column scale factors (max |a| -> 1)."""
    m, n = A.shape
    absA = abs(A).tocsr()
    rmax = absA.max(axis=1).toarray().ravel()
    rscale = np.where(rmax > 0, _pow2(1.0 / np.where(rmax > 0, rmax, 1.0)), 1.0)
    absA = sp.diags(rscale) @ absA
    cmax = absA.tocsc().max(axis=0).toarray().ravel()
    cscale = np.where(cmax > 0, _pow2(1.0 / np.where(cmax > 0, cmax, 1.0)), 1.0)
    return rscale, cscale


# ---------------------------------------------------------------------------
# revised simplex

_BASIC, _AT_LOWER, _AT_UPPER = 0, 1, 2


class _Simplex:
    def __init__(self, lp: LinearProgram, tol: Tolerances):
        self.lp = lp
        self.tol = tol
        m, n = lp.n_rows, lp.n_vars
        self.m, self.n = m, n

        rs, cs = _equilibrate(lp.A)
        self.rscale, self.cscale = rs, cs
        A = (sp.diags(rs) @ lp.A @ sp.diags(cs)).tocsc()
        c = lp.c * cs
        cmax = float(np.abs(c).max()) if n else 0.0
        self.cscale_obj = cmax if cmax > 0 else 1.0
        self.c_full = np.concatenate([c / self.cscale_obj, np.zeros(m)])
        self.b = lp.b * rs

        with np.errstate(invalid="ignore"):
            lo = lp.lower / cs
            up = np.where(np.isinf(lp.upper), np.inf, lp.upper / cs)
        slo = np.where(lp.senses == GE, -np.inf, 0.0)
        sup = np.where(lp.senses == LE, np.inf, 0.0)
        self.lo = np.concatenate([lo, slo])
        self.up = np.concatenate([up, sup])
        self.K = sp.hstack([A, sp.identity(m, format="csc")], format="csc")
        self.KT = self.K.T.tocsr()
        self.N = n + m
        self.iterations = 0

    # -- basis handling ---------------------------------------------------

    def _crash(self):
        """Triangular crash basis preferring wide-bounded structurals."""
        m, n = self.m, self.n
        A = self.K[:, :n]
        colnnz = np.diff(A.indptr)
        width = self.up[:n] - self.lo[:n]
        order = np.lexsort((np.arange(n), -np.minimum(width, 1e30), colnnz))
        row_free = np.ones(m, dtype=bool)
        # '=' rows have a fixed slack: they need a structural most
        need = np.asarray(self.lp.senses == EQ)
        basis = -np.ones(m, dtype=np.int64)
        changed = True
        used = np.zeros(n, dtype=bool)
        while changed:
            changed = False
            for j in order:
                if used[j] or width[j] <= 0:
                    continue
                r = A.indices[A.indptr[j]:A.indptr[j + 1]]
                v = A.data[A.indptr[j]:A.indptr[j + 1]]
                act = row_free[r]
                if act.sum() != 1:
                    continue
                i = r[act][0]
                if not need[i] or abs(v[act][0]) < 1e-3:
                    continue
                basis[i] = j
                row_free[i] = False
                used[j] = True
                changed = True
        slack = np.flatnonzero(basis < 0)
        basis[slack] = n + slack
        return basis

    def _factor(self):
        B = self.K[:, self.basis]
        try:
            self.lu = splu(B.tocsc(), permc_spec="COLAMD", options={"SymmetricMode": False})
        except RuntimeError as exc:
            raise LpError(f"singular basis at iteration {self.iterations}: {exc}") from None
        self.etas = []

    def _ftran(self, v):
        x = self.lu.solve(v)
        for r, col in self.etas:
            xr = x[r] / col[r]
            x -= xr * col
            x[r] = xr
        return x

    def _btran(self, v):
        w = v.copy()
        for r, col in reversed(self.etas):
            wr = w[r]
            w[r] = 0.0
            w[r] = (wr - w @ col) / col[r]
        return self.lu.solve(w, trans="T")

    def _recompute_xb(self):
        xN = self.x.copy()
        xN[self.basis] = 0.0
        rhs = self.b - self.K @ xN
        self.x[self.basis] = self._ftran(rhs)

    # -- main loop --------------------------------------------------------

    def run(self):
        lp = self.lp
        if self.m == 0:
            return self._trivial()
        self.basis = self._crash()
        self.status = np.full(self.N, _AT_LOWER, dtype=np.int8)
        self.status[self.basis] = _BASIC
        x = np.where(np.isfinite(self.lo), self.lo, self.up)
        x = np.where(np.isfinite(x), x, 0.0)
        upper_nb = ~np.isfinite(self.lo)
        self.status[upper_nb & (self.status != _BASIC)] = _AT_UPPER
        self.x = x
        self._factor()
        self._recompute_xb()

        tol = self.tol
        max_iter = tol.max_iterations or (50 * (self.N + self.m) + 10_000)
        phase = 1
        degenerate = 0
        bland = False
        since_factor = 0
        last_obj = math.inf
        while True:
            if self.iterations >= max_iter:
                raise CyclingError(self.iterations)
            xb = self.x[self.basis]
            lob, upb = self.lo[self.basis], self.up[self.basis]
            below = xb < lob - tol.feasibility
            above = xb > upb + tol.feasibility
            if phase == 1 and not (below.any() or above.any()):
                phase = 2
                degenerate, bland, last_obj = 0, False, math.inf
            if phase == 1:
                cb = np.where(below, -1.0, np.where(above, 1.0, 0.0))
                cost = None
                obj = float(np.sum(lob[below] - xb[below]) + np.sum(xb[above] - upb[above]))
            else:
                cb = self.c_full[self.basis]
                cost = self.c_full
                obj = float(self.c_full @ self.x)

            y = self._btran(cb)
            d = -(self.KT @ y) if cost is None else cost - self.KT @ y
            d[self.basis] = 0.0
            optol = tol.optimality if phase == 2 else tol.optimality * 1e-1
            nb_lo = (self.status == _AT_LOWER) & (self.up > self.lo)
            nb_up = (self.status == _AT_UPPER) & (self.up > self.lo)
            elig = (nb_lo & (d < -optol)) | (nb_up & (d > optol))
            cand = np.flatnonzero(elig)
            if cand.size == 0:
                if phase == 1:
                    return self._result(LpStatus.INFEASIBLE)
                self.y, self.d = y, d
                return self._finish()

            if obj < last_obj - 1e-12 * max(1.0, abs(last_obj)):
                degenerate = 0
                bland = False
            last_obj = min(obj, last_obj)
            if bland:
                q = int(cand[0])
            else:
                q = int(cand[np.argmax(np.abs(d[cand]))])
            direction = 1.0 if d[q] < 0 else -1.0

            col = self.K[:, q].toarray().ravel()
            alpha = self._ftran(col)
            delta = -direction * alpha
            theta, r, bound_val = self._ratio(delta, phase, bland)
            span = self.up[q] - self.lo[q]
            if theta is None and not np.isfinite(span):
                if phase == 1:
                    raise LpError("unbounded ray in phase 1")
                return self._result(LpStatus.UNBOUNDED)
            self.iterations += 1
            if theta is None or (np.isfinite(span) and span <= theta):
                # bound flip
                step = span
                self.x[self.basis] += step * delta
                if self.status[q] == _AT_LOWER:
                    self.status[q] = _AT_UPPER
                    self.x[q] = self.up[q]
                else:
                    self.status[q] = _AT_LOWER
                    self.x[q] = self.lo[q]
                degenerate = 0
                continue

            if theta <= 1e-12:
                degenerate += 1
                if degenerate >= tol.bland_after:
                    bland = True
            else:
                degenerate = 0
            self.x[self.basis] += theta * delta
            self.x[q] += direction * theta
            leaving = int(self.basis[r])
            self.x[leaving] = bound_val
            self.status[leaving] = _AT_LOWER if bound_val == self.lo[leaving] else _AT_UPPER
            self.status[q] = _BASIC
            self.basis[r] = q
            since_factor += 1
            if since_factor >= tol.refactor_every:
                self._factor()
                self._recompute_xb()
                since_factor = 0
            else:
                self.etas.append((r, alpha))

    def _ratio(self, delta, phase, bland):
        """Two-pass (Harris) ratio test. Returns (theta, row, bound) or None."""
        tol = self.tol
        xb = self.x[self.basis]
        lob, upb = self.lo[self.basis], self.up[self.basis]
        if phase == 1:
            # infeasible basics may move toward feasibility and stop at the violated bound
            below = xb < lob - tol.feasibility
            above = xb > upb + tol.feasibility
            lob = np.where(below, -np.inf, np.where(above, upb, lob))
            upb = np.where(below, self.lo[self.basis], np.where(above, np.inf, upb))
        dec = delta < -tol.pivot
        inc = delta > tol.pivot
        ftol = tol.feasibility
        lim_relaxed = np.full(self.m, np.inf)
        with np.errstate(invalid="ignore", divide="ignore"):
            lim_relaxed[dec] = (xb[dec] - lob[dec] + ftol) / -delta[dec]
            lim_relaxed[inc] = (upb[inc] - xb[inc] + ftol) / delta[inc]
        lim_relaxed[~np.isfinite(lim_relaxed)] = np.inf
        theta_max = lim_relaxed.min() if self.m else np.inf
        if not np.isfinite(theta_max):
            return None, -1, 0.0
        lim = np.full(self.m, np.inf)
        with np.errstate(invalid="ignore", divide="ignore"):
            lim[dec] = (xb[dec] - lob[dec]) / -delta[dec]
            lim[inc] = (upb[inc] - xb[inc]) / delta[inc]
        lim = np.maximum(lim, 0.0)
        cand = np.flatnonzero((lim <= theta_max) & (dec | inc))
        if bland:
            tmin = lim[cand].min()
            ties = cand[lim[cand] <= tmin + 1e-12]
            r = int(ties[np.argmin(self.basis[ties])])
        else:
            r = int(cand[np.argmax(np.abs(delta[cand]))])
        theta = float(lim[r])
        bound = lob[r] if delta[r] < 0 else upb[r]
        return theta, r, float(bound)

    # -- results ----------------------------------------------------------

    def _trivial(self):
        lp = self.lp
        c = lp.c
        if np.any((c < 0) & np.isinf(lp.upper)):
            return LpSolution(LpStatus.UNBOUNDED, -math.inf, None, iterations=0)
        x = np.where(c < 0, lp.upper, lp.lower)
        return LpSolution(LpStatus.OPTIMAL, float(c @ x), x, np.zeros(0), c.copy(), 0)

    def _result(self, status):
        value = {LpStatus.INFEASIBLE: math.nan, LpStatus.UNBOUNDED: -math.inf}[status]
        return LpSolution(status, value, None, iterations=self.iterations)

    def _finish(self):
        self._factor()
        self._recompute_xb()
        lp = self.lp
        x = self.x[: self.n] * self.cscale
        # snap nonbasic structurals exactly onto their bounds
        at_lo = self.status[: self.n] == _AT_LOWER
        at_up = self.status[: self.n] == _AT_UPPER
        x[at_lo] = lp.lower[at_lo]
        x[at_up] = lp.upper[at_up]
        basic = self.status[: self.n] == _BASIC
        x[basic] = np.clip(x[basic], lp.lower[basic], lp.upper[basic])
        y = self.y * self.rscale * self.cscale_obj
        d = self.d[: self.n] / self.cscale * self.cscale_obj
        return LpSolution(LpStatus.OPTIMAL, float(lp.c @ x), x, y, d, self.iterations, "simplex")


# ---------------------------------------------------------------------------
# HiGHS backend


def _solve_highs(lp: LinearProgram, tol: Tolerances) -> LpSolution:
    from scipy.optimize import linprog

    A = lp.A.tocsr()
    le, eq, ge = lp.senses == LE, lp.senses == EQ, lp.senses == GE
    A_ub = sp.vstack([A[le], -A[ge]], format="csr")
    b_ub = np.concatenate([lp.b[le], -lp.b[ge]])
    kwargs = {}
    if A_ub.shape[0]:
        kwargs.update(A_ub=A_ub, b_ub=b_ub)
    if eq.any():
        kwargs.update(A_eq=A[eq], b_eq=lp.b[eq])
    upper = np.where(np.isinf(lp.upper), None, lp.upper)
    bounds = list(zip(lp.lower, upper))
    res = linprog(lp.c, bounds=bounds, method="highs",
                  options={"primal_feasibility_tolerance": tol.feasibility,
                           "dual_feasibility_tolerance": max(tol.optimality, 1e-10)},
                  **kwargs)
    if res.status == 2:
        return LpSolution(LpStatus.INFEASIBLE, math.nan, None, method="highs")
    if res.status == 3:
        return LpSolution(LpStatus.UNBOUNDED, -math.inf, None, method="highs")
    if res.status != 0:
        raise LpError(f"HiGHS failed: {res.message}")
    x = np.clip(res.x, lp.lower, lp.upper)
    y = np.zeros(lp.n_rows)
    if A_ub.shape[0]:
        marg = res.ineqlin.marginals
        y[le] = marg[: le.sum()]
        y[ge] = -marg[le.sum():]
    if eq.any():
        y[eq] = res.eqlin.marginals
    d = lp.c - lp.A.T @ y
    return LpSolution(LpStatus.OPTIMAL, float(lp.c @ x), x, y, d,
                      int(getattr(res, "nit", 0)), "highs")


# ---------------------------------------------------------------------------
# debug dump


def dump_lp(lp: LinearProgram, path):
    """Write ``lp`` as plain text, one record per line (debugging aid only)."""
    lines = [f"LP {lp.n_vars} {lp.n_rows}"]
    lines += [f"C {j} {v!r}" for j, v in enumerate(lp.c.tolist()) if v != 0.0]
    lines += [f"B {j} {lo!r} {up!r}"
              for j, (lo, up) in enumerate(zip(lp.lower.tolist(), lp.upper.tolist()))]
    lines += [f"R {i} {_SENSE_NAMES[s]} {v!r}"
              for i, (s, v) in enumerate(zip(lp.senses.tolist(), lp.b.tolist()))]
    coo = lp.A.tocoo()
    lines += [f"A {i} {j} {v!r}"
              for i, j, v in zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist())]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_lp(path) -> LinearProgram:
    it = iter(Path(path).read_text(encoding="utf-8").splitlines())
    head = next(it).split()
    n, m = int(head[1]), int(head[2])
    c = np.zeros(n)
    lower, upper = np.zeros(n), np.full(n, np.inf)
    senses, b = [EQ] * m, np.zeros(m)
    rows, cols, vals = [], [], []
    for line in it:
        tag, *rest = line.split()
        if tag == "C":
            c[int(rest[0])] = float(rest[1])
        elif tag == "B":
            j = int(rest[0])
            lower[j], upper[j] = float(rest[1]), float(rest[2])
        elif tag == "R":
            i = int(rest[0])
            senses[i] = _sense_code(rest[1])
            b[i] = float(rest[2])
        elif tag == "A":
            rows.append(int(rest[0]))
            cols.append(int(rest[1]))
            vals.append(float(rest[2]))
    return LinearProgram(c, rows, cols, vals, senses, b, lower, upper)
