"""Dense two-phase simplex with Bland's rule and certificate checks.

Problems are stated as ``max c @ x`` subject to rows ``A[k] @ x (<=|==|>=) b[k]``
and per-variable bounds ``lower <= x <= upper`` (infinite bounds allowed).

Dual sign convention (maximisation): the multiplier of a ``<=`` row is
non-negative, of a ``>=`` row non-positive, of an ``==`` row free.  With that
convention the dual objective is ``b @ y`` plus the best bound contribution
of the reduced costs ``c - A.T @ y``, and weak duality reads
``c @ x <= dual value``.  An infeasibility (Farkas) certificate is a ``y``
with the same sign pattern whose dual value for ``c = 0`` is negative.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

LE, EQ, GE = "<=", "==", ">="
_SENSES = (LE, EQ, GE)

PIVOT_TOL = 1e-9
COST_TOL = 1e-9
FEAS_TOL = 1e-8
GAP_TOL = 1e-7


class Status(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass
class LinearProgram:
    objective: np.ndarray
    matrix: np.ndarray
    senses: list[str]
    rhs: np.ndarray
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float).ravel()
        n = self.objective.size
        self.matrix = np.asarray(self.matrix, dtype=float).reshape(-1, n)
        self.rhs = np.asarray(self.rhs, dtype=float).ravel()
        self.senses = list(self.senses)
        if len(self.senses) != self.matrix.shape[0] or self.rhs.size != self.matrix.shape[0]:
            raise ValueError("row count mismatch between matrix, senses and rhs")
        bad = [s for s in self.senses if s not in _SENSES]
        if bad:
            raise ValueError(f"unknown row relation {bad[0]!r}")
        self.lower = np.full(n, -np.inf) if self.lower is None else np.asarray(self.lower, float).copy()
        self.upper = np.full(n, np.inf) if self.upper is None else np.asarray(self.upper, float).copy()
        if self.lower.shape != (n,) or self.upper.shape != (n,):
            raise ValueError("bound vectors must match the number of variables")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound")

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    @classmethod
    def build(cls, objective, rows, lower=None, upper=None) -> LinearProgram:
        """Build from ``rows``, an iterable of ``(coefficients, relation, bound)``."""
        objective = np.asarray(objective, float)
        rows = list(rows)
        matrix = np.array([r[0] for r in rows], float).reshape(len(rows), objective.size)
        return cls(objective, matrix, [r[1] for r in rows], [r[2] for r in rows], lower, upper)


@dataclass
class LpResult:
    status: Status
    x: np.ndarray | None = None
    value: float | None = None
    dual: np.ndarray | None = None
    farkas: np.ndarray | None = None
    iterations: int = 0
    primal_residual: float = np.nan
    dual_residual: float = np.nan
    gap: float = np.nan
    message: str = ""

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


@dataclass
class Feasibility:
    feasible: bool
    point: np.ndarray | None = None
    certificate: np.ndarray | None = None
    status: Status = Status.OPTIMAL


# --------------------------------------------------------------------------
# certificate checks (also used by the tests as an independent verifier)


def primal_residual(lp: LinearProgram, x: np.ndarray) -> float:
    """Largest violation of any row or bound by ``x``."""
    act = lp.matrix @ x - lp.rhs
    senses = np.array(lp.senses)
    viol = np.where(senses == LE, act, np.where(senses == GE, -act, np.abs(act)))
    worst = max(viol.max(initial=0.0), 0.0)
    worst = max(worst, np.max(lp.lower - x, initial=0.0), np.max(x - lp.upper, initial=0.0))
    return float(worst)


def dual_bound(lp: LinearProgram, y: np.ndarray, objective: np.ndarray | None = None) -> tuple[float, float]:
    """Dual objective value of ``y`` and its dual-feasibility residual.

    The reduced costs ``c - A.T @ y`` are absorbed by the finite bounds in the
    cheapest way; any part that no finite bound can absorb counts as residual.
    """
    c = lp.objective if objective is None else np.asarray(objective, float)
    y = np.asarray(y, float)
    senses = np.array(lp.senses)
    sign_res = np.concatenate(([0.0], y[senses == LE] * -1.0, y[senses == GE])).max()
    red = c - lp.matrix.T @ y
    value = float(lp.rhs @ y)
    res = max(sign_res, 0.0)
    noise = 1e-11 * max(1.0, float(np.abs(c).max(initial=0.0)))
    for j, r in enumerate(red):
        if abs(r) <= noise:
            # rounding-level reduced cost: charge it to the residual instead of
            # multiplying it by a possibly huge bound
            res = max(res, abs(r))
        elif r > 0:
            if np.isfinite(lp.upper[j]):
                value += r * lp.upper[j]
            else:
                res = max(res, r)
        elif r < 0:
            if np.isfinite(lp.lower[j]):
                value += r * lp.lower[j]
            else:
                res = max(res, -r)
    return value, float(res)


def farkas_valid(lp: LinearProgram, y: np.ndarray, tol: float = FEAS_TOL) -> bool:
    """True when ``y`` proves the rows and bounds of ``lp`` have no solution."""
    value, res = dual_bound(lp, y, np.zeros_like(lp.objective))
    scale = max(1.0, float(np.abs(y).max(initial=0.0)))
    return res <= tol * scale and value < -tol * scale


# --------------------------------------------------------------------------
# standard form


@dataclass
class _StandardForm:
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    const: float
    row_sign: np.ndarray  # +-1 flips applied to each standard row
    n_orig_rows: int
    n_struct: int
    init_col: np.ndarray  # column that starts basic in each row
    artificial: np.ndarray  # bool mask over columns
    # x = offset + M @ x_struct
    back: np.ndarray = field(default=None)
    offset: np.ndarray = field(default=None)


def _standardize(lp: LinearProgram) -> _StandardForm:
    m, n = lp.shape
    cols: list[np.ndarray] = []
    back_cols: list[tuple[int, float]] = []
    offset = np.zeros(n)
    extra_rows: list[tuple[int, float]] = []  # (struct col, bound) for x' <= u - l
    for j in range(n):
        lo, hi = lp.lower[j], lp.upper[j]
        if np.isfinite(lo):
            offset[j] = lo
            back_cols.append((j, 1.0))
            if np.isfinite(hi):
                extra_rows.append((len(back_cols) - 1, hi - lo))
        elif np.isfinite(hi):
            offset[j] = hi
            back_cols.append((j, -1.0))
        else:
            back_cols.append((j, 1.0))
            back_cols.append((j, -1.0))
    ns = len(back_cols)
    back = np.zeros((n, ns))
    for k, (j, s) in enumerate(back_cols):
        back[j, k] = s

    rows_A = np.vstack([lp.matrix @ back, np.zeros((len(extra_rows), ns))]) if extra_rows else lp.matrix @ back
    rows_b = lp.rhs - lp.matrix @ offset
    senses = list(lp.senses)
    for r, (k, ub) in enumerate(extra_rows):
        rows_A[m + r, k] = 1.0
    if extra_rows:
        rows_b = np.concatenate([rows_b, [ub for _, ub in extra_rows]])
        senses += [LE] * len(extra_rows)
    mt = rows_A.shape[0]

    n_slack = sum(1 for s in senses if s != EQ)
    A = np.zeros((mt, ns + n_slack))
    A[:, :ns] = rows_A
    slack_of = np.full(mt, -1)
    k = ns
    for r, s in enumerate(senses):
        if s == LE:
            A[r, k] = 1.0
        elif s == GE:
            A[r, k] = -1.0
        if s != EQ:
            slack_of[r] = k
            k += 1
    b = rows_b.copy()
    sign = np.where(b < 0, -1.0, 1.0)
    A *= sign[:, None]
    b *= sign

    need_art = [r for r in range(mt) if slack_of[r] < 0 or A[r, slack_of[r]] < 0]
    ncol = A.shape[1] + len(need_art)
    full = np.zeros((mt, ncol))
    full[:, : A.shape[1]] = A
    init_col = slack_of.copy()
    artificial = np.zeros(ncol, bool)
    for t, r in enumerate(need_art):
        col = A.shape[1] + t
        full[r, col] = 1.0
        init_col[r] = col
        artificial[col] = True

    c = np.zeros(ncol)
    c[:ns] = lp.objective @ back
    return _StandardForm(
        A=full, b=b, c=c, const=float(lp.objective @ offset), row_sign=sign, n_orig_rows=m,
        n_struct=ns, init_col=init_col, artificial=artificial, back=back, offset=offset,
    )


# --------------------------------------------------------------------------
# tableau


class _Tableau:
    def __init__(self, A: np.ndarray, b: np.ndarray, basis: np.ndarray):
        m, n = A.shape
        self.T = np.zeros((m + 1, n + 1))
        self.T[:m, :n] = A
        self.T[:m, n] = b
        self.basis = basis.copy()
        self.iterations = 0

    @property
    def m(self) -> int:
        return self.T.shape[0] - 1

    def set_objective(self, c: np.ndarray) -> None:
        # z_j = c_B B^-1 A_j - c_j ; rhs = current objective value
        cb = c[self.basis]
        self.T[-1, :-1] = cb @ self.T[:-1, :-1] - c
        self.T[-1, -1] = cb @ self.T[:-1, -1]

    def pivot(self, r: int, j: int) -> None:
        T = self.T
        T[r] /= T[r, j]
        col = T[:, j].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        self.basis[r] = j
        self.iterations += 1

    def run(self, allowed: np.ndarray, max_iter: int) -> Status | None:
        """Bland's-rule iterations; returns OPTIMAL, UNBOUNDED or None on cap."""
        T = self.T
        while True:
            z = T[-1, :-1]
            cand = np.flatnonzero(allowed & (z < -COST_TOL))
            if cand.size == 0:
                return Status.OPTIMAL
            if self.iterations >= max_iter:
                return None
            j = cand[0]
            col = T[:-1, j]
            pos = np.flatnonzero(col > PIVOT_TOL)
            if pos.size == 0:
                return Status.UNBOUNDED
            ratios = T[pos, -1] / col[pos]
            best = ratios.min()
            ties = pos[ratios <= best + 1e-12 * max(1.0, abs(best))]
            r = ties[np.argmin(self.basis[ties])]
            self.pivot(r, j)


def solve(lp: LinearProgram, max_iter: int | None = None) -> LpResult:
    """Solve ``lp``; the result carries primal, dual or Farkas certificates."""
    sf = _standardize(lp)
    m, ncol = sf.A.shape
    if max_iter is None:
        max_iter = 50 * (m + ncol)
    tab = _Tableau(sf.A, sf.b, sf.init_col)
    not_art = ~sf.artificial

    # phase one: maximise -sum(artificials)
    c1 = -sf.artificial.astype(float)
    if sf.artificial.any():
        tab.set_objective(c1)
        st = tab.run(np.ones(ncol, bool), max_iter)
        if st is None:
            return LpResult(Status.NUMERICAL_FAILURE, iterations=tab.iterations, message="iteration cap in phase one")
        infeas = -tab.T[-1, -1]
        if infeas > FEAS_TOL * max(1.0, float(np.abs(sf.b).max(initial=0.0))):
            y_std = tab.T[-1, sf.init_col] + c1[sf.init_col]
            y = _rows_back(sf, y_std)
            res = LpResult(Status.INFEASIBLE, farkas=y, iterations=tab.iterations)
            if not farkas_valid(lp, y):
                res.status = Status.NUMERICAL_FAILURE
                res.message = "phase one certificate failed verification"
            return res
        _drive_out_artificials(tab, sf)

    tab.set_objective(sf.c)
    st = tab.run(not_art, max_iter)
    if st is None:
        return LpResult(Status.NUMERICAL_FAILURE, iterations=tab.iterations, message="iteration cap in phase two")
    xs = np.zeros(ncol)
    xs[tab.basis] = tab.T[:-1, -1]
    x = sf.offset + sf.back @ xs[: sf.n_struct]
    if st is Status.UNBOUNDED:
        return LpResult(Status.UNBOUNDED, x=x, iterations=tab.iterations)

    y_std = tab.T[-1, sf.init_col] + sf.c[sf.init_col]
    y = _rows_back(sf, y_std)
    value = float(lp.objective @ x)
    pres = primal_residual(lp, x)
    dval, dres = dual_bound(lp, y)
    res = LpResult(
        Status.OPTIMAL, x=x, value=value, dual=y, iterations=tab.iterations,
        primal_residual=pres, dual_residual=dres, gap=abs(dval - value),
    )
    scale = max(1.0, float(np.abs(x).max(initial=0.0)), float(np.abs(y).max(initial=0.0)))
    if pres > FEAS_TOL * scale or dres > FEAS_TOL * scale or res.gap > GAP_TOL * scale:
        res.status = Status.NUMERICAL_FAILURE
        res.message = f"certificate residuals too large (primal {pres:.2e}, dual {dres:.2e}, gap {res.gap:.2e})"
    return res


def _rows_back(sf: _StandardForm, y_std: np.ndarray) -> np.ndarray:
    return (sf.row_sign * y_std)[: sf.n_orig_rows]


def _drive_out_artificials(tab: _Tableau, sf: _StandardForm) -> None:
    r = 0
    while r < tab.m:
        if sf.artificial[tab.basis[r]]:
            row = tab.T[r, :-1]
            cand = np.flatnonzero(~sf.artificial & (np.abs(row) > PIVOT_TOL))
            if cand.size:
                tab.pivot(r, cand[0])
            else:
                # redundant row; the artificial columns still record the multipliers
                tab.T = np.delete(tab.T, r, axis=0)
                tab.basis = np.delete(tab.basis, r)
                continue
        r += 1


def feasible(lp: LinearProgram, max_iter: int | None = None) -> Feasibility:
    """Feasibility of the rows and bounds of ``lp`` (objective ignored)."""
    probe = LinearProgram(np.zeros_like(lp.objective), lp.matrix, lp.senses, lp.rhs, lp.lower, lp.upper)
    res = solve(probe, max_iter)
    if res.status is Status.OPTIMAL:
        return Feasibility(True, point=res.x)
    if res.status is Status.INFEASIBLE:
        return Feasibility(False, certificate=res.farkas, status=Status.INFEASIBLE)
    return Feasibility(False, status=res.status)
