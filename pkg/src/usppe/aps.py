"""Decomposition of payoffs into stage payoffs and continuation values, and self-generation checks.

A payoff ``v`` is decomposed with respect to a set ``W`` and discount factor
``delta`` by a profile ``(a, rho)`` and continuation values ``w(m) in W`` when

* ``v = (1 - delta) g(a) + delta E[w | a, rho]``, and
* every conservative deviation of every player loses at least
  ``(1 - delta) eta`` in total payoff.

Membership ``w(m) in W`` is imposed through the half-space description of
``W`` with each offset lowered by a safety margin.  Those rows are added
lazily: the LP is first solved with a few of them and violated rows are
appended until none remains.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import convex
from . import lp as lpcore
from .deviation import Closure, DeviationSet, enumerate_deviations
from .game import Game, Profile, RhoProfile
from .scoring import NumericalFailure, Witness, k_eta, sender_options

DELTA_MESH = tuple(1.0 - 2.0 ** -k for k in range(1, 21))
REPLAY_TOL = 1e-8


@dataclass(frozen=True)
class Candidate:
    a: Profile
    rho: RhoProfile
    rho_name: str
    senders: tuple[int, ...]


@dataclass
class Decomposition:
    certified: bool
    v: np.ndarray
    delta: float
    candidate: Candidate | None = None
    continuation: np.ndarray | None = None  # shape (n, |M_T|)
    tried: int = 0
    rounds: int = 0
    summary: list[str] = field(default_factory=list)


def default_margin(W: convex.ConvexSetRep) -> float:
    return 1e-6 * max(W.diameter(), 1.0)


def candidates(game: Game, order_by: np.ndarray | None = None, rhos=None) -> list[Candidate]:
    """Every profile, reporting profile and sender set; profiles sorted by ``order_by . g(a)`` when given."""
    rhos = rhos if rhos is not None else game.messages.candidate_rhos()
    profiles = list(game.stage.profiles())
    if order_by is not None:
        profiles.sort(key=lambda a: -float(order_by @ game.stage.payoff(a)))
    out = []
    for a in profiles:
        for s in sender_options(game.n, True):
            seen = set()
            for name, rho in rhos:
                key = tuple(rho[j] if j in s else None for j in range(game.n))
                if key in seen:
                    continue
                seen.add(key)
                out.append(Candidate(a, rho, name, s))
    return out


def _base_rows(dev: DeviationSet, v: np.ndarray, delta: float, eta: float, n: int):
    K = dev.on_path.size
    rows, senses, rhs = [], [], []
    g = dev.stage_payoff
    for i in range(n):
        row = np.zeros(n * K)
        row[i * K:(i + 1) * K] = delta * dev.on_path
        rows.append(row)
        senses.append("==")
        rhs.append(v[i] - (1 - delta) * g[i])
    for i in range(n):
        D, gains = dev.differences(i)
        for d, gain in zip(D, gains):
            row = np.zeros(n * K)
            row[i * K:(i + 1) * K] = delta * d
            rows.append(row)
            senses.append(">=")
            rhs.append((1 - delta) * (gain + eta))
    return rows, senses, rhs


def _membership_row(k: int, m: int, W: convex.ConvexSetRep, n: int, K: int) -> np.ndarray:
    row = np.zeros(n * K)
    row[m::K] = W.normals[k]
    return row


def _solve_candidate(game: Game, v: np.ndarray, W: convex.ConvexSetRep, delta: float, eta: float,
                     cand: Candidate, margin: float) -> tuple[np.ndarray | None, int]:
    n = game.n
    dev = enumerate_deviations(game, cand.a, cand.rho, Closure.CONSERVATIVE, cand.senders)
    K = dev.on_path.size
    base_rows, base_senses, base_rhs = _base_rows(dev, v, delta, eta, n)
    offs = W.offsets - margin
    H = len(offs)
    step = max(1, H // 12)
    active = {(k, m) for k in range(0, H, step) for m in range(K)}
    rounds = 0
    while True:
        rounds += 1
        act = sorted(active)
        rows = base_rows + [_membership_row(k, m, W, n, K) for k, m in act]
        senses = base_senses + ["<="] * len(act)
        rhs = base_rhs + [offs[k] for k, _ in act]
        res = lpcore.feasible(lpcore.LinearProgram(np.zeros(n * K), np.array(rows), senses, rhs))
        if not res.feasible:
            if res.status not in (lpcore.Status.INFEASIBLE, lpcore.Status.OPTIMAL):
                raise NumericalFailure(f"decomposition LP: {res.status.value}")
            return None, rounds
        w = res.point.reshape(n, K)
        viol = W.normals @ w - offs[:, None]  # shape (H, K)
        bad = np.argwhere(viol > 1e-10)
        if bad.size == 0:
            return w, rounds
        # add the most violated row for each message profile, plus all rows violated by more than half of that
        for m in np.unique(bad[:, 1]):
            col = viol[:, m]
            top = col.max()
            for k in np.flatnonzero(col >= 0.5 * top):
                active.add((int(k), int(m)))


def b_operator_membership(game: Game, v: np.ndarray, W: convex.ConvexSetRep, delta: float, eta: float,
                          cands: Iterable[Candidate] | None = None, margin: float | None = None) -> Decomposition:
    """Search candidates for a decomposition of ``v`` with continuation values in ``W``."""
    v = np.asarray(v, float)
    margin = default_margin(W) if margin is None else margin
    cands = list(cands) if cands is not None else candidates(game)
    out = Decomposition(False, v, delta)
    for cand in cands:
        g = game.stage.payoff(cand.a)
        # the expected continuation value must itself lie in W
        mean = (v - (1 - delta) * g) / delta
        if np.any(W.normals @ mean > W.offsets - margin + 1e-9):
            out.summary.append(f"{game.stage.label(cand.a)}: mean continuation outside W")
            continue
        out.tried += 1
        w, rounds = _solve_candidate(game, v, W, delta, eta, cand, margin)
        out.rounds += rounds
        if w is not None:
            out.certified, out.candidate, out.continuation = True, cand, w
            return out
        out.summary.append(f"{game.stage.label(cand.a)}/{cand.rho_name}/{cand.senders}: infeasible")
    return out


def replay(game: Game, v: np.ndarray, W: convex.ConvexSetRep, delta: float, eta: float, cand: Candidate,
           w: np.ndarray, margin: float = 0.0) -> dict[str, float]:
    """Largest violation of each family of decomposition rows by an explicit scheme ``w``."""
    n = game.n
    dev = enumerate_deviations(game, cand.a, cand.rho, Closure.CONSERVATIVE, cand.senders)
    rows, senses, rhs = _base_rows(dev, np.asarray(v, float), delta, eta, n)
    x = np.asarray(w, float).reshape(-1)
    act = np.array(rows) @ x - np.array(rhs)
    eq = np.abs(act[:n]).max()
    inc = max(0.0, float((-act[n:]).max(initial=0.0)))
    mem = max(0.0, float((W.normals @ np.asarray(w).reshape(n, -1) - (W.offsets - margin)[:, None]).max()))
    return {"promise": float(eq), "incentive": inc, "membership": mem}


def rescale(v: np.ndarray, w: np.ndarray, delta: float, delta_new: float) -> np.ndarray:
    """Continuation values that decompose ``v`` at ``delta_new >= delta`` from a scheme at ``delta``.

    Each new value mixes ``v`` and the old value ``w(m)``; the weights make
    the promise-keeping identity hold exactly and scale every incentive gap
    by ``(1 - delta_new) / (1 - delta)``.
    """
    a = (delta_new - delta) / (delta_new * (1 - delta))
    b = delta * (1 - delta_new) / (delta_new * (1 - delta))
    return a * np.asarray(v, float)[:, None] + b * np.asarray(w, float)


# --------------------------------------------------------------------------
# boundary construction for smooth sets


@dataclass
class BoundaryScheme:
    direction: np.ndarray
    point: np.ndarray  # w*
    witness: Witness
    shifted: np.ndarray  # x'(m) = x(m) - (v - w*), shape (n, |M_T|)
    threshold: float  # every w^delta(m) is interior for delta above this
    certified: bool
    reason: str = ""

    def continuation(self, delta: float) -> np.ndarray:
        return self.point[:, None] + (1 - delta) / delta * self.shifted

    @property
    def candidate(self) -> Candidate:
        w = self.witness
        return Candidate(w.a, w.rho, w.rho_name, w.senders)


def decompose_boundary(game: Game, W: convex.ConvexSetRep, direction: np.ndarray, eta: float,
                       witness: Witness | None = None, rhos=None) -> BoundaryScheme:
    """Continuation values for the boundary point of a smooth set with outward normal ``direction``.

    The scoring witness ``(a, rho, x)`` for the normal direction gives a value
    ``v`` beyond the boundary point ``w*``.  Shifting the transfers by
    ``v - w*`` and scaling them by ``(1 - delta)/delta`` yields continuation
    values that converge to ``w*`` from inside the set as ``delta -> 1``.
    """
    u = np.asarray(direction, float)
    u = u / np.linalg.norm(u)
    wstar = W.boundary_point(u)
    if witness is None:
        witness = k_eta(game, u, eta, rhos, upper=False).witness
    if witness is None:
        return BoundaryScheme(u, wstar, None, None, 1.0, False, "scoring program infeasible")
    gap = float(u @ witness.value - u @ wstar)
    xprime = witness.transfers - (witness.value - wstar)[:, None]
    if gap <= 1e-12:
        return BoundaryScheme(u, wstar, witness, xprime, 1.0, False, f"score does not exceed the set (gap {gap:.3g})")
    t_max = np.inf
    for m in range(xprime.shape[1]):
        t_max = min(t_max, _interior_extent(W, wstar, xprime[:, m]))
    if t_max <= 0:
        return BoundaryScheme(u, wstar, witness, xprime, 1.0, False, "continuation leaves the set immediately")
    return BoundaryScheme(u, wstar, witness, xprime, 1.0 / (1.0 + t_max), True)


def _interior_extent(W: convex.ConvexSetRep, p: np.ndarray, d: np.ndarray) -> float:
    """Largest ``t`` such that ``p + s d`` is interior for every ``0 < s < t``."""
    if np.linalg.norm(d) == 0:
        return np.inf
    lo = 0.0
    hi = 1.0
    while W.in_interior(p + hi * d) and hi < 1e12:
        lo, hi = hi, 2 * hi
    if hi >= 1e12:
        return np.inf
    # the first probe must land inside; the region is an interval in t
    t = hi
    for _ in range(200):
        if W.in_interior(p + t * d):
            break
        t /= 2
        if t < 1e-14:
            return 0.0
    lo, hi = t, hi if t < hi else 2 * t
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if W.in_interior(p + mid * d):
            lo = mid
        else:
            hi = mid
    return lo


# --------------------------------------------------------------------------
# self-generation on a mesh


@dataclass
class MeshReport:
    delta: float
    certified: bool
    points: np.ndarray
    results: list[Decomposition]

    @property
    def failures(self) -> list[int]:
        return [k for k, r in enumerate(self.results) if not r.certified]


def mesh_points(W: convex.ConvexSetRep, size: int = 32) -> tuple[np.ndarray, np.ndarray]:
    """Boundary points at ``size`` grid directions spread over the grid, plus the centre."""
    K = len(W.grid)
    idx = np.unique(np.linspace(0, K, size, endpoint=False).astype(int))
    dirs = W.grid[idx]
    pts = np.array([W.boundary_point(u) for u in dirs] + [W.center()])
    return pts, np.vstack([dirs, np.zeros(W.dim)])


def self_decomposable(game: Game, W: convex.ConvexSetRep, delta: float, eta: float, size: int = 32,
                      rhos=None, stop_early: bool = True, margin: float | None = None) -> MeshReport:
    """Check that every mesh point of ``W`` decomposes with continuation values in ``W``."""
    pts, dirs = mesh_points(W, size)
    results = []
    ok = True
    for p, u in zip(pts, dirs):
        cands = candidates(game, u if np.any(u) else None, rhos)
        r = b_operator_membership(game, p, W, delta, eta, cands, margin)
        results.append(r)
        if not r.certified:
            ok = False
            if stop_early:
                break
    return MeshReport(delta, ok, pts, results)


@dataclass
class DeltaSearch:
    delta_bar: float | None
    evaluated: dict[float, bool]
    monotone: bool


def find_delta_bar(game: Game, W: convex.ConvexSetRep, eta: float, size: int = 32, rhos=None,
                   full_audit: bool = False, mesh: Sequence[float] = DELTA_MESH) -> DeltaSearch:
    """Smallest mesh discount factor at which ``W`` is certified self-decomposable.

    Bisection over the geometric mesh assumes monotonicity in ``delta``; the
    evaluated points (all mesh points with ``full_audit``) are checked for a
    certified value followed by a failing larger one.
    """
    mesh = list(mesh)
    seen: dict[float, bool] = {}

    def ok(k: int) -> bool:
        d = mesh[k]
        if d not in seen:
            seen[d] = self_decomposable(game, W, d, eta, size, rhos).certified
        return seen[d]

    if full_audit:
        for k in range(len(mesh)):
            ok(k)
    if not ok(len(mesh) - 1):
        best = None
    elif ok(0):
        best = mesh[0]
    else:
        lo, hi = 0, len(mesh) - 1  # lo fails, hi certifies
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if ok(mid):
                hi = mid
            else:
                lo = mid
        best = mesh[hi]
    ordered = sorted(seen.items())
    monotone = all(not (c1 and not c2) for (_, c1), (_, c2) in zip(ordered, ordered[1:]))
    return DeltaSearch(best, dict(ordered), monotone)
