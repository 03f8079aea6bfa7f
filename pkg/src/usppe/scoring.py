"""Directional scores: bounds on the best weighted payoff enforceable with budget-balanced transfers.

For a direction ``lam`` and an action/report profile ``(a, rho)`` the program
chooses transfers ``x_i(m)`` that make every deviation lose at least ``eta``
while ``sum_i lam_i x_i(m) <= 0`` for every message profile; its value is
``lam . (g(a) + E[x])``.  The score of ``lam`` is the best value over
profiles.  The conservative deviation closure gives a lower bound, the
relaxed closure an upper bound.

On the lower side the transfers may also be restricted to ignore one
player's messages.  Any such rule is admissible for the full program, and it
removes that player's message-only deviations because they no longer move
the transfer.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import convex
from . import lp as lpcore
from .deviation import Closure, DeviationSet, enumerate_deviations
from .game import Game, Profile, RhoProfile

log = logging.getLogger(__name__)
TIE_TOL = 1e-10


class NumericalFailure(RuntimeError):
    pass


@dataclass
class Witness:
    a: Profile
    rho: RhoProfile
    rho_name: str
    senders: tuple[int, ...]
    transfers: np.ndarray  # shape (n, |M_T|), over the senders' messages
    value: np.ndarray  # v = g(a) + E[x]

    def full_transfers(self, game: Game) -> np.ndarray:
        """Transfers as a function of the whole message profile, shape ``(n, |M|)``."""
        mshape = game.messages.shape
        sub = tuple(mshape[k] if k in self.senders else 1 for k in range(game.n))
        x = self.transfers.reshape((game.n,) + sub)
        return np.broadcast_to(x, (game.n,) + mshape).reshape(game.n, -1).copy()

    def ident(self, game: Game) -> str:
        s = "all" if len(self.senders) == game.n else "+".join(str(k + 1) for k in self.senders)
        return f"a={game.stage.label(self.a)};rho={self.rho_name};senders={s}"


@dataclass
class ScoreBracket:
    direction: np.ndarray
    kind: convex.Kind
    lower: float
    upper: float
    witness: Witness | None = None


@dataclass
class BoundingSet:
    eta: float
    grid: np.ndarray
    brackets: list[ScoreBracket]
    side: str
    region: convex.ConvexSetRep
    resolution: float
    meta: dict = field(default_factory=dict)

    def scores(self, side: str | None = None) -> np.ndarray:
        side = side or self.side
        return np.array([b.lower if side == "lower" else b.upper for b in self.brackets])


# --------------------------------------------------------------------------
# one program


def transfer_program(dev: DeviationSet, lam: np.ndarray, eta: float, budget: str = "<=") -> lpcore.LinearProgram:
    """LP in the transfers ``x[i, m]`` (player-major) for a fixed deviation set."""
    n = lam.size
    K = dev.on_path.size
    rows, senses, rhs = [], [], []
    for i in range(n):
        D, gains = dev.differences(i)
        for d, gain in zip(D, gains):
            row = np.zeros(n * K)
            row[i * K:(i + 1) * K] = d
            rows.append(row)
            senses.append(">=")
            rhs.append(gain + eta)
    for m in range(K):
        row = np.zeros(n * K)
        row[m::K] = lam
        rows.append(row)
        senses.append(budget)
        rhs.append(0.0)
    obj = np.concatenate([lam[i] * dev.on_path for i in range(n)])
    return lpcore.LinearProgram(obj, np.array(rows).reshape(len(rows), n * K), senses, rhs)


def solve_program(game: Game, lam: np.ndarray, eta: float, a: Profile, rho: RhoProfile,
                  closure: Closure = Closure.CONSERVATIVE, senders: Sequence[int] | None = None,
                  ) -> tuple[float, np.ndarray | None, DeviationSet]:
    """Value and transfers (shape ``(n, |M_T|)``) of one scoring program; ``-inf`` when infeasible."""
    lam = np.asarray(lam, float)
    dev = enumerate_deviations(game, a, rho, closure, senders)
    prog = transfer_program(dev, lam, eta)
    res = lpcore.solve(prog)
    if res.status is lpcore.Status.INFEASIBLE:
        return -np.inf, None, dev
    if res.status is not lpcore.Status.OPTIMAL:
        raise NumericalFailure(f"scoring program at a={a}: {res.status.value} {res.message}")
    base = float(lam @ game.stage.payoff(a))
    return base + res.value, res.x.reshape(game.n, -1), dev


def solve_directional(game: Game, lam: np.ndarray, eta: float, a: Profile, rho: RhoProfile) -> tuple[float, float]:
    """Conservative and relaxed values of the program at a fixed ``(a, rho)`` with full message use."""
    lo, _, _ = solve_program(game, lam, eta, a, rho, Closure.CONSERVATIVE)
    hi, _, _ = solve_program(game, lam, eta, a, rho, Closure.RELAXED)
    return lo, hi


def sender_options(n: int, lower: bool) -> list[tuple[int, ...]]:
    full = tuple(range(n))
    if not lower or n == 1:
        return [full]
    return [full] + [tuple(k for k in full if k != i) for i in range(n)]


# --------------------------------------------------------------------------
# scores


def _best(game: Game, lam: np.ndarray, eta: float, rhos, closure: Closure,
          structures: list[tuple[int, ...]]) -> tuple[float, Witness | None]:
    """Max over profiles, reporting profiles and sender sets, lexicographic tie-break."""
    profiles = list(game.stage.profiles())
    caps = np.array([lam @ game.stage.payoff(a) for a in profiles])
    order = sorted(range(len(profiles)), key=lambda k: (-caps[k], k))
    best, best_key, best_w = -np.inf, None, None
    cache: dict = {}
    for k in order:
        if caps[k] < best - TIE_TOL:
            break
        a = profiles[k]
        for r, (name, rho) in enumerate(rhos):
            for s, senders in enumerate(structures):
                key = (k, r, s)
                # reports of players outside the sender set do not enter the program
                ck = (k, senders, tuple(rho[j] if j in senders else None for j in range(game.n)))
                if ck in cache:
                    val, x = cache[ck]
                else:
                    val, x, _ = solve_program(game, lam, eta, a, rho, closure, senders)
                    cache[ck] = (val, x)
                if val == -np.inf:
                    continue
                if val > best + TIE_TOL or (abs(val - best) <= TIE_TOL and key < best_key):
                    best, best_key = val, key
                    v = game.stage.payoff(a) + x @ game.message_distribution(a, rho, senders)
                    best_w = Witness(a, rho, name, senders, x, v)
                if best >= caps[k] - TIE_TOL:
                    break
            if best >= caps[k] - TIE_TOL:
                break
    return best, best_w


def k_eta(game: Game, lam: np.ndarray, eta: float, rhos=None, exhaustive_rhos: bool = False,
          upper: bool = True, lower: bool = True) -> ScoreBracket:
    """Bracket ``[lower, upper]`` of the score in direction ``lam``; a skipped side is NaN."""
    if not game.stage.normalized:
        raise ValueError("scoring needs a normalized game")
    lam = np.asarray(lam, float)
    rhos = rhos if rhos is not None else game.messages.candidate_rhos(exhaustive_rhos)
    kind, _ = convex.classify(lam)
    lo, w = np.nan, None
    if lower:
        lo, w = _best(game, lam, eta, rhos, Closure.CONSERVATIVE, sender_options(game.n, True))
    hi = _best(game, lam, eta, rhos, Closure.RELAXED, sender_options(game.n, False))[0] if upper else np.nan
    return ScoreBracket(lam, kind, lo, hi, w)


def bounding_set(game: Game, eta: float, grid: np.ndarray | None = None, side: str = "lower",
                 rhos=None, grid_size: int = 360, seed: int | None = 0, upper: bool = True) -> BoundingSet:
    """Scores on a direction grid and the region they cut out.

    The region is the intersection of the half-spaces
    ``lam_k . v <= score(lam_k)``; a direction with score ``-inf`` makes it empty.
    """
    if side not in ("lower", "upper"):
        raise ValueError("side must be 'lower' or 'upper'")
    grid = convex.direction_grid(game.n, grid_size, seed) if grid is None else np.asarray(grid, float)
    rhos = rhos if rhos is not None else game.messages.candidate_rhos()
    brackets = [k_eta(game, lam, eta, rhos, upper=upper or side == "upper") for lam in grid]
    h = np.array([b.lower if side == "lower" else b.upper for b in brackets])
    region = convex.from_support(grid, h, {"eta": eta, "side": side})
    return BoundingSet(eta, grid, brackets, side, region, convex.grid_resolution(grid))


def write_support_table(path, game: Game, bs: BoundingSet) -> None:
    ids = [b.witness.ident(game) if b.witness is not None else "" for b in bs.brackets]
    kinds = [b.kind.value for b in bs.brackets]
    convex.write_support_csv(
        path, bs.grid,
        {"k_lower": [b.lower for b in bs.brackets], "k_upper": [b.upper for b in bs.brackets]},
        {"kind": kinds, "witness": ids},
    )
