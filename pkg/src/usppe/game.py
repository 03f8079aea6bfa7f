"""Stage games, private monitoring, message spaces and reporting strategies.

Profiles (of actions, signals or messages) are tuples of per-player indices.
Flat arrays over a product set iterate with the last player fastest.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

PROB_TOL = 1e-12
DEFAULT_ENUMERATION_CAP = 10_000

Profile = tuple[int, ...]
# a reporting strategy for one player: message index for each own signal
PlayerMap = tuple[int, ...]
RhoProfile = tuple[PlayerMap, ...]


class ValidationError(ValueError):
    """Malformed or inconsistent game data."""

    def __init__(self, message: str, index=None):
        super().__init__(message if index is None else f"{message} at {index}")
        self.index = index


@dataclass(eq=False)
class StageGame:
    players: tuple[str, ...]
    actions: tuple[tuple[str, ...], ...]
    payoffs: np.ndarray  # shape (|A_1|, ..., |A_n|, n)
    normalized: bool = False

    def __post_init__(self):
        self.payoffs = np.asarray(self.payoffs, dtype=float)
        shape = tuple(len(a) for a in self.actions)
        if len(self.players) != len(self.actions):
            raise ValidationError("players and action sets differ in length")
        if self.payoffs.shape != shape + (self.n,):
            raise ValidationError(f"payoff tensor has shape {self.payoffs.shape}, expected {shape + (self.n,)}")
        if any(k == 0 for k in shape):
            raise ValidationError("empty action set")
        if not np.all(np.isfinite(self.payoffs)):
            bad = tuple(int(i) for i in np.argwhere(~np.isfinite(self.payoffs))[0])
            raise ValidationError("non-finite payoff", bad)

    @property
    def n(self) -> int:
        return len(self.players)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.actions)

    def profiles(self) -> Iterator[Profile]:
        return itertools.product(*(range(k) for k in self.shape))

    def payoff(self, a: Profile) -> np.ndarray:
        return self.payoffs[a]

    def payoff_points(self) -> np.ndarray:
        """All payoff vectors, one row per profile in flat order."""
        return self.payoffs.reshape(-1, self.n)

    def label(self, a: Profile) -> str:
        return ",".join(self.actions[i][ai] for i, ai in enumerate(a))

    def minmax(self) -> np.ndarray:
        """Pure-strategy minmax value of every player."""
        out = np.empty(self.n)
        for i in range(self.n):
            best = self.payoffs[..., i].max(axis=i)
            out[i] = best.min()
        return out

    def normalize(self) -> tuple[StageGame, np.ndarray]:
        mm = self.minmax()
        return StageGame(self.players, self.actions, self.payoffs - mm, normalized=True), mm

    def deviation_payoffs(self, i: int, a: Profile) -> np.ndarray:
        """Player i's payoff from each own action against ``a_-i``."""
        idx = list(a)
        idx[i] = slice(None)
        return self.payoffs[tuple(idx) + (i,)]


@dataclass(eq=False)
class MonitoringStructure:
    signals: tuple[tuple[str, ...], ...]
    kernel: np.ndarray  # shape (*action shape, *signal shape)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(s) for s in self.signals)

    def validate(self, game: StageGame) -> None:
        k = np.asarray(self.kernel, float)
        expect = game.shape + self.shape
        if len(self.signals) != game.n:
            raise ValidationError("one signal set per player required")
        if any(len(s) == 0 for s in self.signals):
            raise ValidationError("empty signal set")
        if k.shape != expect:
            raise ValidationError(f"kernel has shape {k.shape}, expected {expect}")
        self.kernel = k
        nsig = int(np.prod(self.shape))
        rows = k.reshape(-1, nsig)
        for r, a in zip(rows, game.profiles()):
            if np.any(r < -PROB_TOL) or not np.all(np.isfinite(r)):
                raise ValidationError("kernel row not a distribution (negative entry)", a)
            if abs(r.sum() - 1.0) > PROB_TOL * max(1, nsig):
                raise ValidationError(f"kernel row not a distribution (sums to {r.sum():.17g})", a)
        for i in range(game.n):
            axes = tuple(ax for ax in range(game.n) if ax != i)
            marg = k.reshape((-1,) + self.shape).sum(axis=tuple(1 + ax for ax in axes))
            if np.any(marg <= 0):
                prof_idx, s = np.argwhere(marg <= 0)[0]
                a = tuple(int(x) for x in np.unravel_index(prof_idx, game.shape))
                raise ValidationError(
                    f"full-support violation: signal {self.signals[i][s]!r} of player {i} has zero probability", a
                )


@dataclass(eq=False)
class MessageModel:
    messages: tuple[tuple[str, ...], ...]
    signals: tuple[tuple[str, ...], ...]
    named_rhos: list[tuple[str, RhoProfile]] = field(default_factory=list)
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(m) for m in self.messages)

    @property
    def n(self) -> int:
        return len(self.messages)

    def validate(self) -> None:
        if len(self.messages) != len(self.signals):
            raise ValidationError("one message set per player required")
        for i, m in enumerate(self.messages):
            if len(m) == 0:
                raise ValidationError("empty message set", i)
            if len(set(m)) != len(m):
                raise ValidationError("duplicate message label", i)
        for name, rho in self.named_rhos:
            self.check_profile(rho, name)

    def check_profile(self, rho: RhoProfile, name: str = "") -> None:
        if len(rho) != self.n:
            raise ValidationError(f"reporting profile {name!r} has wrong number of players")
        for i, r in enumerate(rho):
            if len(r) != len(self.signals[i]) or any(not 0 <= m < len(self.messages[i]) for m in r):
                raise ValidationError(f"reporting profile {name!r} is not a map from signals to messages", i)

    def truthful(self) -> RhoProfile | None:
        """The identity report when messages and signals coincide as labelled sets."""
        out = []
        for sig, msg in zip(self.signals, self.messages):
            if set(sig) != set(msg):
                return None
            out.append(tuple(msg.index(s) for s in sig))
        return tuple(out)

    def player_map_count(self, i: int) -> int:
        return len(self.messages[i]) ** len(self.signals[i])

    def player_maps(self, i: int) -> list[PlayerMap]:
        """Every map from player i's signals to its messages."""
        count = self.player_map_count(i)
        if count > self.enumeration_cap:
            raise ValidationError(
                f"player {i} has {count} reporting maps, above the enumeration cap {self.enumeration_cap}"
            )
        return list(itertools.product(range(len(self.messages[i])), repeat=len(self.signals[i])))

    def profile_count(self) -> int:
        return math.prod(self.player_map_count(i) for i in range(self.n))

    def candidate_rhos(self, exhaustive: bool = False) -> list[tuple[str, RhoProfile]]:
        """Reporting profiles searched by the scoring and condition checks.

        Named profiles come first (truthful leads when it exists).  With
        ``exhaustive`` or when no profile is named, every profile is used as
        long as their number stays within the enumeration cap.
        """
        out: list[tuple[str, RhoProfile]] = []
        seen = set()
        t = self.truthful()
        if t is not None:
            out.append(("truthful", t))
            seen.add(t)
        for name, rho in self.named_rhos:
            if rho not in seen:
                out.append((name, rho))
                seen.add(rho)
        if exhaustive or not out:
            if self.profile_count() > self.enumeration_cap:
                if not out:
                    raise ValidationError("no reporting profile given and the full set exceeds the enumeration cap")
                return out
            for rho in itertools.product(*(self.player_maps(i) for i in range(self.n))):
                if rho not in seen:
                    out.append((self.rho_name(rho), rho))
                    seen.add(rho)
        return out

    def rho_name(self, rho: RhoProfile) -> str:
        parts = []
        for i, r in enumerate(rho):
            parts.append("".join(self.messages[i][m] for m in r) if all(len(x) == 1 for x in self.messages[i])
                         else "|".join(self.messages[i][m] for m in r))
        return "/".join(parts)


def report_matrix(pmap: PlayerMap, n_messages: int) -> np.ndarray:
    """One-hot matrix sending each signal to its reported message."""
    R = np.zeros((len(pmap), n_messages))
    R[np.arange(len(pmap)), pmap] = 1.0
    return R


def contract(P: np.ndarray, mats: Sequence[np.ndarray | None]) -> np.ndarray:
    """Apply a per-axis linear map to a joint signal array.

    ``mats[k]`` maps axis k (signals) to a new axis (messages); ``None``
    leaves the axis unchanged.
    """
    out = P
    for k, R in enumerate(mats):
        if R is None:
            continue
        out = np.moveaxis(np.tensordot(out, R, axes=([k], [0])), -1, k)
    return out


@dataclass(eq=False)
class Game:
    """Stage game together with its monitoring and message spaces."""

    stage: StageGame
    monitoring: MonitoringStructure
    messages: MessageModel
    params: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.stage.n

    def normalized(self) -> tuple[Game, np.ndarray]:
        g, mm = self.stage.normalize()
        return Game(g, self.monitoring, self.messages, dict(self.params)), mm

    def message_distribution(self, a: Profile, rho: RhoProfile, senders: Sequence[int] | None = None) -> np.ndarray:
        """Distribution of the messages of ``senders`` (default all) under ``(a, rho)``.

        Returned flat over the product of the senders' message sets.
        """
        senders = range(self.n) if senders is None else senders
        mats = []
        for k in range(self.n):
            if k in senders:
                mats.append(report_matrix(rho[k], len(self.messages.messages[k])))
            else:
                mats.append(np.ones((len(self.monitoring.signals[k]), 1)))
        return contract(self.monitoring.kernel[a], mats).ravel()


def induced_kernel(game: Game, a: Profile, rho: RhoProfile) -> tuple[np.ndarray, dict]:
    """On-path message distribution and the distribution after each unilateral deviation.

    The dictionary is keyed by ``(i, a_i', rho_i')`` and covers every
    alternative action/report pair of every player.
    """
    from .deviation import player_columns

    on = game.message_distribution(a, rho)
    out = {}
    for i in range(game.n):
        maps = game.messages.player_maps(i)
        for ai, cols in enumerate(player_columns(game, a, rho, i, maps, senders=range(game.n))):
            for pm, col in zip(maps, cols):
                if ai == a[i] and pm == rho[i]:
                    continue
                out[(i, ai, pm)] = col
    return on, out


# --------------------------------------------------------------------------
# payoff geometry


@dataclass(eq=False)
class PayoffGeometry:
    feasible: object  # ConvexSetRep of V, the convex hull of pure payoffs
    individually_rational: object  # ConvexSetRep of V* = V intersected with the non-negative orthant
    extreme: list[Profile]  # profiles whose payoff vector is an extreme point of V
    degenerate: bool
    interior_radius: float  # radius of the largest ball inside V* (<= 0 when the interior is empty)

    @property
    def interior_nonempty(self) -> bool:
        return self.interior_radius > 1e-9


def extreme_profiles(stage: StageGame, tol: float = 1e-12) -> list[Profile]:
    """Profiles whose payoff vector is an extreme point of the payoff hull.

    A payoff vector is extreme when it is not a convex combination of the
    other distinct payoff vectors; profiles sharing an extreme payoff vector
    are all listed.
    """
    from . import lp as lpcore

    profiles = list(stage.profiles())
    pts = stage.payoff_points()
    uniq, inverse = np.unique(np.round(pts, 12), axis=0, return_inverse=True)
    inverse = np.asarray(inverse).ravel()
    ext_u = np.zeros(len(uniq), bool)
    if len(uniq) <= 2:
        ext_u[:] = True
    else:
        for k, p in enumerate(uniq):
            others = np.delete(uniq, k, axis=0)
            A = np.vstack([others.T, np.ones(len(others))])
            b = np.concatenate([p, [1.0]])
            res = lpcore.feasible(lpcore.LinearProgram(np.zeros(len(others)), A, ["=="] * len(b), b,
                                                       lower=np.zeros(len(others))))
            ext_u[k] = not res.feasible
    return [a for a, u in zip(profiles, inverse) if ext_u[u]]


def _vstar_support(points: np.ndarray, grid: np.ndarray) -> np.ndarray:
    from . import lp as lpcore

    k, n = points.shape
    A = np.vstack([np.ones(k), points.T])
    senses = ["=="] + [">="] * n
    b = np.concatenate([[1.0], np.zeros(n)])
    out = np.empty(len(grid))
    for j, lam in enumerate(grid):
        res = lpcore.solve(lpcore.LinearProgram(points @ lam, A, senses, b, lower=np.zeros(k)))
        out[j] = res.value if res.optimal else -np.inf
    return out


def payoff_geometry(stage: StageGame, grid: np.ndarray) -> PayoffGeometry:
    from . import convex

    if not stage.normalized:
        raise ValidationError("payoff geometry needs a normalized game")
    pts = stage.payoff_points()
    V = convex.from_points(pts, grid)
    n = stage.n
    orth_n, orth_o = -np.eye(n), np.zeros(n)
    if n == 2:
        Vs = convex.from_halfspaces(np.vstack([V.normals, orth_n]), np.concatenate([V.offsets, orth_o]), grid)
    else:
        h = _vstar_support(pts, grid)
        Vs = convex.ConvexSetRep(grid, h, np.vstack([V.normals, orth_n]), np.concatenate([V.offsets, orth_o]))
    degenerate = bool(V.meta.get("degenerate", False))
    if degenerate or Vs.empty:
        radius = -np.inf if Vs.empty else 0.0
    else:
        _, radius = convex.chebyshev_center(Vs.normals, Vs.offsets)
    return PayoffGeometry(V, Vs, extreme_profiles(stage), degenerate, radius)
