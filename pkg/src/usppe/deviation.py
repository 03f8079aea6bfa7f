"""Unilateral one-shot deviations and their message distributions.

A deviation of player i from ``(a, rho)`` is a pair ``(a_i', rho_i')``.  Its
column is the distribution of the messages that the transfer (or
continuation) rule reads, the *senders*, after the deviation.  When a sender
subset is used the columns are marginals over those players' messages.

Closures:

* ``CONSERVATIVE``: every action deviation plus every message-only deviation
  that moves the column.  A rule that depends on messages only through the
  senders cannot tell the remaining message-only deviations apart from the
  recommended report, so dropping them is exact.
* ``RELAXED``: action deviations only.
* ``EXHAUSTIVE``: every pair other than the recommended one, used by the
  detectability and identifiability checks, which quantify over all of them.

Within a player, entries with the same action and the same column (up to
1e-12 in sup-norm) are kept once.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .game import Game, PlayerMap, Profile, RhoProfile, contract, report_matrix

DUP_TOL = 1e-12


class Closure(enum.Enum):
    CONSERVATIVE = "conservative"
    RELAXED = "relaxed"
    EXHAUSTIVE = "exhaustive"


@dataclass
class Deviation:
    player: int
    action: int
    report: PlayerMap
    column: np.ndarray
    payoff: float  # g_i(a_i', a_-i)
    message_only: bool = False


@dataclass
class DeviationSet:
    a: Profile
    rho: RhoProfile
    senders: tuple[int, ...]
    closure: Closure
    on_path: np.ndarray
    stage_payoff: np.ndarray  # g(a)
    entries: list[Deviation]

    def for_player(self, i: int) -> list[Deviation]:
        return [e for e in self.entries if e.player == i]

    def differences(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Rows ``on_path - column`` and stage gains ``g_i(a_i', a_-i) - g_i(a)`` for player i."""
        ents = self.for_player(i)
        if not ents:
            return np.zeros((0, self.on_path.size)), np.zeros(0)
        D = self.on_path[None, :] - np.array([e.column for e in ents])
        gains = np.array([e.payoff for e in ents]) - self.stage_payoff[i]
        return D, gains

    def count(self, i: int | None = None) -> int:
        return len(self.entries) if i is None else len(self.for_player(i))


def player_columns(
    game: Game, a: Profile, rho: RhoProfile, i: int, maps: Sequence[PlayerMap], senders: Sequence[int]
) -> list[np.ndarray]:
    """Columns of every ``(a_i', map)`` pair, one array of shape ``(len(maps), |M_T|)`` per action."""
    msgs = game.messages.messages
    sig = game.monitoring.signals
    mats = []
    for k in range(game.n):
        if k == i:
            mats.append(None)
        elif k in senders:
            mats.append(report_matrix(rho[k], len(msgs[k])))
        else:
            mats.append(np.ones((len(sig[k]), 1)))
    if i in senders:
        Rs = np.array([report_matrix(pm, len(msgs[i])) for pm in maps])
    else:
        Rs = np.ones((len(maps), len(sig[i]), 1))
    out = []
    for ai in range(game.stage.shape[i]):
        dev = list(a)
        dev[i] = ai
        Q = contract(game.monitoring.kernel[tuple(dev)], mats)
        Q = np.moveaxis(Q, i, 0)
        cols = np.einsum("s...,ksm->km...", Q, Rs)
        cols = np.moveaxis(cols, 1, i + 1)
        out.append(cols.reshape(len(maps), -1))
    return out


def enumerate_deviations(
    game: Game,
    a: Profile,
    rho: RhoProfile,
    closure: Closure = Closure.CONSERVATIVE,
    senders: Sequence[int] | None = None,
    players: Sequence[int] | None = None,
) -> DeviationSet:
    """Deviation set of ``players`` (default all) at ``(a, rho)`` under ``closure``."""
    senders = tuple(range(game.n)) if senders is None else tuple(sorted(senders))
    players = range(game.n) if players is None else players
    a = tuple(a)
    on = game.message_distribution(a, rho, senders)
    entries: list[Deviation] = []
    for i in players:
        devpay = game.stage.deviation_payoffs(i, a)
        maps = game.messages.player_maps(i)
        per_action = player_columns(game, a, rho, i, maps, senders)
        for ai, cols in enumerate(per_action):
            kept: list[np.ndarray] = []
            for pm, col in zip(maps, cols):
                if ai == a[i]:
                    if closure is Closure.RELAXED or pm == rho[i]:
                        continue
                    if closure is Closure.CONSERVATIVE and np.max(np.abs(col - on)) <= DUP_TOL:
                        continue
                if any(np.max(np.abs(col - k)) <= DUP_TOL for k in kept):
                    continue
                kept.append(col)
                entries.append(Deviation(i, ai, tuple(pm), col, float(devpay[ai]), message_only=ai == a[i]))
    return DeviationSet(a, tuple(rho), senders, closure, on, game.stage.payoff(a).copy(), entries)
