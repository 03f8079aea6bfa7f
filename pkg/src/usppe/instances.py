"""Ready-made games used in the tests, the README and as CLI fixtures."""

from __future__ import annotations

import itertools

import numpy as np

from .game import Game, MessageModel, MonitoringStructure, StageGame

CD = ("C", "D")
SIG = ("c", "d")


def prisoners_dilemma() -> StageGame:
    """Raw prisoner's dilemma; its pure minmax vector is (1, 1)."""
    pay = np.array([[[2, 2], [0, 3]], [[3, 0], [1, 1]]], float)
    return StageGame(("1", "2"), (CD, CD), pay)


def noisy_pd(eps: float = 0.05, normalized: bool = True, quiet_reports: bool = True) -> Game:
    """Prisoner's dilemma where each player privately observes the opponent's action.

    With probability ``1 - eps`` both observations are correct; otherwise the
    signal pair is drawn uniformly.  Messages coincide with signals.  Besides
    the truthful report the game lists profiles in which one or both players
    always send ``c``.
    """
    stage = prisoners_dilemma()
    if normalized:
        stage, _ = stage.normalize()
    kernel = np.full((2, 2, 2, 2), eps / 4)
    for a1, a2 in itertools.product(range(2), repeat=2):
        kernel[a1, a2, a2, a1] += 1 - eps
    mon = MonitoringStructure((SIG, SIG), kernel)
    truth, quiet = (0, 1), (0, 0)
    named = []
    if quiet_reports:
        named = [("quiet1", (quiet, truth)), ("quiet2", (truth, quiet)), ("quiet", (quiet, quiet))]
    msgs = MessageModel((SIG, SIG), (SIG, SIG), named)
    return Game(stage, mon, msgs, {"eta": 0.1, "epsilon": eps})


def single_message_pd(eps: float = 0.05) -> Game:
    """The noisy prisoner's dilemma with a one-letter message alphabet."""
    base = noisy_pd(eps, quiet_reports=False)
    msgs = MessageModel((("x",), ("x",)), (SIG, SIG), [("silent", ((0, 0), (0, 0)))])
    return Game(base.stage, base.monitoring, msgs, dict(base.params))


def public_goods(n: int = 3, mpcr: float = 0.8, seed: int = 7, concentration: float = 1.0) -> Game:
    """n-player public goods game (an n-person prisoner's dilemma) with generic monitoring.

    Each contributor pays 1 and every player receives ``mpcr`` per contributor.
    Every player has a binary private signal; for each action profile the
    joint signal distribution is a fixed Dirichlet draw, so the monitoring has
    full support and no special structure.
    """
    shape = (2,) * n
    pay = np.zeros(shape + (n,))
    for a in itertools.product(range(2), repeat=n):
        contrib = sum(1 for x in a if x == 0)
        for i in range(n):
            pay[a + (i,)] = mpcr * contrib - (1.0 if a[i] == 0 else 0.0)
    stage = StageGame(tuple(str(i + 1) for i in range(n)), (CD,) * n, pay)
    stage, _ = stage.normalize()
    rng = np.random.default_rng(seed)
    kernel = rng.dirichlet(np.full(2**n, concentration), size=2**n).reshape(shape + shape)
    mon = MonitoringStructure((SIG,) * n, kernel)
    msgs = MessageModel((SIG,) * n, (SIG,) * n)
    return Game(stage, mon, msgs, {"eta": 0.1})


def random_game(rng: np.random.Generator, n: int, n_actions: int, n_signals: int = 2,
                normalized: bool = True) -> Game:
    """Random game with i.i.d. payoffs and a random full-support kernel (testing aid)."""
    shape = (n_actions,) * n
    acts = tuple(tuple(f"a{k}" for k in range(n_actions)) for _ in range(n))
    stage = StageGame(tuple(str(i + 1) for i in range(n)), acts, rng.normal(size=shape + (n,)))
    if normalized:
        stage, _ = stage.normalize()
    sigs = tuple(tuple(f"s{k}" for k in range(n_signals)) for _ in range(n))
    kernel = rng.dirichlet(np.ones(n_signals**n), size=n_actions**n).reshape(shape + (n_signals,) * n)
    return Game(stage, MonitoringStructure(sigs, kernel), MessageModel(sigs, sigs), {})
