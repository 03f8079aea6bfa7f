"""JSON game documents.

Layout::

    {
      "players":  ["row", "col"],
      "actions":  [["C", "D"], ["C", "D"]],
      "payoffs":  [...],   # n * |A| numbers: player 1 over A, then player 2, ...
      "signals":  [["c", "d"], ["c", "d"]],
      "kernel":   [...],   # |A| * |S| numbers, one distribution over S per profile
      "messages": [["c", "d"], ["c", "d"]],          # optional, defaults to signals
      "rhos":     [{"name": "quiet", "maps": [{"c": "c", "d": "c"}, {"c": "c", "d": "d"}]}],
      "params":   {"eta": 0.1}
    }

Profiles over A and S are listed with the last player's index moving fastest.
Nested arrays are accepted and flattened in row-major order.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .game import (
    DEFAULT_ENUMERATION_CAP,
    Game,
    MessageModel,
    MonitoringStructure,
    StageGame,
    ValidationError,
)

_REQUIRED = ("players", "actions", "payoffs", "signals", "kernel")


def _labels(obj: Any, what: str) -> tuple[tuple[str, ...], ...]:
    if not isinstance(obj, list) or not all(isinstance(x, list) for x in obj):
        raise ValidationError(f"{what} must be a list of label lists")
    return tuple(tuple(str(v) for v in x) for x in obj)


def _numbers(obj: Any, size: int, what: str) -> np.ndarray:
    try:
        arr = np.asarray(obj, dtype=float).ravel()
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{what} must be numeric") from exc
    if arr.size != size:
        raise ValidationError(f"{what} has {arr.size} entries, expected {size}")
    return arr


def game_from_dict(doc: dict) -> Game:
    missing = [k for k in _REQUIRED if k not in doc]
    if missing:
        raise ValidationError(f"missing section {missing[0]!r}")
    players = tuple(str(p) for p in doc["players"])
    actions = _labels(doc["actions"], "actions")
    if len(actions) != len(players):
        raise ValidationError("one action list per player required")
    for i, acts in enumerate(actions):
        if len(set(acts)) != len(acts):
            raise ValidationError("duplicate action label", i)
    n = len(players)
    shape = tuple(len(a) for a in actions)
    size = math.prod(shape)
    pay = _numbers(doc["payoffs"], n * size, "payoffs").reshape(n, size)
    payoffs = np.moveaxis(pay.reshape((n,) + shape), 0, -1)
    params = dict(doc.get("params", {}))
    stage = StageGame(players, actions, payoffs, normalized=bool(params.get("normalized", False)))

    signals = _labels(doc["signals"], "signals")
    if len(signals) != n:
        raise ValidationError("one signal list per player required")
    sshape = tuple(len(s) for s in signals)
    kernel = _numbers(doc["kernel"], size * math.prod(sshape), "kernel").reshape(shape + sshape)
    monitoring = MonitoringStructure(signals, kernel)
    monitoring.validate(stage)

    messages = _labels(doc["messages"], "messages") if "messages" in doc else signals
    cap = int(params.get("enumeration_cap", DEFAULT_ENUMERATION_CAP))
    named = []
    for k, entry in enumerate(doc.get("rhos", [])):
        name = str(entry.get("name", f"rho{k}"))
        maps = entry.get("maps")
        if not isinstance(maps, list) or len(maps) != n:
            raise ValidationError(f"reporting profile {name!r} needs one map per player")
        prof = []
        for i, mp in enumerate(maps):
            if not isinstance(mp, dict) or set(mp) != set(signals[i]):
                raise ValidationError(f"reporting profile {name!r} must map every signal of player {i}")
            try:
                prof.append(tuple(messages[i].index(str(mp[s])) for s in signals[i]))
            except ValueError as exc:
                raise ValidationError(f"reporting profile {name!r} uses an unknown message", i) from exc
        named.append((name, tuple(prof)))
    model = MessageModel(messages, signals, named, cap)
    model.validate()
    game = Game(stage, monitoring, model, params)
    if stage.normalized and np.any(np.abs(stage.minmax()) > 1e-12):
        raise ValidationError("document is marked normalized but its minmax vector is not zero")
    return game


def game_to_dict(game: Game) -> dict:
    st, mon, mm = game.stage, game.monitoring, game.messages
    payoffs = np.moveaxis(st.payoffs, -1, 0).reshape(-1)
    params = dict(game.params)
    params["normalized"] = st.normalized
    return {
        "players": list(st.players),
        "actions": [list(a) for a in st.actions],
        "payoffs": [float(v) for v in payoffs],
        "signals": [list(s) for s in mon.signals],
        "kernel": [float(v) for v in np.asarray(mon.kernel).reshape(-1)],
        "messages": [list(m) for m in mm.messages],
        "rhos": [
            {"name": name, "maps": [{mon.signals[i][s]: mm.messages[i][m] for s, m in enumerate(r)}
                                    for i, r in enumerate(rho)]}
            for name, rho in mm.named_rhos
        ],
        "params": params,
    }


def load_game(path: str | Path) -> Game:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"not a JSON document: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValidationError("game document must be a JSON object")
    return game_from_dict(doc)


def dump_game(game: Game, path: str | Path) -> None:
    Path(path).write_text(json.dumps(game_to_dict(game), indent=1) + "\n")
