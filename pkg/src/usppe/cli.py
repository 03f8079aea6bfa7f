"""Command line interface.

Exit codes: 0 success, 2 invalid input, 3 infeasible or not certified,
4 numerical failure.  Errors are reported on stderr as one line
``error: <kind>: <message>``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import aps, conditions, convex, scoring
from .document import dump_game, load_game
from .game import Game, ValidationError, payoff_geometry

EXIT_OK, EXIT_INVALID, EXIT_NOT_CERTIFIED, EXIT_NUMERICAL = 0, 2, 3, 4

log = logging.getLogger("usppe")


def _fmt_vec(v) -> str:
    return "(" + ", ".join(format(float(x), "g") for x in v) + ")"


def _param(args, game: Game, name: str, default):
    val = getattr(args, name, None)
    if val is not None:
        return val
    return game.params.get(name, default)


def _load_normalized(path) -> tuple[Game, np.ndarray]:
    game = load_game(path)
    if game.stage.normalized:
        return game, np.zeros(game.n)
    return game.normalized()


def _grid(args, game: Game) -> np.ndarray:
    size = int(_param(args, game, "grid", 360))
    seed = int(_param(args, game, "seed", 0))
    return convex.direction_grid(game.n, size, seed)


def _rhos(args, game: Game):
    return game.messages.candidate_rhos(exhaustive=getattr(args, "all_rhos", False))


def _out_dir(args) -> Path:
    d = Path(args.out or ".")
    d.mkdir(parents=True, exist_ok=True)
    return d


# --------------------------------------------------------------------------
# commands


def cmd_normalize(args) -> int:
    game = load_game(args.game)
    norm, mm = game.normalized()
    print(_fmt_vec(mm))
    if args.out:
        dump_game(norm, args.out)
    return EXIT_OK


def cmd_score(args) -> int:
    game, _ = _load_normalized(args.game)
    eta = float(_param(args, game, "eta", 0.0))
    bs = scoring.bounding_set(game, eta, _grid(args, game), args.side, _rhos(args, game))
    out = Path(args.out or "support.csv")
    scoring.write_support_table(out, game, bs)
    print(f"wrote {out} ({len(bs.grid)} directions, resolution {bs.resolution:.6g} rad)")
    return EXIT_OK


def cmd_bound(args) -> int:
    game, _ = _load_normalized(args.game)
    eta = float(_param(args, game, "eta", 0.0))
    grid = _grid(args, game)
    bs = scoring.bounding_set(game, eta, grid, args.side, _rhos(args, game))
    out = _out_dir(args)
    scoring.write_support_table(out / "scores.csv", game, bs)
    convex.set_to_csv(out / "bound.csv", bs.region)
    if bs.region.empty:
        print("bounding set is empty")
        return EXIT_NOT_CERTIFIED
    if game.n == 2:
        geo = payoff_geometry(game.stage, grid)
        (out / "bound.svg").write_text(convex.svg_sets([(geo.feasible, "#999999"),
                                                        (geo.individually_rational, "#1f77b4"),
                                                        (bs.region, "#d62728")]))
        print("vertices:", json.dumps(np.round(bs.region.vertices, 12).tolist()))
    print(f"wrote {out}/bound.csv")
    return EXIT_OK


def cmd_check(args) -> int:
    game, _ = _load_normalized(args.game)
    eta = float(_param(args, game, "eta", 0.0))
    rep = conditions.folk_verdict(game, eta, _grid(args, game), _rhos(args, game))
    text = json.dumps(rep.to_dict(), indent=1)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return EXIT_OK


@dataclass
class FolkResult:
    report: conditions.ConditionReport
    bound: scoring.BoundingSet
    target: convex.ConvexSetRep  # V*
    witness_set: convex.ConvexSetRep
    hausdorff_bound: float  # grid Hausdorff(Q_lower, V*)
    hausdorff_witness: float  # grid Hausdorff(witness set, V*)
    tolerance: float

    def summary(self) -> dict:
        return {
            "verdict": self.report.verdict,
            "reasons": self.report.reasons,
            "hausdorff_bound_vs_target": self.hausdorff_bound,
            "hausdorff_witness_vs_target": self.hausdorff_witness,
            "tolerance": self.tolerance,
            "grid_resolution": self.bound.resolution,
        }


def run_folk(game: Game, eta: float, epsilon: float, grid: np.ndarray, rhos=None) -> FolkResult:
    """Condition report, lower bounding set, and a smooth witness set within ``epsilon`` of it."""
    rep = conditions.folk_verdict(game, eta, grid, rhos)
    bs = scoring.bounding_set(game, eta, grid, "lower", rhos, upper=False)
    geo = payoff_geometry(game.stage, grid)
    target = geo.individually_rational
    h_bound = convex.hausdorff(bs.region, target)
    W = convex.smooth_inner(bs.region, epsilon, epsilon / 2) if not bs.region.empty else bs.region
    h_wit = convex.hausdorff(W, target) if not W.empty else np.inf
    tol = epsilon + 2 * bs.resolution * geo.feasible.diameter()
    return FolkResult(rep, bs, target, W, h_bound, h_wit, tol)


def cmd_folk(args) -> int:
    game, _ = _load_normalized(args.game)
    eta = float(_param(args, game, "eta", 0.1))
    eps = float(_param(args, game, "epsilon", 0.05))
    res = run_folk(game, eta, eps, _grid(args, game), _rhos(args, game))
    out = _out_dir(args)
    convex.set_to_csv(out / "witness_set.csv", res.witness_set)
    scoring.write_support_table(out / "scores.csv", game, res.bound)
    (out / "report.json").write_text(json.dumps({**res.summary(), "conditions": res.report.to_dict()}, indent=1) + "\n")
    if game.n == 2:
        (out / "folk.svg").write_text(convex.svg_sets([(res.target, "#1f77b4"), (res.bound.region, "#d62728"),
                                                       (res.witness_set, "#2ca02c")]))
    print(f"verdict: {str(res.report.verdict).lower()}")
    for r in res.report.reasons:
        print(f"  reason: {r}")
    print(f"hausdorff(bound, target): {res.hausdorff_bound:.17g}")
    print(f"hausdorff(witness, target): {res.hausdorff_witness:.17g}")
    print(f"tolerance: {res.tolerance:.17g}")
    return EXIT_OK if res.report.verdict else EXIT_NOT_CERTIFIED


def cmd_aps(args) -> int:
    game, _ = _load_normalized(args.game)
    eta = float(_param(args, game, "eta", 0.0))
    delta = float(_param(args, game, "delta", 0.9))
    grid, h = convex.read_support_csv(args.set, args.column)
    if grid.shape[1] != game.n:
        raise ValidationError("set dimension does not match the number of players")
    W = convex.from_support(grid, h)
    if args.round:
        W = convex.rounded(W, args.round)
    rep = aps.self_decomposable(game, W, delta, eta, args.mesh, _rhos(args, game), stop_early=False)
    lines = {"delta": delta, "certified": rep.certified, "points": len(rep.results),
             "failures": [np.round(rep.points[k], 12).tolist() for k in rep.failures]}
    print(json.dumps(lines))
    return EXIT_OK if rep.certified else EXIT_NOT_CERTIFIED


def cmd_deltabar(args) -> int:
    game, _ = _load_normalized(args.game)
    eta = float(_param(args, game, "eta", 0.0))
    grid = _grid(args, game)
    bs = scoring.bounding_set(game, eta, grid, "lower", _rhos(args, game), upper=False)
    if bs.region.empty:
        print("bounding set is empty")
        return EXIT_NOT_CERTIFIED
    W = convex.smooth_inner(bs.region, args.shrink, args.shrink / 2)
    res = aps.find_delta_bar(game, W, eta, args.mesh, _rhos(args, game), full_audit=args.audit)
    print(json.dumps({"delta_bar": res.delta_bar, "monotone": res.monotone,
                      "evaluated": {format(k, ".17g"): v for k, v in res.evaluated.items()}}))
    return EXIT_OK if res.delta_bar is not None else EXIT_NOT_CERTIFIED


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="usppe", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, eta=True):
        sp.add_argument("game", help="JSON game document")
        if eta:
            sp.add_argument("--eta", type=float, help="strictness of incentives (default from document)")
        sp.add_argument("--grid", type=int, help="number of directions (default 360)")
        sp.add_argument("--seed", type=int, help="seed for direction sampling when n > 3")
        sp.add_argument("--all-rhos", action="store_true", help="search every reporting profile")
        sp.add_argument("-o", "--out", help="output file or directory")

    sp = sub.add_parser("normalize", help="print the minmax vector and write the normalized game")
    sp.add_argument("game")
    sp.add_argument("-o", "--out")
    sp.set_defaults(func=cmd_normalize)

    sp = sub.add_parser("score", help="directional score brackets as a CSV support table")
    common(sp)
    sp.add_argument("--side", choices=["lower", "upper"], default="lower")
    sp.set_defaults(func=cmd_score)

    sp = sub.add_parser("bound", help="bounding set cut out by the scores")
    common(sp)
    sp.add_argument("--side", choices=["lower", "upper"], default="lower")
    sp.set_defaults(func=cmd_bound)

    sp = sub.add_parser("check", help="condition report")
    common(sp)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("folk", help="conditions, bounding set and witness set")
    common(sp)
    sp.add_argument("--epsilon", type=float)
    sp.set_defaults(func=cmd_folk)

    sp = sub.add_parser("aps", help="self-decomposability of a set given by a support table")
    common(sp)
    sp.add_argument("--delta", type=float)
    sp.add_argument("--set", required=True, help="CSV support table")
    sp.add_argument("--column", default="support")
    sp.add_argument("--round", type=float, default=0.0, help="add a ball of this radius to the set")
    sp.add_argument("--mesh", type=int, default=32)
    sp.set_defaults(func=cmd_aps)

    sp = sub.add_parser("deltabar", help="smallest mesh discount factor certifying a smooth inner set")
    common(sp)
    sp.add_argument("--shrink", type=float, default=0.1, help="erosion depth of the inner set")
    sp.add_argument("--mesh", type=int, default=32)
    sp.add_argument("--audit", action="store_true", help="evaluate every mesh discount factor")
    sp.set_defaults(func=cmd_deltabar)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: validation: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (OSError, ValueError) as exc:
        print(f"error: input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except scoring.NumericalFailure as exc:
        print(f"error: numerical: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
