"""Checks on the stage game and the monitoring behind the folk-theorem verdict.

Every failed LP-based check carries a Farkas certificate translated into the
economically meaningful object: a mixture over deviations that is not
detected yet costs less than ``eta`` (detectability), or a pair of deviation
mixtures whose effects on the message distribution cannot be told apart
(identifiability).
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import convex
from . import lp as lpcore
from .deviation import Closure, DeviationSet, enumerate_deviations
from .game import Game, Profile, RhoProfile, StageGame, payoff_geometry

RANK_TOL = 1e-8
CERT_TOL = 1e-8


# --------------------------------------------------------------------------
# stage-game conditions


def v_underbar(stage: StageGame, eta: float) -> tuple[np.ndarray, list[Profile]]:
    """For each player, ``min_a max(g_i(a), max_{a_i' != a_i} g_i(a_i', a_-i) + eta)`` and a minimiser."""
    vals = np.empty(stage.n)
    wit: list[Profile] = []
    for i in range(stage.n):
        best, arg = np.inf, None
        for a in stage.profiles():
            dev = stage.deviation_payoffs(i, a)
            others = np.delete(dev, a[i])
            score = max(dev[a[i]], others.max() + eta) if others.size else dev[a[i]]
            if score < best:
                best, arg = score, a
        vals[i] = best
        wit.append(arg)
    return vals, wit


def _strict_profiles(stage: StageGame, i: int, eta: float, target: float, tol: float = 1e-12) -> list[Profile]:
    out = []
    for a in stage.profiles():
        dev = stage.deviation_payoffs(i, a)
        if abs(dev[a[i]] - target) > tol:
            continue
        others = np.delete(dev, a[i])
        if others.size == 0 or np.all(dev[a[i]] - others >= eta - tol):
            out.append(a)
    return out


def minmax_profiles(stage: StageGame, i: int, eta: float) -> list[Profile]:
    """Profiles at player i's minmax value where every own deviation loses at least ``eta``."""
    return _strict_profiles(stage, i, eta, float(stage.minmax()[i]))


def best_profiles(stage: StageGame, i: int, eta: float) -> list[Profile]:
    """Profiles giving player i its highest payoff where every own deviation loses at least ``eta``."""
    return _strict_profiles(stage, i, eta, float(stage.payoffs[..., i].max()))


@dataclass
class BestResponseReport:
    holds: bool
    best: list[list[Profile]]
    minmax: list[list[Profile]]
    failures: list[str] = field(default_factory=list)


def best_response_property(stage: StageGame, eta: float) -> BestResponseReport:
    best = [best_profiles(stage, i, eta) for i in range(stage.n)]
    low = [minmax_profiles(stage, i, eta) for i in range(stage.n)]
    fails = [f"player {i + 1}: no strict best profile" for i in range(stage.n) if not best[i]]
    fails += [f"player {i + 1}: no strict minmax profile" for i in range(stage.n) if not low[i]]
    return BestResponseReport(not fails, best, low, fails)


# --------------------------------------------------------------------------
# detectability


@dataclass
class UndetectedMixture:
    """Deviation mixture that leaves the message distribution unchanged but costs less than ``eta``."""

    player: int
    weights: dict  # (action, report) -> probability
    expected_loss: float  # g_i(a) - E_phi g_i(a_i', a_-i)
    distribution_gap: float  # sup-norm of the induced distribution change
    farkas: np.ndarray


@dataclass
class DetectabilityResult:
    holds: bool
    transfers: dict = field(default_factory=dict)  # player -> x_i over the senders' messages
    failure: UndetectedMixture | None = None


def _player_program(dev: DeviationSet, i: int, eta: float) -> lpcore.LinearProgram:
    D, gains = dev.differences(i)
    return lpcore.LinearProgram(np.zeros(dev.on_path.size), D, [">="] * len(gains), gains + eta)


def detectability(game: Game, a: Profile, rho: RhoProfile, eta: float,
                  players: Sequence[int] | None = None, senders: Sequence[int] | None = None) -> DetectabilityResult:
    """Whether transfers on the senders' messages make every deviation of ``players`` lose ``eta``.

    By LP duality this is the same as: no mixture over deviations reproduces
    the on-path distribution of the senders' messages while costing less
    than ``eta`` in stage payoff.
    """
    players = range(game.n) if players is None else players
    dev = enumerate_deviations(game, a, rho, Closure.EXHAUSTIVE, senders, players)
    out = DetectabilityResult(True)
    for i in players:
        prog = _player_program(dev, i, eta)
        res = lpcore.solve(prog)
        if res.status is lpcore.Status.OPTIMAL:
            out.transfers[i] = res.x
            continue
        if res.status is not lpcore.Status.INFEASIBLE:
            raise lpcore_failure(res)
        q = -res.farkas
        phi = q / q.sum()
        D, gains = dev.differences(i)
        ents = dev.for_player(i)
        weights = {(e.action, e.report): float(p) for e, p in zip(ents, phi) if p > 1e-12}
        out.holds = False
        out.failure = UndetectedMixture(
            i, weights, float(-(phi @ gains)), float(np.abs(phi @ D).max()), res.farkas
        )
        break
    return out


def lpcore_failure(res: lpcore.LpResult) -> RuntimeError:
    from .scoring import NumericalFailure

    return NumericalFailure(f"{res.status.value}: {res.message}")


def eta_star_detectability(game: Game, a: Profile, i: int, eta: float, rhos=None) -> tuple[bool, str | None, DetectabilityResult | None]:
    """Detectability of every player other than ``i`` using only the others' messages.

    Returns whether some candidate reporting profile works, its name, and the
    last check performed.
    """
    rhos = rhos if rhos is not None else game.messages.candidate_rhos()
    others = [j for j in range(game.n) if j != i]
    last = None
    for name, rho in rhos:
        last = detectability(game, a, rho, eta, players=others, senders=others)
        if last.holds:
            return True, name, last
    return False, None, last


# --------------------------------------------------------------------------
# identifiability


class IdentMode(enum.Enum):
    RANK = "rank_sufficient"
    DUAL = "dual_certified"
    FAILS = "fails"


@dataclass
class IdentFailure:
    direction: np.ndarray
    weights: dict  # player -> {(action, report): q}
    budget_multiplier: np.ndarray  # d(m)
    objective: float  # sum_k q_k (gain_k + eta) > 0
    residual: float


@dataclass
class IdentifiabilityResult:
    holds: bool
    mode: IdentMode
    failure: IdentFailure | None = None
    directions_checked: int = 0


def pair_rank_sufficient(dev: DeviationSet, i: int, j: int) -> bool:
    Di, _ = dev.differences(i)
    Dj, _ = dev.differences(j)
    S = np.vstack([Di, Dj])
    if S.shape[0] == 0:
        return True
    if S.shape[0] > S.shape[1]:
        return False
    sv = np.linalg.svd(S, compute_uv=False)
    return bool(sv.min() > RANK_TOL)


def balanced_program(dev: DeviationSet, lam: np.ndarray, eta: float) -> lpcore.LinearProgram:
    from .scoring import transfer_program

    prog = transfer_program(dev, lam, eta, budget="==")
    prog.objective = np.zeros_like(prog.objective)
    return prog


def identifiability(game: Game, a: Profile, rho: RhoProfile, eta: float, grid: np.ndarray) -> IdentifiabilityResult:
    """Two-stage test.

    Stage one: for every pair of players the stacked distribution changes of
    all their deviations are linearly independent, so no linear dependence
    between two players' deviations can arise.  Stage two, when stage one is
    inconclusive: for every grid direction with at least two non-zero
    weights, transfers with ``sum_i lam_i x_i(m) = 0`` still make all
    deviations lose ``eta``.  A failure returns the dual ray.
    """
    dev = enumerate_deviations(game, a, rho, Closure.EXHAUSTIVE)
    if all(pair_rank_sufficient(dev, i, j) for i, j in itertools.combinations(range(game.n), 2)):
        return IdentifiabilityResult(True, IdentMode.RANK)
    checked = 0
    for lam in grid:
        if np.count_nonzero(np.abs(lam) > 1e-12) < 2:
            continue
        checked += 1
        prog = balanced_program(dev, lam, eta)
        res = lpcore.solve(prog)
        if res.status is lpcore.Status.OPTIMAL:
            continue
        if res.status is not lpcore.Status.INFEASIBLE:
            raise lpcore_failure(res)
        return IdentifiabilityResult(False, IdentMode.FAILS, _ident_failure(dev, lam, eta, res.farkas, game.n), checked)
    return IdentifiabilityResult(True, IdentMode.DUAL, directions_checked=checked)


def _ident_failure(dev: DeviationSet, lam: np.ndarray, eta: float, y: np.ndarray, n: int) -> IdentFailure:
    K = dev.on_path.size
    nrows = len(dev.entries)
    q = -y[:nrows]
    d = y[nrows:]
    weights, resid = {}, 0.0
    obj = 0.0
    pos = 0
    for i in range(n):
        D, gains = dev.differences(i)
        qi = q[pos:pos + len(gains)]
        pos += len(gains)
        ents = dev.for_player(i)
        weights[i] = {(e.action, e.report): float(w) for e, w in zip(ents, qi) if w > 1e-12}
        # dual constraint of the free variables x_i(m)
        resid = max(resid, float(np.abs(qi @ D - lam[i] * d).max(initial=0.0)) if K else 0.0)
        obj += float(qi @ (gains + eta))
    return IdentFailure(lam, weights, d, obj, resid)


# --------------------------------------------------------------------------
# verdict


@dataclass
class ProfileCheck:
    a: Profile
    label: str
    rho: str | None
    detectable: bool
    identifiable: bool
    mode: str
    detail: str = ""


@dataclass
class StarCheck:
    player: int
    which: str  # "best" or "minmax"
    a: Profile | None
    rho: str | None
    holds: bool


@dataclass
class ConditionReport:
    eta: float
    interior_nonempty: bool
    interior_radius: float
    best_response: BestResponseReport
    profiles: list[ProfileCheck]
    star: list[StarCheck]
    verdict: bool
    reasons: list[str]

    def to_dict(self) -> dict:
        d = asdict(self)
        return _jsonable(d)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, enum.Enum):
        return obj.value
    return obj


def folk_verdict(game: Game, eta: float, grid: np.ndarray | None = None, rhos=None) -> ConditionReport:
    """Evaluate every hypothesis of the folk theorem for ``eta``.

    Detectability and identifiability must hold with one shared reporting
    profile per extreme action profile; the starred detectability must hold
    at some strict best profile and some strict minmax profile of each player.
    """
    if not game.stage.normalized:
        raise ValueError("conditions need a normalized game")
    grid = convex.direction_grid(game.n) if grid is None else grid
    rhos = rhos if rhos is not None else game.messages.candidate_rhos()
    geo = payoff_geometry(game.stage, grid)
    reasons: list[str] = []
    if not geo.interior_nonempty:
        reasons.append("the individually rational payoff set has empty interior")
    br = best_response_property(game.stage, eta)
    reasons += br.failures

    checks = []
    for a in geo.extreme:
        found = None
        last_det, last_id = None, None
        for name, rho in rhos:
            det = detectability(game, a, rho, eta)
            last_det = det
            if not det.holds:
                continue
            idr = identifiability(game, a, rho, eta, grid)
            last_id = idr
            if idr.holds:
                found = ProfileCheck(a, game.stage.label(a), name, True, True, idr.mode.value)
                break
        if found is None:
            detail = ""
            if last_id is not None and last_id.failure is not None:
                detail = f"identifiability fails at direction {np.round(last_id.failure.direction, 6).tolist()}"
            elif last_det is not None and last_det.failure is not None:
                detail = f"undetected deviation of player {last_det.failure.player + 1}"
            found = ProfileCheck(a, game.stage.label(a), None, last_id is not None, False, IdentMode.FAILS.value, detail)
            reasons.append(f"profile {game.stage.label(a)}: no reporting profile passes detectability and identifiability")
        checks.append(found)

    star = []
    for i in range(game.n):
        for which, cands in (("best", br.best[i]), ("minmax", br.minmax[i])):
            rec = StarCheck(i, which, None, None, False)
            for a in cands:
                ok, name, _ = eta_star_detectability(game, a, i, eta, rhos)
                if ok:
                    rec = StarCheck(i, which, a, name, True)
                    break
            if not rec.holds:
                reasons.append(f"player {i + 1}: starred detectability fails at every strict {which} profile")
            star.append(rec)

    verdict = not reasons
    return ConditionReport(eta, geo.interior_nonempty, float(geo.interior_radius), br, checks, star, verdict, reasons)
