import copy
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from usppe import convex, instances
from usppe.document import dump_game, game_from_dict, game_to_dict, load_game
from usppe.game import (MessageModel, MonitoringStructure, StageGame, ValidationError, extreme_profiles,
                        induced_kernel, payoff_geometry)


def pd_doc():
    return game_to_dict(instances.noisy_pd(normalized=False))


def test_pd_minmax_and_normalization():
    stage = instances.prisoners_dilemma()
    np.testing.assert_array_equal(stage.minmax(), [1, 1])
    norm, mm = stage.normalize()
    assert norm.normalized
    np.testing.assert_array_equal(norm.minmax(), [0, 0])
    np.testing.assert_array_equal(norm.payoff((0, 0)), [1, 1])
    np.testing.assert_array_equal(norm.payoff((1, 0)), [2, -1])


def test_deviation_payoffs_and_labels():
    stage = instances.prisoners_dilemma()
    np.testing.assert_array_equal(stage.deviation_payoffs(0, (0, 1)), [0, 1])
    np.testing.assert_array_equal(stage.deviation_payoffs(1, (0, 1)), [2, 3])
    assert stage.label((1, 0)) == "D,C"


def test_every_pd_profile_is_extreme():
    stage, _ = instances.prisoners_dilemma().normalize()
    assert extreme_profiles(stage) == [(0, 0), (0, 1), (1, 0), (1, 1)]


def test_interior_payoff_is_not_extreme():
    pay = np.array([[[0, 0], [2, 0]], [[0, 2], [0.5, 0.5]]], float)
    stage = StageGame(("1", "2"), (("a", "b"), ("a", "b")), pay)
    assert (1, 1) not in extreme_profiles(stage)


def test_payoff_geometry_of_pd():
    stage, _ = instances.prisoners_dilemma().normalize()
    grid = convex.direction_grid(2, 360)
    geo = payoff_geometry(stage, grid)
    assert geo.interior_nonempty and not geo.degenerate
    expect = np.array([[0, 0], [1.5, 0], [1, 1], [0, 1.5]])
    assert convex.polygon_hausdorff(geo.individually_rational.vertices, expect) < 1e-9


def test_payoff_geometry_needs_normalized_game():
    with pytest.raises(ValidationError):
        payoff_geometry(instances.prisoners_dilemma(), convex.direction_grid(2, 8))


def test_common_interest_segment_is_degenerate():
    pay = np.array([[[1, 1], [0, 0]], [[0, 0], [0, 0]]], float)
    stage = StageGame(("1", "2"), (("a", "b"), ("a", "b")), pay, normalized=True)
    geo = payoff_geometry(stage, convex.direction_grid(2, 72))
    assert not geo.interior_nonempty


@pytest.mark.parametrize("mutate, fragment", [
    (lambda d: d.pop("kernel"), "missing section"),
    (lambda d: d.__setitem__("payoffs", d["payoffs"][:-1]), "payoffs has 7 entries"),
    (lambda d: d["payoffs"].__setitem__(0, float("nan")), "non-finite payoff"),
    (lambda d: d["kernel"].__setitem__(0, d["kernel"][0] + 0.01), "not a distribution"),
    (lambda d: d["actions"][0].__setitem__(1, "C"), "duplicate action"),
    (lambda d: d["rhos"][0]["maps"][0].__setitem__("c", "z"), "unknown message"),
])
def test_invalid_documents(mutate, fragment):
    doc = pd_doc()
    mutate(doc)
    with pytest.raises(ValidationError, match=fragment):
        game_from_dict(doc)


def test_full_support_violation_reports_profile():
    doc = pd_doc()
    # player 1 never observes "d" after (C, C)
    k = np.array(doc["kernel"]).reshape(2, 2, 2, 2)
    k[0, 0] = [[0.5, 0.5], [0, 0]]
    doc["kernel"] = k.ravel().tolist()
    with pytest.raises(ValidationError, match="full-support") as info:
        game_from_dict(doc)
    assert info.value.index == (0, 0)


def test_kernel_tolerance_at_boundary():
    doc = pd_doc()
    doc["kernel"][0] += 3e-12  # within 1e-12 * |S|
    game_from_dict(doc)
    doc["kernel"][0] += 1e-10
    with pytest.raises(ValidationError):
        game_from_dict(doc)


def test_normalized_flag_is_checked():
    doc = pd_doc()
    doc["params"]["normalized"] = True
    with pytest.raises(ValidationError, match="minmax"):
        game_from_dict(doc)


def test_document_round_trip(tmp_path):
    game = instances.noisy_pd()
    path = tmp_path / "g.json"
    dump_game(game, path)
    back = load_game(path)
    np.testing.assert_array_equal(back.stage.payoffs, game.stage.payoffs)
    np.testing.assert_array_equal(back.monitoring.kernel, game.monitoring.kernel)
    assert back.messages.named_rhos == game.messages.named_rhos
    assert back.stage.normalized
    assert game_to_dict(back) == game_to_dict(game)


def test_messages_default_to_signals():
    doc = pd_doc()
    doc.pop("messages")
    doc.pop("rhos")
    game = game_from_dict(doc)
    assert game.messages.messages == game.monitoring.signals
    assert game.messages.truthful() == ((0, 1), (0, 1))


def test_not_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{ nope")
    with pytest.raises(ValidationError, match="JSON"):
        load_game(p)


def test_enumeration_cap():
    sigs = (tuple("abcd"),) * 2
    assert len(MessageModel(sigs, sigs, enumeration_cap=1000).player_maps(0)) == 4**4
    model = MessageModel(sigs, sigs, enumeration_cap=100)
    with pytest.raises(ValidationError, match="cap"):
        model.player_maps(0)


def test_message_distribution_marginals():
    game = instances.noisy_pd()
    rho = game.messages.truthful()
    full = game.message_distribution((0, 1), rho)
    assert full.sum() == pytest.approx(1.0)
    np.testing.assert_allclose(full, game.monitoring.kernel[0, 1].ravel())
    only2 = game.message_distribution((0, 1), rho, senders=[1])
    np.testing.assert_allclose(only2, full.reshape(2, 2).sum(axis=0))
    quiet = game.message_distribution((0, 1), ((0, 0), (0, 1)))
    np.testing.assert_allclose(quiet.reshape(2, 2).sum(axis=1), [1, 0])


def test_induced_kernel_covers_every_alternative():
    game = instances.noisy_pd()
    on, devs = induced_kernel(game, (0, 0), game.messages.truthful())
    # 2 actions x 4 report maps minus the on-path pair, per player
    assert len(devs) == 2 * 7
    for col in devs.values():
        assert col.sum() == pytest.approx(1.0)
    np.testing.assert_allclose(devs[(0, 0, (1, 0))], on.reshape(2, 2)[::-1].ravel())


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), perm=st.permutations([0, 1, 2]))
def test_relabeling_actions_permutes_everything(seed, perm):
    rng = np.random.default_rng(seed)
    game = instances.random_game(rng, 2, 3, normalized=False)
    stage = game.stage
    pay = stage.payoffs[list(perm)]
    acts = (tuple(stage.actions[0][k] for k in perm), stage.actions[1])
    other = StageGame(stage.players, acts, pay)
    np.testing.assert_allclose(other.minmax(), stage.minmax())
    ext = {stage.label(a) for a in extreme_profiles(stage)}
    assert {other.label(a) for a in extreme_profiles(other)} == ext


def test_monitoring_shape_mismatch():
    stage = instances.prisoners_dilemma()
    mon = MonitoringStructure((("x",), ("x",)), np.ones((2, 2, 1)))
    with pytest.raises(ValidationError, match="kernel has shape"):
        mon.validate(stage)


def test_doc_is_plain_json():
    json.dumps(copy.deepcopy(pd_doc()))
