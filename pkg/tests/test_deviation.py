import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from usppe import instances
from usppe.deviation import Closure, enumerate_deviations


@pytest.fixture(scope="module")
def game():
    return instances.noisy_pd()


@pytest.mark.parametrize("closure, per_player", [
    (Closure.CONSERVATIVE, 7),
    (Closure.EXHAUSTIVE, 7),
    (Closure.RELAXED, 4),
])
def test_counts_at_truthful_cooperation(game, closure, per_player):
    dev = enumerate_deviations(game, (0, 0), game.messages.truthful(), closure)
    assert dev.count(0) == dev.count(1) == per_player


def test_relaxed_has_no_message_only_deviations(game):
    dev = enumerate_deviations(game, (0, 0), game.messages.truthful(), Closure.RELAXED)
    assert not any(e.message_only for e in dev.entries)
    assert all(e.action != 0 for e in dev.for_player(0))


def test_conservative_drops_invisible_message_deviations(game):
    # player 2 is not a sender, so its report cannot change the column
    dev = enumerate_deviations(game, (0, 0), game.messages.truthful(), Closure.CONSERVATIVE, senders=[0])
    assert not any(e.message_only for e in dev.for_player(1))
    # its action deviation is still there (once, after deduplication)
    assert dev.count(1) == 1
    ex = enumerate_deviations(game, (0, 0), game.messages.truthful(), Closure.EXHAUSTIVE, senders=[0])
    assert any(e.message_only for e in ex.for_player(1))


def test_differences_rows_and_gains(game):
    dev = enumerate_deviations(game, (0, 0), game.messages.truthful())
    D, gains = dev.differences(0)
    np.testing.assert_allclose(D.sum(axis=1), 0, atol=1e-12)
    for e, g in zip(dev.for_player(0), gains):
        assert g == pytest.approx(1.0 if e.action == 1 else 0.0)


def test_columns_are_distributions(game):
    for a in game.stage.profiles():
        for _, rho in game.messages.candidate_rhos():
            dev = enumerate_deviations(game, a, rho, Closure.EXHAUSTIVE)
            cols = np.array([e.column for e in dev.entries])
            np.testing.assert_allclose(cols.sum(axis=1), 1.0, atol=1e-12)
            assert np.all(cols >= -1e-15)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_closure_nesting(seed):
    rng = np.random.default_rng(seed)
    g = instances.random_game(rng, 2, 2)
    rho = g.messages.truthful()
    a = tuple(int(x) for x in rng.integers(0, 2, size=2))
    keys = {}
    for c in Closure:
        dev = enumerate_deviations(g, a, rho, c)
        keys[c] = {(e.player, e.action, e.report) for e in dev.entries}
    assert keys[Closure.RELAXED] <= keys[Closure.CONSERVATIVE] <= keys[Closure.EXHAUSTIVE]


def test_sender_marginals_match_full_columns(game):
    rho = game.messages.truthful()
    full = enumerate_deviations(game, (1, 0), rho, Closure.EXHAUSTIVE)
    part = enumerate_deviations(game, (1, 0), rho, Closure.EXHAUSTIVE, senders=[1])
    np.testing.assert_allclose(part.on_path, full.on_path.reshape(2, 2).sum(axis=0))
    lookup = {(e.player, e.action, e.report): e.column for e in full.entries}
    for e in part.entries:
        key = (e.player, e.action, e.report)
        if key in lookup:
            np.testing.assert_allclose(e.column, lookup[key].reshape(2, 2).sum(axis=0), atol=1e-12)
