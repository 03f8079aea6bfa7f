import numpy as np
import pytest

from usppe import aps, convex, instances, scoring

DELTA = 1 - 2.0**-9


@pytest.fixture(scope="module")
def game():
    return instances.noisy_pd()


@pytest.fixture(scope="module")
def lower_set(game):
    return scoring.bounding_set(game, 0.1, side="lower", upper=False).region


@pytest.fixture(scope="module")
def disk(lower_set):
    c = lower_set.center()
    return convex.rounded(convex.from_points(c[None, :], lower_set.grid), 0.2)


def test_mesh_constants():
    assert len(aps.DELTA_MESH) == 20
    assert aps.DELTA_MESH[0] == 0.5 and aps.DELTA_MESH[-1] == 1 - 2.0**-20


def test_mesh_points(disk):
    pts, dirs = aps.mesh_points(disk, 32)
    assert pts.shape == (33, 2)
    np.testing.assert_allclose([disk.signed_margin(p) for p in pts[:-1]], 0.0, atol=1e-12)
    assert disk.signed_margin(pts[-1]) == pytest.approx(0.2)
    assert not np.any(dirs[-1])


def test_static_equilibrium_decomposes(game):
    # (D, D) is a strict stage equilibrium; the continuation only has to punish
    # misreports.  Inverting the report moves 2.5% of the message mass, so the
    # spread needed is (1 - delta) eta / (0.025 delta), 0.44 at delta = 0.9
    grid = convex.direction_grid(2, 72)
    W = convex.rounded(convex.from_points(np.zeros((1, 2)), grid), 0.5)
    assert not aps.b_operator_membership(game, np.zeros(2), W, 0.5, 0.1).certified
    dd = [c for c in aps.candidates(game) if c.a == (1, 1)]
    for delta in (0.9, 0.99):
        dec = aps.b_operator_membership(game, np.zeros(2), W, delta, 0.1, dd)
        assert dec.certified
        rep = aps.replay(game, np.zeros(2), W, delta, 0.1, dec.candidate, dec.continuation, aps.default_margin(W))
        assert max(rep.values()) <= 1e-8


def test_far_point_fails(game, disk):
    dec = aps.b_operator_membership(game, np.array([3.0, 3.0]), disk, DELTA, 0.1)
    assert not dec.certified and dec.summary


def test_certified_decomposition_replays(game, disk):
    v = disk.center()
    dec = aps.b_operator_membership(game, v, disk, DELTA, 0.1, aps.candidates(game))
    assert dec.certified
    rep = aps.replay(game, v, disk, DELTA, 0.1, dec.candidate, dec.continuation, aps.default_margin(disk))
    assert max(rep.values()) <= 1e-8


def test_larger_set_keeps_decomposition(game, disk, lower_set):
    # enlarging the continuation set can only help
    big = convex.rounded(convex.from_points(lower_set.center()[None, :], lower_set.grid), 0.3)
    pts, dirs = aps.mesh_points(disk, 8)
    for p in pts[:3]:
        small = aps.b_operator_membership(game, p, disk, DELTA, 0.1)
        if small.certified:
            assert aps.b_operator_membership(game, p, big, DELTA, 0.1).certified


def test_rescale_is_a_convex_combination():
    rng = np.random.default_rng(0)
    v = rng.normal(size=2)
    w = rng.normal(size=(2, 4))
    for d, d2 in [(0.5, 0.75), (0.9, 0.99), (0.99, 0.999)]:
        new = aps.rescale(v, w, d, d2)
        a = (d2 - d) / (d2 * (1 - d))
        np.testing.assert_allclose(new, a * v[:, None] + (1 - a) * w, atol=1e-12)
        # incentive gaps scale by (1 - d2)/(1 - d) relative to the discount weights
        np.testing.assert_allclose(d2 * (new[:, 0] - new[:, 1]) / (1 - d2), d * (w[:, 0] - w[:, 1]) / (1 - d))
    np.testing.assert_allclose(aps.rescale(v, w, 0.9, 0.9), w)


def test_rescaled_scheme_replays(game, disk):
    v = disk.center()
    dec = aps.b_operator_membership(game, v, disk, DELTA, 0.1)
    margin = aps.default_margin(disk)
    for d2 in (DELTA + (1 - DELTA) * t for t in (0.3, 0.6, 0.95)):
        w2 = aps.rescale(v, dec.continuation, DELTA, d2)
        rep = aps.replay(game, v, disk, d2, 0.1, dec.candidate, w2, margin)
        assert max(rep.values()) <= 1e-8


def test_boundary_scheme(game, disk):
    u = np.array([1.0, 1.0]) / np.sqrt(2)
    bs = aps.decompose_boundary(game, disk, u, 0.1)
    assert bs.certified and 0 < bs.threshold < 1
    for d in (bs.threshold + (1 - bs.threshold) * t for t in (0.01, 0.5, 0.99)):
        w = bs.continuation(d)
        assert all(disk.in_interior(w[:, m]) for m in range(w.shape[1]))
        rep = aps.replay(game, bs.point, disk, d, 0.1, bs.candidate, w)
        assert rep["promise"] <= 1e-8 and rep["incentive"] <= 1e-8
        np.testing.assert_allclose(d / (1 - d) * (w - bs.point[:, None]), bs.shifted, atol=1e-10)


def test_boundary_scheme_outside_scores(game, lower_set):
    big = convex.rounded(lower_set, 0.8)
    bs = aps.decompose_boundary(game, big, np.array([1.0, 0.0]), 0.1)
    assert not bs.certified and "does not exceed" in bs.reason


def test_inflated_set_fails_everywhere(game, lower_set):
    big = convex.rounded(lower_set, 0.3)
    for d in aps.DELTA_MESH[::4]:
        assert not aps.self_decomposable(game, big, d, 0.1, 8).certified


def test_find_delta_bar_audit(game, disk):
    res = aps.find_delta_bar(game, disk, 0.1, 8, mesh=aps.DELTA_MESH[6:10], full_audit=True)
    assert res.monotone
    assert len(res.evaluated) == 4
    if res.delta_bar is not None:
        assert res.evaluated[res.delta_bar]
