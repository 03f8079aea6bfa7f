import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from usppe import convex
from usppe.convex import Kind


def random_polygon(rng, k=7, center=(0, 0), scale=1.0):
    pts = rng.normal(size=(k, 2)) * scale + np.asarray(center)
    return convex.convex_hull_2d(pts)


def boundary_samples(poly, per_edge=150):
    out = []
    for p, q in zip(poly, np.roll(poly, -1, axis=0)):
        t = np.linspace(0, 1, per_edge, endpoint=False)[:, None]
        out.append(p + t * (q - p))
    return np.vstack(out)


def brute_hausdorff(P, Q):
    a = max(convex.point_polygon_distance(p, Q) for p in boundary_samples(P))
    b = max(convex.point_polygon_distance(q, P) for q in boundary_samples(Q))
    return max(a, b)


def test_grid_shapes_and_kinds():
    g2 = convex.direction_grid(2, 360)
    assert g2.shape == (360, 2)
    np.testing.assert_allclose(np.linalg.norm(g2, axis=1), 1.0)
    assert convex.classify(g2[0]) == (Kind.PLUS, 0)
    assert convex.classify(g2[90]) == (Kind.PLUS, 1)
    assert convex.classify(g2[180]) == (Kind.MINUS, 0)
    assert convex.classify(g2[45])[0] is Kind.REGULAR
    g3 = convex.direction_grid(3, 200)
    assert g3.shape == (206, 3)
    kinds = [convex.classify(u)[0] for u in g3]
    assert kinds.count(Kind.PLUS) == 3 and kinds.count(Kind.MINUS) == 3


def test_resolution_is_adjacent_spacing():
    assert convex.grid_resolution(convex.direction_grid(2, 360)) == pytest.approx(2 * np.pi / 360)
    assert convex.grid_resolution(convex.direction_grid(2, 7)) == pytest.approx(2 * np.pi / 7)
    r3 = convex.grid_resolution(convex.direction_grid(3, 400))
    assert 0.05 < r3 < 0.4


def test_hull_and_area():
    pts = np.array([[0, 0], [2, 0], [2, 2], [0, 2], [1, 1], [1, 0]], float)
    hull = convex.convex_hull_2d(pts)
    assert len(hull) == 4
    assert convex.polygon_area(hull) == pytest.approx(4.0)
    clipped = convex.clip_polygon(hull, np.array([1.0, 1.0]), 2.0)
    assert convex.polygon_area(clipped) == pytest.approx(2.0)


def test_square_from_support():
    grid = convex.direction_grid(2, 8)
    sq = convex.from_points(np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float), grid)
    again = convex.from_support(grid, sq.support)
    assert convex.polygon_hausdorff(sq.vertices, again.vertices) < 1e-12
    c, r = convex.chebyshev_center(sq.normals, sq.offsets)
    np.testing.assert_allclose(c, [0.5, 0.5], atol=1e-9)
    assert r == pytest.approx(0.5)
    assert sq.contains(np.array([1.0, 1.0])) and not sq.in_interior(np.array([1.0, 1.0]))
    assert sq.diameter() == pytest.approx(np.sqrt(2))


def test_empty_intersection():
    grid = convex.direction_grid(2, 4)
    e = convex.from_support(grid, np.array([-1.0, 0.0, 0.0, 0.0]))
    assert e.empty
    with pytest.raises(ValueError):
        e.argmax(np.array([1.0, 0.0]))


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_exact_hausdorff_against_sampling(seed):
    rng = np.random.default_rng(seed)
    P = random_polygon(rng)
    Q = random_polygon(rng, center=rng.normal(size=2) * 0.3)
    exact = convex.polygon_hausdorff(P, Q)
    brute = brute_hausdorff(P, Q)
    # sampling can only miss the maximiser by the sample spacing
    assert brute <= exact + 1e-12
    spacing = max(np.linalg.norm(np.diff(np.vstack([X, X[:1]]), axis=0), axis=1).max() for X in (P, Q)) / 150
    assert exact <= brute + spacing + 1e-12


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_grid_hausdorff_bounded_by_exact(seed):
    rng = np.random.default_rng(seed)
    grid = convex.direction_grid(2, 360)
    A = convex.from_points(random_polygon(rng), grid)
    B = convex.from_points(random_polygon(rng), grid)
    exact = convex.polygon_hausdorff(A.vertices, B.vertices)
    assert convex.hausdorff(A, B) <= exact + 1e-12
    # for convex sets the support distance over all directions equals the Hausdorff distance
    # and the support difference is Lipschitz in the angle, so a fine grid gets close
    K = 4000
    fine = convex.direction_grid(2, K)
    A2, B2 = convex.from_points(A.vertices, fine), convex.from_points(B.vertices, fine)
    lip = 2 * max(np.linalg.norm(A.vertices, axis=1).max(), np.linalg.norm(B.vertices, axis=1).max())
    assert exact - lip * np.pi / K - 1e-12 <= convex.hausdorff(A2, B2) <= exact + 1e-12


def test_rounded_set_geometry():
    grid = convex.direction_grid(2, 360)
    core = convex.from_points(np.array([[0, 0], [1, 0], [0, 1]], float), grid)
    R = convex.rounded(core, 0.25)
    np.testing.assert_allclose(R.support, core.support + 0.25)
    assert R.support_at(np.array([-1.0, -1.0]) / np.sqrt(2)) == pytest.approx(0.25)
    assert R.signed_margin(np.array([0.2, 0.2])) == pytest.approx(0.25)
    assert R.in_interior(np.array([1.2, 0.0])) and not R.in_interior(np.array([1.25, 0.0]))
    u = np.array([0.6, 0.8])
    p = R.boundary_point(u)
    assert R.signed_margin(p) == pytest.approx(0.0, abs=1e-12)
    assert u @ p == pytest.approx(R.support_at(u))
    with pytest.raises(ValueError):
        convex.rounded(core, 0.0)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10**6), eps=st.floats(0.02, 0.2))
def test_smooth_inner_lies_in_interior(seed, eps):
    rng = np.random.default_rng(seed)
    grid = convex.direction_grid(2, 360)
    W = convex.from_points(random_polygon(rng, k=9, scale=2.0), grid)
    S = convex.smooth_inner(W, eps, eps / 2)
    if S.empty:
        return
    for u in grid[::15]:
        assert W.signed_margin(S.boundary_point(u)) >= eps / 2 - 1e-9
    assert np.all(S.support <= W.support - eps / 2 + 1e-9)
    assert convex.hausdorff(S, W) <= convex.polygon_hausdorff(S.vertices, W.vertices) + 1e-9


def test_smooth_inner_of_square_is_not_uniform():
    # corners move by sqrt(2) times the erosion depth, edges by the depth
    grid = convex.direction_grid(2, 8)
    sq = convex.from_points(np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float), grid)
    S = convex.smooth_inner(sq, 0.2, 0.1)
    diff = sq.support - S.support
    np.testing.assert_allclose(diff[::2], 0.1, atol=1e-12)
    np.testing.assert_allclose(diff[1::2], 0.2 * np.sqrt(2) - 0.1, atol=1e-12)


def test_scaled_about_center():
    grid = convex.direction_grid(2, 8)
    sq = convex.from_points(np.array([[0, 0], [2, 0], [2, 2], [0, 2]], float), grid)
    half = convex.scaled(sq, 0.5)
    expect = np.array([[0.5, 0.5], [1.5, 0.5], [1.5, 1.5], [0.5, 1.5]])
    assert convex.polygon_hausdorff(half.vertices, expect) < 1e-9


def test_cube_in_three_dimensions():
    grid = convex.direction_grid(3, 100)
    normals = np.vstack([np.eye(3), -np.eye(3)])
    cube = convex.from_halfspaces(normals, np.ones(6), grid)
    np.testing.assert_allclose(cube.support, np.abs(grid).sum(axis=1), atol=1e-9)
    pts = convex.from_points(np.array(np.meshgrid([-1, 1], [-1, 1], [-1, 1])).reshape(3, -1).T, grid)
    assert convex.hausdorff(cube, pts) < 1e-9
    assert cube.contains(np.zeros(3)) and not cube.contains(np.array([1.1, 0, 0]))


def test_csv_round_trip_is_exact(tmp_path):
    rng = np.random.default_rng(5)
    grid = convex.direction_grid(2, 36)
    h = rng.normal(size=36)
    p = tmp_path / "t.csv"
    convex.write_support_csv(p, grid, {"support": h}, {"note": ["x"] * 36})
    lines = p.read_text().splitlines()
    assert lines[0] == "# usppe support-table v1"
    assert lines[1] == "lambda_1,lambda_2,support,note"
    g2, h2 = convex.read_support_csv(p)
    np.testing.assert_array_equal(g2, grid)
    np.testing.assert_array_equal(h2, h)
    with pytest.raises(ValueError):
        convex.read_support_csv(p, "missing")


def test_svg_output():
    grid = convex.direction_grid(2, 36)
    sq = convex.from_points(np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float), grid)
    svg = convex.svg_sets([(sq, "#ff0000"), (convex.rounded(sq, 0.1), "#00ff00")])
    assert svg.startswith("<svg") and svg.count("<polygon") == 2
