"""Convex sets described by support values on a grid of directions.

A :class:`ConvexSetRep` always carries the support value ``h(lambda_k)`` on
its direction grid together with a half-space description.  In the plane it
also carries the exact polygon.  Smooth sets ``core + radius * ball`` keep
their core, so that exact support values, boundary points and interior tests
remain available; their half-space description is the set of tangent lines
at the grid directions.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial import ConvexHull, HalfspaceIntersection, QhullError

from . import lp as lpcore

GEOM_TOL = 1e-9
CSV_SCHEMA = "# usppe support-table v1"


# --------------------------------------------------------------------------
# direction grids


class Kind(enum.Enum):
    PLUS = "plus"
    MINUS = "minus"
    REGULAR = "regular"


def classify(direction: np.ndarray, tol: float = 1e-12) -> tuple[Kind, int | None]:
    """Whether ``direction`` is ``+e_i``, ``-e_i`` or regular."""
    lam = np.asarray(direction, float)
    big = np.flatnonzero(np.abs(lam) > tol)
    if big.size == 1 and abs(abs(lam[big[0]]) - 1.0) <= tol:
        i = int(big[0])
        return (Kind.PLUS, i) if lam[i] > 0 else (Kind.MINUS, i)
    return Kind.REGULAR, None


def _snap(v: np.ndarray) -> np.ndarray:
    v = np.where(np.abs(v) < 1e-15, 0.0, v)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def direction_grid(n: int, size: int = 360, seed: int | None = 0) -> np.ndarray:
    """Unit directions used to describe sets in R^n.

    In the plane these are ``size`` equally spaced angles starting at ``e_1``.
    In higher dimension the grid is a Fibonacci lattice (n = 3) or a seeded
    Gaussian sample (n > 3), plus the ``2n`` signed coordinate directions.
    """
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        t = 2 * np.pi * np.arange(size) / size
        return _snap(np.column_stack([np.cos(t), np.sin(t)]))
    if n == 3:
        k = np.arange(size) + 0.5
        z = 1 - 2 * k / size
        phi = np.pi * (1 + 5**0.5) * k
        r = np.sqrt(1 - z**2)
        pts = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    else:
        pts = np.random.default_rng(seed).normal(size=(size, n))
    eye = np.vstack([np.eye(n), -np.eye(n)])
    return _snap(np.vstack([pts, eye]))


def grid_resolution(grid: np.ndarray, probes: int = 20000, seed: int = 0) -> float:
    """Angular spacing (radians) between neighbouring grid directions.

    In the plane this is the largest gap between adjacent angles.  In higher
    dimensions it is twice the covering radius, estimated from random probes,
    which reduces to the same quantity for planar grids.
    """
    n = grid.shape[1]
    if n == 2:
        ang = np.sort(np.arctan2(grid[:, 1], grid[:, 0]))
        gaps = np.diff(np.concatenate([ang, [ang[0] + 2 * np.pi]]))
        return float(gaps.max())
    p = _snap(np.random.default_rng(seed).normal(size=(probes, n)))
    cos = np.clip((p @ grid.T).max(axis=1), -1, 1)
    return float(2 * np.arccos(cos).max())


# --------------------------------------------------------------------------
# planar primitives


def convex_hull_2d(points: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Counter-clockwise hull vertices by Andrew's monotone chain (collinear points dropped)."""
    pts = np.unique(np.round(np.asarray(points, float), 15), axis=0)
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list[np.ndarray] = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= tol:
            lower.pop()
        lower.append(p)
    upper: list[np.ndarray] = []
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= tol:
            upper.pop()
        upper.append(p)
    hull = np.array(lower[:-1] + upper[:-1])
    return hull if len(hull) else pts[:1]


def clip_polygon(poly: np.ndarray, normal: np.ndarray, offset: float, tol: float = 1e-12) -> np.ndarray:
    """Intersect a convex polygon (any vertex count) with ``normal . v <= offset``."""
    if len(poly) == 0:
        return poly
    d = poly @ normal - offset
    if np.all(d <= tol):
        return poly
    if np.all(d > tol):
        return np.zeros((0, 2))
    out = []
    m = len(poly)
    for k in range(m):
        p, q = poly[k], poly[(k + 1) % m]
        dp, dq = d[k], d[(k + 1) % m]
        if dp <= tol:
            out.append(p)
        if (dp < -tol and dq > tol) or (dp > tol and dq < -tol):
            out.append(p + dp / (dp - dq) * (q - p))
    return _dedupe(np.array(out))


def _dedupe(poly: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    if len(poly) <= 1:
        return poly
    keep = [poly[0]]
    for p in poly[1:]:
        if np.max(np.abs(p - keep[-1])) > tol:
            keep.append(p)
    if len(keep) > 1 and np.max(np.abs(keep[0] - keep[-1])) <= tol:
        keep.pop()
    return np.array(keep)


def polygon_from_halfspaces(normals: np.ndarray, offsets: np.ndarray, box: float) -> np.ndarray:
    poly = box * np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])
    for nrm, off in zip(normals, offsets):
        poly = clip_polygon(poly, nrm, off)
        if len(poly) == 0:
            break
    return poly


def polygon_edges(poly: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Outward unit normals and offsets of the edges of a CCW polygon with area."""
    nrm, off = [], []
    for k in range(len(poly)):
        p, q = poly[k], poly[(k + 1) % len(poly)]
        e = q - p
        length = np.hypot(*e)
        if length <= 1e-14:
            continue
        u = np.array([e[1], -e[0]]) / length
        nrm.append(u)
        off.append(u @ p)
    return np.array(nrm).reshape(-1, 2), np.array(off)


def polygon_area(poly: np.ndarray) -> float:
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def point_polygon_distance(p: np.ndarray, poly: np.ndarray) -> float:
    """Euclidean distance from ``p`` to a convex polygon (0 inside)."""
    if len(poly) == 0:
        return math.inf
    if len(poly) == 1:
        return float(np.linalg.norm(p - poly[0]))
    if len(poly) >= 3:
        nrm, off = polygon_edges(poly)
        if np.all(nrm @ p <= off):
            return 0.0
    best = math.inf
    m = len(poly)
    for k in range(m if m > 2 else 1):
        a, b = poly[k], poly[(k + 1) % m]
        ab = b - a
        t = np.clip((p - a) @ ab / max(ab @ ab, 1e-300), 0.0, 1.0)
        best = min(best, float(np.linalg.norm(p - a - t * ab)))
    return best


# --------------------------------------------------------------------------
# general-dimension primitives


def chebyshev_center(normals: np.ndarray, offsets: np.ndarray, cap: float | None = None) -> tuple[np.ndarray | None, float]:
    """Centre and radius of the largest ball inside ``{normals @ v <= offsets}``.

    Returns ``(None, -inf)`` when the system is infeasible.
    """
    n = normals.shape[1]
    if cap is None:
        cap = 10.0 * (1.0 + float(np.abs(offsets[np.isfinite(offsets)]).max(initial=1.0)))
    norms = np.linalg.norm(normals, axis=1)
    A = np.column_stack([normals, norms])
    c = np.zeros(n + 1)
    c[-1] = 1.0
    upper = np.full(n + 1, np.inf)
    upper[-1] = cap
    lower = np.full(n + 1, -np.inf)
    res = lpcore.solve(lpcore.LinearProgram(c, A, ["<="] * len(offsets), offsets, lower, upper))
    if res.status is not lpcore.Status.OPTIMAL:
        return None, -math.inf
    return res.x[:n], float(res.x[-1])


def support_of_halfspaces(normals: np.ndarray, offsets: np.ndarray, grid: np.ndarray) -> tuple[np.ndarray, np.ndarray | None]:
    """Support values on ``grid`` of a bounded H-polytope, and its vertices when available."""
    center, radius = chebyshev_center(normals, offsets)
    if center is None or radius < -GEOM_TOL:
        return np.full(len(grid), -np.inf), None
    if radius > 1e-9:
        try:
            hs = HalfspaceIntersection(np.column_stack([normals, -offsets]), center)
            verts = hs.intersections
            return (verts @ grid.T).max(axis=0), verts
        except QhullError:
            pass
    h = np.empty(len(grid))
    for k, lam in enumerate(grid):
        res = lpcore.solve(lpcore.LinearProgram(lam, normals, ["<="] * len(offsets), offsets))
        h[k] = res.value if res.optimal else -np.inf
    return h, None


# --------------------------------------------------------------------------
# the representation


@dataclass(eq=False)
class ConvexSetRep:
    grid: np.ndarray
    support: np.ndarray
    normals: np.ndarray
    offsets: np.ndarray
    vertices: np.ndarray | None = None  # planar polygon (CCW) of the half-space description
    core: ConvexSetRep | None = None  # set is core + radius * ball when radius > 0
    radius: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.grid.shape[1]

    @property
    def empty(self) -> bool:
        return bool(np.any(~np.isfinite(self.support))) or (self.vertices is not None and len(self.vertices) == 0)

    def support_at(self, u: np.ndarray) -> float:
        """Exact support value in direction ``u`` (not restricted to the grid)."""
        u = np.asarray(u, float)
        if self.core is not None:
            return self.core.support_at(u) + self.radius * float(np.linalg.norm(u))
        if self.vertices is not None:
            return float((self.vertices @ u).max()) if len(self.vertices) else -math.inf
        res = lpcore.solve(lpcore.LinearProgram(u, self.normals, ["<="] * len(self.offsets), self.offsets))
        return res.value if res.optimal else -math.inf

    def argmax(self, u: np.ndarray) -> np.ndarray:
        """A point of the set maximising ``u . v`` (the midpoint of a maximising edge)."""
        u = np.asarray(u, float)
        if self.empty:
            raise ValueError("argmax of an empty set")
        if self.core is not None:
            return self.core.argmax(u) + self.radius * u / np.linalg.norm(u)
        if self.vertices is not None:
            vals = self.vertices @ u
            top = self.vertices[vals >= vals.max() - 1e-12 * max(1.0, abs(vals.max()))]
            return top.mean(axis=0)
        res = lpcore.solve(lpcore.LinearProgram(u, self.normals, ["<="] * len(self.offsets), self.offsets))
        return res.x

    def distance(self, p: np.ndarray) -> float:
        """Euclidean distance from ``p`` (exact in the plane, grid-based lower bound otherwise)."""
        p = np.asarray(p, float)
        if self.core is not None:
            return max(self.core.distance(p) - self.radius, 0.0)
        if self.vertices is not None:
            return point_polygon_distance(p, self.vertices)
        return max(float((self.grid @ p - self.support).max()), 0.0)

    def signed_margin(self, p: np.ndarray) -> float:
        """How far inside the set ``p`` lies (negative outside).

        For smooth sets this is ``radius - dist(p, core)`` which is positive
        exactly on the interior; for polytopes it is the smallest slack of the
        half-space description.
        """
        p = np.asarray(p, float)
        if self.core is not None:
            return self.radius - self.core.distance(p)
        return float((self.offsets - self.normals @ p).min())

    def contains(self, p: np.ndarray, tol: float = GEOM_TOL) -> bool:
        return self.signed_margin(p) >= -tol

    def in_interior(self, p: np.ndarray, tol: float = 0.0) -> bool:
        return self.signed_margin(p) > tol

    def diameter(self) -> float:
        if self.vertices is not None and len(self.vertices):
            v = self.vertices
            base = float(np.max(np.linalg.norm(v[:, None, :] - v[None, :, :], axis=-1)))
            return base + 2 * self.radius if self.core is not None else base
        # width along grid directions bounds the diameter from below
        h = self.support
        best = 0.0
        for k, lam in enumerate(self.grid):
            j = int(np.argmin(self.grid @ lam))
            best = max(best, h[k] + h[j])
        return best

    def boundary_point(self, u: np.ndarray) -> np.ndarray:
        return self.argmax(u)

    def sample_interior(self, rng: np.random.Generator, count: int, shrink: float = 0.0) -> np.ndarray:
        """Random points inside the set (convex combinations of boundary points, pulled in by ``shrink``)."""
        c = self.center()
        dirs = self.grid[rng.integers(0, len(self.grid), size=(count, 3))]
        pts = np.array([[self.argmax(d) for d in row] for row in dirs])
        w = rng.dirichlet(np.ones(3), size=count)
        p = np.einsum("kj,kjn->kn", w, pts)
        return c + (1.0 - shrink) * (p - c)

    def center(self) -> np.ndarray:
        base = self.core if self.core is not None else self
        c, _ = chebyshev_center(base.normals, base.offsets)
        return c


def _grid_rows(grid: np.ndarray, support: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    fin = np.isfinite(support)
    return grid[fin], support[fin]


def _bounding_box(offsets: np.ndarray) -> float:
    fin = offsets[np.isfinite(offsets)]
    return 10.0 * (1.0 + float(np.abs(fin).max(initial=1.0)))


def from_halfspaces(normals: np.ndarray, offsets: np.ndarray, grid: np.ndarray, meta: dict | None = None) -> ConvexSetRep:
    """Set ``{v : normals @ v <= offsets}``, assumed bounded."""
    normals = np.asarray(normals, float)
    offsets = np.asarray(offsets, float)
    meta = dict(meta or {})
    if np.any(offsets == -np.inf):
        return ConvexSetRep(grid, np.full(len(grid), -np.inf), normals, offsets, np.zeros((0, grid.shape[1])), meta=meta)
    fin = np.isfinite(offsets)
    normals, offsets = normals[fin], offsets[fin]
    if grid.shape[1] == 2:
        poly = polygon_from_halfspaces(normals, offsets, _bounding_box(offsets))
        if len(poly) == 0:
            return ConvexSetRep(grid, np.full(len(grid), -np.inf), normals, offsets, poly, meta=meta)
        return ConvexSetRep(grid, (poly @ grid.T).max(axis=0), normals, offsets, poly, meta=meta)
    h, verts = support_of_halfspaces(normals, offsets, grid)
    if verts is not None:
        meta["vertices"] = verts
    return ConvexSetRep(grid, h, normals, offsets, meta=meta)


def from_support(grid: np.ndarray, support: np.ndarray, meta: dict | None = None) -> ConvexSetRep:
    """Intersection of the half-spaces ``lambda_k . v <= h_k`` over the grid."""
    return from_halfspaces(grid, np.asarray(support, float), grid, meta)


def from_points(points: np.ndarray, grid: np.ndarray) -> ConvexSetRep:
    """Convex hull of finitely many points."""
    pts = np.asarray(points, float)
    h = (pts @ grid.T).max(axis=0)
    if grid.shape[1] == 2:
        hull = convex_hull_2d(pts)
        if len(hull) >= 3:
            nrm, off = polygon_edges(hull)
            return ConvexSetRep(grid, h, nrm, off, hull)
        nrm, off = grid, h
        return ConvexSetRep(grid, h, nrm, off, hull, meta={"degenerate": True})
    try:
        hull = ConvexHull(pts)
        eq = hull.equations
        return ConvexSetRep(grid, h, eq[:, :-1], -eq[:, -1], meta={"vertices": pts[hull.vertices]})
    except (QhullError, ValueError):
        return ConvexSetRep(grid, h, grid, h, meta={"degenerate": True})


def rounded(core: ConvexSetRep, radius: float, meta: dict | None = None) -> ConvexSetRep:
    """The set ``core + radius * ball``, described on the core's grid."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    grid = core.grid
    meta = dict(meta or {})
    if core.empty:
        return ConvexSetRep(grid, np.full(len(grid), -np.inf), grid, np.full(len(grid), -np.inf),
                            np.zeros((0, core.dim)) if core.dim == 2 else None, core, radius, meta)
    h = core.support + radius
    verts = polygon_from_halfspaces(grid, h, _bounding_box(h)) if core.dim == 2 else None
    return ConvexSetRep(grid, h, grid.copy(), h.copy(), verts, core, radius, meta)


def smooth_inner(W: ConvexSetRep, eps_in: float, eps_prime: float) -> ConvexSetRep:
    """The set ``(W eroded by eps_in) + eps_prime * ball`` for ``0 < eps_prime < eps_in``.

    Erosion of a polytope by a ball shifts every facet inward by ``eps_in``;
    adding the smaller ball rounds all corners, so every boundary point has a
    unique normal.  The result lies in the interior of ``W``.
    """
    if not 0 < eps_prime < eps_in:
        raise ValueError("need 0 < eps_prime < eps_in")
    norms = np.linalg.norm(W.normals, axis=1)
    core = from_halfspaces(W.normals, W.offsets - eps_in * norms, W.grid)
    return rounded(core, eps_prime, {"eps_in": eps_in, "eps_prime": eps_prime})


def scaled(W: ConvexSetRep, factor: float, about: np.ndarray | None = None) -> ConvexSetRep:
    """Homothetic copy ``about + factor * (W - about)`` (polytopes only)."""
    if W.core is not None:
        raise ValueError("scale the core and re-smooth instead")
    c = W.center() if about is None else np.asarray(about, float)
    offs = factor * W.offsets + (1 - factor) * (W.normals @ c)
    return from_halfspaces(W.normals, offs, W.grid)


def hausdorff(A: ConvexSetRep, B: ConvexSetRep) -> float:
    """Grid Hausdorff distance ``max_k |h_A(lambda_k) - h_B(lambda_k)|`` on A's grid."""
    hb = B.support if (B.grid.shape == A.grid.shape and np.array_equal(A.grid, B.grid)) else \
        np.array([B.support_at(u) for u in A.grid])
    with np.errstate(invalid="ignore"):
        d = np.abs(A.support - hb)
    return float(np.nan_to_num(d, nan=np.inf).max())


def polygon_hausdorff(P: np.ndarray, Q: np.ndarray) -> float:
    """Exact Hausdorff distance between two convex polygons (attained at vertices)."""
    d1 = max(point_polygon_distance(p, Q) for p in P)
    d2 = max(point_polygon_distance(q, P) for q in Q)
    return max(d1, d2)


# --------------------------------------------------------------------------
# export


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_support_csv(path: str | Path, grid: np.ndarray, columns: dict[str, Sequence], extra: dict[str, Sequence] | None = None) -> None:
    """Write a support table: one row per direction, 17 significant digits."""
    n = grid.shape[1]
    names = [f"lambda_{i + 1}" for i in range(n)] + list(columns) + list(extra or {})
    with open(path, "w", newline="") as fh:
        fh.write(CSV_SCHEMA + "\n")
        w = csv.writer(fh)
        w.writerow(names)
        for k, lam in enumerate(grid):
            row = [fmt(x) for x in lam] + [fmt(columns[c][k]) for c in columns]
            row += [str(extra[c][k]) for c in (extra or {})]
            w.writerow(row)


def read_support_csv(path: str | Path, column: str = "support") -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.DictReader(lines))
    if not rows:
        raise ValueError(f"{path}: empty support table")
    dims = sorted((k for k in rows[0] if k.startswith("lambda_")), key=lambda s: int(s.split("_")[1]))
    if column not in rows[0]:
        raise ValueError(f"{path}: no column {column!r}")
    grid = np.array([[float(r[d]) for d in dims] for r in rows])
    h = np.array([float(r[column]) for r in rows])
    return grid, h


def set_to_csv(path: str | Path, W: ConvexSetRep) -> None:
    write_support_csv(path, W.grid, {"support": W.support})


def svg_sets(layers: Iterable[tuple[ConvexSetRep | np.ndarray, str]], size: int = 480) -> str:
    """Planar sets drawn as polygons; each layer is ``(set or vertex array, colour)``."""
    layers = list(layers)
    polys = []
    for obj, colour in layers:
        v = obj.vertices if isinstance(obj, ConvexSetRep) else np.asarray(obj)
        if v is not None and len(v):
            polys.append((v, colour))
    allv = np.vstack([p for p, _ in polys]) if polys else np.zeros((1, 2))
    lo, hi = allv.min(axis=0), allv.max(axis=0)
    span = float(max(hi - lo)) or 1.0
    pad = 0.05 * span
    scale = (size - 20) / (span + 2 * pad)

    def tr(p):
        return 10 + (p[0] - lo[0] + pad) * scale, size - 10 - (p[1] - lo[1] + pad) * scale

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}">']
    ox, oy = tr(np.zeros(2))
    out.append(f'<line x1="0" y1="{oy:.2f}" x2="{size}" y2="{oy:.2f}" stroke="#bbb"/>')
    out.append(f'<line x1="{ox:.2f}" y1="0" x2="{ox:.2f}" y2="{size}" stroke="#bbb"/>')
    for v, colour in polys:
        pts = " ".join("{:.2f},{:.2f}".format(*tr(p)) for p in v)
        out.append(f'<polygon points="{pts}" fill="{colour}" fill-opacity="0.25" stroke="{colour}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
