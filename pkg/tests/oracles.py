"""Brute-force reference computations used only by the tests."""

from __future__ import annotations

import itertools

import numpy as np

from usppe.lp import EQ, GE, LE, LinearProgram


def _as_inequalities(lp: LinearProgram) -> tuple[np.ndarray, np.ndarray]:
    G, h = [], []
    for a, s, b in zip(lp.matrix, lp.senses, lp.rhs):
        if s in (LE, EQ):
            G.append(a)
            h.append(b)
        if s in (GE, EQ):
            G.append(-a)
            h.append(-b)
    n = lp.objective.size
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        if np.isfinite(lp.upper[j]):
            G.append(e)
            h.append(lp.upper[j])
        if np.isfinite(lp.lower[j]):
            G.append(-e)
            h.append(-lp.lower[j])
    return np.array(G, float).reshape(-1, n), np.array(h, float)


def vertex_enumeration(lp: LinearProgram, tol: float = 1e-7) -> tuple[str, float | None]:
    """Status and optimum by enumerating basic solutions.

    Requires a pointed feasible region (every variable has a finite bound), so
    a non-empty region always has a vertex and unboundedness shows up as an
    improving extreme ray of the recession cone.
    """
    G, h = _as_inequalities(lp)
    n = lp.objective.size
    assert np.all(np.isfinite(lp.lower) | np.isfinite(lp.upper))
    idx = np.array(list(itertools.combinations(range(G.shape[0]), n)))
    M = G[idx]
    det = np.linalg.det(M)
    ok = np.abs(det) > 1e-10
    pts = np.linalg.solve(M[ok], h[idx[ok]][..., None])[..., 0]
    feas = np.all(pts @ G.T <= h + tol, axis=1)
    if not feas.any():
        return "infeasible", None
    best = float((pts[feas] @ lp.objective).max())

    # extreme rays of {d : G d <= 0}
    if n == 1:
        rays = np.array([[1.0], [-1.0]])
    else:
        sub = np.array(list(itertools.combinations(range(G.shape[0]), n - 1)))
        _, s, vt = np.linalg.svd(G[sub])
        keep = s[:, -1] > 1e-10
        d = vt[keep, -1, :]
        rays = np.vstack([d, -d])
    in_cone = np.all(rays @ G.T <= 1e-10, axis=1)
    if np.any(rays[in_cone] @ lp.objective > 1e-9):
        return "unbounded", None
    return "optimal", best


def random_lp(rng: np.random.Generator) -> LinearProgram:
    """Small random LP with integer data and a pointed feasible region."""
    n = int(rng.integers(1, 7))
    m = int(rng.integers(1, 11))
    A = rng.integers(-5, 6, size=(m, n)).astype(float)
    senses = list(rng.choice(["<=", ">=", "<=", "=="], size=m, p=[0.45, 0.3, 0.15, 0.1]))
    lower = rng.integers(-4, 1, size=n).astype(float)
    upper = np.where(rng.random(n) < 0.4, lower + rng.integers(1, 8, size=n), np.inf)
    # a few variables bounded only from above
    flip = rng.random(n) < 0.15
    lower = np.where(flip, -np.inf, lower)
    upper = np.where(flip, rng.integers(0, 5, size=n).astype(float), upper)
    # right-hand sides around an integer point that respects the bounds, with
    # occasional perturbations so that infeasible instances also occur
    x0 = np.clip(rng.integers(-3, 4, size=n).astype(float), lower, upper)
    slack = rng.integers(0, 5, size=m).astype(float)
    sign = np.array([{"<=": 1.0, ">=": -1.0, "==": 0.0}[s] for s in senses])
    b = A @ x0 + sign * slack
    noisy = rng.random(m) < 0.15
    b = np.where(noisy, b + rng.integers(-8, 9, size=m), b)
    c = rng.integers(-4, 5, size=n).astype(float)
    return LinearProgram(c, A, senses, b, lower, upper)
