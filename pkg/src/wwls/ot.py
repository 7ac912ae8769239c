"""Discrete 1-Wasserstein distance: exact transport simplex and Sinkhorn.

The exact solver is the transportation (bipartite min-cost-flow) simplex:
northwest-corner start, dual potentials read off the basis tree, Dantzig
pricing with a Bland fallback against cycling on degenerate pivots.  With
integer supplies, demands and costs every pivot stays in exact integer
arithmetic, which is how :func:`emd_uniform` solves the uniform-weight
problems that arise between graphs.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass
from math import gcd

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.special import logsumexp

from .errors import InputError, SolverError

log = logging.getLogger(__name__)

__all__ = ["TransportPlan", "emd", "emd_uniform", "sinkhorn", "MARGINAL_TOL"]

MARGINAL_TOL = 1e-9


@dataclass(frozen=True)
class TransportPlan:
    plan: np.ndarray
    cost: float
    converged: bool = True
    iterations: int = 0


def _check_problem(a, b, C):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    C = np.asarray(C, dtype=np.float64)
    if a.ndim != 1 or b.ndim != 1 or C.shape != (a.size, b.size):
        raise InputError(f"dimension mismatch: a {a.shape}, b {b.shape}, C {C.shape}")
    if a.size == 0 or b.size == 0:
        raise InputError("empty histogram")
    for name, w in (("a", a), ("b", b)):
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise InputError(f"histogram {name} has negative or non-finite weights")
        if abs(w.sum() - 1.0) > MARGINAL_TOL:
            raise InputError(f"histogram {name} sums to {w.sum()!r}, not 1")
    if np.any(C < 0) or not np.all(np.isfinite(C)):
        raise InputError("cost matrix must be finite and nonnegative")
    return a, b, C


def _northwest_corner(supply, demand):
    m, n = supply.size, demand.size
    X = np.zeros((m, n), dtype=supply.dtype)
    s, d = supply.copy(), demand.copy()
    basis = []
    i = j = 0
    while True:
        q = min(s[i], d[j])
        if i == m - 1 and j == n - 1:
            q = s[i]
        X[i, j] = q
        s[i] -= q
        d[j] -= q
        basis.append((i, j))
        if i == m - 1 and j == n - 1:
            break
        if i == m - 1:
            j += 1
        elif j == n - 1:
            i += 1
        elif s[i] <= d[j]:
            i += 1
        else:
            j += 1
    return X, basis


def _transport_simplex(supply, demand, C, tol=0.0, max_pivots=None):
    """Optimal flow ``X`` with row sums ``supply`` and column sums ``demand``."""
    m, n = C.shape
    X, basis = _northwest_corner(supply, demand)
    rows = [set() for _ in range(m)]
    cols = [set() for _ in range(n)]
    for i, j in basis:
        rows[i].add(j)
        cols[j].add(i)
    if max_pivots is None:
        max_pivots = 50 * (m + n) ** 2
    exact = np.issubdtype(C.dtype, np.integer)
    u = np.zeros(m, dtype=C.dtype)
    v = np.zeros(n, dtype=C.dtype)
    degenerate_run = 0

    for pivot in range(max_pivots + 1):
        # duals: u_i + v_j = C_ij on basic cells, u_0 = 0
        seen_r = np.zeros(m, dtype=bool)
        seen_c = np.zeros(n, dtype=bool)
        seen_r[0] = True
        u[0] = 0
        queue = deque([(0, 0)])
        while queue:
            kind, x = queue.popleft()
            if kind == 0:
                for j in rows[x]:
                    if not seen_c[j]:
                        seen_c[j] = True
                        v[j] = C[x, j] - u[x]
                        queue.append((1, j))
            else:
                for i in cols[x]:
                    if not seen_r[i]:
                        seen_r[i] = True
                        u[i] = C[i, x] - v[x]
                        queue.append((0, i))
        R = C - u[:, None] - v[None, :]
        if degenerate_run < 2 * (m + n):
            flat = int(np.argmin(R))
            if R.flat[flat] >= -tol:
                return X, pivot
        else:
            # Bland: first improving cell in index order
            neg = np.flatnonzero(R < -tol)
            if neg.size == 0:
                return X, pivot
            flat = int(neg[0])
        i0, j0 = divmod(flat, n)
        if pivot == max_pivots:
            break

        # basis-tree path from row i0 to column j0
        parent = {(0, i0): None}
        queue = deque([(0, i0)])
        while queue:
            node = queue.popleft()
            if node == (1, j0):
                break
            kind, x = node
            nbrs = [(1, j) for j in rows[x]] if kind == 0 else [(0, i) for i in cols[x]]
            for nb in nbrs:
                if nb not in parent:
                    parent[nb] = node
                    queue.append(nb)
        path = []
        node = (1, j0)
        while node is not None:
            path.append(node)
            node = parent[node]
        path.reverse()
        cells = []
        for a, b in zip(path, path[1:]):
            cells.append((a[1], b[1]) if a[0] == 0 else (b[1], a[1]))
        # cells alternate -, +, -, ... starting at the first edge out of row i0
        minus = cells[0::2]
        plus = cells[1::2]
        theta_cell = min(minus, key=lambda c: (X[c], c))
        theta = X[theta_cell]
        degenerate_run = degenerate_run + 1 if theta <= tol else 0
        for c in minus:
            X[c] -= theta
        for c in plus:
            X[c] += theta
        X[i0, j0] += theta
        if not exact:
            X[theta_cell] = 0
        li, lj = theta_cell
        rows[li].discard(lj)
        cols[lj].discard(li)
        rows[i0].add(j0)
        cols[j0].add(i0)
    raise SolverError(f"transport simplex did not converge in {max_pivots} pivots")


def emd(a, b, C) -> TransportPlan:
    """Exact optimal transport between histograms ``a`` and ``b`` under cost ``C``."""
    a, b, C = _check_problem(a, b, C)
    a = a / a.sum()
    b = b / b.sum()
    scale = float(C.max()) if C.size else 0.0
    X, pivots = _transport_simplex(a, b, C, tol=1e-12 * max(scale, 1.0))
    X = np.maximum(X, 0.0)
    return TransportPlan(X, float(np.sum(C * X)), True, pivots)


def emd_uniform(C) -> TransportPlan:
    """Exact OT between uniform histograms ``1/m`` and ``1/n`` for integer costs ``C``.

    Square problems are assignment problems (the optimum sits on a permutation
    matrix); rectangular ones run the transport simplex on supplies ``n`` and
    demands ``m``.  The cost is an exact integer divided by ``m * n``.
    """
    C = np.asarray(C)
    if C.ndim != 2 or 0 in C.shape:
        raise InputError(f"cost matrix must be a non-empty 2-d array, got shape {C.shape}")
    if not np.issubdtype(C.dtype, np.integer):
        if not np.all(C == np.round(C)):
            raise InputError("emd_uniform needs integer costs")
        C = C.astype(np.int64)
    if np.any(C < 0):
        raise InputError("cost matrix must be nonnegative")
    m, n = C.shape
    if m == n:
        r, c = linear_sum_assignment(C)
        X = np.zeros((m, n), dtype=np.int64)
        X[r, c] = 1
        total = int(C[r, c].sum())
        return TransportPlan(X / m, total / m, True, 0)
    g = gcd(m, n)
    supply = np.full(m, n // g, dtype=np.int64)
    demand = np.full(n, m // g, dtype=np.int64)
    X, pivots = _transport_simplex(supply, demand, C.astype(np.int64))
    denom = m * n // g
    total = int((C.astype(np.int64) * X).sum())
    return TransportPlan(X / denom, total / denom, True, pivots)


def _round_to_marginals(P: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Nearby coupling with marginals exactly ``a`` and ``b``.

    Scale down rows then columns that exceed their marginal, and spread the
    remaining deficit as a rank-one correction.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        P = P * np.minimum(1.0, np.nan_to_num(a / P.sum(axis=1), nan=1.0, posinf=1.0))[:, None]
        P = P * np.minimum(1.0, np.nan_to_num(b / P.sum(axis=0), nan=1.0, posinf=1.0))[None, :]
    ra = np.maximum(a - P.sum(axis=1), 0.0)
    rb = np.maximum(b - P.sum(axis=0), 0.0)
    mass = ra.sum()
    if mass > 0:
        P = P + np.outer(ra, rb) / mass
    return P


def sinkhorn(a, b, C, epsilon: float = 1e-2, max_iter: int = 10_000, tol: float = 1e-9,
             eps_scaling: bool = False, check_every: int = 10) -> TransportPlan:
    """Entropic OT by log-domain Sinkhorn iterations.

    ``epsilon`` is absolute (same units as ``C``).  Stops once the L1 row
    marginal violation falls below ``tol``; otherwise returns the last plan
    with ``converged=False``.  The plan is rounded onto the transport polytope
    before ``cost = <C, P>`` is taken (no entropy term), so the cost is that of
    a feasible coupling and never below the exact optimum.
    With ``eps_scaling`` the regularization decreases geometrically from
    ``max(C)`` to ``epsilon``, warm-starting each stage.
    """
    if epsilon <= 0:
        raise InputError("epsilon must be positive")
    a, b, C = _check_problem(a, b, C)
    ia, ib = a > 0, b > 0
    Cs = C[np.ix_(ia, ib)]
    loga, logb = np.log(a[ia]), np.log(b[ib])
    f = np.zeros(loga.size)
    g = np.zeros(logb.size)

    if eps_scaling and Cs.max() > epsilon:
        stages = list(np.geomspace(Cs.max(), epsilon, num=max(2, int(np.log10(Cs.max() / epsilon) * 2) + 1)))
    else:
        stages = [epsilon]

    it_total = 0
    converged = False
    for k, eps in enumerate(stages):
        last = k == len(stages) - 1
        budget = max_iter if last else max(1, max_iter // (4 * len(stages)))
        for it in range(budget):
            f = eps * loga - eps * logsumexp((g[None, :] - Cs) / eps, axis=1)
            g = eps * logb - eps * logsumexp((f[:, None] - Cs) / eps, axis=0)
            it_total += 1
            if last and (it % check_every == 0 or it == budget - 1):
                P = np.exp((f[:, None] + g[None, :] - Cs) / eps)
                err = np.abs(P.sum(axis=1) - a[ia]).sum()
                if err < tol:
                    converged = True
                    break
    P = _round_to_marginals(np.exp((f[:, None] + g[None, :] - Cs) / stages[-1]), a[ia], b[ib])
    plan = np.zeros_like(C)
    plan[np.ix_(ia, ib)] = P
    if not converged:
        log.warning("sinkhorn stopped after %d iterations without reaching tol=%g", it_total, tol)
    return TransportPlan(plan, float(np.sum(C * plan)), converged, it_total)
