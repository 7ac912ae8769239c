"""Slow, independent reference implementations used only by the tests."""

from __future__ import annotations

import itertools
from collections import Counter

import numpy as np


# -- exact TED by enumerating node mappings ---------------------------------


def _ancestors(parent):
    out = []
    for v in range(len(parent)):
        anc, u = set(), parent[v]
        while u != -1:
            anc.add(u)
            u = parent[u]
        out.append(anc)
    return out


def brute_force_ted(parent1, labels1, parent2, labels2) -> int:
    """Unit-cost unordered TED as min over one-to-one ancestor-preserving mappings.

    cost(M) = relabels inside M + unmapped nodes of both trees.  Depth-first
    search over the nodes of tree 1 with a simple lower-bound prune.
    """
    n1, n2 = len(parent1), len(parent2)
    anc1, anc2 = _ancestors(parent1), _ancestors(parent2)
    best = [n1 + n2]
    mapping: list[tuple[int, int]] = []

    def ok(v, w):
        for a, b in mapping:
            if (a in anc1[v]) != (b in anc2[w]) or (v in anc1[a]) != (w in anc2[b]):
                return False
        return True

    def rec(v, used, cost):
        # every remaining tree-1 node costs at least 0, every unmatchable tree-2 node 1
        remaining = n1 - v
        free2 = n2 - len(used)
        if cost + max(0, free2 - remaining) >= best[0]:
            return
        if v == n1:
            best[0] = cost + free2
            return
        for w in range(n2):
            if w not in used and ok(v, w):
                mapping.append((v, w))
                used.add(w)
                rec(v + 1, used, cost + (labels1[v] != labels2[w]))
                used.discard(w)
                mapping.pop()
        rec(v + 1, used, cost + 1)

    rec(0, set(), 0)
    return best[0]


# -- complete subtrees by explicit enumeration ------------------------------


def complete_subtree_forms(parent, labels) -> Counter:
    """Multiset of complete subtrees, each as a sorted nested tuple."""
    kids = [[] for _ in parent]
    for v, p in enumerate(parent):
        if p >= 0:
            kids[p].append(v)
    out = Counter()
    for v in range(len(parent)):
        def form(u):
            return (labels[u], tuple(sorted(form(c) for c in kids[u])))
        out[form(v)] += 1
    return out


def l1_counts(c1: Counter, c2: Counter) -> int:
    return sum(abs(c1[key] - c2[key]) for key in set(c1) | set(c2))


# -- exact LP by vertex enumeration -----------------------------------------


def lp_vertex_enumeration(a, b, C) -> float:
    """Minimum of <C, X> over the transportation polytope by scanning all bases.

    A basic feasible solution has at most m + n - 1 positive cells; every
    vertex is the unique solution of the equality system restricted to some
    set of m + n - 1 columns.  Scanning all such sets (batched solves) and
    keeping the feasible ones gives the LP optimum without any LP solver.
    """
    a, b, C = (np.asarray(x, dtype=np.float64) for x in (a, b, C))
    m, n = C.shape
    A = np.zeros((m + n, m * n))
    for i in range(m):
        A[i, i * n:(i + 1) * n] = 1
    for j in range(n):
        A[m + j, j::n] = 1
    rhs = np.concatenate([a, b])
    # one equality is redundant
    A, rhs = A[:-1], rhs[:-1]
    r = m + n - 1
    subsets = np.array(list(itertools.combinations(range(m * n), r)))
    mats = A[:, subsets].transpose(1, 0, 2)
    dets = np.linalg.det(mats)
    good = np.abs(dets) > 1e-9
    sol = np.linalg.solve(mats[good], np.broadcast_to(rhs, (good.sum(), r))[..., None])[..., 0]
    feasible = np.all(sol >= -1e-12, axis=1)
    costs = (sol * C.reshape(-1)[subsets[good]]).sum(axis=1)
    return float(costs[feasible].min())


# -- graph helpers -----------------------------------------------------------


def dense_walk_counts(adj: np.ndarray, h: int) -> list[np.ndarray]:
    """A^0 .. A^h by repeated integer matrix products."""
    out = [np.eye(adj.shape[0], dtype=np.int64)]
    for _ in range(h):
        out.append(out[-1] @ adj)
    return out


def unfolding_forms(adjacency, labels, v, h) -> Counter:
    """Complete subtrees of the depth-h unfolding at v, by materializing the tree."""
    parent, labs = [-1], [labels[v]]
    frontier = [(0, v)]
    for _ in range(h):
        nxt = []
        for tv, gv in frontier:
            for w in adjacency[gv]:
                parent.append(tv)
                labs.append(labels[w])
                nxt.append((len(parent) - 1, w))
        frontier = nxt
    return complete_subtree_forms(parent, labs)


def laplacian_dense(n, edges) -> np.ndarray:
    L = np.zeros((n, n))
    for u, v in edges:
        L[u, u] += 1
        L[v, v] += 1
        L[u, v] -= 1
        L[v, u] -= 1
    return L
