"""Complete-subtree hashing of WL unfolding trees.

The WL subtree ``T(v)`` of height ``h`` is the unfolding of the graph around
``v``: every tree node at depth ``d < h`` has one child per graph neighbor,
including the neighbor it was reached from.  Each complete subtree ``t(u)`` of
``T(v)`` is identified by a polynomial evaluated at random points mod ``M``::

    p(u) = l(u)                                        if u is a leaf
    p(u) = (x'_d + l(u)) * prod_c (x_d + p(c))  mod M  otherwise, d = depth(u)

``k`` independent evaluations ("slots") make up one :class:`SubtreeKey`,
together with the subtree height.

Two routes compute the same keys.  :func:`node_subtree_hashes` walks the
unfolding tree node by node.  :func:`subtree_residues` exploits that the
subtree rooted at a tree node depends only on its graph node and height, so a
whole graph costs ``O(h * |E| * k)`` instead of ``O(|V| * deg**h)``.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from .graph import Graph, LabeledDataset

__all__ = [
    "DEFAULT_MODULUS",
    "HashParams",
    "SubtreeKey",
    "is_prime",
    "make_hash_params",
    "node_subtree_hashes",
    "subtree_residues",
    "subtree_keys",
    "walk_counts",
    "graph_subtree_multisets",
    "canonical_subtree_encodings",
    "canonical_type_ids",
    "wl_relabel",
    "count_subtree_types",
]

DEFAULT_MODULUS = 10**9 + 7

# modular products of two residues must fit in int64
_MAX_MODULUS = 3_037_000_499


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for all n < 3.3e24."""
    if n < 2:
        return False
    small = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
    for p in small:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in small:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


class SubtreeKey(NamedTuple):
    height: int
    residues: tuple[int, ...]


@dataclass(frozen=True)
class HashParams:
    """Modulus, slot count, WL iterations and the per-depth random points.

    ``vars[s, d]`` holds ``(x_d, x'_d)`` for slot ``s`` and tree depth ``d``.
    """

    modulus: int
    slots: int
    iterations: int
    seed: int
    vars: np.ndarray = field(repr=False, compare=False)

    def __post_init__(self):
        if not is_prime(self.modulus):
            raise ValueError(f"modulus {self.modulus} is not prime")
        if self.modulus > _MAX_MODULUS:
            raise ValueError(f"modulus must not exceed {_MAX_MODULUS}")
        if self.slots < 1 or self.iterations < 0:
            raise ValueError("need slots >= 1 and iterations >= 0")
        v = np.asarray(self.vars, dtype=np.int64)
        if v.shape != (self.slots, self.iterations, 2):
            raise ValueError(f"vars has shape {v.shape}, expected {(self.slots, self.iterations, 2)}")
        if v.size and (v.min() < 0 or v.max() >= self.modulus):
            raise ValueError("vars must lie in [0, modulus)")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "vars", v)

    @property
    def fingerprint(self) -> tuple[int, int, int, int]:
        return (self.modulus, self.slots, self.iterations, self.seed)

    # short aliases matching the usual symbols
    @property
    def M(self) -> int:
        return self.modulus

    @property
    def k(self) -> int:
        return self.slots

    @property
    def h(self) -> int:
        return self.iterations


def make_hash_params(M: int = DEFAULT_MODULUS, k: int = 2, h: int = 2, seed: int = 0) -> HashParams:
    if not is_prime(M):
        raise ValueError(f"modulus {M} is not prime")
    if k < 1 or h < 0:
        raise ValueError("need k >= 1 and h >= 0")
    rng = np.random.default_rng(seed)
    draws = rng.integers(0, M, size=(k, h, 2), dtype=np.int64)
    return HashParams(M, k, h, seed, draws)


def node_subtree_hashes(g: Graph, v: int, params: HashParams) -> Counter:
    """Hash every complete subtree of ``T(v)`` by a post-order walk of the tree.

    Returns a Counter ``SubtreeKey -> multiplicity`` whose total equals the
    number of nodes in ``T(v)``.  Cost grows like ``deg**h``; use
    :func:`graph_subtree_multisets` for whole graphs.
    """
    if not 0 <= v < g.node_count:
        raise IndexError(f"node {v} out of range")
    M, h = params.modulus, params.iterations
    x = params.vars[:, :, 0].tolist()
    xp = params.vars[:, :, 1].tolist()
    k = params.slots
    adj, lab = g.adjacency, g.labels
    out: Counter = Counter()

    # frame: [graph node, depth, next child position, running products, max child height]
    stack = [[v, 0, 0, [1] * k, -1]]
    while stack:
        frame = stack[-1]
        u, d, pos, acc, _ = frame
        nbrs = adj[u] if d < h else ()
        if pos < len(nbrs):
            frame[2] += 1
            stack.append([nbrs[pos], d + 1, 0, [1] * k, -1])
            continue
        stack.pop()
        if frame[4] < 0:
            key = SubtreeKey(0, (lab[u] % M,) * k)
        else:
            key = SubtreeKey(
                frame[4] + 1,
                tuple((xp[s][d] + lab[u]) * acc[s] % M for s in range(k)),
            )
        out[key] += 1
        if stack:
            parent = stack[-1]
            pd = parent[1]
            pacc = parent[3]
            for s in range(k):
                pacc[s] = pacc[s] * ((x[s][pd] + key.residues[s]) % M) % M
            parent[4] = max(parent[4], key.height)
    return out


def subtree_residues(g: Graph, params: HashParams, max_height: int | None = None):
    """Residues of the complete subtree rooted at each graph node, per height.

    Returns ``(R, heights)`` where ``R[j, s, u]`` is slot ``s`` of the subtree
    of height ``j`` rooted at ``u`` (placed at depth ``h - j`` of a height-``h``
    WL subtree) and ``heights[j, u]`` its true height (0 for isolated nodes).
    """
    H = params.iterations
    jmax = H if max_height is None else max_height
    if not 0 <= jmax <= H:
        raise ValueError(f"max_height must lie in [0, {H}]")
    M, k, n = params.modulus, params.slots, g.node_count
    labels = np.asarray(g.labels, dtype=np.int64) % M
    deg = g.degrees()
    width = int(deg.max()) if n else 0
    nbr = np.zeros((n, width), dtype=np.int64)
    for u, ns in enumerate(g.adjacency):
        nbr[u, : len(ns)] = ns
    isolated = deg == 0

    R = np.empty((jmax + 1, k, n), dtype=np.int64)
    R[0] = labels[None, :]
    for j in range(1, jmax + 1):
        d = H - j
        x = params.vars[:, d, 0][:, None]
        xp = params.vars[:, d, 1][:, None]
        acc = (xp + labels[None, :]) % M
        prev = R[j - 1]
        for r in range(width):
            rows = np.nonzero(deg > r)[0]
            term = (x + prev[:, nbr[rows, r]]) % M
            acc[:, rows] = acc[:, rows] * term % M
        acc[:, isolated] = labels[isolated]
        R[j] = acc
    heights = np.arange(jmax + 1)[:, None] * (~isolated)[None, :]
    return R, heights


def subtree_keys(g: Graph, params: HashParams, max_height: int | None = None) -> list[list[SubtreeKey]]:
    """``keys[j][u]``: the :class:`SubtreeKey` of the height-``j`` subtree at ``u``."""
    R, heights = subtree_residues(g, params, max_height)
    out = []
    for j in range(R.shape[0]):
        cols = R[j].T.tolist()
        hs = heights[j].tolist()
        out.append([SubtreeKey(hs[u], tuple(cols[u])) for u in range(g.node_count)])
    return out


def walk_counts(g: Graph, h: int) -> list[np.ndarray]:
    """``W[d][v, u]`` = number of length-``d`` walks from ``v`` to ``u``, d = 0..h.

    This is how often graph node ``u`` appears at depth ``d`` of ``T(v)``.
    Falls back to Python integers if int64 could overflow.
    """
    n = g.node_count
    max_deg = int(g.degrees().max()) if n else 0
    dtype = np.int64 if max_deg**h < 2**62 else object
    A = g.adjacency_matrix(dtype=dtype)
    W = [np.eye(n, dtype=dtype)]
    for _ in range(h):
        W.append(W[-1] @ A)
    return W


def graph_subtree_multisets(g: Graph, params: HashParams) -> list[Counter]:
    """Complete-subtree multiset of ``T(v)`` for every node ``v`` of ``g``."""
    H = params.iterations
    keys = subtree_keys(g, params)
    W = walk_counts(g, H)
    out = []
    for v in range(g.node_count):
        c: Counter = Counter()
        for d in range(H + 1):
            row = W[d][v]
            level = keys[H - d]
            for u in np.nonzero(row)[0].tolist():
                c[level[u]] += int(row[u])
        out.append(c)
    return out


# ---------------------------------------------------------------------------
# Exact oracles


def canonical_subtree_encodings(g: Graph, v: int, h: int) -> Counter:
    """Collision-free canonical strings of every complete subtree of ``T(v)``.

    A leaf labeled 3 encodes as ``"(3)"``; an internal node as its label
    followed by the sorted encodings of its children, all in parentheses.
    """
    if not 0 <= v < g.node_count:
        raise IndexError(f"node {v} out of range")
    enc: dict[tuple[int, int], str] = {}
    bag: dict[tuple[int, int], Counter] = {}

    def visit(u, rem):
        # rem: levels left below this tree node
        key = (u, rem)
        if key in bag:
            return
        kids = g.adjacency[u] if rem > 0 else ()
        c: Counter = Counter()
        for w in kids:
            visit(w, rem - 1)
            c.update(bag[(w, rem - 1)])
        enc[key] = "(" + str(g.labels[u]) + "".join(sorted(enc[(w, rem - 1)] for w in kids)) + ")"
        c[enc[key]] += 1
        bag[key] = c

    visit(v, h)
    return bag[(v, h)]


def canonical_type_ids(g: Graph, h: int, table: dict) -> np.ndarray:
    """AHU-style canonical ids of the height-``j`` subtree at each node.

    ``table`` interns ``(label,)`` for leaves and ``(label, sorted child ids)``
    otherwise; share it across graphs to compare types dataset-wide.
    Returns ``ids[j, u]`` for ``j = 0..h``.
    """
    n = g.node_count
    ids = np.empty((h + 1, n), dtype=np.int64)
    for u in range(n):
        ids[0, u] = table.setdefault((g.labels[u],), len(table))
    for j in range(1, h + 1):
        prev = ids[j - 1].tolist()
        for u, nbrs in enumerate(g.adjacency):
            if nbrs:
                sig = (g.labels[u], tuple(sorted(prev[w] for w in nbrs)))
            else:
                sig = (g.labels[u],)
            ids[j, u] = table.setdefault(sig, len(table))
    return ids


def wl_relabel(g: Graph, h: int, table: dict | None = None) -> list[tuple[int, ...]]:
    """WL features: per node, the labels after iterations ``0..h``.

    ``table`` is the injective relabeling dictionary; pass the same dict for
    every graph that must share a label space.  Its values are only
    meaningful within one run.
    """
    if h < 0:
        raise ValueError("h must be nonnegative")
    if table is None:
        table = {}
    cur = list(g.labels)
    feats = [[x] for x in cur]
    for t in range(h):
        nxt = []
        for u, nbrs in enumerate(g.adjacency):
            sig = (t, cur[u], tuple(sorted(cur[w] for w in nbrs)))
            nxt.append(table.setdefault(sig, len(table)))
        cur = nxt
        for u in range(g.node_count):
            feats[u].append(cur[u])
    return [tuple(f) for f in feats]


def count_subtree_types(ds: LabeledDataset | Iterable[Graph], h: int, params: HashParams | None = None,
                        method: str = "hash", cumulative: bool = True) -> int:
    """Number of distinct subtree types over a dataset after ``h`` WL iterations.

    With ``cumulative`` (the default) every type seen at iterations ``0..h``
    counts; otherwise only root subtrees of height ``h``.  ``method`` is
    ``"hash"`` (needs ``params`` with ``params.h >= h``), ``"canonical"``
    (exact, AHU interning) or ``"wl"`` (WL labels, iteration-tagged).
    """
    graphs = [g for g in (ds.graphs if isinstance(ds, LabeledDataset) else ds) if g.node_count]
    levels = range(h + 1) if cumulative else (h,)
    seen: set = set()
    if method == "hash":
        if params is None or params.iterations < h:
            raise ValueError("hash counting needs params with iterations >= h")
        for g in graphs:
            R, heights = subtree_residues(g, params, max_height=h)
            for j in levels:
                seen.update(map(tuple, np.vstack([heights[j][None, :], R[j]]).T.tolist()))
    elif method == "canonical":
        table: dict = {}
        for g in graphs:
            ids = canonical_type_ids(g, h, table)
            for j in levels:
                seen.update(ids[j].tolist())
    elif method == "wl":
        table = {}
        for g in graphs:
            for f in wl_relabel(g, h, table):
                seen.update((j, f[j]) for j in levels)
    else:
        raise ValueError(f"unknown method {method!r}")
    return len(seen)
