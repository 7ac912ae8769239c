"""Bag-of-complete-subtree vectors and the L1 tree edit distance.

A BOCS vector counts how often each complete-subtree type occurs in a WL
subtree.  The L1 distance between two such vectors approximates the unordered
tree edit distance (unit costs) within a factor ``2h + 2``.  Small trees can
be checked against :func:`exact_ted`.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from .errors import ParamsMismatchError
from .graph import Graph
from .wl_hash import HashParams, SubtreeKey, subtree_keys, walk_counts

__all__ = [
    "BocsVector",
    "bocs_from_multiset",
    "l1_ted",
    "GraphBocs",
    "ground_matrix",
    "TinyTree",
    "tree_bocs",
    "exact_ted",
    "check_ted_bound",
    "MAX_ORACLE_NODES",
]

MAX_ORACLE_NODES = 8


@dataclass(frozen=True)
class BocsVector:
    counts: Mapping = field(default_factory=dict)
    fingerprint: tuple | None = None

    def __post_init__(self):
        counts = {key: int(c) for key, c in self.counts.items() if c}
        if any(c < 0 for c in counts.values()):
            raise ValueError("BOCS counts must be nonnegative")
        object.__setattr__(self, "counts", counts)

    @property
    def mass(self) -> int:
        return sum(self.counts.values())

    def __len__(self):
        return len(self.counts)

    def __getitem__(self, key):
        return self.counts.get(key, 0)


def bocs_from_multiset(m: Mapping, params: HashParams | None = None) -> BocsVector:
    return BocsVector(dict(m), None if params is None else params.fingerprint)


def l1_ted(b1: BocsVector, b2: BocsVector) -> int:
    """Sum of absolute count differences over the union of both key sets."""
    if b1.fingerprint is not None and b2.fingerprint is not None and b1.fingerprint != b2.fingerprint:
        raise ParamsMismatchError(f"BOCS vectors built with {b1.fingerprint} and {b2.fingerprint}")
    total = 0
    for key, c in b1.counts.items():
        total += abs(c - b2.counts.get(key, 0))
    for key, c in b2.counts.items():
        if key not in b1.counts:
            total += c
    return total


# ---------------------------------------------------------------------------
# Dense per-graph features


@dataclass(frozen=True)
class GraphBocs:
    """BOCS vectors of every node of one graph, as a dense count matrix.

    ``counts[v, i]`` is the multiplicity of ``keys[i]`` in ``T(v)``; ``ids``
    are the integer codes of ``keys`` in ``index``.
    """

    keys: tuple
    ids: np.ndarray
    counts: np.ndarray
    fingerprint: tuple
    index: dict = field(repr=False, compare=False)

    @property
    def node_count(self) -> int:
        return self.counts.shape[0]

    @classmethod
    def from_graph(cls, g: Graph, params: HashParams, index: dict | None = None) -> "GraphBocs":
        if index is None:
            index = {}
        H = params.iterations
        keys = subtree_keys(g, params)
        local: dict = {}
        cols = []
        for level in keys:
            cols.append(np.fromiter((local.setdefault(key, len(local)) for key in level),
                                    dtype=np.int64, count=g.node_count))
        W = walk_counts(g, H)
        counts = np.zeros((g.node_count, len(local)), dtype=W[0].dtype)
        for d in range(H + 1):
            np.add.at(counts.T, cols[H - d], W[d].T)
        ordered = tuple(local)
        ids = np.fromiter((index.setdefault(key, len(index)) for key in ordered),
                          dtype=np.int64, count=len(ordered))
        return cls(ordered, ids, counts, params.fingerprint, index)

    def vector(self, v: int) -> BocsVector:
        row = self.counts[v]
        return BocsVector({self.keys[i]: int(row[i]) for i in np.nonzero(row)[0]}, self.fingerprint)


def ground_matrix(f1: GraphBocs, f2: GraphBocs, block: int = 4_000_000) -> np.ndarray:
    """Pairwise L1 distances between the node BOCS vectors of two graphs."""
    if f1.fingerprint != f2.fingerprint:
        raise ParamsMismatchError(f"features built with {f1.fingerprint} and {f2.fingerprint}")
    if f1.index is f2.index:
        ids1, ids2 = f1.ids, f2.ids
    else:
        tmp: dict = {}
        ids1 = np.array([tmp.setdefault(k, len(tmp)) for k in f1.keys], dtype=np.int64)
        ids2 = np.array([tmp.setdefault(k, len(tmp)) for k in f2.keys], dtype=np.int64)
    union = np.union1d(ids1, ids2)
    A = np.zeros((f1.node_count, union.size), dtype=f1.counts.dtype)
    B = np.zeros((f2.node_count, union.size), dtype=f2.counts.dtype)
    A[:, np.searchsorted(union, ids1)] = f1.counts
    B[:, np.searchsorted(union, ids2)] = f2.counts
    out = np.empty((f1.node_count, f2.node_count), dtype=np.result_type(A, B))
    rows = max(1, block // max(1, f2.node_count * union.size))
    for start in range(0, f1.node_count, rows):
        a = A[start:start + rows]
        out[start:start + rows] = np.abs(a[:, None, :] - B[None, :, :]).sum(axis=2)
    return out


# ---------------------------------------------------------------------------
# Tiny trees and the exact oracle


@dataclass(frozen=True)
class TinyTree:
    """Rooted unordered labeled tree given by a parent array (root: -1)."""

    parent: tuple[int, ...]
    labels: tuple[int, ...]

    def __post_init__(self):
        parent = tuple(int(p) for p in self.parent)
        labels = tuple(int(x) for x in self.labels)
        object.__setattr__(self, "parent", parent)
        object.__setattr__(self, "labels", labels)
        n = len(parent)
        if len(labels) != n or n == 0:
            raise ValueError("need one label per node and at least one node")
        if sum(p == -1 for p in parent) != 1:
            raise ValueError("tree must have exactly one root")
        for v in range(n):
            seen, u = set(), v
            while u != -1:
                if u in seen or not -1 <= parent[u] < n:
                    raise ValueError("parent array is not a tree")
                seen.add(u)
                u = parent[u]

    @property
    def size(self) -> int:
        return len(self.parent)

    @property
    def root(self) -> int:
        return self.parent.index(-1)

    def children(self) -> list[list[int]]:
        kids: list[list[int]] = [[] for _ in self.parent]
        for v, p in enumerate(self.parent):
            if p >= 0:
                kids[p].append(v)
        return kids

    def depths(self) -> list[int]:
        out = []
        for v in range(self.size):
            d, u = 0, v
            while self.parent[u] != -1:
                u = self.parent[u]
                d += 1
            out.append(d)
        return out

    def height(self) -> int:
        return max(self.depths())

    def nested(self):
        """Canonical nested form ``(label, sorted children forms)``."""
        kids = self.children()

        def rec(v):
            return (self.labels[v], tuple(sorted(rec(c) for c in kids[v])))

        return rec(self.root)

    @classmethod
    def from_unfolding(cls, g: Graph, v: int, h: int) -> "TinyTree":
        """Materialize the WL subtree of height ``h`` rooted at graph node ``v``."""
        parent, labels = [-1], [g.labels[v]]
        frontier = [(0, v)]
        for _ in range(h):
            nxt = []
            for tv, gv in frontier:
                for w in g.adjacency[gv]:
                    parent.append(tv)
                    labels.append(g.labels[w])
                    nxt.append((len(parent) - 1, w))
            frontier = nxt
        return cls(tuple(parent), tuple(labels))


def tree_bocs(t: TinyTree, params: HashParams | None = None) -> BocsVector:
    """BOCS of a tree.

    With ``params`` the keys are polynomial hashes (depth-indexed points,
    leaves hash to their label); without, keys are exact canonical forms.
    Hashed keys agree with the graph-side keys only for trees shaped like a
    WL subtree of height ``params.h`` (all leaves at that depth).
    """
    kids = t.children()
    depth = t.depths()
    out: Counter = Counter()
    if params is None:
        def rec(v):
            form = (t.labels[v], tuple(sorted(rec(c) for c in kids[v])))
            out[form] += 1
            return form

        rec(t.root)
        return BocsVector(out)
    if t.height() > params.iterations:
        raise ValueError("tree is taller than params.iterations")
    M, k = params.modulus, params.slots

    def rec(v):
        if not kids[v]:
            key = SubtreeKey(0, (t.labels[v] % M,) * k)
        else:
            d = depth[v]
            sub = [rec(c) for c in kids[v]]
            res = []
            for s in range(k):
                x, xp = int(params.vars[s, d, 0]), int(params.vars[s, d, 1])
                acc = (xp + t.labels[v]) % M
                for c in sub:
                    acc = acc * ((x + c.residues[s]) % M) % M
                res.append(acc)
            key = SubtreeKey(1 + max(c.height for c in sub), tuple(res))
        out[key] += 1
        return key

    rec(t.root)
    return BocsVector(out, params.fingerprint)


def _forest_size(forest) -> int:
    return sum(1 + _forest_size(children) for _, children in forest)


@lru_cache(maxsize=None)
def _forest_ted(f1: tuple, f2: tuple) -> int:
    # forests are sorted tuples of nested (label, children) nodes
    if not f1:
        return _forest_size(f2)
    if not f2:
        return _forest_size(f1)
    (label, kids), rest1 = f1[0], f1[1:]
    # root of the first tree of f1 is deleted
    best = 1 + _forest_ted(tuple(sorted(rest1 + kids)), f2)
    for i, (w_label, w_kids) in enumerate(f2):
        if i and f2[i] == f2[i - 1]:
            continue
        rest2 = f2[:i] + f2[i + 1:]
        # matched to a root of f2 ...
        cost = (label != w_label) + _forest_ted(kids, w_kids) + _forest_ted(rest1, rest2)
        # ... or that root of f2 is deleted
        cost2 = 1 + _forest_ted(f1, tuple(sorted(rest2 + w_kids)))
        best = min(best, cost, cost2)
    return best


def exact_ted(t1: TinyTree, t2: TinyTree, max_nodes: int = MAX_ORACLE_NODES) -> int:
    """Exact unordered tree edit distance with unit relabel/insert/delete costs.

    Minimizes over all ancestor-preserving partial node mappings by memoized
    search on canonical forests; exponential, so trees are capped at
    ``max_nodes`` nodes.
    """
    if t1.size > max_nodes or t2.size > max_nodes:
        raise ValueError(f"exact_ted is limited to {max_nodes} nodes per tree")
    return _forest_ted((t1.nested(),), (t2.nested(),))


def check_ted_bound(t1: TinyTree, t2: TinyTree, h: int, params: HashParams | None = None) -> bool:
    """True iff ``d_phi / (2h + 2) <= exact_ted <= d_phi`` (checked in integers)."""
    d_phi = l1_ted(tree_bocs(t1, params), tree_bocs(t2, params))
    ted = exact_ted(t1, t2)
    return d_phi <= (2 * h + 2) * ted and ted <= d_phi
