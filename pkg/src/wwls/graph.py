"""Graph model, TUD dataset I/O, synthetic generators and edge noise.

Graphs are small, undirected, node-labeled and immutable.  Node ``v`` has
neighbors ``adjacency[v]`` (sorted, no duplicates, no self-loops) and an
integer label ``labels[v]``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import InputError, NoiseExhaustedError

log = logging.getLogger(__name__)

__all__ = [
    "Graph",
    "LabeledDataset",
    "NoiseSpec",
    "parse_tud_dataset",
    "write_tud_dataset",
    "assign_degree_labels",
    "gen_random_graph",
    "gen_cycle",
    "gen_grid",
    "perturb",
    "perturb_steps",
    "laplacian",
    "laplacian_frobenius",
]


@dataclass(frozen=True)
class Graph:
    adjacency: tuple[tuple[int, ...], ...]
    labels: tuple[int, ...]

    def __post_init__(self):
        adjacency = tuple(tuple(sorted(int(u) for u in nbrs)) for nbrs in self.adjacency)
        labels = tuple(int(x) for x in self.labels)
        object.__setattr__(self, "adjacency", adjacency)
        object.__setattr__(self, "labels", labels)
        n = len(adjacency)
        if len(labels) != n:
            raise ValueError(f"expected {n} labels, got {len(labels)}")
        for v, nbrs in enumerate(adjacency):
            if any(a == b for a, b in zip(nbrs, nbrs[1:])):
                raise ValueError(f"duplicate edge at node {v}")
            for u in nbrs:
                if u == v:
                    raise ValueError(f"self-loop at node {v}")
                if not 0 <= u < n:
                    raise ValueError(f"node {v} has out-of-range neighbor {u}")
        for v, nbrs in enumerate(adjacency):
            for u in nbrs:
                if v not in adjacency[u]:
                    raise ValueError(f"adjacency not symmetric for edge ({v}, {u})")
        if any(x < 0 for x in labels):
            raise ValueError("labels must be nonnegative")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]], labels: Sequence[int] | None = None) -> "Graph":
        nbrs: list[set[int]] = [set() for _ in range(n)]
        for u, v in edges:
            if u == v:
                raise ValueError(f"self-loop at node {u}")
            nbrs[u].add(v)
            nbrs[v].add(u)
        if labels is None:
            labels = [0] * n
        return cls(tuple(tuple(s) for s in nbrs), tuple(labels))

    @property
    def node_count(self) -> int:
        return len(self.adjacency)

    @property
    def edge_count(self) -> int:
        return sum(len(nbrs) for nbrs in self.adjacency) // 2

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def degrees(self) -> np.ndarray:
        return np.array([len(nbrs) for nbrs in self.adjacency], dtype=np.int64)

    def edges(self) -> Iterator[tuple[int, int]]:
        """Yield each undirected edge once as ``(u, v)`` with ``u < v``, sorted."""
        for u, nbrs in enumerate(self.adjacency):
            for v in nbrs:
                if u < v:
                    yield u, v

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.adjacency[u]

    def adjacency_matrix(self, dtype=np.int64) -> np.ndarray:
        A = np.zeros((self.node_count, self.node_count), dtype=dtype)
        for u, nbrs in enumerate(self.adjacency):
            A[u, list(nbrs)] = 1
        return A

    def with_labels(self, labels: Sequence[int]) -> "Graph":
        return Graph(self.adjacency, tuple(labels))

    def permute(self, perm: Sequence[int]) -> "Graph":
        """Return the isomorphic copy in which old node ``v`` becomes ``perm[v]``."""
        perm = [int(p) for p in perm]
        if sorted(perm) != list(range(self.node_count)):
            raise ValueError("perm is not a permutation of the node indices")
        labels = [0] * self.node_count
        for v, p in enumerate(perm):
            labels[p] = self.labels[v]
        return Graph.from_edges(self.node_count, ((perm[u], perm[v]) for u, v in self.edges()), labels)


@dataclass(frozen=True)
class LabeledDataset:
    name: str
    graphs: tuple[Graph, ...]
    class_labels: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "graphs", tuple(self.graphs))
        object.__setattr__(self, "class_labels", tuple(int(c) for c in self.class_labels))
        if len(self.graphs) != len(self.class_labels):
            raise ValueError("graphs and class_labels differ in length")

    def __len__(self):
        return len(self.graphs)

    def map(self, fn) -> "LabeledDataset":
        return LabeledDataset(self.name, tuple(fn(g) for g in self.graphs), self.class_labels)


@dataclass(frozen=True)
class NoiseSpec:
    mode: str
    count: int
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("rewire", "add"):
            raise ValueError(f"unknown noise mode {self.mode!r}")
        if self.count < 0:
            raise ValueError("noise count must be nonnegative")


# ---------------------------------------------------------------------------
# TUD format


def _read_int_rows(path: Path, width: int | None = None) -> list[list[int]]:
    rows = []
    with open(path, encoding="utf-8", newline=None) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = [p.strip() for p in line.split(",")]
            try:
                row = [int(p) for p in parts]
            except ValueError:
                raise InputError(f"{path}:{lineno}: non-integer token in {line!r}") from None
            if width is not None and len(row) != width:
                raise InputError(f"{path}:{lineno}: expected {width} value(s), got {len(row)}")
            rows.append(row)
    return rows


def parse_tud_dataset(root_path, name: str) -> LabeledDataset:
    """Load a TUD benchmark dataset from ``root_path``.

    ``root_path`` may be the directory holding ``<name>_A.txt`` directly or its
    parent (the layout of the official zip archives, ``<root>/<name>/``).
    Node ids are 1-based globally in the files and renumbered 0-based per
    graph here.  Without ``<name>_node_labels.txt`` every label is 0.
    """
    root = Path(root_path)
    if not (root / f"{name}_A.txt").exists() and (root / name / f"{name}_A.txt").exists():
        root = root / name

    def path(suffix):
        return root / f"{name}_{suffix}.txt"

    for suffix in ("A", "graph_indicator", "graph_labels"):
        if not path(suffix).exists():
            raise InputError(f"{path(suffix)}: missing mandatory TUD file")

    indicator = [r[0] for r in _read_int_rows(path("graph_indicator"), 1)]
    class_labels = [r[0] for r in _read_int_rows(path("graph_labels"), 1)]
    n_nodes = len(indicator)
    if path("node_labels").exists():
        rows = _read_int_rows(path("node_labels"))
        node_labels = [r[0] for r in rows]
        if len(node_labels) != n_nodes:
            raise InputError(f"{path('node_labels')}: {len(node_labels)} labels for {n_nodes} nodes")
    else:
        node_labels = [0] * n_nodes

    graph_ids = sorted(set(indicator))
    if graph_ids != list(range(1, len(graph_ids) + 1)):
        raise InputError(f"{path('graph_indicator')}: graph ids are not contiguous from 1")
    if len(class_labels) != len(graph_ids):
        raise InputError(
            f"{path('graph_labels')}: {len(class_labels)} class labels for {len(graph_ids)} graphs"
        )

    local = [0] * n_nodes
    sizes = [0] * len(graph_ids)
    members: list[list[int]] = [[] for _ in graph_ids]
    for node, gid in enumerate(indicator):
        local[node] = sizes[gid - 1]
        sizes[gid - 1] += 1
        members[gid - 1].append(node)

    edge_sets: list[set[tuple[int, int]]] = [set() for _ in graph_ids]
    self_loops = 0
    with open(path("A"), encoding="utf-8", newline=None) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise InputError(f"{path('A')}:{lineno}: expected 'i, j', got {line!r}")
            try:
                i, j = int(parts[0]), int(parts[1])
            except ValueError:
                raise InputError(f"{path('A')}:{lineno}: non-integer token in {line!r}") from None
            for x in (i, j):
                if not 1 <= x <= n_nodes:
                    raise InputError(f"{path('A')}:{lineno}: edge references unknown node {x}")
            gi, gj = indicator[i - 1], indicator[j - 1]
            if gi != gj:
                raise InputError(f"{path('A')}:{lineno}: edge ({i}, {j}) joins graphs {gi} and {gj}")
            if i == j:
                self_loops += 1
                continue
            u, v = local[i - 1], local[j - 1]
            edge_sets[gi - 1].add((min(u, v), max(u, v)))
    if self_loops:
        log.warning("%s: dropped %d self-loop(s)", name, self_loops)

    graphs = []
    for g, nodes in enumerate(members):
        labels = [node_labels[x] for x in nodes]
        graphs.append(Graph.from_edges(len(nodes), sorted(edge_sets[g]), labels))
    return LabeledDataset(name, tuple(graphs), tuple(class_labels))


def write_tud_dataset(ds: LabeledDataset, root_path, name: str | None = None) -> Path:
    """Write ``ds`` in TUD format (both edge directions listed) and return the directory."""
    name = name or ds.name
    root = Path(root_path)
    root.mkdir(parents=True, exist_ok=True)
    edges, indicator, node_labels = [], [], []
    offset = 0
    for gid, g in enumerate(ds.graphs, start=1):
        for u, v in g.edges():
            edges.append(f"{u + offset + 1}, {v + offset + 1}")
            edges.append(f"{v + offset + 1}, {u + offset + 1}")
        indicator.extend([str(gid)] * g.node_count)
        node_labels.extend(str(x) for x in g.labels)
        offset += g.node_count

    def dump(suffix, lines):
        (root / f"{name}_{suffix}.txt").write_text("".join(s + "\n" for s in lines), encoding="utf-8")

    dump("A", edges)
    dump("graph_indicator", indicator)
    dump("graph_labels", [str(c) for c in ds.class_labels])
    dump("node_labels", node_labels)
    return root


# ---------------------------------------------------------------------------
# Labels and generators


def assign_degree_labels(g: Graph) -> Graph:
    return g.with_labels([len(nbrs) for nbrs in g.adjacency])


def gen_random_graph(n: int, p: float, seed: int) -> Graph:
    """Erdos-Renyi G(n, p); each unordered pair is drawn in row-major order."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.size) < p
    return Graph.from_edges(n, zip(iu[keep].tolist(), ju[keep].tolist()))


def gen_cycle(n: int) -> Graph:
    if n < 1:
        raise ValueError("n must be at least 1")
    if n == 1:
        return Graph(((),), (0,))
    if n == 2:
        return Graph.from_edges(2, [(0, 1)])
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def gen_grid(rows: int, cols: int) -> Graph:
    if rows < 1 or cols < 1:
        raise ValueError("grid dimensions must be positive")
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1))
            if r + 1 < rows:
                edges.append((v, v + cols))
    return Graph.from_edges(rows * cols, edges)


# ---------------------------------------------------------------------------
# Edge noise


def perturb_steps(g: Graph, spec: NoiseSpec) -> Iterator[Graph]:
    """Yield the graph after each of the ``spec.count`` noise operations."""
    n = g.node_count
    nbrs = [set(x) for x in g.adjacency]
    rng = np.random.default_rng(spec.seed)

    for op in range(spec.count):
        if spec.mode == "rewire":
            candidates = []
            for u in range(n):
                for v in sorted(nbrs[u]):
                    if u < v:
                        if len(nbrs[u]) < n - 1:
                            candidates.append((u, v))
                        elif len(nbrs[v]) < n - 1:
                            candidates.append((v, u))
            if not candidates:
                raise NoiseExhaustedError(f"rewire operation {op}: no rewirable edge left")
            a, b = candidates[rng.integers(len(candidates))]
            partners = [c for c in range(n) if c != a and c not in nbrs[a]]
            c = partners[rng.integers(len(partners))]
            nbrs[a].discard(b)
            nbrs[b].discard(a)
            nbrs[a].add(c)
            nbrs[c].add(a)
        else:
            absent = [(u, v) for u in range(n) for v in range(u + 1, n) if v not in nbrs[u]]
            if not absent:
                raise NoiseExhaustedError(f"add operation {op}: graph is already complete")
            u, v = absent[rng.integers(len(absent))]
            nbrs[u].add(v)
            nbrs[v].add(u)
        yield Graph(tuple(tuple(s) for s in nbrs), g.labels)


def perturb(g: Graph, spec: NoiseSpec) -> Graph:
    """Apply ``spec.count`` random edge edits to ``g``.

    ``rewire`` picks a uniform edge a-b (a is the lower endpoint unless only
    b has a free partner) and a uniform c not adjacent to a, then replaces
    a-b by a-c.  ``add`` inserts a uniform absent edge.  Operations draw from
    one RNG stream in order, so ``count=k`` is a prefix of ``count=k+1``.
    """
    out = g
    for out in perturb_steps(g, spec):
        pass
    return out


# ---------------------------------------------------------------------------
# Aligned Laplacian baseline


def laplacian(g: Graph) -> np.ndarray:
    A = g.adjacency_matrix(dtype=np.float64)
    return np.diag(A.sum(axis=1)) - A


def laplacian_frobenius(g1: Graph, g2: Graph) -> float:
    """Frobenius norm of L(g1) - L(g2) with node indices taken as the alignment."""
    if g1.node_count != g2.node_count:
        raise ValueError(f"size mismatch: {g1.node_count} vs {g2.node_count} nodes")
    return float(np.linalg.norm(laplacian(g1) - laplacian(g2), ord="fro"))
