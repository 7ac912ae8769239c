"""WWLS distance and kernel between graphs, dataset matrices and a k-NN check."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Sequence

import numpy as np

from .bocs import GraphBocs, ground_matrix
from .errors import ComputeError, InputError
from .graph import Graph, LabeledDataset
from .ot import emd_uniform, sinkhorn
from .wl_hash import HashParams, wl_relabel

__all__ = [
    "GroundMatrix",
    "PairwiseMatrix",
    "wwls_ground_matrix",
    "wwls_distance",
    "wwl_baseline_distance",
    "kernel_value",
    "pairwise_matrix",
    "knn_predict",
    "knn_eval",
    "default_jobs",
]


@dataclass(frozen=True)
class GroundMatrix:
    values: np.ndarray
    fingerprint: tuple


@dataclass(frozen=True)
class PairwiseMatrix:
    values: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def mode(self) -> str:
        return self.metadata.get("mode", "distance")


def default_jobs() -> int:
    env = os.environ.get("WWLS_JOBS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _require_nonempty(*graphs: Graph):
    for g in graphs:
        if g.node_count == 0:
            raise InputError("distance is undefined for a graph without nodes")


def _transport_cost(C: np.ndarray, solver: str, eps: float, eps_scaling: bool = False) -> float:
    if solver == "exact":
        return emd_uniform(C).cost
    if solver == "sinkhorn":
        m, n = C.shape
        plan = sinkhorn(np.full(m, 1.0 / m), np.full(n, 1.0 / n), C.astype(np.float64), epsilon=eps,
                        eps_scaling=eps_scaling)
        return plan.cost
    raise InputError(f"unknown solver {solver!r}")


def wwls_ground_matrix(g1: Graph, g2: Graph, params: HashParams) -> GroundMatrix:
    index: dict = {}
    f1 = GraphBocs.from_graph(g1, params, index)
    f2 = GraphBocs.from_graph(g2, params, index)
    return GroundMatrix(ground_matrix(f1, f2), params.fingerprint)


def wwls_distance(g1: Graph, g2: Graph, params: HashParams, solver: str = "exact", eps: float = 1e-2,
                  eps_scaling: bool = False) -> float:
    """1-Wasserstein distance between the node BOCS distributions of two graphs.

    Each node carries mass ``1/|V|``; the ground cost between two nodes is
    the L1 distance of their BOCS vectors.
    """
    _require_nonempty(g1, g2)
    C = wwls_ground_matrix(g1, g2, params).values
    return _transport_cost(C, solver, eps, eps_scaling)


def wwl_baseline_distance(g1: Graph, g2: Graph, h: int) -> float:
    """Wasserstein distance over WL features with normalized Hamming ground cost."""
    _require_nonempty(g1, g2)
    table: dict = {}
    F1 = np.array(wl_relabel(g1, h, table), dtype=np.int64)
    F2 = np.array(wl_relabel(g2, h, table), dtype=np.int64)
    hamming = (F1[:, None, :] != F2[None, :, :]).sum(axis=2)
    return emd_uniform(hamming).cost / (h + 1)


def kernel_value(g1: Graph, g2: Graph, params: HashParams, gamma: float, **solver_kw) -> float:
    if gamma <= 0:
        raise InputError("gamma must be positive")
    return float(np.exp(-gamma * wwls_distance(g1, g2, params, **solver_kw)))


# ---------------------------------------------------------------------------
# Dataset matrices

_FEATURES: list[GraphBocs] = []


def _init_worker(features):
    global _FEATURES
    _FEATURES = features


def _pair_block(pairs, solver, eps, eps_scaling):
    out = []
    for i, j in pairs:
        try:
            C = ground_matrix(_FEATURES[i], _FEATURES[j])
            out.append(_transport_cost(C, solver, eps, eps_scaling))
        except Exception as exc:
            raise ComputeError(f"pair ({i}, {j}): {exc}") from exc
    return out


def pairwise_matrix(ds: LabeledDataset | Sequence[Graph], params: HashParams, mode: str = "distance",
                    gamma: float | None = None, solver: str = "exact", eps: float = 1e-2,
                    eps_scaling: bool = False, jobs: int | None = 1) -> PairwiseMatrix:
    """Symmetric WWLS distance (or kernel) matrix over a dataset.

    BOCS features are computed once per graph.  Each unordered pair is solved
    once and mirrored, so the result equals its transpose exactly; the
    diagonal is 0 (distance) or 1 (kernel) by construction.  ``jobs > 1``
    spreads pairs over worker processes; results merge by pair index.
    """
    graphs = list(ds.graphs if isinstance(ds, LabeledDataset) else ds)
    if not graphs:
        raise InputError("dataset is empty")
    if mode not in ("distance", "kernel"):
        raise InputError(f"unknown mode {mode!r}")
    if mode == "kernel" and (gamma is None or gamma <= 0):
        raise InputError("kernel mode needs gamma > 0")
    if solver not in ("exact", "sinkhorn"):
        raise InputError(f"unknown solver {solver!r}")
    if solver == "sinkhorn" and not eps > 0:
        raise InputError("sinkhorn needs eps > 0")
    _require_nonempty(*graphs)
    jobs = default_jobs() if jobs is None else max(1, int(jobs))

    index: dict = {}
    features = [GraphBocs.from_graph(g, params, index) for g in graphs]
    n = len(graphs)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]

    if jobs == 1 or len(pairs) < 2 * jobs:
        _init_worker(features)
        try:
            costs = _pair_block(pairs, solver, eps, eps_scaling)
        finally:
            _init_worker([])
    else:
        size = -(-len(pairs) // (jobs * 4))
        blocks = [pairs[s:s + size] for s in range(0, len(pairs), size)]
        with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker, initargs=(features,)) as pool:
            work = partial(_pair_block, solver=solver, eps=eps, eps_scaling=eps_scaling)
            results = pool.map(work, blocks)
            costs = [c for block in results for c in block]

    D = np.zeros((n, n), dtype=np.float64)
    for (i, j), c in zip(pairs, costs):
        D[i, j] = D[j, i] = c
    meta = {
        "mode": mode,
        "h": params.iterations,
        "k": params.slots,
        "M": params.modulus,
        "seed": params.seed,
        "solver": solver,
    }
    if solver == "sinkhorn":
        meta["eps"] = eps
        meta["eps_scaling"] = eps_scaling
    if mode == "kernel":
        meta["gamma"] = gamma
        return PairwiseMatrix(np.exp(-gamma * D), meta)
    return PairwiseMatrix(D, meta)


# ---------------------------------------------------------------------------
# Nearest neighbors


def knn_predict(matrix, labels: Sequence[int], k_neighbors: int = 1) -> np.ndarray:
    """Leave-one-out k-NN predictions from a distance matrix.

    Majority vote; ties go to the class whose voting neighbors have the
    smallest mean distance, then to the lowest class id.  Equal distances are
    ordered by neighbor index.
    """
    if isinstance(matrix, PairwiseMatrix):
        if matrix.mode != "distance":
            raise InputError("k-NN needs a distance matrix")
        D = matrix.values
    else:
        D = np.asarray(matrix, dtype=np.float64)
    labels = np.asarray(labels)
    n = D.shape[0]
    if D.shape != (n, n) or labels.shape != (n,):
        raise InputError("matrix and labels disagree in size")
    if not 1 <= k_neighbors < n:
        raise InputError(f"k_neighbors must lie in [1, {n - 1}]")
    preds = np.empty(n, dtype=labels.dtype)
    for i in range(n):
        others = np.delete(np.arange(n), i)
        order = others[np.lexsort((others, D[i, others]))][:k_neighbors]
        classes, votes = np.unique(labels[order], return_counts=True)
        best = [c for c, v in zip(classes, votes) if v == votes.max()]
        preds[i] = min(best, key=lambda c: (D[i, order[labels[order] == c]].mean(), c))
    return preds


def knn_eval(matrix, labels: Sequence[int], k_neighbors: int = 1) -> float:
    preds = knn_predict(matrix, labels, k_neighbors)
    return float(np.mean(preds == np.asarray(labels)))
