"""Hash-collision audit and edge-noise sensitivity experiment."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import spearmanr

from .graph import (Graph, LabeledDataset, NoiseSpec, assign_degree_labels, gen_cycle, gen_grid,
                    gen_random_graph, laplacian_frobenius, perturb_steps)
from .metric import wwl_baseline_distance, wwls_distance
from .wl_hash import (DEFAULT_MODULUS, canonical_type_ids, make_hash_params, subtree_residues,
                      wl_relabel)

__all__ = [
    "HASH_STATS_COLUMNS",
    "hash_stats",
    "collision_audit",
    "NoiseResult",
    "base_graph",
    "noise_experiment",
    "saturation_level",
]

HASH_STATS_COLUMNS = ("h", "wl", "canonical", "hash_k1", "hash_k2", "delta_k1", "delta_k2",
                      "canonical_per_iteration")


def _level_sets(ds: LabeledDataset, h_max: int, M: int, seed: int) -> dict:
    """Distinct types per level ``0..h_max`` for every counting method."""
    graphs = [g for g in ds.graphs if g.node_count]
    out = {name: [set() for _ in range(h_max + 1)] for name in ("wl", "canonical", "hash_k1", "hash_k2")}
    table: dict = {}
    wl_table: dict = {}
    params = {k: make_hash_params(M, k, h_max, seed) for k in (1, 2)}
    for g in graphs:
        ids = canonical_type_ids(g, h_max, table)
        feats = np.array(wl_relabel(g, h_max, wl_table), dtype=np.int64).T
        for j in range(h_max + 1):
            out["canonical"][j].update(ids[j].tolist())
            out["wl"][j].update(feats[j].tolist())
        for k, p in params.items():
            R, heights = subtree_residues(g, p)
            for j in range(h_max + 1):
                out[f"hash_k{k}"][j].update(map(tuple, np.vstack([heights[j][None, :], R[j]]).T.tolist()))
    return out


def hash_stats(ds: LabeledDataset, h_max: int, M: int = DEFAULT_MODULUS, seed: int = 0) -> list[dict]:
    """Distinct subtree types after ``h = 1..h_max`` WL iterations over a dataset.

    ``wl``, ``canonical``, ``hash_k1`` and ``hash_k2`` are cumulative: every
    type seen at iterations ``0..h`` counts once.  ``canonical`` is exact
    (isomorphism classes), the hash columns count distinct keys with one and
    two slots, and the deltas are hash minus canonical (negative means
    collisions).  ``canonical_per_iteration`` counts only height-``h`` root
    subtrees.
    """
    if h_max < 1:
        raise ValueError("h_max must be at least 1")
    levels = _level_sets(ds, h_max, M, seed)
    rows = []
    running = {name: set() for name in levels}
    for name in levels:
        # WL labels live in per-iteration namespaces; the others are comparable across levels
        running[name] = {(0, x) for x in levels[name][0]} if name == "wl" else set(levels[name][0])
    for h in range(1, h_max + 1):
        row = {"h": h}
        for name, sets in levels.items():
            running[name] |= {(h, x) for x in sets[h]} if name == "wl" else sets[h]
            row[name] = len(running[name])
        row["delta_k1"] = row["hash_k1"] - row["canonical"]
        row["delta_k2"] = row["hash_k2"] - row["canonical"]
        row["canonical_per_iteration"] = len(levels["canonical"][h])
        rows.append({c: row[c] for c in HASH_STATS_COLUMNS})
    return rows


def collision_audit(ds: LabeledDataset, h_max: int, k: int = 2, M: int = DEFAULT_MODULUS,
                    seed: int = 0) -> list[dict]:
    """Per height ``h``: canonical types, hash keys and distinct (type, key) pairs.

    The hash is collision-free on the dataset iff all three numbers agree at
    every ``h``.  ``collisions`` counts canonical types lost by merging.
    """
    graphs = [g for g in ds.graphs if g.node_count]
    params = make_hash_params(M, k, h_max, seed)
    table: dict = {}
    canon, levels = [], []
    for g in graphs:
        canon.append(canonical_type_ids(g, h_max, table))
        R, heights = subtree_residues(g, params)
        levels.append(np.concatenate([heights[:, None, :], R], axis=1))
    rows = []
    for h in range(h_max + 1):
        types, keys, joint = set(), set(), set()
        for ids, lv in zip(canon, levels):
            hk = list(map(tuple, lv[h].T.tolist()))
            c = ids[h].tolist()
            types.update(c)
            keys.update(hk)
            joint.update(zip(c, hk))
        rows.append({"h": h, "canonical": len(types), "hash": len(keys), "joint": len(joint),
                     "collisions": len(types) - len(keys)})
    return rows


# ---------------------------------------------------------------------------
# Edge noise


def base_graph(kind: str, n: int, p: float = 0.1, seed: int = 0) -> Graph:
    if kind == "random":
        return gen_random_graph(n, p, seed)
    if kind == "cycle":
        return gen_cycle(n)
    if kind == "grid":
        rows = max(r for r in range(1, int(np.sqrt(n)) + 1) if n % r == 0)
        return gen_grid(rows, n // rows)
    raise ValueError(f"unknown graph kind {kind!r}")


@dataclass
class NoiseResult:
    """Raw distances ``raw[metric][trial, noise]`` plus run settings."""

    noise: np.ndarray
    raw: dict
    settings: dict = field(default_factory=dict)

    def summary(self) -> list[tuple[int, str, float, float]]:
        """Rows ``(noise, metric, mean, std)``, both max-normalized per metric."""
        rows = []
        for metric, values in self.raw.items():
            mean = values.mean(axis=0)
            std = values.std(axis=0)
            top = mean.max()
            if top > 0:
                mean, std = mean / top, std / top
            rows.extend((int(k), metric, float(m), float(s)) for k, m, s in zip(self.noise, mean, std))
        rows.sort(key=lambda r: (r[0], r[1]))
        return rows

    def spearman(self, metric: str) -> float:
        return float(spearmanr(self.noise, self.raw[metric].mean(axis=0)).statistic)


def saturation_level(curve, frac: float = 0.9) -> int:
    """First index at which ``curve`` reaches ``frac`` of its maximum."""
    curve = np.asarray(curve, dtype=np.float64)
    return int(np.argmax(curve >= frac * curve.max()))


def noise_experiment(kind: str = "random", mode: str = "rewire", max_noise: int = 30, trials: int = 20,
                     n: int = 50, p: float = 0.1, hs=(2,), k: int = 2, M: int = DEFAULT_MODULUS,
                     seed: int = 0, degree_labels: bool = True) -> NoiseResult:
    """Distance from a base graph to copies with 0..max_noise edge edits.

    Per trial a base graph is drawn (random kind) and one noise chain is
    applied, so level ``j`` differs from level ``j - 1`` by one edit.
    Metrics: WWLS and the WWL baseline for each ``h`` in ``hs``, and the
    aligned Laplacian Frobenius norm.
    """
    if max_noise < 1 or trials < 1:
        raise ValueError("need max_noise >= 1 and trials >= 1")
    hs = tuple(hs)
    seeds = np.random.SeedSequence(seed).generate_state(2 * trials, dtype=np.uint32).tolist()
    params = {h: make_hash_params(M, k, h, seed) for h in hs}
    metrics = [f"wwls_h{h}" for h in hs] + [f"wwl_h{h}" for h in hs] + ["laplacian"]
    raw = {m: np.zeros((trials, max_noise + 1)) for m in metrics}
    relabel = assign_degree_labels if degree_labels else (lambda g: g)

    for t in range(trials):
        g0 = base_graph(kind, n, p, seeds[2 * t])
        chain = [g0] + list(perturb_steps(g0, NoiseSpec(mode, max_noise, seeds[2 * t + 1])))
        base = relabel(g0)
        for j, g in enumerate(chain):
            g = relabel(g)
            for h in hs:
                raw[f"wwls_h{h}"][t, j] = wwls_distance(base, g, params[h])
                raw[f"wwl_h{h}"][t, j] = wwl_baseline_distance(base, g, h)
            raw["laplacian"][t, j] = laplacian_frobenius(base, g)
    settings = dict(kind=kind, mode=mode, max_noise=max_noise, trials=trials, n=n, p=p, hs=list(hs), k=k,
                    M=M, seed=seed, degree_labels=degree_labels)
    return NoiseResult(np.arange(max_noise + 1), raw, settings)
