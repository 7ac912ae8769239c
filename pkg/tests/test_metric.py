import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from test_graph import graphs
from wwls.errors import InputError
from wwls.graph import Graph, LabeledDataset, NoiseSpec, assign_degree_labels, gen_cycle, gen_random_graph, perturb
from wwls.metric import (PairwiseMatrix, kernel_value, knn_eval, knn_predict, pairwise_matrix,
                         wwl_baseline_distance, wwls_distance, wwls_ground_matrix)
from wwls.ot import emd
from wwls.wl_hash import make_hash_params

P2 = make_hash_params(k=2, h=2)
nonempty = graphs(max_n=10).filter(lambda g: g.node_count > 0)


def test_distance_examples():
    g = gen_random_graph(15, 0.2, 0)
    assert wwls_distance(g, g, P2) == 0
    a, b = Graph.from_edges(1, [], [1]), Graph.from_edges(1, [], [2])
    assert wwls_distance(a, b, make_hash_params(k=2, h=0)) == 2
    for h in (0, 1, 3):
        assert wwl_baseline_distance(a, b, h) == 1
    with pytest.raises(InputError):
        wwls_distance(Graph.from_edges(0, []), a, P2)


def test_kernel_examples():
    g = gen_random_graph(12, 0.2, 1)
    assert kernel_value(g, g, P2, 0.3) == 1
    a, b = Graph.from_edges(1, [], [1]), Graph.from_edges(1, [], [2])
    assert kernel_value(a, b, make_hash_params(k=2, h=0), 0.5) == pytest.approx(math.exp(-1), abs=1e-15)
    assert kernel_value(a, b, make_hash_params(k=2, h=0), 1e-12) == pytest.approx(1)
    with pytest.raises(InputError):
        kernel_value(a, b, P2, 0)


def test_distance_equals_transport_of_ground_matrix():
    g1, g2 = gen_random_graph(9, 0.3, 2), gen_random_graph(13, 0.2, 3)
    C = wwls_ground_matrix(g1, g2, P2).values
    ref = emd(np.full(9, 1 / 9), np.full(13, 1 / 13), C.astype(float)).cost
    assert wwls_distance(g1, g2, P2) == pytest.approx(ref, abs=1e-12)
    assert np.array_equal(wwls_ground_matrix(g2, g1, P2).values, C.T)


@settings(max_examples=200, deadline=None)
@given(nonempty, nonempty, st.randoms(use_true_random=False))
def test_metric_axioms(g1, g2, rnd):
    d12 = wwls_distance(g1, g2, P2)
    assert d12 >= 0
    assert abs(d12 - wwls_distance(g2, g1, P2)) <= 1e-9
    assert wwls_distance(g1, g1, P2) == 0
    perm = list(range(g1.node_count))
    rnd.shuffle(perm)
    assert wwls_distance(g1, g1.permute(perm), P2) == 0


def test_permuted_twenty_node_graphs():
    rng = np.random.default_rng(5)
    for s in range(10):
        g = assign_degree_labels(gen_random_graph(20, 0.2, s))
        assert wwls_distance(g, g.permute(rng.permutation(20)), P2) == 0


def test_sinkhorn_close_to_exact_on_graphs():
    for s in range(8):
        g1 = assign_degree_labels(gen_random_graph(12, 0.25, s))
        g2 = assign_degree_labels(gen_random_graph(10, 0.25, 100 + s))
        exact = wwls_distance(g1, g2, P2)
        approx = wwls_distance(g1, g2, P2, solver="sinkhorn", eps=1e-3, eps_scaling=True)
        assert abs(approx - exact) / max(exact, 1) < 0.02


def test_baseline_saturates_on_cycle():
    # one rewire of a uniform-label cycle: baseline jumps, WWLS moves a little
    c = gen_cycle(30)
    r = perturb(c, NoiseSpec("rewire", 1, 0))
    base = wwl_baseline_distance(c, r, 2)
    ours = wwls_distance(c, r, P2)
    far = wwls_distance(c, perturb(c, NoiseSpec("rewire", 12, 0)), P2)
    assert base > 0 and ours > 0 and ours < far


# -- dataset matrices ----------------------------------------------------------


def _dataset(n=8, seed=0):
    gs = tuple(assign_degree_labels(gen_random_graph(8 + i % 5, 0.3, seed + i)) for i in range(n))
    return LabeledDataset("toy", gs, tuple(i % 2 for i in range(n)))


def test_pairwise_basic():
    ds = _dataset()
    D = pairwise_matrix(ds, P2)
    assert np.array_equal(D.values, D.values.T)
    assert np.all(np.diag(D.values) == 0)
    assert D.values[1, 4] == wwls_distance(ds.graphs[1], ds.graphs[4], P2)
    assert D.metadata == {"mode": "distance", "h": 2, "k": 2, "M": P2.modulus, "seed": 0, "solver": "exact"}
    K = pairwise_matrix(ds, P2, mode="kernel", gamma=0.1)
    assert np.all(np.diag(K.values) == 1) and np.all((K.values > 0) & (K.values <= 1))
    assert np.allclose(K.values, np.exp(-0.1 * D.values), rtol=0, atol=1e-15)


def test_pairwise_singleton_and_errors():
    one = LabeledDataset("one", (gen_cycle(4),), (0,))
    assert pairwise_matrix(one, P2).values.tolist() == [[0.0]]
    assert pairwise_matrix(one, P2, mode="kernel", gamma=1).values.tolist() == [[1.0]]
    with pytest.raises(InputError):
        pairwise_matrix(one, P2, mode="kernel")
    with pytest.raises(InputError):
        pairwise_matrix([], P2)


def test_pairwise_parallel_matches_serial():
    ds = _dataset(10)
    serial = pairwise_matrix(ds, P2, jobs=1).values
    parallel = pairwise_matrix(ds, P2, jobs=3).values
    assert np.array_equal(serial, parallel)


# -- k-NN ----------------------------------------------------------------------


def test_knn_separated_clusters():
    D = np.array([[0, 1, 9, 9], [1, 0, 9, 9], [9, 9, 0, 1], [9, 9, 1, 0]], dtype=float)
    assert knn_eval(D, [0, 0, 1, 1], 1) == 1.0
    assert knn_eval(D, [0, 1, 0, 1], 1) == 0.0


def test_knn_tie_breaks():
    # neighbors of 0 at distances 1 (class 1) and 2 (class 0): vote tie, class 1 is closer
    D = np.array([[0, 2, 1], [2, 0, 5], [1, 5, 0]], dtype=float)
    assert knn_predict(D, [0, 0, 1], 2)[0] == 1
    # equal mean distance falls back to the lower class id
    D = np.array([[0, 1, 1], [1, 0, 5], [1, 5, 0]], dtype=float)
    assert knn_predict(D, [9, 3, 2], 2)[0] == 2


def test_knn_errors():
    D = np.zeros((3, 3))
    with pytest.raises(InputError):
        knn_eval(D, [0, 1, 0], 3)
    with pytest.raises(InputError):
        knn_eval(PairwiseMatrix(D, {"mode": "kernel"}), [0, 1, 0], 1)


def test_knn_two_graphs():
    D = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert knn_eval(D, [0, 1], 1) in (0.0, 1.0)


def test_knn_shuffled_labels_near_prior():
    rng = np.random.default_rng(0)
    n = 120
    D = rng.random((n, n))
    D = (D + D.T) / 2
    np.fill_diagonal(D, 0)
    accs = [knn_eval(D, rng.permutation(np.arange(n) % 2), 1) for _ in range(10)]
    # prior is 0.5; the mean over 10 shuffles stays within a generous CI
    assert abs(np.mean(accs) - 0.5) < 0.1
