import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import laplacian_dense
from wwls.errors import InputError, NoiseExhaustedError
from wwls.graph import (Graph, LabeledDataset, NoiseSpec, assign_degree_labels, gen_cycle, gen_grid,
                        gen_random_graph, laplacian_frobenius, parse_tud_dataset, perturb, perturb_steps,
                        write_tud_dataset)


@st.composite
def graphs(draw, max_n=12):
    n = draw(st.integers(0, max_n))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    edges = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    labels = draw(st.lists(st.integers(0, 4), min_size=n, max_size=n))
    return Graph.from_edges(n, edges, labels)


def test_graph_rejects_asymmetric_and_loops():
    with pytest.raises(ValueError):
        Graph(((1,), ()), (0, 0))
    with pytest.raises(ValueError):
        Graph.from_edges(2, [(0, 0)])
    with pytest.raises(ValueError):
        Graph.from_edges(2, [(0, 1)], labels=[0])


def test_degree_labels():
    assert assign_degree_labels(gen_cycle(4)).labels == (2, 2, 2, 2)
    star = Graph.from_edges(4, [(0, 1), (0, 2), (0, 3)])
    assert assign_degree_labels(star).labels == (3, 1, 1, 1)
    assert assign_degree_labels(Graph.from_edges(0, [])).node_count == 0


def test_generators():
    c = gen_cycle(5)
    assert c.node_count == 5 and c.edge_count == 5 and set(c.degrees()) == {2}
    g = gen_grid(2, 2)
    assert g.node_count == 4 and g.edge_count == 4
    assert gen_random_graph(50, 0.1, 7) == gen_random_graph(50, 0.1, 7)
    assert gen_random_graph(50, 0.1, 7) != gen_random_graph(50, 0.1, 8)


def test_grid_edge_count():
    g = gen_grid(5, 10)
    assert g.edge_count == 5 * 9 + 4 * 10


def test_perturb_examples():
    c4 = gen_cycle(4)
    assert perturb(c4, NoiseSpec("rewire", 0, 1)) == c4
    assert perturb(c4, NoiseSpec("add", 1, 1)).edge_count == 5
    g = gen_random_graph(50, 0.1, 3)
    r = perturb(g, NoiseSpec("rewire", 3, 11))
    assert r.node_count == g.node_count and r.edge_count == g.edge_count
    assert r != g


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 15), st.sampled_from(["rewire", "add"]))
def test_perturb_edge_contract(seed, count, mode):
    g = gen_random_graph(20, 0.15, seed)
    out = perturb(g, NoiseSpec(mode, count, seed))
    expected = g.edge_count + (count if mode == "add" else 0)
    assert out.edge_count == expected
    assert out.labels == g.labels
    # pure function of the seed
    assert perturb(g, NoiseSpec(mode, count, seed)) == out


def test_perturb_chain_steps_are_single_edits():
    g = gen_random_graph(30, 0.1, 0)
    prev = g
    for step in perturb_steps(g, NoiseSpec("rewire", 10, 5)):
        e_prev, e_now = set(prev.edges()), set(step.edges())
        assert len(e_prev - e_now) == 1 and len(e_now - e_prev) == 1
        # the rewired edge keeps one endpoint
        (a, b), = e_prev - e_now
        (c, d), = e_now - e_prev
        assert {a, b} & {c, d}
        prev = step


def test_perturb_exhausted():
    complete = Graph.from_edges(4, [(u, v) for u in range(4) for v in range(u + 1, 4)])
    with pytest.raises(NoiseExhaustedError):
        perturb(complete, NoiseSpec("add", 1, 0))
    with pytest.raises(NoiseExhaustedError):
        perturb(complete, NoiseSpec("rewire", 1, 0))


def test_laplacian_examples():
    g = Graph.from_edges(2, [(0, 1)])
    e = Graph.from_edges(2, [])
    assert laplacian_frobenius(g, g) == 0
    assert laplacian_frobenius(g, e) == pytest.approx(2.0)


@settings(max_examples=50, deadline=None)
@given(graphs(), graphs())
def test_laplacian_matches_dense(g1, g2):
    if g1.node_count != g2.node_count:
        with pytest.raises(ValueError):
            laplacian_frobenius(g1, g2)
        return
    n = g1.node_count
    ref = np.linalg.norm(laplacian_dense(n, g1.edges()) - laplacian_dense(n, g2.edges()))
    assert laplacian_frobenius(g1, g2) == pytest.approx(ref, abs=1e-12)


def test_laplacian_add_mode_monotone_on_average():
    means = []
    for count in range(0, 11):
        vals = [laplacian_frobenius(g := gen_random_graph(30, 0.1, s), perturb(g, NoiseSpec("add", count, s)))
                for s in range(20)]
        means.append(np.mean(vals))
    assert all(b >= a for a, b in zip(means, means[1:]))


# -- TUD files ---------------------------------------------------------------


def _write(tmp_path, name, files):
    for suffix, text in files.items():
        (tmp_path / f"{name}_{suffix}.txt").write_text(text)


def test_parse_small(tmp_path):
    _write(tmp_path, "T", {
        "A": "1, 2\r\n2, 1\n3, 4\n4,3\n",
        "graph_indicator": "1\n1\n2\n2\n2\n",
        "graph_labels": "0\n1\n",
        "node_labels": " 5\n6\n7\n8\n9 \n",
    })
    ds = parse_tud_dataset(tmp_path, "T")
    assert len(ds) == 2 and ds.class_labels == (0, 1)
    g0, g1 = ds.graphs
    assert g0.node_count == 2 and g0.has_edge(0, 1)
    assert g1.node_count == 3 and g1.has_edge(0, 1) and g1.degree(2) == 0
    assert g1.labels == (7, 8, 9)
    # parent directory layout also works
    sub = tmp_path / "T"
    sub.mkdir()
    for f in tmp_path.glob("T_*.txt"):
        (sub / f.name).write_text(f.read_text())
    assert parse_tud_dataset(tmp_path / "T", "T").graphs == ds.graphs


def test_parse_without_node_labels(tmp_path):
    _write(tmp_path, "U", {"A": "1, 2\n", "graph_indicator": "1\n1\n", "graph_labels": "3\n"})
    ds = parse_tud_dataset(tmp_path, "U")
    assert ds.graphs[0].labels == (0, 0)
    assert ds.graphs[0].edge_count == 1


def test_parse_errors(tmp_path):
    _write(tmp_path, "M", {"graph_indicator": "1\n", "graph_labels": "0\n"})
    with pytest.raises(InputError, match="M_A.txt"):
        parse_tud_dataset(tmp_path, "M")
    _write(tmp_path, "B", {"A": "1, 2\n1, x\n", "graph_indicator": "1\n1\n", "graph_labels": "0\n"})
    with pytest.raises(InputError, match=r"B_A.txt:2"):
        parse_tud_dataset(tmp_path, "B")
    _write(tmp_path, "N", {"A": "1, 9\n", "graph_indicator": "1\n1\n", "graph_labels": "0\n"})
    with pytest.raises(InputError, match=r"N_A.txt:1"):
        parse_tud_dataset(tmp_path, "N")


@settings(max_examples=30, deadline=None)
@given(st.lists(graphs(max_n=8).filter(lambda g: g.node_count > 0), min_size=1, max_size=4))
def test_tud_round_trip(tmp_path_factory, gs):
    root = tmp_path_factory.mktemp("rt")
    ds = LabeledDataset("RT", tuple(gs), tuple(range(len(gs))))
    write_tud_dataset(ds, root)
    back = parse_tud_dataset(root, "RT")
    assert back.class_labels == ds.class_labels
    # node order is preserved, so the identity is the bijection
    assert back.graphs == ds.graphs
