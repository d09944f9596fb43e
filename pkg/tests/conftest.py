import numpy as np
import pytest

from vcoclust.graphdata import AttributedGraph
from vcoclust.sparse import CsrMatrix


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def toy_graph(n_nodes=12, n_attrs=8, k=3, edge_prob=0.3, attr_prob=0.25, seed=7):
    """Small random attributed graph with labels; used all over the suite."""
    gen = np.random.default_rng(seed)
    src, dst = [], []
    for i in range(n_nodes):
        for j in range(i + 1, n_nodes):
            if gen.random() < edge_prob:
                src += [i, j]
                dst += [j, i]
    adjacency = CsrMatrix.from_coo(n_nodes, n_nodes, src, dst)
    dense = (gen.random((n_nodes, n_attrs)) < attr_prob).astype(np.float64)
    # make sure no node row is empty so every node has some signal
    for i in range(n_nodes):
        if dense[i].sum() == 0:
            dense[i, gen.integers(n_attrs)] = 1.0
    features = CsrMatrix.from_dense(dense)
    labels = np.array([i % k for i in range(n_nodes)], dtype=np.int64)
    return AttributedGraph(n_nodes, n_attrs, adjacency, features, labels, k)


@pytest.fixture
def small_graph():
    return toy_graph()
