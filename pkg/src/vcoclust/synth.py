"""Synthetic attributed graphs with planted block structure.

Used by the recovery tests and handy for demos: blocks are densely wired
inside and sparsely across, and each block owns a slice of attributes its
members switch on far more often than outsiders do.
"""

from __future__ import annotations

import numpy as np

from .graphdata import AttributedGraph
from .sparse import CsrMatrix


def planted_partition(
    n_nodes=300,
    n_blocks=3,
    p_in=0.2,
    p_out=0.01,
    attrs_per_block=10,
    attr_on=0.3,
    attr_noise=0.02,
    seed=0,
):
    """Attributed graph whose ground-truth clustering is the block structure."""
    rng = np.random.default_rng(seed)
    labels = np.repeat(np.arange(n_blocks), int(np.ceil(n_nodes / n_blocks)))[:n_nodes]
    src, dst = [], []
    for i in range(n_nodes):
        for j in range(i + 1, n_nodes):
            p = p_in if labels[i] == labels[j] else p_out
            if rng.random() < p:
                src += [i, j]
                dst += [j, i]
    adjacency = CsrMatrix.from_coo(n_nodes, n_nodes, src, dst)

    m = attrs_per_block * n_blocks
    probs = np.full((n_nodes, m), attr_noise)
    for b in range(n_blocks):
        rows = labels == b
        probs[np.ix_(rows, np.arange(b * attrs_per_block, (b + 1) * attrs_per_block))] = attr_on
    dense = (rng.random((n_nodes, m)) < probs).astype(np.float64)
    features = CsrMatrix.from_dense(dense)

    return AttributedGraph(
        n_nodes=n_nodes,
        n_attrs=m,
        adjacency=adjacency,
        features=features,
        labels=labels,
        k_clusters=n_blocks,
        meta={"generator": "planted_partition", "p_in": p_in, "p_out": p_out},
    )


def gaussian_blobs(n_points, centers, spread=0.5, seed=0):
    """Labeled points around given centers; for mixture-fitting tests."""
    rng = np.random.default_rng(seed)
    centers = np.asarray(centers, dtype=np.float64)
    k = centers.shape[0]
    labels = rng.integers(0, k, size=n_points)
    points = centers[labels] + spread * rng.standard_normal((n_points, centers.shape[1]))
    return points, labels
