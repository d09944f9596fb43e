"""Attributed-network datasets: loading, saving and adjacency normalization.

Two on-disk formats are supported:

* native: three UTF-8 TSV files
    - edges:    ``src<TAB>dst`` (one undirected edge per line, any order)
    - features: ``node<TAB>attr`` coordinate pairs of the binary incidence
    - labels:   ``node<TAB>label`` with integer labels (optional file)
  The node universe is the set of ids appearing in the features and labels
  files; edges may only reference known nodes. Ids are re-indexed to a
  contiguous 0..N-1 range (sorted order), labels to 0..K-1 (sorted value).

* citation content/cites: ``<id> <attr_0> ... <attr_{M-1}> <label>`` rows
  plus ``<cited> <citing>`` rows; string labels are mapped to dense ids in
  first-appearance order, cite lines naming unknown ids are skipped and
  counted in ``meta['skipped_cites']``.

Labels never reach the trainer; they exist only for evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InputError
from .sparse import CsrMatrix


@dataclass
class AttributedGraph:
    """Undirected binary graph with binary node attributes."""

    n_nodes: int
    n_attrs: int
    adjacency: CsrMatrix          # symmetric, zero diagonal, values 1.0
    features: CsrMatrix           # n_nodes x n_attrs, values 1.0
    labels: np.ndarray | None     # dense ids in [0, k_clusters) or None
    k_clusters: int               # 0 when labels are absent
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if len(self.labels) != self.n_nodes:
                raise InputError("label count does not match node count")
            if len(self.labels) and (
                self.labels.min() < 0 or self.labels.max() >= self.k_clusters
            ):
                raise InputError("labels outside [0, k_clusters)")

    def features_t(self):
        return self.features.transpose()

    def same_data(self, other):
        """Field-by-field equality of the loaded data (meta excluded)."""
        if (self.n_nodes, self.n_attrs, self.k_clusters) != (
            other.n_nodes, other.n_attrs, other.k_clusters
        ):
            return False
        if (self.labels is None) != (other.labels is None):
            return False
        if self.labels is not None and not np.array_equal(self.labels, other.labels):
            return False
        for a, b in ((self.adjacency, other.adjacency), (self.features, other.features)):
            if not (
                np.array_equal(a.offsets, b.offsets)
                and np.array_equal(a.indices, b.indices)
                and np.array_equal(a.values, b.values)
            ):
                return False
        return True


def _read_tsv_pairs(path, what):
    pairs = []
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise InputError(f"cannot read {what} file {path}: {e}") from e
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise InputError(f"{what} file {path}:{lineno}: expected 2 columns, got {len(parts)}")
        pairs.append((parts[0], parts[1], lineno))
    return pairs


def _parse_int(token, path, lineno, what):
    try:
        return int(token)
    except ValueError:
        raise InputError(f"{what} file {path}:{lineno}: {token!r} is not an integer") from None


def _symmetric_adjacency(n, edge_pairs):
    """Deduplicated symmetric binary adjacency; self edges in the input are dropped."""
    if not edge_pairs:
        return CsrMatrix.from_coo(n, n, [], [])
    undirected = {(min(a, b), max(a, b)) for a, b in edge_pairs if a != b}
    if not undirected:
        return CsrMatrix.from_coo(n, n, [], [])
    src = []
    dst = []
    for a, b in undirected:
        src += [a, b]
        dst += [b, a]
    return CsrMatrix.from_coo(n, n, src, dst)


def load_dataset(edges_path, features_path, labels_path=None):
    """Load the native three-file TSV format into an AttributedGraph."""
    feature_pairs = _read_tsv_pairs(features_path, "features")
    label_pairs = _read_tsv_pairs(labels_path, "labels") if labels_path else []
    edge_lines = _read_tsv_pairs(edges_path, "edges")

    node_ids = set()
    feats = []
    for ntok, atok, lineno in feature_pairs:
        node = _parse_int(ntok, features_path, lineno, "features")
        attr = _parse_int(atok, features_path, lineno, "features")
        if node < 0 or attr < 0:
            raise InputError(f"features file {features_path}:{lineno}: negative id")
        node_ids.add(node)
        feats.append((node, attr))

    raw_labels = {}
    for ntok, ltok, lineno in label_pairs:
        node = _parse_int(ntok, labels_path, lineno, "labels")
        label = _parse_int(ltok, labels_path, lineno, "labels")
        if node in raw_labels and raw_labels[node] != label:
            raise InputError(f"labels file {labels_path}:{lineno}: conflicting label for node {node}")
        raw_labels[node] = label
        node_ids.add(node)

    if not node_ids:
        raise InputError("dataset declares no nodes (features and labels both empty)")
    index = {raw: i for i, raw in enumerate(sorted(node_ids))}
    n = len(index)

    edges = []
    for stok, dtok, lineno in edge_lines:
        s = _parse_int(stok, edges_path, lineno, "edges")
        d = _parse_int(dtok, edges_path, lineno, "edges")
        if s not in index or d not in index:
            raise InputError(f"edges file {edges_path}:{lineno}: unknown node id")
        edges.append((index[s], index[d]))

    m = 1 + max((a for _, a in feats), default=-1)
    features = CsrMatrix.from_coo(
        n, max(m, 1), [index[nd] for nd, _ in feats], [a for _, a in feats]
    )
    features = CsrMatrix(
        features.rows, features.cols, features.offsets,
        features.indices, np.minimum(features.values, 1.0),
    )

    labels = None
    k = 0
    if labels_path is not None:
        if set(raw_labels) != node_ids:
            raise InputError("labels file must cover every node when provided")
        distinct = sorted(set(raw_labels.values()))
        label_index = {v: i for i, v in enumerate(distinct)}
        k = len(distinct)
        labels = np.array(
            [label_index[raw_labels[raw]] for raw in sorted(node_ids)], dtype=np.int64
        )

    adjacency = _symmetric_adjacency(n, edges)
    return AttributedGraph(n, features.cols, adjacency, features, labels, k)


def save_dataset(graph, out_dir):
    """Write edges.tsv / features.tsv / labels.tsv re-loadable by load_dataset."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    adj = graph.adjacency
    lines = []
    for i in range(adj.rows):
        lo, hi = adj.offsets[i], adj.offsets[i + 1]
        for j in adj.indices[lo:hi]:
            if i < j:
                lines.append(f"{i}\t{j}")
    (out / "edges.tsv").write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")

    feats = graph.features
    lines = []
    for i in range(feats.rows):
        lo, hi = feats.offsets[i], feats.offsets[i + 1]
        for j in feats.indices[lo:hi]:
            lines.append(f"{i}\t{j}")
    (out / "features.tsv").write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")

    if graph.labels is not None:
        lines = [f"{i}\t{int(l)}" for i, l in enumerate(graph.labels)]
        (out / "labels.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return out


def load_planetoid_content(content_path, cites_path):
    """Load the citation-network content/cites format."""
    try:
        content_lines = Path(content_path).read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise InputError(f"cannot read content file {content_path}: {e}") from e
    try:
        cites_lines = Path(cites_path).read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise InputError(f"cannot read cites file {cites_path}: {e}") from e

    ids = []
    index = {}
    rows = []
    label_names = []
    label_index = {}
    labels = []
    m = None
    for lineno, line in enumerate(content_lines, 1):
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) < 3:
            raise InputError(f"content file {content_path}:{lineno}: too few columns")
        node_id, attrs, label = parts[0], parts[1:-1], parts[-1]
        if m is None:
            m = len(attrs)
        elif len(attrs) != m:
            raise InputError(
                f"content file {content_path}:{lineno}: "
                f"expected {m} attribute columns, got {len(attrs)}"
            )
        if node_id in index:
            raise InputError(f"content file {content_path}:{lineno}: duplicate id {node_id!r}")
        index[node_id] = len(ids)
        ids.append(node_id)
        try:
            rows.append([k for k, v in enumerate(attrs) if int(v) != 0])
        except ValueError:
            raise InputError(
                f"content file {content_path}:{lineno}: non-integer attribute value"
            ) from None
        if label not in label_index:
            label_index[label] = len(label_names)
            label_names.append(label)
        labels.append(label_index[label])

    if not ids:
        raise InputError(f"content file {content_path} is empty")
    n = len(ids)

    edges = []
    skipped = 0
    for lineno, line in enumerate(cites_lines, 1):
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise InputError(f"cites file {cites_path}:{lineno}: expected 2 columns")
        cited, citing = parts
        if cited not in index or citing not in index:
            skipped += 1
            continue
        edges.append((index[cited], index[citing]))

    rr = [i for i, cols in enumerate(rows) for _ in cols]
    cc = [c for cols in rows for c in cols]
    features = CsrMatrix.from_coo(n, max(m, 1), rr, cc)
    adjacency = _symmetric_adjacency(n, edges)
    graph = AttributedGraph(
        n, features.cols, adjacency, features,
        np.array(labels, dtype=np.int64), len(label_names),
        meta={"skipped_cites": skipped, "label_names": label_names, "node_ids": ids},
    )
    return graph


def normalize_adjacency(graph, add_self_loops=True):
    """Symmetrically normalized adjacency operator.

    With the flag set the identity is added before normalizing (the usual
    graph-convolution convention); without it the plain adjacency is scaled.
    Degree-zero nodes get all-zero rows.
    """
    adj = graph.adjacency
    if add_self_loops:
        n = adj.rows
        row_ids = np.concatenate(
            [np.repeat(np.arange(n), np.diff(adj.offsets)), np.arange(n)]
        )
        col_ids = np.concatenate([adj.indices, np.arange(n)])
        vals = np.concatenate([adj.values, np.ones(n)])
        adj = CsrMatrix.from_coo(n, n, row_ids, col_ids, vals)
    degrees = adj.row_sums()
    inv_sqrt = np.zeros_like(degrees)
    nz = degrees > 0
    inv_sqrt[nz] = 1.0 / np.sqrt(degrees[nz])
    return adj.scale_rows_cols(inv_sqrt, inv_sqrt)
