"""Partition-comparison metrics for clustering evaluation.

All metrics are computed from the contingency table between the predicted
and true partitions. Cluster-to-class identification for the weighted
precision/recall/F1 family uses a maximum-benefit Hungarian matching on
that table, so every metric is invariant under relabeling either side.
Pair-counting uses exact integer arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np

from .errors import InputError, ContractError


@dataclass
class ContingencyTable:
    counts: np.ndarray    # q x p intersection sizes
    row_sums: np.ndarray  # predicted cluster sizes
    col_sums: np.ndarray  # true class sizes
    n: int


@dataclass
class MetricReport:
    nmi: float
    purity: float
    ari: float
    precision: float
    recall: float
    f1: float

    FIELDS = ("nmi", "purity", "ari", "f1", "precision", "recall")

    def as_dict(self):
        return asdict(self)

    def tsv_row(self):
        return "\t".join(repr(getattr(self, f)) for f in self.FIELDS)

    @staticmethod
    def tsv_header():
        return "\t".join(MetricReport.FIELDS)


def contingency(pred, true):
    """Exact intersection counts; empty predicted clusters give zero rows."""
    pred = np.asarray(pred, dtype=np.int64)
    true = np.asarray(true, dtype=np.int64)
    if pred.shape != true.shape or pred.ndim != 1:
        raise InputError("label vectors must be 1-D and the same length")
    if len(pred) == 0:
        raise InputError("empty labelings are not comparable")
    if pred.min() < 0 or true.min() < 0:
        raise InputError("labels must be non-negative dense ids")
    q, p = int(pred.max()) + 1, int(true.max()) + 1
    counts = np.zeros((q, p), dtype=np.int64)
    np.add.at(counts, (pred, true), 1)
    return ContingencyTable(
        counts=counts,
        row_sums=counts.sum(axis=1),
        col_sums=counts.sum(axis=0),
        n=len(pred),
    )


def _entropy(sizes, n):
    h = 0.0
    for s in sizes:
        if s > 0:
            frac = s / n
            h -= frac * math.log(frac)
    return h


def nmi(table, variant="arithmetic"):
    """Normalized mutual information; the default denominator is the
    arithmetic mean of the two partition entropies, ``geometric`` uses
    sqrt(H1*H2) for comparison with other toolkits."""
    n = table.n
    mi = 0.0
    for i in range(table.counts.shape[0]):
        for j in range(table.counts.shape[1]):
            nij = table.counts[i, j]
            if nij > 0:
                mi += (nij / n) * math.log(
                    n * nij / (table.row_sums[i] * table.col_sums[j])
                )
    h_pred = _entropy(table.row_sums, n)
    h_true = _entropy(table.col_sums, n)
    if h_pred == 0.0 and h_true == 0.0:
        return 1.0
    if h_pred == 0.0 or h_true == 0.0:
        return 0.0
    if variant == "arithmetic":
        denom = (h_pred + h_true) / 2.0
    elif variant == "geometric":
        denom = math.sqrt(h_pred * h_true)
    else:
        raise ContractError(f"unknown nmi variant {variant!r}")
    return float(mi / denom)


def purity(table):
    return float(sum(int(row.max()) for row in table.counts if row.size)) / table.n


def _comb2(x):
    return x * (x - 1) // 2


def ari(table):
    """Adjusted Rand index via exact pair counting."""
    if table.n < 2:
        raise InputError("adjusted Rand index needs at least 2 points")
    sum_cells = sum(_comb2(int(v)) for v in table.counts.reshape(-1))
    sum_rows = sum(_comb2(int(v)) for v in table.row_sums)
    sum_cols = sum(_comb2(int(v)) for v in table.col_sums)
    total = _comb2(table.n)
    expected = sum_rows * sum_cols
    # exact integers throughout; scale by 2*total to avoid any division
    num = 2 * (sum_cells * total - expected)
    den = (sum_rows + sum_cols) * total - 2 * expected
    if den == 0:
        # both partitions trivial in the same way; identical by convention
        return 1.0 if num == 0 else 0.0
    return num / den


def hungarian(benefit):
    """Maximum-total-benefit one-to-one matching.

    Rectangular inputs are padded with zero-benefit rows/columns. Returns
    an array mapping each (real or padded) row to its matched column.
    """
    benefit = np.asarray(benefit, dtype=np.float64)
    if benefit.ndim != 2:
        raise ContractError("benefit matrix must be 2-D")
    q, p = benefit.shape
    size = max(q, p)
    padded = np.zeros((size, size))
    padded[:q, :p] = benefit
    cost = padded.max() - padded
    return _min_cost_assignment(cost)


def _min_cost_assignment(cost):
    """Shortest-augmenting-path assignment with potentials, O(n^3)."""
    n = cost.shape[0]
    INF = math.inf
    u = [0.0] * (n + 1)
    v = [0.0] * (n + 1)
    match = [0] * (n + 1)   # match[j] = row assigned to column j (1-based)
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        match[0] = i
        j0 = 0
        minv = [INF] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = match[j0]
            delta = INF
            j1 = -1
            for j in range(1, n + 1):
                if used[j]:
                    continue
                cur = cost[i0 - 1, j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[match[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if match[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            match[j0] = match[j1]
            j0 = j1
    row_to_col = np.zeros(n, dtype=np.int64)
    for j in range(1, n + 1):
        if match[j] > 0:
            row_to_col[match[j] - 1] = j - 1
    return row_to_col


def canonical_matching(counts):
    """Hungarian matching made invariant to predicted-id order.

    Rows are sorted by content before matching, so tables that differ only
    by a cluster relabeling always resolve ties between equally good
    matchings the same way.
    """
    counts = np.asarray(counts)
    q = counts.shape[0]
    order = sorted(range(q), key=lambda i: tuple(counts[i]), reverse=True)
    sorted_match = hungarian(counts[order])
    row_to_col = np.arange(len(sorted_match), dtype=np.int64)
    for pos, col in enumerate(sorted_match):
        row_to_col[order[pos] if pos < q else pos] = col
    return row_to_col


def weighted_prf(table, matching):
    """Class-support-weighted precision, recall and F1 after identifying
    each true class with its Hungarian-matched predicted cluster."""
    q, p = table.counts.shape
    n = table.n
    col_of_row = matching
    row_of_col = {int(col_of_row[i]): i for i in range(len(col_of_row))}
    precision = recall = f1 = 0.0
    for j in range(p):
        support = int(table.col_sums[j])
        if support == 0:
            continue
        i = row_of_col.get(j)
        tp = int(table.counts[i, j]) if i is not None and i < q else 0
        fp = (int(table.row_sums[i]) - tp) if i is not None and i < q else 0
        fn = support - tp
        w = support / n
        if tp + fp > 0:
            precision += w * tp / (tp + fp)
        recall += w * tp / (tp + fn)
        f1 += w * 2 * tp / (2 * tp + fp + fn)
    return precision, recall, f1


def evaluate(pred, true, nmi_variant="arithmetic"):
    """Full metric report for a predicted labeling against the truth."""
    table = contingency(pred, true)
    matching = canonical_matching(table.counts)
    p, r, f = weighted_prf(table, matching)
    return MetricReport(
        nmi=nmi(table, variant=nmi_variant),
        purity=purity(table),
        ari=ari(table),
        precision=p,
        recall=r,
        f1=f,
    )
