"""Embedding export and the deterministic 2-D principal-component projection."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import InputError


def pca_project(points, n_components=2):
    """Project onto the top principal components of the covariance.

    Components come from an eigendecomposition of the covariance matrix;
    each component's sign is fixed so its largest-magnitude loading is
    positive, making the projection deterministic.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise InputError("points must be 2-D")
    n_components = min(n_components, points.shape[1])
    centered = points - points.mean(axis=0, keepdims=True)
    cov = (centered.T @ centered) / max(points.shape[0] - 1, 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1][:n_components]
    comps = eigvecs[:, order]
    for c in range(comps.shape[1]):
        pivot = np.argmax(np.abs(comps[:, c]))
        if comps[pivot, c] < 0:
            comps[:, c] = -comps[:, c]
    return centered @ comps


def write_embeddings_tsv(path, embeddings, ids=None):
    """One node per line: id followed by its coordinates (round-trip floats)."""
    embeddings = np.asarray(embeddings, dtype=np.float64)
    if ids is None:
        ids = range(embeddings.shape[0])
    lines = [
        "\t".join([str(i)] + [repr(float(x)) for x in row])
        for i, row in zip(ids, embeddings)
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_embeddings_tsv(path):
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise InputError(f"cannot read embeddings {path}: {e}") from e
    ids = []
    rows = []
    width = None
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if width is None:
            width = len(parts)
        elif len(parts) != width:
            raise InputError(f"{path}:{lineno}: ragged row")
        try:
            ids.append(parts[0])
            rows.append([float(x) for x in parts[1:]])
        except ValueError:
            raise InputError(f"{path}:{lineno}: non-numeric coordinate") from None
    if not rows:
        raise InputError(f"{path}: no embeddings found")
    return ids, np.array(rows)


def write_assignments_tsv(path, assignments, ids=None):
    if ids is None:
        ids = range(len(assignments))
    lines = [f"{i}\t{int(a)}" for i, a in zip(ids, assignments)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_assignments_tsv(path):
    """Read ``node<TAB>cluster`` lines into an id->cluster dict."""
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise InputError(f"cannot read assignments {path}: {e}") from e
    out = {}
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise InputError(f"{path}:{lineno}: expected 2 columns")
        try:
            out[parts[0]] = int(parts[1])
        except ValueError:
            raise InputError(f"{path}:{lineno}: non-integer cluster id") from None
    if not out:
        raise InputError(f"{path}: no assignments found")
    return out
