"""Versioned text checkpoints.

Layout (UTF-8):

    vcoclust-checkpoint v1
    meta <key> <value>          (repeated)
    tensor <name> <rows> <cols> (followed by `rows` lines of `cols` floats)
    ...
    end

Floats are written with shortest round-trip formatting, so save/load is
exact and files diff cleanly between runs.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import InputError

MAGIC = "vcoclust-checkpoint v1"


def save_tensors(path, meta, tensors):
    lines = [MAGIC]
    for key, value in meta.items():
        lines.append(f"meta {key} {value}")
    for name, arr in tensors.items():
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim != 2:
            raise InputError(f"tensor {name!r} must be 2-D")
        lines.append(f"tensor {name} {arr.shape[0]} {arr.shape[1]}")
        for row in arr:
            lines.append("\t".join(repr(float(x)) for x in row))
    lines.append("end")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def load_tensors(path):
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise InputError(f"cannot read checkpoint {path}: {e}") from e
    if not lines or lines[0] != MAGIC:
        raise InputError(f"{path} is not a {MAGIC!r} file")
    meta = {}
    tensors = {}
    i = 1
    closed = False
    while i < len(lines):
        line = lines[i]
        if line == "end":
            closed = True
            break
        if line.startswith("meta "):
            parts = line.split(" ", 2)
            if len(parts) != 3:
                raise InputError(f"{path}:{i + 1}: malformed meta line")
            meta[parts[1]] = parts[2]
            i += 1
            continue
        if line.startswith("tensor "):
            parts = line.split(" ")
            if len(parts) != 4:
                raise InputError(f"{path}:{i + 1}: malformed tensor header")
            name, rows, cols = parts[1], int(parts[2]), int(parts[3])
            block = lines[i + 1:i + 1 + rows]
            if len(block) != rows:
                raise InputError(f"{path}: truncated tensor {name!r}")
            try:
                arr = np.array(
                    [[float(x) for x in row.split("\t")] for row in block]
                )
            except ValueError:
                raise InputError(f"{path}: non-numeric data in tensor {name!r}") from None
            if arr.shape != (rows, cols):
                raise InputError(
                    f"{path}: tensor {name!r} shape {arr.shape} does not match header"
                )
            tensors[name] = arr
            i += 1 + rows
            continue
        raise InputError(f"{path}:{i + 1}: unexpected line {line[:40]!r}")
    if not closed:
        raise InputError(f"{path}: missing end marker")
    return meta, tensors


def checkpoint_from_state(state):
    """All parameter tensors plus the embedding means for self-contained export."""
    from . import trainer as trainer_mod

    meta = {
        "epoch": state.epoch,
        "phase": state.phase,
        "j": state.config.j,
        "hidden": state.config.hidden,
        "n_nodes": state.graph.n_nodes,
        "n_attrs": state.graph.n_attrs,
        "k": state.prior.k if state.prior is not None else 0,
        "seed": state.config.seed,
    }
    tensors = {
        "node.w0": state.params.node.w0.data,
        "node.w1": state.params.node.w1.data,
        "attr.w0": state.params.attr.w0.data,
        "attr.b0": state.params.attr.b0.data,
        "attr.w1": state.params.attr.w1.data,
        "attr.b1": state.params.attr.b1.data,
        "embedding.nodes": trainer_mod.node_embedding_means(state),
        "embedding.attrs": trainer_mod.attr_embedding_means(state),
    }
    if state.prior is not None:
        tensors["prior.means"] = state.prior.means.data
        tensors["prior.log_vars"] = state.prior.log_vars.data
        tensors["prior.weight_logits"] = state.prior.weight_logits.data
    return meta, tensors


def save_state(path, state):
    meta, tensors = checkpoint_from_state(state)
    return save_tensors(path, meta, tensors)
