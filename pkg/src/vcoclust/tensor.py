"""Dense float64 matrices with a record/replay gradient tape.

The training graph of this model is static, so reverse-mode differentiation
is built from a small closed set of primitives instead of a general autodiff
system: matmul, sparse-dense matmul, elementwise activations, broadcasting
add/mul/div, scaling, axis reductions, column slicing, clamping, and one
fused Bernoulli reconstruction term that streams over row blocks so the
full probability matrix is never materialized.

Everything is 2-D: scalars are 1x1, row vectors 1xn, column vectors nx1.
All functions are pure with respect to their inputs; recording happens on
the innermost active :class:`Tape`, and with no tape active the same
functions run as plain numpy forward evaluation.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeError, DomainError, ContractError, NumericError
from .sparse import CsrMatrix

# probabilities are clipped away from {0, 1} before logs
PROB_EPS = 1e-7


class Tensor:
    """2-D float64 value, optionally a differentiable leaf."""

    __slots__ = ("data", "requires_grad", "name")

    def __init__(self, data, requires_grad=False, name=""):
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        elif arr.ndim == 1:
            arr = arr.reshape(1, -1)
        elif arr.ndim != 2:
            raise ShapeError(f"tensors are 2-D, got ndim={arr.ndim}")
        self.data = np.ascontiguousarray(arr)
        self.requires_grad = bool(requires_grad)
        self.name = name

    @property
    def rows(self):
        return self.data.shape[0]

    @property
    def cols(self):
        return self.data.shape[1]

    @property
    def shape(self):
        return self.data.shape

    def item(self):
        if self.data.shape != (1, 1):
            raise ContractError(f"item() needs a 1x1 tensor, got {self.data.shape}")
        return float(self.data[0, 0])

    def __repr__(self):
        tag = f" '{self.name}'" if self.name else ""
        return f"Tensor{tag}({self.rows}x{self.cols}, grad={self.requires_grad})"

    # arithmetic sugar; scalars become 1x1 constants
    def __add__(self, other):
        return add(self, _as_tensor(other))

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, _as_tensor(other))

    def __rsub__(self, other):
        return sub(_as_tensor(other), self)

    def __mul__(self, other):
        return mul(self, _as_tensor(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, _as_tensor(other))

    def __rtruediv__(self, other):
        return div(_as_tensor(other), self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __pow__(self, p):
        return powc(self, p)


def parameter(data, name=""):
    """Trainable leaf; gradients accumulate for it during backward."""
    return Tensor(np.array(data, dtype=np.float64, copy=True), requires_grad=True, name=name)


def constant(data, name=""):
    return Tensor(data, requires_grad=False, name=name)


def _as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


class Tape:
    """Ordered record of primitive operations for one forward pass.

    Ops append in execution order, which is a topological order of the
    graph, so replaying the record backwards propagates adjoints in
    reverse topological order.
    """

    def __init__(self):
        self.ops = []  # (out, inputs, backward_fn)

    def __enter__(self):
        _TAPE_STACK.append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        popped = _TAPE_STACK.pop()
        assert popped is self
        return False

    def record(self, out, inputs, backward_fn):
        self.ops.append((out, inputs, backward_fn))


_TAPE_STACK: list[Tape] = []


def _active_tape():
    return _TAPE_STACK[-1] if _TAPE_STACK else None


def _make(out_data, inputs, backward_fn):
    """Wrap an op result, recording it when differentiation is active."""
    needs = any(t.requires_grad for t in inputs if isinstance(t, Tensor))
    tape = _active_tape()
    out = Tensor(out_data, requires_grad=needs and tape is not None)
    if out.requires_grad:
        tape.record(out, [t for t in inputs if isinstance(t, Tensor)], backward_fn)
    return out


def backward(tape, loss, params):
    """Gradients of a taped scalar with respect to parameter leaves.

    Returns a dict mapping each tensor in ``params`` to its gradient array;
    leaves the loss does not depend on map to zeros.
    """
    if loss.shape != (1, 1):
        raise ContractError(f"loss must be scalar, got shape {loss.shape}")
    adjoint = {id(loss): np.ones((1, 1))}
    for out, inputs, backward_fn in reversed(tape.ops):
        g = adjoint.pop(id(out), None)
        if g is None:
            continue
        for tensor, contrib in backward_fn(g):
            # recorded intermediates always require grad; constants never do
            if not tensor.requires_grad:
                continue
            key = id(tensor)
            if key in adjoint:
                adjoint[key] = adjoint[key] + contrib
            else:
                adjoint[key] = np.array(contrib, dtype=np.float64, copy=True)
    return {p: adjoint.get(id(p), np.zeros_like(p.data)) for p in params}


def gradients(tape, loss, params):
    """List-of-arrays convenience wrapper over :func:`backward`."""
    table = backward(tape, loss, params)
    return [table[p] for p in params]


def _unbroadcast(g, shape):
    if g.shape == shape:
        return g
    out = g
    if shape[0] == 1 and g.shape[0] > 1:
        out = out.sum(axis=0, keepdims=True)
    if shape[1] == 1 and g.shape[1] > 1:
        out = out.sum(axis=1, keepdims=True)
    if out.shape != shape:
        raise ShapeError(f"cannot reduce gradient {g.shape} to {shape}")
    return out


def _check_broadcast(a, b, op):
    for da, db in zip(a.shape, b.shape):
        if da != db and da != 1 and db != 1:
            raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} do not broadcast")


# ---------------------------------------------------------------------------
# primitives
# ---------------------------------------------------------------------------

def matmul(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    if a.cols != b.rows:
        raise ShapeError(f"matmul: {a.shape} @ {b.shape}")
    out = a.data @ b.data

    def bwd(g):
        return [(a, g @ b.data.T), (b, a.data.T @ g)]

    return _make(out, [a, b], bwd)


def spmm(s, b):
    """Sparse-dense product; the sparse operand is a constant."""
    b = _as_tensor(b)
    if not isinstance(s, CsrMatrix):
        raise ContractError("spmm expects a CsrMatrix left operand")
    if s.cols != b.rows:
        raise ShapeError(f"spmm: {s.rows}x{s.cols} @ {b.shape}")
    out = s.matmul_dense(b.data)
    st = s.transpose()

    def bwd(g):
        return [(b, st.matmul_dense(g))]

    return _make(out, [b], bwd)


def transpose(a):
    a = _as_tensor(a)

    def bwd(g):
        return [(a, g.T.copy())]

    return _make(a.data.T.copy(), [a], bwd)


def add(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    _check_broadcast(a, b, "add")
    out = a.data + b.data

    def bwd(g):
        return [(a, _unbroadcast(g, a.shape)), (b, _unbroadcast(g, b.shape))]

    return _make(out, [a, b], bwd)


def sub(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    _check_broadcast(a, b, "sub")
    out = a.data - b.data

    def bwd(g):
        return [(a, _unbroadcast(g, a.shape)), (b, _unbroadcast(-g, b.shape))]

    return _make(out, [a, b], bwd)


def mul(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    _check_broadcast(a, b, "mul")
    out = a.data * b.data

    def bwd(g):
        return [
            (a, _unbroadcast(g * b.data, a.shape)),
            (b, _unbroadcast(g * a.data, b.shape)),
        ]

    return _make(out, [a, b], bwd)


def div(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    _check_broadcast(a, b, "div")
    out = a.data / b.data

    def bwd(g):
        return [
            (a, _unbroadcast(g / b.data, a.shape)),
            (b, _unbroadcast(-g * a.data / (b.data * b.data), b.shape)),
        ]

    return _make(out, [a, b], bwd)


def neg(a):
    a = _as_tensor(a)

    def bwd(g):
        return [(a, -g)]

    return _make(-a.data, [a], bwd)


def scale(a, c):
    """Multiply by a python scalar constant."""
    a = _as_tensor(a)
    c = float(c)

    def bwd(g):
        return [(a, g * c)]

    return _make(a.data * c, [a], bwd)


def relu(a):
    a = _as_tensor(a)
    out = np.maximum(a.data, 0.0)
    mask = a.data > 0.0

    def bwd(g):
        return [(a, g * mask)]

    return _make(out, [a], bwd)


def tanh(a):
    a = _as_tensor(a)
    out = np.tanh(a.data)

    def bwd(g):
        return [(a, g * (1.0 - out * out))]

    return _make(out, [a], bwd)


def sigmoid(a):
    a = _as_tensor(a)
    out = _sigmoid_values(a.data)

    def bwd(g):
        return [(a, g * out * (1.0 - out))]

    return _make(out, [a], bwd)


def _sigmoid_values(x):
    # split by sign to avoid overflow in exp
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def exp(a):
    a = _as_tensor(a)
    out = np.exp(a.data)

    def bwd(g):
        return [(a, g * out)]

    return _make(out, [a], bwd)


def log(a):
    a = _as_tensor(a)
    if np.any(a.data <= 0.0):
        raise DomainError("log of non-positive entry")
    out = np.log(a.data)

    def bwd(g):
        return [(a, g / a.data)]

    return _make(out, [a], bwd)


def sqrt(a):
    a = _as_tensor(a)
    if np.any(a.data < 0.0):
        raise DomainError("sqrt of negative entry")
    out = np.sqrt(a.data)

    def bwd(g):
        return [(a, g * (0.5 / out))]

    return _make(out, [a], bwd)


def powc(a, p):
    """Elementwise power with a constant exponent; base must be positive."""
    a = _as_tensor(a)
    p = float(p)
    if np.any(a.data <= 0.0):
        raise DomainError("powc needs a positive base")
    out = np.power(a.data, p)

    def bwd(g):
        return [(a, g * p * np.power(a.data, p - 1.0))]

    return _make(out, [a], bwd)


_ACTIVATIONS = {"relu": relu, "tanh": tanh, "sigmoid": sigmoid, "exp": exp, "log": log}


def activation(a, kind):
    try:
        fn = _ACTIVATIONS[kind]
    except KeyError:
        raise ContractError(f"unknown activation {kind!r}") from None
    return fn(a)


def clamp(a, lo, hi):
    """Clip to [lo, hi]; gradient passes only strictly inside the interval."""
    a = _as_tensor(a)
    out = np.clip(a.data, lo, hi)
    mask = (a.data > lo) & (a.data < hi)

    def bwd(g):
        return [(a, g * mask)]

    return _make(out, [a], bwd)


def reduce_sum(a, axis=None):
    """Sum over all entries (1x1), rows (axis=0 -> 1xc) or columns (axis=1 -> rx1)."""
    a = _as_tensor(a)
    if axis is None:
        out = a.data.sum().reshape(1, 1)
    elif axis in (0, 1):
        out = a.data.sum(axis=axis, keepdims=True)
    else:
        raise ContractError(f"axis must be None, 0 or 1, got {axis}")

    def bwd(g):
        return [(a, np.broadcast_to(g, a.shape).copy())]

    return _make(out, [a], bwd)


def mean_all(a):
    a = _as_tensor(a)
    return scale(reduce_sum(a), 1.0 / a.data.size)


def slice_cols(a, start, stop):
    a = _as_tensor(a)
    if not (0 <= start <= stop <= a.cols):
        raise ShapeError(f"column slice [{start}:{stop}] outside width {a.cols}")
    out = a.data[:, start:stop].copy()

    def bwd(g):
        full = np.zeros_like(a.data)
        full[:, start:stop] = g
        return [(a, full)]

    return _make(out, [a], bwd)


def bernoulli_recon(left, right, targets, block_rows=512, pos_weight=1.0):
    """Mean Bernoulli log-likelihood of binary targets under inner-product
    edge probabilities sigmoid(left @ right.T), streamed over row blocks.

    ``targets`` is a CsrMatrix of shape (left.rows, right.rows) holding the
    observed 0/1 entries. Probabilities are clipped to
    [PROB_EPS, 1 - PROB_EPS] before the logs; clipped entries contribute no
    gradient. ``pos_weight`` scales the positive-entry term (1.0 = off).
    """
    left, right = _as_tensor(left), _as_tensor(right)
    if left.cols != right.cols:
        raise ShapeError(f"latent widths differ: {left.shape} vs {right.shape}")
    if not isinstance(targets, CsrMatrix):
        raise ContractError("targets must be a CsrMatrix")
    if targets.rows != left.rows or targets.cols != right.rows:
        raise ShapeError(
            f"targets {targets.rows}x{targets.cols} do not match "
            f"{left.rows}x{right.rows} probability grid"
        )
    n, m = targets.rows, targets.cols
    w = float(pos_weight)
    # at most three row-block buffers live at once, keeping peak memory
    # bounded by ~3 * block_rows * m doubles regardless of n
    total = 0.0
    for start in range(0, n, block_rows):
        stop = min(start + block_rows, n)
        p = left.data[start:stop] @ right.data.T
        p = _sigmoid_values(p)
        np.clip(p, PROB_EPS, 1.0 - PROB_EPS, out=p)
        t = targets.densify_rows(start, stop)
        logp = np.log(p)
        total += w * float(np.einsum("ij,ij->", t, logp))
        np.log1p(-p, out=logp)
        # sum of (1 - t) * log1p(-p) without a temporary, t being 0/1
        total += float(logp.sum()) - float(np.einsum("ij,ij->", t, logp))
    out = np.array([[total / (n * m)]])

    def bwd(g):
        gs = float(g[0, 0]) / (n * m)
        dl = np.zeros_like(left.data)
        dr = np.zeros_like(right.data)
        for start in range(0, n, block_rows):
            stop = min(start + block_rows, n)
            p = left.data[start:stop] @ right.data.T
            p = _sigmoid_values(p)
            inside = (p > PROB_EPS) & (p < 1.0 - PROB_EPS)
            ds = targets.densify_rows(start, stop)
            if w != 1.0:
                # w*t*(1-p) - (1-t)*p  ==  w*t - p*((w-1)*t + 1)
                scaled = ds * (w - 1.0)
                scaled += 1.0
                scaled *= p
                ds *= w
                ds -= scaled
            else:
                ds -= p
            ds *= inside
            ds *= gs
            dl[start:stop] = ds @ right.data
            dr += ds.T @ left.data[start:stop]
        return [(left, dl), (right, dr)]

    return _make(out, [left, right], bwd)


def assert_finite(t, what):
    """Raise NumericError naming the offending stage if any entry is non-finite."""
    data = t.data if isinstance(t, Tensor) else np.asarray(t)
    if not np.all(np.isfinite(data)):
        raise NumericError(f"non-finite values in {what}")
    return t


def finite_diff_check(f, params, h=1e-5):
    """Max relative disagreement between tape gradients and central differences.

    ``f`` takes no arguments, reads the current ``.data`` of each tensor in
    ``params`` and returns a scalar Tensor. The relative error per coordinate
    is |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
    """
    with Tape() as tape:
        loss = f()
    analytic = gradients(tape, loss, params)
    worst = 0.0
    for p, gp in zip(params, analytic):
        flat = p.data.reshape(-1)
        gflat = gp.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = f().item()
            flat[i] = orig - h
            down = f().item()
            flat[i] = orig
            if not (np.isfinite(up) and np.isfinite(down)):
                raise NumericError("objective non-finite during finite differencing")
            numeric = (up - down) / (2.0 * h)
            err = abs(gflat[i] - numeric) / max(1e-8, abs(gflat[i]) + abs(numeric))
            worst = max(worst, err)
    return worst
