"""Dual inference networks and inner-product generative decoders.

Nodes are encoded by a two-layer graph convolution over the normalized
adjacency; attributes by a two-layer perceptron over the transposed
incidence matrix. Both emit means and log-variances of diagonal Gaussians
in a shared latent space (log-variances guarantee positivity), and both
observation models are Bernoulli with inner-product logits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .errors import ShapeError
from .sparse import CsrMatrix
from .tensor import Tensor


@dataclass
class NodeEncoderParams:
    w0: Tensor  # n_attrs x hidden
    w1: Tensor  # hidden x 2j, left half means, right half log-variances

    def as_list(self):
        return [self.w0, self.w1]


@dataclass
class AttrEncoderParams:
    w0: Tensor  # n_nodes x hidden
    b0: Tensor  # 1 x hidden
    w1: Tensor  # hidden x 2j
    b1: Tensor  # 1 x 2j

    def as_list(self):
        return [self.w0, self.b0, self.w1, self.b1]


@dataclass
class ModelParams:
    node: NodeEncoderParams
    attr: AttrEncoderParams
    hidden: int
    j: int

    def as_list(self):
        return self.node.as_list() + self.attr.as_list()


@dataclass
class LatentBatch:
    """Posterior parameters plus reparameterized samples for one pass."""

    mean: Tensor     # rows x j
    logvar: Tensor   # rows x j
    samples: list    # L tensors, rows x j
    noises: list     # matching standard-normal draws (constants)

    @property
    def sample(self):
        return self.samples[0]


def glorot(rng, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_model_params(n_nodes, n_attrs, hidden, j, rng):
    """Glorot-uniform weights, zero biases; draw order is fixed for determinism."""
    node = NodeEncoderParams(
        w0=T.parameter(glorot(rng, n_attrs, hidden), "node.w0"),
        w1=T.parameter(glorot(rng, hidden, 2 * j), "node.w1"),
    )
    attr = AttrEncoderParams(
        w0=T.parameter(glorot(rng, n_nodes, hidden), "attr.w0"),
        b0=T.parameter(np.zeros((1, hidden)), "attr.b0"),
        w1=T.parameter(glorot(rng, hidden, 2 * j), "attr.w1"),
        b1=T.parameter(np.zeros((1, 2 * j)), "attr.b1"),
    )
    return ModelParams(node=node, attr=attr, hidden=hidden, j=j)


def reparameterize(mean, logvar, noise):
    """Sample mean + exp(logvar/2) * noise; gradients reach mean and logvar only."""
    if mean.shape != logvar.shape:
        raise ShapeError(f"mean {mean.shape} vs logvar {logvar.shape}")
    eps = T.constant(noise)
    if eps.shape != mean.shape:
        raise ShapeError(f"noise {eps.shape} does not match {mean.shape}")
    return T.add(mean, T.mul(T.exp(T.scale(logvar, 0.5)), eps))


def _split_latents(out, j, noises):
    mean = T.slice_cols(out, 0, j)
    logvar = T.slice_cols(out, j, 2 * j)
    samples = [
        T.assert_finite(reparameterize(mean, logvar, eps), "reparameterized sample")
        for eps in noises
    ]
    return LatentBatch(mean=mean, logvar=logvar, samples=samples,
                       noises=[T.constant(e) for e in noises])


def gcn_encode(adj_norm, feats, params, noises):
    """Two-layer graph convolution posterior over node embeddings.

    ``noises`` is a list of L standard-normal arrays (one per Monte-Carlo
    sample), drawn by the caller so a pass can be replayed exactly.
    """
    j = params.w1.cols // 2
    h_pre = T.spmm(adj_norm, T.spmm(feats, params.w0))
    T.assert_finite(h_pre, "node encoder layer 1 pre-activation")
    h = T.relu(h_pre)
    out = T.spmm(adj_norm, T.matmul(h, params.w1))
    T.assert_finite(out, "node encoder layer 2 output")
    return _split_latents(out, j, noises)


def mlp_encode(feats_t, params, noises):
    """Two-layer perceptron posterior over attribute embeddings."""
    j = params.w1.cols // 2
    h_pre = T.add(T.spmm(feats_t, params.w0), params.b0)
    T.assert_finite(h_pre, "attribute encoder layer 1 pre-activation")
    h = T.tanh(h_pre)
    out = T.add(T.matmul(h, params.w1), params.b1)
    T.assert_finite(out, "attribute encoder layer 2 output")
    return _split_latents(out, j, noises)


def decode_adjacency(z, block_rows=512):
    """Edge probabilities sigmoid(<z_i, z_j>), computed in row blocks.

    Returns the full matrix; training never calls this for the loss (the
    streamed bernoulli_recon term avoids materializing it).
    """
    if _active():
        return T.sigmoid(T.matmul(z, T.transpose(z)))
    return _blockwise_probs(z.data, z.data, block_rows)


def decode_attributes(z_nodes, z_attrs, block_rows=512):
    """Incidence probabilities sigmoid(<z_i^node, z_j^attr>)."""
    if z_nodes.cols != z_attrs.cols:
        raise ShapeError(f"latent widths differ: {z_nodes.shape} vs {z_attrs.shape}")
    if _active():
        return T.sigmoid(T.matmul(z_nodes, T.transpose(z_attrs)))
    return _blockwise_probs(z_nodes.data, z_attrs.data, block_rows)


def _active():
    return T._active_tape() is not None


def _blockwise_probs(left, right, block_rows):
    out = np.empty((left.shape[0], right.shape[0]))
    for start in range(0, left.shape[0], block_rows):
        stop = min(start + block_rows, left.shape[0])
        out[start:stop] = T._sigmoid_values(left[start:stop] @ right.T)
    return Tensor(out)


def bernoulli_ll(target, prob):
    """Mean Bernoulli log-likelihood of 0/1 targets under given probabilities.

    Probabilities are clipped to [1e-7, 1 - 1e-7] first, so the result is
    finite for saturated inputs and non-positive always.
    """
    target = target if isinstance(target, Tensor) else T.constant(
        target.densify() if isinstance(target, CsrMatrix) else target
    )
    if target.shape != prob.shape:
        raise ShapeError(f"targets {target.shape} vs probabilities {prob.shape}")
    p = T.clamp(prob, T.PROB_EPS, 1.0 - T.PROB_EPS)
    pos = T.mul(target, T.log(p))
    negt = T.sub(T.constant(np.ones((1, 1))), target)
    neg = T.mul(negt, T.log(T.sub(T.constant(np.ones((1, 1))), p)))
    return T.mean_all(T.add(pos, neg))
