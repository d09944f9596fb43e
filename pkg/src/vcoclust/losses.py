"""Training objective assembly.

The evidence bound combines two streamed Bernoulli reconstruction terms
with the three divergence terms; on top of it sit the assignment-hardening
loss (a self-training divergence against a sharpened target that never
receives gradient) and the center-separation loss (mean pairwise distance
between prior centers, maximized). The minimized total is
``-(bound + beta * separation - omega * hardening)``.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from . import gmm
from . import tensor as T
from .errors import ContractError, NumericError

DIST_SMOOTHING = 1e-12


@dataclass
class LossReport:
    """Per-epoch scalar summary of every objective term."""

    recon_adj: float = 0.0
    recon_attr: float = 0.0
    kl_attr: float = 0.0
    kl_node: float = 0.0
    kl_cat: float = 0.0
    elbo: float = 0.0
    cah: float = 0.0
    mutual_distance: float = 0.0
    total: float = 0.0

    FIELDS = (
        "recon_adj", "recon_attr", "kl_attr", "kl_node", "kl_cat",
        "elbo", "cah", "mutual_distance", "total",
    )

    def as_dict(self):
        return asdict(self)

    def tsv_row(self):
        return "\t".join(repr(getattr(self, f)) for f in self.FIELDS)

    def check_finite(self, epoch):
        for f in self.FIELDS:
            if not np.isfinite(getattr(self, f)):
                raise NumericError(f"loss term {f!r} went non-finite at epoch {epoch}")
        return self


def elbo(adj_targets, feat_targets, node_latent, attr_latent, prior, gamma,
         pos_weight=1.0, block_rows=512):
    """Evidence bound for one forward pass.

    Reconstruction terms are averaged over the Monte-Carlo samples carried
    by the latent batches; divergence terms are analytic in the posterior
    parameters. Returns the scalar tensor and the float parts.
    """
    if len(node_latent.samples) != len(attr_latent.samples):
        raise ContractError("node and attribute sample counts differ")
    n_samples = len(node_latent.samples)
    adj_parts = []
    attr_parts = []
    for zv, za in zip(node_latent.samples, attr_latent.samples):
        adj_parts.append(
            T.bernoulli_recon(zv, zv, adj_targets, block_rows=block_rows,
                              pos_weight=pos_weight)
        )
        attr_parts.append(
            T.bernoulli_recon(zv, za, feat_targets, block_rows=block_rows)
        )
    recon_adj = _average(adj_parts, n_samples)
    recon_attr = _average(attr_parts, n_samples)
    kl_attr = gmm.kl_attr_prior(attr_latent.mean, attr_latent.logvar)
    kl_node = gmm.kl_node_mixture(node_latent.mean, node_latent.logvar, gamma, prior)
    kl_cat = gmm.kl_categorical(gamma, prior.weight_logits)
    bound = T.sub(T.add(recon_adj, recon_attr), T.add(T.add(kl_attr, kl_node), kl_cat))
    parts = {
        "recon_adj": recon_adj.item(),
        "recon_attr": recon_attr.item(),
        "kl_attr": kl_attr.item(),
        "kl_node": kl_node.item(),
        "kl_cat": kl_cat.item(),
        "elbo": bound.item(),
    }
    return bound, parts


def _average(terms, n):
    acc = terms[0]
    for t in terms[1:]:
        acc = T.add(acc, t)
    return T.scale(acc, 1.0 / n) if n > 1 else acc


def soft_assignment(z, centers, alpha=1.0):
    """Student-t soft assignment of each embedding against each center."""
    if alpha <= 0:
        raise ContractError("alpha must be positive")
    if z.cols != centers.cols:
        raise ContractError(f"width mismatch: {z.shape} vs {centers.shape}")
    d2 = _pairwise_sq_dists_t(z, centers)
    kernel = T.powc(
        T.add(T.scale(d2, 1.0 / alpha), T.constant(np.ones((1, 1)))),
        -(alpha + 1.0) / 2.0,
    )
    return T.div(kernel, T.reduce_sum(kernel, axis=1))


def _pairwise_sq_dists_t(a, b):
    # relu clips the tiny negatives the expansion can produce
    d2 = T.sub(
        T.add(
            T.reduce_sum(T.mul(a, a), axis=1),
            T.transpose(T.reduce_sum(T.mul(b, b), axis=1)),
        ),
        T.scale(T.matmul(a, T.transpose(b)), 2.0),
    )
    return T.relu(d2)


def target_distribution(q):
    """Sharpened target: square, normalize per component mass, renormalize rows.

    Plain array in, plain array out; the result is treated as a constant.
    """
    q = np.asarray(q, dtype=np.float64)
    weighted = (q * q) / q.sum(axis=0, keepdims=True)
    return weighted / weighted.sum(axis=1, keepdims=True)


def cah_loss(p, q):
    """Assignment-hardening divergence sum(P log(P/Q)) with constant P.

    Q entries are floored at 1e-10 before the log; the double sum is not
    normalized by the node count.
    """
    p = np.asarray(p, dtype=np.float64)
    if p.shape != q.shape:
        raise ContractError(f"target {p.shape} vs assignment {q.shape}")
    with np.errstate(divide="ignore"):
        logp = np.where(p > 0.0, np.log(np.maximum(p, 1e-300)), 0.0)
    const_part = float(np.sum(p * logp))
    cross = T.reduce_sum(T.mul(T.constant(p), T.log(T.clamp(q, gmm.GAMMA_FLOOR, 1.0))))
    return T.sub(T.constant(np.full((1, 1), const_part)), cross)


def mutual_distance(centers):
    """Mean pairwise Euclidean distance over all ordered center pairs.

    Self pairs contribute exactly zero; distinct pairs go through a
    sqrt(d^2 + 1e-12) smoothing so the gradient exists at coincident
    centers.
    """
    k = centers.rows
    d2 = _pairwise_sq_dists_t(centers, centers)
    dist = T.sqrt(T.add(d2, T.constant(np.full((1, 1), DIST_SMOOTHING))))
    off_diag = T.constant(1.0 - np.eye(k))
    return T.scale(T.reduce_sum(T.mul(dist, off_diag)), 1.0 / (k * k))


def total_objective(bound, cah, mdist, omega=1.0, beta=1.0):
    """Minimization form of the joint objective."""
    return T.neg(
        T.add(bound, T.sub(T.scale(mdist, float(beta)), T.scale(cah, float(omega))))
    )


def assemble_report(parts, cah_value, mdist_value, total_value):
    return LossReport(
        recon_adj=parts["recon_adj"],
        recon_attr=parts["recon_attr"],
        kl_attr=parts["kl_attr"],
        kl_node=parts["kl_node"],
        kl_cat=parts["kl_cat"],
        elbo=parts["elbo"],
        cah=cah_value,
        mutual_distance=mdist_value,
        total=total_value,
    )
