"""Trainable diagonal Gaussian-mixture prior over node embeddings.

EM (seeded by an internal K-means++) fits the initial components; the
responsibilities are posterior component probabilities under the current
prior; the three divergence terms regularize the attribute posterior, the
gamma-weighted node posterior and the component assignment distribution.
The divergence terms keep the per-term normalizations of the training
objective they belong to rather than an unnormalized form.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .errors import ContractError, NumericError
from .tensor import Tensor

VAR_FLOOR = 1e-6
GAMMA_FLOOR = 1e-10
LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass
class MixturePrior:
    """K diagonal Gaussians with softmax-parameterized weights.

    Weights live as unconstrained logits so a gradient step never leaves
    the simplex; variances live as log-variances with a floor applied
    after each update.
    """

    means: Tensor          # K x J
    log_vars: Tensor       # K x J
    weight_logits: Tensor  # 1 x K
    fit_history: list | None = field(default=None, compare=False)

    @property
    def k(self):
        return self.means.rows

    @property
    def j(self):
        return self.means.cols

    def weights(self):
        logits = self.weight_logits.data.reshape(-1)
        e = np.exp(logits - logits.max())
        return e / e.sum()

    def as_list(self):
        return [self.means, self.log_vars, self.weight_logits]

    def apply_variance_floor(self):
        np.maximum(self.log_vars.data, np.log(VAR_FLOOR), out=self.log_vars.data)
        return self

    def snapshot(self):
        return [p.data.copy() for p in self.as_list()]


def standard_prior(j):
    """Single standard-normal component, held constant (pretraining prior)."""
    return MixturePrior(
        means=T.constant(np.zeros((1, j))),
        log_vars=T.constant(np.zeros((1, j))),
        weight_logits=T.constant(np.zeros((1, 1))),
    )


def trainable_prior(means, variances, weights):
    return MixturePrior(
        means=T.parameter(means, "prior.means"),
        log_vars=T.parameter(np.log(np.maximum(variances, VAR_FLOOR)), "prior.log_vars"),
        weight_logits=T.parameter(np.log(np.asarray(weights)).reshape(1, -1), "prior.logits"),
    )


# ---------------------------------------------------------------------------
# K-means and EM initialization
# ---------------------------------------------------------------------------

def _kmeans_pp_seeds(points, k, rng):
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    d2 = np.sum((points - centers[0]) ** 2, axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            centers[c] = points[rng.integers(n)]
            continue
        probs = d2 / total
        centers[c] = points[rng.choice(n, p=probs)]
        d2 = np.minimum(d2, np.sum((points - centers[c]) ** 2, axis=1))
    return centers


def kmeans(points, k, rng, iters=20):
    """Lloyd iterations from K-means++ seeds; empty clusters restart at the
    point farthest from its assigned center."""
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if k < 1:
        raise ContractError("cluster count must be at least 1")
    if n < k:
        raise ContractError(f"need at least k={k} points, got {n}")
    centers = _kmeans_pp_seeds(points, k, rng)
    assign = np.zeros(n, dtype=np.int64)
    for _ in range(iters):
        d2 = _pairwise_sq_dists(points, centers)
        assign = np.argmin(d2, axis=1)
        own = d2[np.arange(n), assign]
        for c in range(k):
            mask = assign == c
            if mask.any():
                centers[c] = points[mask].mean(axis=0)
            else:
                farthest = int(np.argmax(own))
                centers[c] = points[farthest]
                assign[farthest] = c
                own[farthest] = 0.0
    return centers, assign


def _pairwise_sq_dists(x, centers):
    d2 = (
        np.sum(x * x, axis=1)[:, None]
        - 2.0 * x @ centers.T
        + np.sum(centers * centers, axis=1)[None, :]
    )
    return np.maximum(d2, 0.0)


def _log_densities(points, means, variances, log_weights):
    """Row i, column c: log pi_c + log N(x_i | mu_c, diag var_c)."""
    inv_v = 1.0 / variances
    quad = (
        (points * points) @ inv_v.T
        - 2.0 * points @ (means * inv_v).T
        + np.sum(means * means * inv_v, axis=1)[None, :]
    )
    log_norm = -0.5 * (points.shape[1] * LOG_2PI + np.sum(np.log(variances), axis=1))
    return log_weights[None, :] + log_norm[None, :] - 0.5 * quad


def _logsumexp_rows(a):
    m = a.max(axis=1, keepdims=True)
    return (m + np.log(np.sum(np.exp(a - m), axis=1, keepdims=True))).reshape(-1)


def em_fit(points, k, seed_or_rng, max_iter=100, tol=1e-4):
    """Diagonal-covariance EM initialized by K-means.

    Runs until the total log-likelihood moves less than ``tol`` or
    ``max_iter`` iterations; a component losing all responsibility is
    reseeded at the most isolated point, with up to 3 restarts. The
    per-iteration log-likelihoods are kept on ``fit_history`` and must be
    non-decreasing (checked to 1e-9).
    """
    points = np.asarray(points, dtype=np.float64)
    rng = (
        seed_or_rng
        if isinstance(seed_or_rng, np.random.Generator)
        else np.random.default_rng(seed_or_rng)
    )
    n, j = points.shape
    if n < k:
        raise ContractError(f"need at least k={k} points, got {n}")

    centers, assign = kmeans(points, k, rng)
    means = centers.copy()
    variances = np.empty((k, j))
    weights = np.empty(k)
    for c in range(k):
        mask = assign == c
        cnt = max(int(mask.sum()), 1)
        weights[c] = cnt / n
        if mask.any():
            variances[c] = np.maximum(points[mask].var(axis=0), VAR_FLOOR)
        else:
            variances[c] = np.maximum(points.var(axis=0), VAR_FLOOR)
    weights /= weights.sum()

    history = []
    restarts = 0
    prev_ll = -np.inf
    it = 0
    while it < max_iter:
        it += 1
        log_dens = _log_densities(points, means, variances, np.log(weights))
        row_lse = _logsumexp_rows(log_dens)
        ll = float(row_lse.sum())
        resp = np.exp(log_dens - row_lse[:, None])

        counts = resp.sum(axis=0)
        if np.any(counts < 1e-8):
            restarts += 1
            if restarts > 3:
                raise NumericError(
                    f"EM degenerate component persisted after {restarts - 1} reseeds"
                )
            dead = int(np.argmin(counts))
            d2 = _pairwise_sq_dists(points, means)
            means[dead] = points[np.argmax(d2.min(axis=1))]
            variances[dead] = np.maximum(points.var(axis=0), VAR_FLOOR)
            weights = np.full(k, 1.0 / k)
            history = []
            prev_ll = -np.inf
            continue

        if history and ll < prev_ll - 1e-9:
            raise NumericError(f"EM log-likelihood decreased at iteration {it}")
        history.append(ll)
        if np.isfinite(prev_ll) and abs(ll - prev_ll) < tol:
            break
        prev_ll = ll

        weights = counts / n
        means = (resp.T @ points) / counts[:, None]
        sq = (resp.T @ (points * points)) / counts[:, None]
        variances = np.maximum(sq - means * means, VAR_FLOOR)

    prior = trainable_prior(means, variances, weights)
    prior.fit_history = history
    return prior


# ---------------------------------------------------------------------------
# responsibilities and divergence terms
# ---------------------------------------------------------------------------

def responsibilities(points, prior):
    """Posterior component probabilities by Bayes' rule (log-sum-exp form).

    Returns an n x k array; rows sum to 1 up to the 1e-10 entry floor.
    """
    points = np.asarray(points, dtype=np.float64)
    means = prior.means.data
    variances = np.exp(prior.log_vars.data)
    log_w = np.log(prior.weights())
    log_dens = _log_densities(points, means, variances, log_w)
    gamma = np.exp(log_dens - _logsumexp_rows(log_dens)[:, None])
    return np.maximum(gamma, GAMMA_FLOOR)


def kl_attr_prior(mean, logvar, prior_var=1.0):
    """Divergence of the attribute posterior from its zero-mean prior,
    averaged with the 1/(2 m j) convention of the training objective."""
    m, j = mean.shape
    inv_v = 1.0 / float(prior_var)
    var = T.exp(logvar)
    term = T.sub(
        T.add(T.scale(var, inv_v), T.scale(T.mul(mean, mean), inv_v)),
        T.add(logvar, T.constant(np.full((1, 1), 1.0 - np.log(prior_var)))),
    )
    return T.scale(T.reduce_sum(term), 1.0 / (2.0 * m * j))


def kl_node_mixture(mean, logvar, gamma, prior):
    """Gamma-weighted divergence of each node posterior from each component,
    averaged with the 1/(2 n k j) convention. ``gamma`` is a constant."""
    n, j = mean.shape
    k = prior.k
    gamma = np.asarray(gamma, dtype=np.float64)
    if gamma.shape != (n, k):
        raise ContractError(f"gamma shape {gamma.shape}, expected {(n, k)}")
    inv_pv = T.exp(T.neg(prior.log_vars))                      # k x j
    inv_pv_t = T.transpose(inv_pv)                             # j x k
    ratio = T.matmul(T.exp(logvar), inv_pv_t)                  # n x k
    quad = T.sub(
        T.add(
            T.matmul(T.mul(mean, mean), inv_pv_t),
            T.transpose(T.reduce_sum(T.mul(T.mul(prior.means, prior.means), inv_pv), axis=1)),
        ),
        T.scale(T.matmul(mean, T.transpose(T.mul(prior.means, inv_pv))), 2.0),
    )
    log_ratio = T.sub(
        T.reduce_sum(logvar, axis=1),                          # n x 1
        T.transpose(T.reduce_sum(prior.log_vars, axis=1)),     # 1 x k
    )
    inner = T.sub(T.add(ratio, quad), T.add(log_ratio, T.constant(np.full((1, 1), float(j)))))
    weighted = T.mul(T.constant(gamma), inner)
    return T.scale(T.reduce_sum(weighted), 1.0 / (2.0 * n * k * j))


def kl_categorical(gamma, weight_logits):
    """Divergence of the assignment responsibilities from the component
    weights, averaged with the 1/(n k) convention. ``gamma`` is a constant."""
    gamma = np.maximum(np.asarray(gamma, dtype=np.float64), GAMMA_FLOOR)
    n, k = gamma.shape
    if weight_logits.cols != k:
        raise ContractError("weight logits width does not match gamma")
    entropy_part = float(np.sum(gamma * np.log(gamma)))
    shifted = T.sub(weight_logits, T.constant(np.full((1, 1), float(weight_logits.data.max()))))
    log_pi = T.sub(shifted, T.log(T.reduce_sum(T.exp(shifted))))
    cross = T.reduce_sum(T.mul(T.constant(gamma.sum(axis=0).reshape(1, -1)), log_pi))
    return T.scale(T.sub(T.constant(np.full((1, 1), entropy_part)), cross), 1.0 / (n * k))
