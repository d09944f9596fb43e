"""Training orchestration: pretraining, prior initialization from EM,
alternating network/prior refinement, and final cluster assignment.

Pretraining minimizes the negative evidence bound against a fixed single
standard-normal prior (the mixture does not exist yet); after EM seeds the
mixture, refinement epochs alternate inside each decade: the first
``interval`` epochs of every 10 update the encoder weights, the remaining
ones update the mixture parameters, both against the same joint objective.
All randomness flows from one seed through per-purpose substreams, so a
run is reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import gmm, losses, model
from . import tensor as T
from .config import RunConfig
from .errors import ContractError
from .graphdata import AttributedGraph, normalize_adjacency
from .optim import AdamState, adam_step
from .tensor import Tape

CHECKPOINT_EVERY = 50


@dataclass
class ClusteringResult:
    assignments: np.ndarray          # per-node component index
    responsibilities: np.ndarray     # n x k
    metrics: object | None = None    # MetricReport when labels exist


@dataclass
class TrainState:
    config: RunConfig
    graph: AttributedGraph
    adj_norm: object
    feats_t: object
    params: model.ModelParams
    pretrain_prior: gmm.MixturePrior
    prior: gmm.MixturePrior | None = None
    net_opt: AdamState | None = None
    prior_opt: AdamState | None = None
    noise_rng: np.random.Generator | None = None
    em_rng: np.random.Generator | None = None
    epoch: int = 0                   # global, counts both phases
    phase: str = "pretrain"
    history: list = field(default_factory=list)
    group_log: list = field(default_factory=list)  # which group each refinement epoch updated
    checkpoint_hook: object | None = None


def init_state(graph, config, checkpoint_hook=None):
    seq = np.random.SeedSequence(config.seed)
    init_seq, noise_seq, em_seq = seq.spawn(3)
    init_rng = np.random.default_rng(init_seq)
    params = model.init_model_params(
        graph.n_nodes, graph.n_attrs, config.hidden, config.j, init_rng
    )
    return TrainState(
        config=config,
        graph=graph,
        adj_norm=normalize_adjacency(graph, add_self_loops=config.self_loops),
        feats_t=graph.features_t(),
        params=params,
        pretrain_prior=gmm.standard_prior(config.j),
        net_opt=AdamState(lr=config.lr),
        noise_rng=np.random.default_rng(noise_seq),
        em_rng=np.random.default_rng(em_seq),
        checkpoint_hook=checkpoint_hook,
    )


def _draw_noises(state):
    cfg = state.config
    n, m, j = state.graph.n_nodes, state.graph.n_attrs, cfg.j
    node_eps, attr_eps = [], []
    for _ in range(cfg.mc_samples):
        node_eps.append(state.noise_rng.standard_normal((n, j)))
        attr_eps.append(state.noise_rng.standard_normal((m, j)))
    return node_eps, attr_eps


def _forward(state, prior, clustering):
    """One taped pass; returns (tape, total loss tensor, report)."""
    cfg = state.config
    node_eps, attr_eps = _draw_noises(state)
    with Tape() as tape:
        node_lat = model.gcn_encode(state.adj_norm, state.graph.features,
                                    state.params.node, node_eps)
        attr_lat = model.mlp_encode(state.feats_t, state.params.attr, attr_eps)
        if clustering:
            gamma = gmm.responsibilities(node_lat.mean.data, prior)
        else:
            gamma = np.ones((state.graph.n_nodes, 1))
        bound, parts = losses.elbo(
            state.graph.adjacency, state.graph.features, node_lat, attr_lat,
            prior, gamma, pos_weight=cfg.pos_weight, block_rows=cfg.block_rows,
        )
        if clustering:
            z_for_q = node_lat.mean if cfg.cah_input == "mean" else node_lat.sample
            q = losses.soft_assignment(z_for_q, prior.means, alpha=cfg.alpha)
            p = losses.target_distribution(q.data)
            cah = losses.cah_loss(p, q)
            mdist = losses.mutual_distance(prior.means)
            total = losses.total_objective(bound, cah, mdist,
                                           omega=cfg.omega, beta=cfg.beta)
        else:
            cah = T.constant(np.zeros((1, 1)))
            mdist = T.constant(np.zeros((1, 1)))
            total = T.neg(bound)
    report = losses.assemble_report(parts, cah.item(), mdist.item(), total.item())
    return tape, total, report


def _finish_epoch(state, report):
    state.epoch += 1
    report.check_finite(state.epoch)
    state.history.append((state.epoch, state.phase, report))
    if state.checkpoint_hook is not None and state.epoch % CHECKPOINT_EVERY == 0:
        state.checkpoint_hook(state)


def pretrain(state, t1=None):
    """Reconstruction-plus-divergence epochs against the fixed unit prior."""
    if state.phase != "pretrain":
        raise ContractError(f"pretrain called in phase {state.phase!r}")
    t1 = state.config.t1 if t1 is None else t1
    net_params = state.params.as_list()
    for _ in range(t1):
        tape, total, report = _forward(state, state.pretrain_prior, clustering=False)
        grads = T.gradients(tape, total, net_params)
        adam_step(net_params, grads, state.net_opt)
        _finish_epoch(state, report)
    state.phase = "pretrained"
    return state


def node_embedding_means(state):
    """Posterior means of the node embeddings under the current weights."""
    j = state.config.j
    zeros = [np.zeros((state.graph.n_nodes, j))]
    lat = model.gcn_encode(state.adj_norm, state.graph.features,
                           state.params.node, zeros)
    return lat.mean.data


def attr_embedding_means(state):
    j = state.config.j
    zeros = [np.zeros((state.graph.n_attrs, j))]
    lat = model.mlp_encode(state.feats_t, state.params.attr, zeros)
    return lat.mean.data


def init_priors(state, k=None):
    """Fit the mixture to the current embedding means and arm refinement."""
    if state.phase != "pretrained":
        raise ContractError(f"init_priors called in phase {state.phase!r}")
    k = state.graph.k_clusters if k is None else k
    if k < 1:
        raise ContractError("component count must be at least 1")
    means = node_embedding_means(state)
    state.prior = gmm.em_fit(means, k, state.em_rng)
    state.prior_opt = AdamState(lr=state.config.lr)
    state.phase = "alternating"
    return state


def alternating_train(state, t2=None, interval=None):
    """Joint-objective epochs, alternating parameter groups inside each decade."""
    if state.phase != "alternating":
        raise ContractError("alternating_train needs init_priors first")
    cfg = state.config
    t2 = cfg.t2 if t2 is None else t2
    interval = cfg.interval if interval is None else interval
    net_params = state.params.as_list()
    prior_params = state.prior.as_list()
    for local in range(1, t2 + 1):
        tape, total, report = _forward(state, state.prior, clustering=True)
        if local % 10 < interval:
            frozen = [p.data.copy() for p in prior_params]
            grads = T.gradients(tape, total, net_params)
            adam_step(net_params, grads, state.net_opt)
            _check_frozen(prior_params, frozen, "prior")
            state.group_log.append("network")
        else:
            frozen = [p.data.copy() for p in net_params]
            grads = T.gradients(tape, total, prior_params)
            adam_step(prior_params, grads, state.prior_opt)
            state.prior.apply_variance_floor()
            _check_frozen(net_params, frozen, "network")
            state.group_log.append("prior")
        _finish_epoch(state, report)
    return state


def _check_frozen(params, snapshots, name):
    for p, snap in zip(params, snapshots):
        if not np.array_equal(p.data, snap):
            raise ContractError(f"{name} parameters moved during a frozen epoch")


def assign_clusters(state):
    """Hard assignments from the responsibilities of the embedding means.

    Ties break toward the lowest component index. Metrics are attached when
    the dataset carries labels.
    """
    if state.prior is None:
        raise ContractError("assign_clusters needs an initialized prior")
    gamma = gmm.responsibilities(node_embedding_means(state), state.prior)
    assignments = np.argmax(gamma, axis=1)
    result = ClusteringResult(assignments=assignments, responsibilities=gamma)
    if state.graph.labels is not None:
        from . import metrics as metrics_mod

        result.metrics = metrics_mod.evaluate(assignments, state.graph.labels)
    return result


def run_training(graph, config, checkpoint_hook=None):
    """Full schedule: pretrain, fit prior, refine, assign."""
    state = init_state(graph, config, checkpoint_hook=checkpoint_hook)
    pretrain(state)
    init_priors(state)
    alternating_train(state)
    if state.checkpoint_hook is not None:
        state.checkpoint_hook(state)
    return state, assign_clusters(state)
