"""Attributed-network clustering by variational co-embedding.

Nodes and attributes are embedded into one latent space by dual
variational encoders (a graph convolution for nodes, a perceptron for
attributes) whose inner products reconstruct both the edge structure and
the node-attribute incidence. A trainable Gaussian-mixture prior over the
node embeddings carries the cluster structure; assignments come from its
posterior responsibilities.
"""

__version__ = "0.1.0"

from .config import RunConfig, parse_config
from .graphdata import AttributedGraph, load_dataset, load_planetoid_content, normalize_adjacency
from .gmm import MixturePrior, em_fit, responsibilities
from .losses import LossReport
from .metrics import MetricReport, evaluate
from .sparse import CsrMatrix
from .synth import planted_partition
from .tensor import Tensor, Tape, parameter, constant
from .trainer import ClusteringResult, TrainState, run_training

__all__ = [
    "AttributedGraph",
    "ClusteringResult",
    "CsrMatrix",
    "LossReport",
    "MetricReport",
    "MixturePrior",
    "RunConfig",
    "Tape",
    "Tensor",
    "TrainState",
    "constant",
    "em_fit",
    "evaluate",
    "load_dataset",
    "load_planetoid_content",
    "normalize_adjacency",
    "parameter",
    "parse_config",
    "planted_partition",
    "responsibilities",
    "run_training",
    "__version__",
]
