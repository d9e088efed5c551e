"""Streaming multi-view graph learning with Hebbian weight reconstruction.

Views of the same samples arrive one at a time; each is turned into a
kNN graph and pushed through a shared two-layer graph convolution whose
output is fused with the stored representation of everything seen so
far. Two mechanisms regulate the shared weights across views: a random
per-epoch partition mask that lets only a small fraction of first-layer
synapses train, and a Hebbian reconstruction of the second-layer weight
from the correlation between new hidden activations and the stored past
representation. A retention penalty keeps weights near their
end-of-previous-view snapshots.
"""

__version__ = "0.1.0"

from .config import ExperimentConfig, load_config
from .model import HyperParams
from .runner import run_experiment
from .training import check_gradients, train_stream

__all__ = [
    "__version__",
    "ExperimentConfig",
    "HyperParams",
    "check_gradients",
    "load_config",
    "run_experiment",
    "train_stream",
]
