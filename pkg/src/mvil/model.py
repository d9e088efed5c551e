"""Model state and the streaming forward computation.

The model is a two-layer graph convolution whose weights are shared by
every incoming view. Three mechanisms act on top of it:

* a per-epoch binary partition mask that zeroes most of the first-layer
  weight, so only a small fraction of synapses trains in any one epoch;
* a fusion term that adds the stored representation of all past views,
  scaled by a learnable balance parameter;
* a Hebbian reconstruction of the second-layer weight from the
  correlation between the new view's hidden activations and the stored
  past representation, which is then pushed through a second forward
  term to reinforce consistent information.

Stored past representations and weight snapshots are constants: no
gradient flows into them.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dense import as_matrix, relu, row_softmax
from .errors import ConfigError, InputError, NumericError, ShapeError, StateError
from .graph import ViewBatch
from .metrics import LabelSet

__all__ = [
    "HyperParams",
    "ModelState",
    "PartitionMask",
    "ForwardCache",
    "init_state",
    "sample_partition_mask",
    "draw_epoch_mask",
    "hebbian_reconstruct_w2",
    "forward_view",
    "forward_view_cached",
    "compute_loss",
]


@dataclass
class HyperParams:
    """Training hyperparameters shared across views.

    ``epsilon`` is the Hebbian rate, ``theta`` the active fraction of the
    partition mask, ``beta`` the weight of the retention loss. ``epsilon``
    and ``beta`` may be zero (which disables the respective mechanism);
    ``use_partition_mask=False`` disables masking entirely. ``mask_mode``
    selects whether the sampled theta-fraction is the kept part
    ("keep", the default) or the zeroed part ("suppress").
    """

    learning_rate: float
    hidden_dim: int
    k: int
    epochs_per_view: int
    epsilon: float = 0.01
    theta: float = 0.1
    beta: float = 0.0
    mask_mode: str = "keep"
    use_partition_mask: bool = True

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.hidden_dim < 1:
            raise ConfigError(f"hidden_dim must be >= 1, got {self.hidden_dim}")
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.epochs_per_view < 0:
            raise ConfigError(f"epochs_per_view must be >= 0, got {self.epochs_per_view}")
        if not 0.0 <= self.theta <= 1.0:
            raise ConfigError(f"theta must be in [0, 1], got {self.theta}")
        if self.epsilon < 0:
            raise ConfigError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.beta < 0:
            raise ConfigError(f"beta must be >= 0, got {self.beta}")
        if self.mask_mode not in ("keep", "suppress"):
            raise ConfigError(f"mask_mode must be 'keep' or 'suppress', got {self.mask_mode!r}")


@dataclass(eq=False)
class ModelState:
    """Shared weights plus everything carried across views.

    ``h_star_prev`` holds the stored representation of views seen so far
    (present iff ``view_counter >= 1``); ``w1_old``/``w2_old`` are the
    end-of-previous-view snapshots the retention loss pulls toward.
    """

    w1: np.ndarray            # d_in x d
    w2: np.ndarray            # d x c
    alpha: float = 1.0
    w1_old: Optional[np.ndarray] = None
    w2_old: Optional[np.ndarray] = None
    h_star_prev: Optional[np.ndarray] = None
    view_counter: int = 0

    def clone(self) -> "ModelState":
        return ModelState(
            w1=self.w1.copy(),
            w2=self.w2.copy(),
            alpha=self.alpha,
            w1_old=None if self.w1_old is None else self.w1_old.copy(),
            w2_old=None if self.w2_old is None else self.w2_old.copy(),
            h_star_prev=None if self.h_star_prev is None else self.h_star_prev.copy(),
            view_counter=self.view_counter,
        )


@dataclass(eq=False)
class PartitionMask:
    """Binary matrix applied elementwise to the first-layer weight."""

    mask: np.ndarray
    theta: float


@dataclass(eq=False)
class ForwardCache:
    """Intermediates of one forward pass, consumed by the backward pass."""

    z: np.ndarray                      # A_hat @ X
    p_masked: np.ndarray               # z @ (mask * w1), pre-activation
    r: np.ndarray                      # relu(p_masked)
    ar: np.ndarray                     # A_hat @ r
    h: np.ndarray
    h_star: np.ndarray
    mask: np.ndarray
    p: Optional[np.ndarray] = None        # z @ w1 (unmasked), view >= 1 with epsilon > 0
    w2_star: Optional[np.ndarray] = None  # reconstructed second-layer weight
    h_prev: Optional[np.ndarray] = None


def init_state(input_dim: int, hidden_dim: int, num_classes: int,
               rng: np.random.Generator) -> ModelState:
    """Fresh state with Glorot-uniform weights and fusion balance 1."""
    a1 = np.sqrt(6.0 / (input_dim + hidden_dim))
    a2 = np.sqrt(6.0 / (hidden_dim + num_classes))
    return ModelState(
        w1=rng.uniform(-a1, a1, size=(input_dim, hidden_dim)),
        w2=rng.uniform(-a2, a2, size=(hidden_dim, num_classes)),
        alpha=1.0,
    )


def sample_partition_mask(shape: tuple, theta: float,
                          rng: np.random.Generator) -> PartitionMask:
    """Binary mask with exactly floor(theta * size) ones.

    Positions are drawn uniformly without replacement from ``rng``.
    """
    if not 0.0 <= theta <= 1.0:
        raise ConfigError(f"theta must be in [0, 1], got {theta}")
    rows, cols = shape
    size = rows * cols
    ones = int(np.floor(theta * size))
    flat = np.zeros(size, dtype=np.float64)
    flat[rng.permutation(size)[:ones]] = 1.0
    return PartitionMask(mask=flat.reshape(rows, cols), theta=theta)


def draw_epoch_mask(shape: tuple, hp: HyperParams,
                    rng: np.random.Generator) -> PartitionMask:
    """The mask used for one training epoch, honoring mode and ablation."""
    if not hp.use_partition_mask:
        return PartitionMask(mask=np.ones(shape, dtype=np.float64), theta=1.0)
    pm = sample_partition_mask(shape, hp.theta, rng)
    if hp.mask_mode == "suppress":
        pm = PartitionMask(mask=1.0 - pm.mask, theta=pm.theta)
    return pm


def hebbian_reconstruct_w2(state: ModelState, view: ViewBatch,
                           epsilon: float) -> np.ndarray:
    """Second-layer weight plus the rate-scaled new/past correlation.

    Returns ``w2 + epsilon * (A_hat X w1)^T h_prev`` using the unmasked
    first-layer weight; ``state.w2`` is not mutated.
    """
    if state.h_star_prev is None:
        raise StateError("no stored past representation; train at least one view first")
    p = view.adjacency_norm @ (view.features @ state.w1)
    if p.shape[0] != state.h_star_prev.shape[0]:
        raise ShapeError(
            f"stored representation has {state.h_star_prev.shape[0]} rows "
            f"but the view has {p.shape[0]}"
        )
    return state.w2 + epsilon * (p.T @ state.h_star_prev)


def forward_view_cached(state: ModelState, view: ViewBatch, mask: PartitionMask,
                        hp: HyperParams) -> ForwardCache:
    """Forward pass keeping every intermediate needed for gradients.

    First view: plain masked two-layer propagation, and the fused output
    equals it. Later views: the propagation output is fused with the
    stored past representation (scaled by alpha), the second-layer
    weight is reconstructed by the Hebbian rule, and the reinforcement
    term ``epsilon * (A_hat X w1) w2_star`` is added on top. The
    unmasked first-layer weight feeds the Hebbian path.
    """
    x = view.features
    a_hat = view.adjacency_norm
    if x.shape[1] != state.w1.shape[0]:
        raise ShapeError(
            f"view features are {x.shape[0]}x{x.shape[1]} but w1 is "
            f"{state.w1.shape[0]}x{state.w1.shape[1]}"
        )
    if a_hat.shape[0] != x.shape[0]:
        raise ShapeError(
            f"adjacency is {a_hat.shape[0]}x{a_hat.shape[1]} but features have "
            f"{x.shape[0]} rows"
        )
    if mask.mask.shape != state.w1.shape:
        raise ShapeError(
            f"mask shape {mask.mask.shape} does not match w1 shape {state.w1.shape}"
        )

    z = a_hat @ x
    p_masked = z @ (mask.mask * state.w1)
    r = relu(p_masked)
    ar = a_hat @ r
    base = ar @ state.w2

    if state.view_counter == 0:
        h = base
        h_star = h
        cache = ForwardCache(z=z, p_masked=p_masked, r=r, ar=ar, h=h,
                             h_star=h_star, mask=mask.mask)
    else:
        if state.h_star_prev is None:
            raise StateError("view_counter >= 1 but no stored past representation")
        h_prev = state.h_star_prev
        h = base + state.alpha * h_prev
        if hp.epsilon == 0.0:
            h_star = h
            cache = ForwardCache(z=z, p_masked=p_masked, r=r, ar=ar, h=h,
                                 h_star=h_star, mask=mask.mask, h_prev=h_prev)
        else:
            p = z @ state.w1
            w2_star = state.w2 + hp.epsilon * (p.T @ h_prev)
            h_star = h + hp.epsilon * (p @ w2_star)
            cache = ForwardCache(z=z, p_masked=p_masked, r=r, ar=ar, h=h,
                                 h_star=h_star, mask=mask.mask, p=p,
                                 w2_star=w2_star, h_prev=h_prev)

    if not np.isfinite(cache.h).all():
        raise NumericError("non-finite value in the propagation output")
    if cache.h_star is not cache.h and not np.isfinite(cache.h_star).all():
        raise NumericError("non-finite value in the fused representation")
    return cache


def forward_view(state: ModelState, view: ViewBatch, mask: PartitionMask,
                 hp: HyperParams) -> tuple:
    """Returns (h, h_star) for one view under the given epoch mask."""
    cache = forward_view_cached(state, view, mask, hp)
    return cache.h, cache.h_star


def compute_loss(h_star: np.ndarray, labels: LabelSet, state: ModelState,
                 beta: float) -> tuple:
    """Total, cross-entropy, and retention loss for a fused representation.

    Cross-entropy is summed (not averaged) over the labeled set.
    Retention is half the squared Frobenius distance of each weight to
    its snapshot, zero while no snapshot exists.
    """
    h_star = as_matrix(h_star, "representation")
    idx = labels.train_idx
    if idx.size == 0:
        raise InputError("labeled set is empty")
    if idx.max() >= h_star.shape[0]:
        raise InputError(
            f"labeled index {idx.max()} out of range for {h_star.shape[0]} rows"
        )
    y = labels.labels[idx]
    if y.max() >= h_star.shape[1]:
        raise InputError(
            f"class index {y.max()} out of range for {h_star.shape[1]} classes"
        )

    rows = h_star[idx]
    shifted = rows - rows.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    ce = float(np.sum(log_norm - shifted[np.arange(idx.size), y]))

    if state.w1_old is None:
        re = 0.0
    else:
        re = 0.5 * (
            float(np.sum((state.w1 - state.w1_old) ** 2))
            + float(np.sum((state.w2 - state.w2_old) ** 2))
        )
    return ce + beta * re, ce, re


def loss_gradient_wrt_output(h_star: np.ndarray, labels: LabelSet) -> np.ndarray:
    """d(cross-entropy)/d(h_star): softmax minus one-hot on labeled rows."""
    g = np.zeros_like(h_star)
    idx = labels.train_idx
    probs = row_softmax(h_star[idx])
    probs[np.arange(idx.size), labels.labels[idx]] -= 1.0
    g[idx] = probs
    return g
