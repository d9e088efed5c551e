"""Gradients, optimizers, and the per-view / streaming training loops.

Reverse-mode derivatives are written out by hand against the forward
cache. Gradients flow through every appearance of the two weight
matrices (the masked propagation path, the unmasked Hebbian path, and
the reconstructed second-layer weight) and through the fusion balance;
the stored past representation, the weight snapshots, and the epoch
mask are constants.
"""

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from .errors import ConfigError, InputError, NumericError
from .graph import ViewBatch, prepare_view
from .metrics import LabelSet, evaluate_representation
from .model import (
    HyperParams,
    ModelState,
    PartitionMask,
    compute_loss,
    draw_epoch_mask,
    forward_view_cached,
    init_state,
    loss_gradient_wrt_output,
    sample_partition_mask,
)

__all__ = [
    "GradientSet",
    "OptimizerState",
    "TrainReport",
    "StreamReport",
    "GradCheckReport",
    "backward",
    "init_optimizer",
    "optimizer_step",
    "train_view",
    "train_stream",
    "check_gradients",
    "build_check_instance",
    "run_standard_gradient_checks",
]


class LossParts(NamedTuple):
    total: float
    ce: float
    re: float


@dataclass(eq=False)
class GradientSet:
    d_w1: np.ndarray
    d_w2: np.ndarray
    d_alpha: float


def _loss_and_grads(state: ModelState, view: ViewBatch, mask: PartitionMask,
                    labels: LabelSet, hp: HyperParams):
    """One forward/backward pass: loss breakdown plus parameter gradients."""
    cache = forward_view_cached(state, view, mask, hp)
    total, ce, re = compute_loss(cache.h_star, labels, state, hp.beta)

    g = loss_gradient_wrt_output(cache.h_star, labels)
    a_hat_t = view.adjacency_norm.T

    # Masked propagation path, shared by every view.
    d_ar = g @ state.w2.T
    d_p_masked = (a_hat_t @ d_ar) * (cache.p_masked > 0)
    d_w1 = cache.mask * (cache.z.T @ d_p_masked)
    d_w2 = cache.ar.T @ g
    d_alpha = 0.0

    if state.view_counter >= 1:
        d_alpha = float(np.sum(g * cache.h_prev))
        if cache.p is not None:
            # Reinforcement term eps * p @ w2_star, with
            # w2_star = w2 + eps * p.T @ h_prev.
            eps = hp.epsilon
            d_w2_star = eps * (cache.p.T @ g)
            d_w2 += d_w2_star
            d_p = eps * (g @ cache.w2_star.T) + eps * (cache.h_prev @ d_w2_star.T)
            d_w1 += cache.z.T @ d_p

    if state.w1_old is not None:
        d_w1 += hp.beta * (state.w1 - state.w1_old)
        d_w2 += hp.beta * (state.w2 - state.w2_old)

    if not (np.isfinite(d_w1).all() and np.isfinite(d_w2).all() and math.isfinite(d_alpha)):
        raise NumericError("non-finite gradient")
    return LossParts(total, ce, re), GradientSet(d_w1, d_w2, d_alpha), cache


def backward(state: ModelState, view: ViewBatch, mask: PartitionMask,
             labels: LabelSet, hp: HyperParams) -> tuple:
    """Total loss and its gradients w.r.t. w1, w2, and alpha."""
    parts, grads, _ = _loss_and_grads(state, view, mask, labels, hp)
    return parts.total, grads


@dataclass(eq=False)
class OptimizerState:
    """SGD or Adam state over (w1, w2, alpha)."""

    kind: str
    learning_rate: float
    step_count: int = 0
    m_w1: Optional[np.ndarray] = None
    v_w1: Optional[np.ndarray] = None
    m_w2: Optional[np.ndarray] = None
    v_w2: Optional[np.ndarray] = None
    m_alpha: float = 0.0
    v_alpha: float = 0.0


ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


def init_optimizer(kind: str, learning_rate: float, state: ModelState) -> OptimizerState:
    if kind not in ("sgd", "adam"):
        raise ConfigError(f"optimizer must be 'sgd' or 'adam', got {kind!r}")
    opt = OptimizerState(kind=kind, learning_rate=learning_rate)
    if kind == "adam":
        opt.m_w1 = np.zeros_like(state.w1)
        opt.v_w1 = np.zeros_like(state.w1)
        opt.m_w2 = np.zeros_like(state.w2)
        opt.v_w2 = np.zeros_like(state.w2)
    return opt


def optimizer_step(opt: OptimizerState, state: ModelState, grads: GradientSet) -> None:
    """In-place parameter update; bias-corrected Adam or plain SGD."""
    opt.step_count += 1
    lr = opt.learning_rate
    if opt.kind == "sgd":
        state.w1 -= lr * grads.d_w1
        state.w2 -= lr * grads.d_w2
        state.alpha -= lr * grads.d_alpha
        return

    t = opt.step_count
    c1 = 1.0 - ADAM_BETA1 ** t
    c2 = 1.0 - ADAM_BETA2 ** t

    def adam(p, g, m, v):
        m *= ADAM_BETA1
        m += (1 - ADAM_BETA1) * g
        v *= ADAM_BETA2
        v += (1 - ADAM_BETA2) * g * g
        p -= lr * (m / c1) / (np.sqrt(v / c2) + ADAM_EPS)

    adam(state.w1, grads.d_w1, opt.m_w1, opt.v_w1)
    adam(state.w2, grads.d_w2, opt.m_w2, opt.v_w2)
    m = opt.m_alpha = ADAM_BETA1 * opt.m_alpha + (1 - ADAM_BETA1) * grads.d_alpha
    v = opt.v_alpha = ADAM_BETA2 * opt.v_alpha + (1 - ADAM_BETA2) * grads.d_alpha ** 2
    state.alpha -= lr * (m / c1) / (math.sqrt(v / c2) + ADAM_EPS)


@dataclass
class TrainReport:
    """Per-epoch loss traces for one view."""

    view_index: int
    loss_total: list
    loss_ce: list
    loss_re: list


@dataclass(eq=False)
class StreamReport:
    """Everything produced by one streaming run."""

    seed: int
    train_reports: list          # TrainReport per view
    metric_reports: list         # MetricReport per view, on the test split
    embeddings: list             # stored representation per view (n x c)
    split_fingerprint: str


def train_view(state: ModelState, view: ViewBatch, labels: LabelSet,
               hp: HyperParams, opt: OptimizerState,
               rng: np.random.Generator) -> TrainReport:
    """Train one view for a fixed epoch budget.

    The partition mask is resampled every epoch. Afterwards the last
    forward's fused representation is stored (detached) as the past
    representation, the weights are snapshotted for the retention loss,
    and the view counter advances.
    """
    totals, ces, res = [], [], []
    last_h_star = None
    for _ in range(hp.epochs_per_view):
        mask = draw_epoch_mask(state.w1.shape, hp, rng)
        parts, grads, cache = _loss_and_grads(state, view, mask, labels, hp)
        optimizer_step(opt, state, grads)
        totals.append(parts.total)
        ces.append(parts.ce)
        res.append(parts.re)
        last_h_star = cache.h_star

    if last_h_star is None:
        # Zero-epoch budget: still compute and store a representation.
        mask = draw_epoch_mask(state.w1.shape, hp, rng)
        last_h_star = forward_view_cached(state, view, mask, hp).h_star

    state.h_star_prev = last_h_star.copy()
    state.w1_old = state.w1.copy()
    state.w2_old = state.w2.copy()
    state.view_counter += 1
    return TrainReport(view.view_index, totals, ces, res)


def train_stream(views: list, labels: LabelSet, hp: HyperParams, seed: int,
                 optimizer: str = "adam",
                 on_view_end: Optional[Callable] = None) -> StreamReport:
    """Run the full view-by-view training loop from a fresh state.

    Views must be prepared (adjacency built) and arrive in list order.
    After each view the stored representation is scored on the test
    split. ``on_view_end(view_position, stream_report)`` fires after
    each view completes, for progress reporting.
    """
    if not views:
        raise InputError("need at least one view")
    n = views[0].features.shape[0]
    d_in = views[0].features.shape[1]
    for v in views:
        if v.features.shape[0] != n:
            raise InputError(
                f"views disagree on sample count: {n} vs {v.features.shape[0]} "
                f"(view {v.view_index})"
            )
        if v.features.shape[1] != d_in:
            raise InputError(
                f"views disagree on feature width: {d_in} vs {v.features.shape[1]} "
                f"(view {v.view_index}); pad views to a common width first"
            )
    if hp.use_partition_mask and hp.theta >= 1.0 / len(views):
        raise ConfigError(
            f"theta must be < 1/V (got theta={hp.theta} with V={len(views)} views)"
        )

    rng = np.random.default_rng(seed)
    state = init_state(d_in, hp.hidden_dim, labels.c, rng)
    opt = init_optimizer(optimizer, hp.learning_rate, state)

    report = StreamReport(
        seed=seed,
        train_reports=[],
        metric_reports=[],
        embeddings=[],
        split_fingerprint=labels.split_fingerprint(),
    )
    for position, view in enumerate(views):
        report.train_reports.append(train_view(state, view, labels, hp, opt, rng))
        report.metric_reports.append(evaluate_representation(state.h_star_prev, labels))
        report.embeddings.append(state.h_star_prev.copy())
        if on_view_end is not None:
            on_view_end(position, report)
    return report


@dataclass
class GradCheckReport:
    max_rel_error: float
    tol: float
    passed: bool
    per_param: dict


def check_gradients(state: ModelState, view: ViewBatch, mask: PartitionMask,
                    labels: LabelSet, hp: HyperParams,
                    h: float = 1e-5, tol: float = 1e-6) -> GradCheckReport:
    """Central-difference check of every parameter entry.

    The error measure is |analytic - numeric| / max(|analytic|,
    |numeric|, 1), i.e. relative above unit scale and absolute below
    it. The epoch mask is held fixed across all evaluations.
    """
    _, grads, _ = _loss_and_grads(state, view, mask, labels, hp)

    def loss_at(s: ModelState) -> float:
        cache = forward_view_cached(s, view, mask, hp)
        return compute_loss(cache.h_star, labels, s, hp.beta)[0]

    work = state.clone()

    def numeric_entry(array: np.ndarray, index) -> float:
        orig = array[index]
        array[index] = orig + h
        up = loss_at(work)
        array[index] = orig - h
        down = loss_at(work)
        array[index] = orig
        return (up - down) / (2.0 * h)

    def rel(a: float, n: float) -> float:
        return float(abs(a - n) / max(abs(a), abs(n), 1.0))

    per_param = {}
    worst = 0.0
    for name, array, analytic in (("w1", work.w1, grads.d_w1),
                                  ("w2", work.w2, grads.d_w2)):
        errs = [
            rel(analytic[idx], numeric_entry(array, idx))
            for idx in np.ndindex(array.shape)
        ]
        per_param[name] = max(errs)
        worst = max(worst, per_param[name])

    orig_alpha = work.alpha
    work.alpha = orig_alpha + h
    up = loss_at(work)
    work.alpha = orig_alpha - h
    down = loss_at(work)
    work.alpha = orig_alpha
    per_param["alpha"] = rel(grads.d_alpha, (up - down) / (2.0 * h))
    worst = max(worst, per_param["alpha"])

    return GradCheckReport(max_rel_error=worst, tol=tol, passed=bool(worst < tol),
                           per_param=per_param)


def build_check_instance(view_counter: int, theta: float, epsilon: float,
                         seed: int) -> tuple:
    """A small random instance for gradient checking.

    Returns (state, view, mask, labels, hp). Instances with
    ``view_counter >= 1`` carry a stored representation and weight
    snapshots so every loss term is active.
    """
    r = np.random.default_rng(seed)
    n, d_in, d, c = 6, 8, 4, 3
    view = prepare_view(r.normal(size=(n, d_in)), k=2, view_index=view_counter)
    state = init_state(d_in, d, c, r)
    if view_counter >= 1:
        state.view_counter = view_counter
        state.h_star_prev = r.normal(size=(n, c))
        state.w1_old = state.w1 + 0.1 * r.normal(size=state.w1.shape)
        state.w2_old = state.w2 + 0.1 * r.normal(size=state.w2.shape)
    hp = HyperParams(learning_rate=0.01, hidden_dim=d, k=2, epochs_per_view=1,
                     epsilon=epsilon, theta=theta, beta=0.05)
    mask = sample_partition_mask(state.w1.shape, theta, r)
    labels = LabelSet(labels=r.integers(0, c, size=n),
                      train_idx=np.array([0, 2, 4]),
                      test_idx=np.array([1, 3, 5]), c=c)
    return state, view, mask, labels, hp


# (view_counter, theta, epsilon, seed) covering first view and later views,
# sparse and full masks, Hebbian on and off.
STANDARD_CHECK_CASES = (
    ("first-view theta=1.0 eps=0.01", 0, 1.0, 0.01, 11),
    ("later-view theta=0.05 eps=0.01", 1, 0.05, 0.01, 22),
    ("later-view theta=1.0 eps=0", 2, 1.0, 0.0, 33),
)


def run_standard_gradient_checks(h: float = 1e-5, tol: float = 1e-6) -> list:
    """Finite-difference checks on the canonical small instances."""
    results = []
    for name, vc, theta, eps, seed in STANDARD_CHECK_CASES:
        state, view, mask, labels, hp = build_check_instance(vc, theta, eps, seed)
        results.append((name, check_gradients(state, view, mask, labels, hp,
                                              h=h, tol=tol)))
    return results
