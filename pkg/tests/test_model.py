import numpy as np
import pytest

from mvil.errors import InputError, NumericError, ShapeError, StateError
from mvil.graph import ViewBatch, prepare_view
from mvil.metrics import LabelSet
from mvil.model import (
    HyperParams,
    ModelState,
    PartitionMask,
    compute_loss,
    draw_epoch_mask,
    forward_view,
    hebbian_reconstruct_w2,
    init_state,
    sample_partition_mask,
)


def make_hp(**kw):
    base = dict(learning_rate=0.01, hidden_dim=4, k=2, epochs_per_view=1,
                epsilon=0.01, theta=0.5, beta=0.0)
    base.update(kw)
    return HyperParams(**base)


def ones_mask(shape):
    return PartitionMask(mask=np.ones(shape), theta=1.0)


# --- partition mask ---------------------------------------------------------

def test_mask_counts():
    rng = np.random.default_rng(0)
    assert sample_partition_mask((2, 5), 0.3, rng).mask.sum() == 3
    assert sample_partition_mask((2, 5), 0.0, rng).mask.sum() == 0
    assert sample_partition_mask((2, 5), 1.0, rng).mask.sum() == 10


def test_mask_exact_count_over_many_seeds():
    for seed in range(100):
        rng = np.random.default_rng(seed)
        pm = sample_partition_mask((7, 9), 0.23, rng)
        assert pm.mask.sum() == int(np.floor(0.23 * 63))
        assert set(np.unique(pm.mask)) <= {0.0, 1.0}


def test_mask_positions_vary_with_seed():
    a = sample_partition_mask((6, 6), 0.2, np.random.default_rng(1)).mask
    b = sample_partition_mask((6, 6), 0.2, np.random.default_rng(2)).mask
    assert not np.array_equal(a, b)


def test_draw_epoch_mask_modes():
    rng = np.random.default_rng(3)
    hp = make_hp(theta=0.25, mask_mode="suppress")
    pm = draw_epoch_mask((4, 4), hp, rng)
    assert pm.mask.sum() == 16 - int(np.floor(0.25 * 16))
    hp_off = make_hp(use_partition_mask=False)
    assert draw_epoch_mask((4, 4), hp_off, np.random.default_rng(4)).mask.sum() == 16


# --- Hebbian reconstruction -------------------------------------------------

def identity_view(features):
    n = features.shape[0]
    return ViewBatch(features=features, adjacency_norm=np.eye(n), view_index=1)


def test_hebbian_scalar_case():
    state = ModelState(w1=np.array([[1.0]]), w2=np.array([[1.0]]),
                       h_star_prev=np.array([[3.0]]), view_counter=1)
    view = identity_view(np.array([[2.0]]))
    out = hebbian_reconstruct_w2(state, view, 0.1)
    assert np.allclose(out, np.array([[1.6]]), atol=1e-15)


def test_hebbian_zero_rate_and_zero_past():
    rng = np.random.default_rng(5)
    state = ModelState(w1=rng.normal(size=(3, 4)), w2=rng.normal(size=(4, 2)),
                       h_star_prev=rng.normal(size=(6, 2)), view_counter=1)
    view = identity_view(rng.normal(size=(6, 3)))
    assert np.array_equal(hebbian_reconstruct_w2(state, view, 0.0), state.w2)
    state.h_star_prev = np.zeros((6, 2))
    assert np.array_equal(hebbian_reconstruct_w2(state, view, 0.05), state.w2)


def test_hebbian_matches_triple_loop_oracle():
    rng = np.random.default_rng(6)
    for _ in range(20):
        n, d_in, d, c = 5, 3, 4, 3
        state = ModelState(w1=rng.normal(size=(d_in, d)), w2=rng.normal(size=(d, c)),
                           h_star_prev=rng.normal(size=(n, c)), view_counter=1)
        view = prepare_view(rng.normal(size=(n, d_in)), k=2, view_index=1)
        eps = 0.01

        p = np.zeros((n, d))
        for i in range(n):
            for j in range(d):
                for kk in range(n):
                    for m in range(d_in):
                        p[i, j] += view.adjacency_norm[i, kk] * view.features[kk, m] * state.w1[m, j]
        expected = np.zeros((d, c))
        for j in range(d):
            for l in range(c):
                acc = state.w2[j, l]
                for i in range(n):
                    acc += eps * p[i, j] * state.h_star_prev[i, l]
                expected[j, l] = acc

        out = hebbian_reconstruct_w2(state, view, eps)
        assert np.max(np.abs(out - expected)) <= 1e-12


def test_hebbian_requires_past_representation():
    state = ModelState(w1=np.ones((2, 2)), w2=np.ones((2, 2)))
    with pytest.raises(StateError):
        hebbian_reconstruct_w2(state, identity_view(np.ones((3, 2))), 0.1)


# --- forward pass ------------------------------------------------------------

def test_first_view_equals_plain_gcn():
    rng = np.random.default_rng(7)
    view = prepare_view(rng.normal(size=(8, 5)), k=2, view_index=0)
    state = init_state(5, 4, 3, rng)
    h, h_star = forward_view(state, view, ones_mask(state.w1.shape), make_hp())

    a = view.adjacency_norm
    by_hand = a @ np.maximum(a @ view.features @ state.w1, 0.0) @ state.w2
    assert np.array_equal(h, by_hand)
    assert np.array_equal(h_star, h)


def test_later_view_with_everything_off_reduces_to_masked_gcn():
    rng = np.random.default_rng(8)
    view = prepare_view(rng.normal(size=(8, 5)), k=2, view_index=1)
    state = init_state(5, 4, 3, rng)
    state.view_counter = 1
    state.alpha = 0.0
    state.h_star_prev = rng.normal(size=(8, 3))
    mask = sample_partition_mask(state.w1.shape, 0.5, rng)
    h, h_star = forward_view(state, view, mask, make_hp(epsilon=0.0))

    a = view.adjacency_norm
    base = a @ np.maximum(a @ view.features @ (mask.mask * state.w1), 0.0) @ state.w2
    assert np.array_equal(h, base)
    assert np.array_equal(h_star, base)


def test_later_view_matches_straight_line_oracle():
    rng = np.random.default_rng(9)
    n, d_in, d, c = 2, 2, 2, 2
    x = rng.normal(size=(n, d_in))
    view = ViewBatch(features=x, adjacency_norm=np.full((n, n), 0.5), view_index=1)
    state = ModelState(w1=rng.normal(size=(d_in, d)), w2=rng.normal(size=(d, c)),
                       alpha=0.7, h_star_prev=rng.normal(size=(n, c)), view_counter=1)
    mask = sample_partition_mask((d_in, d), 0.5, rng)
    eps = 0.03
    h, h_star = forward_view(state, view, mask, make_hp(epsilon=eps))

    # Independent step-by-step evaluation of the fused computation.
    a = view.adjacency_norm
    w1m = mask.mask * state.w1
    hidden = np.maximum(a @ (x @ w1m), 0.0)
    h_expected = a @ (hidden @ state.w2) + state.alpha * state.h_star_prev
    p = a @ (x @ state.w1)
    w2_star = state.w2 + eps * (p.T @ state.h_star_prev)
    h_star_expected = h_expected + eps * (p @ w2_star)
    assert np.max(np.abs(h - h_expected)) <= 1e-12
    assert np.max(np.abs(h_star - h_star_expected)) <= 1e-12


def test_fusion_is_linear_in_alpha():
    rng = np.random.default_rng(10)
    view = prepare_view(rng.normal(size=(6, 4)), k=2, view_index=1)
    state = init_state(4, 3, 2, rng)
    state.view_counter = 1
    state.h_star_prev = rng.normal(size=(6, 2))
    mask = ones_mask(state.w1.shape)
    hp = make_hp(epsilon=0.0)

    h0, _ = forward_view(state, view, mask, hp)
    delta = 0.37
    state.alpha += delta
    h1, _ = forward_view(state, view, mask, hp)
    assert np.max(np.abs((h1 - h0) - delta * state.h_star_prev)) <= 1e-12


def test_forward_shape_errors():
    rng = np.random.default_rng(11)
    view = prepare_view(rng.normal(size=(6, 4)), k=2, view_index=0)
    state = init_state(5, 3, 2, rng)  # wrong input width
    with pytest.raises(ShapeError):
        forward_view(state, view, ones_mask(state.w1.shape), make_hp())


@pytest.mark.filterwarnings("ignore:overflow")
def test_forward_flags_non_finite_output():
    rng = np.random.default_rng(12)
    view = prepare_view(rng.normal(size=(6, 4)), k=2, view_index=0)
    state = init_state(4, 3, 2, rng)
    state.w1 *= 1e200
    state.w2 *= 1e200
    with pytest.raises(NumericError):
        forward_view(state, view, ones_mask(state.w1.shape), make_hp())


# --- loss ---------------------------------------------------------------------

def all_train_labels(y, c):
    n = len(y)
    return LabelSet(labels=np.array(y), train_idx=np.arange(n),
                    test_idx=np.array([], dtype=int), c=c)


def test_ce_vanishes_on_confident_correct_predictions():
    y = [0, 1, 2]
    h = np.full((3, 3), -30.0)
    h[np.arange(3), y] = 30.0
    state = ModelState(w1=np.zeros((2, 2)), w2=np.zeros((2, 2)))
    total, ce, re = compute_loss(h, all_train_labels(y, 3), state, beta=1.0)
    assert ce <= 1e-10
    assert re == 0.0 and total == ce


def test_ce_uniform_logits_analytic():
    labels = LabelSet(labels=np.zeros(8, dtype=int), train_idx=np.arange(5),
                      test_idx=np.arange(5, 8), c=4)
    h = np.ones((8, 4)) * 2.5
    state = ModelState(w1=np.zeros((2, 2)), w2=np.zeros((2, 2)))
    _, ce, _ = compute_loss(h, labels, state, beta=0.0)
    assert abs(ce - 5.0 * np.log(4.0)) <= 1e-12


def test_retention_zero_at_snapshot_and_additivity():
    rng = np.random.default_rng(13)
    state = ModelState(w1=rng.normal(size=(3, 3)), w2=rng.normal(size=(3, 2)))
    state.w1_old = state.w1.copy()
    state.w2_old = state.w2.copy()
    h = rng.normal(size=(4, 2))
    labels = all_train_labels([0, 1, 0, 1], 2)
    total, ce, re = compute_loss(h, labels, state, beta=3.0)
    assert re == 0.0
    state.w1_old = state.w1 - 0.5
    total, ce, re = compute_loss(h, labels, state, beta=3.0)
    assert re == pytest.approx(0.5 * 0.25 * 9, abs=1e-12)
    assert total == ce + 3.0 * re


def test_loss_input_errors():
    state = ModelState(w1=np.zeros((2, 2)), w2=np.zeros((2, 2)))
    h = np.zeros((4, 2))
    empty = LabelSet(labels=np.zeros(4, dtype=int), train_idx=np.array([], dtype=int),
                     test_idx=np.arange(4), c=2)
    with pytest.raises(InputError):
        compute_loss(h, empty, state, beta=0.0)
    wide = LabelSet(labels=np.array([0, 3, 1, 2]), train_idx=np.arange(4),
                    test_idx=np.array([], dtype=int), c=4)
    with pytest.raises(InputError):
        compute_loss(h, wide, state, beta=0.0)  # class 3 vs 2 columns
