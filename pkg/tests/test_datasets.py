import numpy as np
import pytest

from mvil.config import ExperimentConfig
from mvil.datasets import (
    draw_split,
    generate_synthetic,
    load_dataset,
    pad_views,
    read_labels,
    read_matrix,
    read_split,
    write_matrix,
    write_synthetic,
)
from mvil.errors import InputError


def test_matrix_round_trip_is_exact(tmp_path):
    rng = np.random.default_rng(40)
    m = rng.normal(size=(7, 3)) * np.array([1e-9, 1.0, 1e9])
    path = tmp_path / "m.txt"
    write_matrix(path, m)
    assert np.array_equal(read_matrix(path), m)


def test_matrix_parse_errors_carry_line_numbers(tmp_path):
    bad_header = tmp_path / "a.txt"
    bad_header.write_text("3\n1 2\n")
    with pytest.raises(InputError, match=":1:"):
        read_matrix(bad_header)

    bad_cell = tmp_path / "b.txt"
    bad_cell.write_text("2 2\n1 2\n3 oops\n")
    with pytest.raises(InputError, match=":3:"):
        read_matrix(bad_cell)

    bad_width = tmp_path / "c.txt"
    bad_width.write_text("2 2\n1 2\n3\n")
    with pytest.raises(InputError, match=":3:"):
        read_matrix(bad_width)

    short = tmp_path / "d.txt"
    short.write_text("3 2\n1 2\n3 4\n")
    with pytest.raises(InputError, match="declares 3 rows"):
        read_matrix(short)

    with pytest.raises(InputError, match="cannot read"):
        read_matrix(tmp_path / "missing.txt")


def test_labels_first_appearance_order(tmp_path):
    path = tmp_path / "labels.txt"
    path.write_text("owl\ncat\nowl\ndog\ncat\n")
    idx, names = read_labels(path)
    assert names == ["owl", "cat", "dog"]
    assert idx.tolist() == [0, 1, 0, 2, 1]


def test_split_file_parsing(tmp_path):
    path = tmp_path / "split.txt"
    path.write_text("train\ntest\nnone\ntest\n")
    train, test = read_split(path, 4)
    assert train.tolist() == [0]
    assert test.tolist() == [1, 3]
    with pytest.raises(InputError):
        read_split(path, 5)
    bad = tmp_path / "bad.txt"
    bad.write_text("train\nvalidation\n")
    with pytest.raises(InputError, match=":2:"):
        read_split(bad, 2)


def test_draw_split_is_stratified_and_deterministic():
    y = np.array([0] * 50 + [1] * 5 + [2] * 45)
    a = draw_split(y, 3, 0.1, seed=7)
    b = draw_split(y, 3, 0.1, seed=7)
    assert np.array_equal(a.train_idx, b.train_idx)
    assert np.array_equal(a.test_idx, b.test_idx)
    for k in range(3):
        assert np.any(y[a.train_idx] == k)  # every class represented
    assert len(a.train_idx) == 5 + 1 + 4
    assert len(a.train_idx) + len(a.test_idx) == 100
    c = draw_split(y, 3, 0.1, seed=8)
    assert not np.array_equal(a.train_idx, c.train_idx)


def test_draw_split_rejects_bad_fraction():
    y = np.array([0, 1, 0, 1])
    with pytest.raises(InputError):
        draw_split(y, 2, 0.0, seed=0)
    with pytest.raises(InputError):
        draw_split(y, 2, 1.0, seed=0)


def test_pad_views_zero_pads_right():
    a = np.ones((3, 2))
    b = np.ones((3, 4))
    pa, pb = pad_views([a, b])
    assert pa.shape == pb.shape == (3, 4)
    assert np.array_equal(pa[:, 2:], np.zeros((3, 2)))
    assert pb is b


def write_tiny_dataset(tmp_path, rows_b=5):
    write_matrix(tmp_path / "v0.txt", np.arange(10.0).reshape(5, 2))
    write_matrix(tmp_path / "v1.txt", np.arange(3.0 * rows_b).reshape(rows_b, 3))
    (tmp_path / "labels.txt").write_text("a\nb\na\nb\na\n")
    return ExperimentConfig(dataset=str(tmp_path), views=["v0.txt", "v1.txt"],
                            theta=0.1, label_fraction=0.4, seed=3)


def test_load_dataset_pads_and_splits(tmp_path):
    config = write_tiny_dataset(tmp_path)
    views, labels, names = load_dataset(config)
    assert [v.shape for v in views] == [(5, 3), (5, 3)]
    assert np.array_equal(views[0][:, 2], np.zeros(5))
    assert names == ["a", "b"]
    assert labels.c == 2
    assert len(labels.train_idx) == 2  # floor(0.4 * 3) and floor(0.4 * 2) -> 1 + 1... at least one per class
    assert set(labels.labels[labels.train_idx]) == {0, 1}


def test_load_dataset_row_count_mismatch_names_files(tmp_path):
    config = write_tiny_dataset(tmp_path, rows_b=4)
    with pytest.raises(InputError, match="v0.txt.*v1.txt|v1.txt.*v0.txt"):
        load_dataset(config)


def test_load_dataset_label_count_mismatch(tmp_path):
    config = write_tiny_dataset(tmp_path)
    (tmp_path / "labels.txt").write_text("a\nb\n")
    with pytest.raises(InputError, match="label"):
        load_dataset(config)


def test_generate_synthetic_shape_and_determinism():
    views, y = generate_synthetic(3, n=60, classes=3, seed=4)
    assert len(views) == 3
    assert all(v.shape == (60, 6) for v in views)
    assert sorted(np.bincount(y).tolist()) == [20, 20, 20]
    views2, y2 = generate_synthetic(3, n=60, classes=3, seed=4)
    assert np.array_equal(y, y2)
    assert all(np.array_equal(a, b) for a, b in zip(views, views2))


def test_generate_synthetic_validation():
    with pytest.raises(InputError):
        generate_synthetic(0, 60, 3, 0)
    with pytest.raises(InputError):
        generate_synthetic(2, 3, 3, 0)


def test_write_synthetic_round_trip(tmp_path):
    info = write_synthetic(tmp_path / "ds", views=2, n=30, classes=3, seed=5)
    assert info["view_files"] == ["view_0.txt", "view_1.txt"]
    views, y = generate_synthetic(2, 30, 3, seed=5)
    loaded = read_matrix(tmp_path / "ds" / "view_0.txt")
    assert np.array_equal(loaded, views[0])
    idx, names = read_labels(tmp_path / "ds" / "labels.txt")
    # Tokens map to indices in first-appearance order, not numeric order.
    assert [int(names[i]) for i in idx] == y.tolist()
