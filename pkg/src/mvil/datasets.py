"""Dataset interchange files, split drawing, and the synthetic benchmark.

Interchange format: one delimited-text matrix file per view, a header
line ``n d`` followed by n rows of d whitespace-separated numbers; one
label file with a single token per line (arbitrary strings, mapped to
class indices in first-appearance order); an optional split file with
one of ``train`` / ``test`` / ``none`` per line.
"""

import os

import numpy as np

from .errors import InputError
from .metrics import LabelSet

__all__ = [
    "read_matrix",
    "write_matrix",
    "read_labels",
    "read_split",
    "draw_split",
    "pad_views",
    "load_dataset",
    "generate_synthetic",
    "write_synthetic",
]


def write_matrix(path, m: np.ndarray) -> None:
    m = np.asarray(m, dtype=np.float64)
    with open(path, "w") as fh:
        fh.write(f"{m.shape[0]} {m.shape[1]}\n")
        for row in m:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def _read_lines(path) -> list:
    try:
        with open(path) as fh:
            return fh.read().splitlines()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def read_matrix(path) -> np.ndarray:
    lines = _read_lines(path)
    if not lines:
        raise InputError(f"{path}:1: empty matrix file")
    header = lines[0].split()
    if len(header) != 2:
        raise InputError(f"{path}:1: header must be two integers 'n d', got {lines[0]!r}")
    try:
        n, d = int(header[0]), int(header[1])
    except ValueError:
        raise InputError(f"{path}:1: header must be two integers 'n d', got {lines[0]!r}")
    body = [ln for ln in lines[1:] if ln.strip()]
    if len(body) != n:
        raise InputError(f"{path}: header declares {n} rows but file has {len(body)}")
    out = np.empty((n, d), dtype=np.float64)
    for i, ln in enumerate(body):
        cells = ln.split()
        if len(cells) != d:
            raise InputError(f"{path}:{i + 2}: expected {d} values, got {len(cells)}")
        try:
            out[i] = [float(c) for c in cells]
        except ValueError as exc:
            raise InputError(f"{path}:{i + 2}: non-numeric cell ({exc})")
    return out


def read_labels(path) -> tuple:
    """Label tokens mapped to indices in first-appearance order."""
    tokens = [ln.strip() for ln in _read_lines(path) if ln.strip()]
    if not tokens:
        raise InputError(f"{path}: empty label file")
    names = []
    index = {}
    out = np.empty(len(tokens), dtype=np.int64)
    for i, tok in enumerate(tokens):
        if tok not in index:
            index[tok] = len(names)
            names.append(tok)
        out[i] = index[tok]
    return out, names


def read_split(path, n: int) -> tuple:
    tokens = [ln.strip() for ln in _read_lines(path) if ln.strip()]
    if len(tokens) != n:
        raise InputError(f"{path}: split file has {len(tokens)} entries, expected {n}")
    train, test = [], []
    for i, tok in enumerate(tokens):
        if tok == "train":
            train.append(i)
        elif tok == "test":
            test.append(i)
        elif tok != "none":
            raise InputError(f"{path}:{i + 1}: expected train/test/none, got {tok!r}")
    return np.array(train, dtype=np.int64), np.array(test, dtype=np.int64)


def draw_split(label_idx: np.ndarray, c: int, fraction: float, seed: int) -> LabelSet:
    """Per-class stratified split; every class gets at least one labeled node."""
    if not 0.0 < fraction < 1.0:
        raise InputError(f"label fraction must be in (0, 1), got {fraction}")
    rng = np.random.default_rng(seed)
    train = []
    for k in range(c):
        members = np.flatnonzero(label_idx == k)
        if members.size == 0:
            continue
        take = max(1, int(np.floor(fraction * members.size)))
        train.extend(rng.permutation(members)[:take])
    train = np.sort(np.array(train, dtype=np.int64))
    test = np.setdiff1d(np.arange(label_idx.shape[0], dtype=np.int64), train)
    return LabelSet(labels=label_idx, train_idx=train, test_idx=test, c=c)


def pad_views(views: list) -> list:
    """Zero-pad every view on the right to the widest feature dimension."""
    d_max = max(v.shape[1] for v in views)
    out = []
    for v in views:
        if v.shape[1] == d_max:
            out.append(v)
        else:
            padded = np.zeros((v.shape[0], d_max), dtype=np.float64)
            padded[:, : v.shape[1]] = v
            out.append(padded)
    return out


def load_dataset(config) -> tuple:
    """Views (zero-padded), a LabelSet, and the label-name mapping.

    The split is drawn with the run seed unless a fixed split file is
    configured.
    """
    base = config.dataset
    raw = []
    counts = {}
    for name in config.views:
        path = os.path.join(base, name)
        m = read_matrix(path)
        raw.append(m)
        counts[name] = m.shape[0]
    if len(set(counts.values())) > 1:
        detail = ", ".join(f"{k}={v}" for k, v in counts.items())
        raise InputError(f"view files disagree on row count: {detail}")
    n = raw[0].shape[0]

    label_idx, names = read_labels(os.path.join(base, config.label_file))
    if label_idx.shape[0] != n:
        raise InputError(
            f"label file has {label_idx.shape[0]} entries but views have {n} rows"
        )
    c = len(names)

    if config.split_file:
        train, test = read_split(os.path.join(base, config.split_file), n)
        labels = LabelSet(labels=label_idx, train_idx=train, test_idx=test, c=c)
    else:
        labels = draw_split(label_idx, c, config.label_fraction, config.seed)
    return pad_views(raw), labels, names


# --- synthetic complementary-view benchmark -------------------------------

SYNTH_SIGNAL = 3.0      # class-mean amplitude on a view's strong coordinate
SYNTH_WEAK_GAIN = 0.2   # attenuation of the other coordinates
SYNTH_NOISE = 1.0
SYNTH_NUISANCE = 3      # uninformative extra columns per view


def generate_synthetic(views: int = 3, n: int = 300, classes: int = 3,
                       seed: int = 0) -> tuple:
    """Shared latent clusters observed through complementary noisy views.

    Every sample carries a class mean along its class's latent
    coordinate. View v sees coordinate ``v mod classes`` at full gain
    and the rest strongly attenuated, so no single view separates all
    classes well but the views together do.
    """
    if views < 1 or classes < 2 or n < 2 * classes:
        raise InputError(
            f"need views >= 1, classes >= 2, n >= 2*classes; "
            f"got views={views}, classes={classes}, n={n}"
        )
    rng = np.random.default_rng(seed)
    label_idx = rng.permutation(np.arange(n) % classes)
    means = np.eye(classes) * SYNTH_SIGNAL

    feature_views = []
    for v in range(views):
        gains = np.full(classes, SYNTH_WEAK_GAIN)
        gains[v % classes] = 1.0
        signal = means[label_idx] * gains
        noise = rng.normal(0.0, SYNTH_NOISE, size=(n, classes))
        nuisance = rng.normal(0.0, SYNTH_NOISE, size=(n, SYNTH_NUISANCE))
        feature_views.append(np.hstack([signal + noise, nuisance]))
    return feature_views, label_idx


def write_synthetic(directory, views: int = 3, n: int = 300, classes: int = 3,
                    seed: int = 0) -> dict:
    """Write the synthetic benchmark in interchange format."""
    feature_views, label_idx = generate_synthetic(views, n, classes, seed)
    os.makedirs(directory, exist_ok=True)
    view_files = []
    for v, m in enumerate(feature_views):
        name = f"view_{v}.txt"
        write_matrix(os.path.join(directory, name), m)
        view_files.append(name)
    label_file = "labels.txt"
    with open(os.path.join(directory, label_file), "w") as fh:
        for y in label_idx:
            fh.write(f"{y}\n")
    return {
        "directory": str(directory),
        "view_files": view_files,
        "label_file": label_file,
        "samples": n,
        "classes": classes,
    }
