"""Per-view graph construction: kNN adjacency and symmetric normalization."""

from dataclasses import dataclass

import numpy as np

from .dense import as_matrix
from .errors import ConfigError, InputError

__all__ = ["ViewBatch", "build_knn_adjacency", "normalize_adjacency", "prepare_view"]

# Dense n x n storage; refuse graphs that would not fit comfortably in memory.
MAX_NODES = 30_000


@dataclass(eq=False)
class ViewBatch:
    """One view's feature matrix plus its normalized adjacency."""

    features: np.ndarray       # n x d_v
    adjacency_norm: np.ndarray  # n x n, symmetric, positive diagonal
    view_index: int


def _pairwise_sq_dists(features: np.ndarray) -> np.ndarray:
    """Exact squared Euclidean distances via per-row differences.

    Chunked so the temporary buffer stays bounded; the direct-difference
    form (rather than the Gram expansion) keeps duplicate rows at exactly
    zero distance, which the index-order tie-breaking depends on.
    """
    n, d = features.shape
    out = np.empty((n, n), dtype=np.float64)
    chunk = max(1, int(2e7 // max(n * d, 1)))
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        diff = features[start:stop, None, :] - features[None, :, :]
        out[start:stop] = np.square(diff).sum(axis=2)
    return out


def build_knn_adjacency(features: np.ndarray, k: int) -> np.ndarray:
    """Binary kNN graph on rows of ``features``.

    Each row is linked to its k nearest distinct rows by Euclidean
    distance (ties broken by ascending row index), then the directed
    edge set is symmetrized by logical OR. The diagonal stays zero;
    self-loops are added later by normalization.
    """
    features = as_matrix(features, "features")
    n = features.shape[0]
    if n < 2:
        raise InputError(f"need at least 2 samples to build a kNN graph, got {n}")
    if n > MAX_NODES:
        raise InputError(f"refusing dense kNN graph on {n} nodes (limit {MAX_NODES})")
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    if k >= n:
        raise ConfigError(f"k must be smaller than the number of samples: k={k}, n={n}")

    dists = _pairwise_sq_dists(features)
    np.fill_diagonal(dists, np.inf)
    # Stable sort => equal distances resolve to the lower row index.
    order = np.argsort(dists, axis=1, kind="stable")[:, :k]

    adj = np.zeros((n, n), dtype=np.float64)
    rows = np.repeat(np.arange(n), k)
    adj[rows, order.ravel()] = 1.0
    adj = np.maximum(adj, adj.T)
    np.fill_diagonal(adj, 0.0)
    return adj


def normalize_adjacency(a: np.ndarray) -> np.ndarray:
    """Symmetric degree normalization with self-loops.

    Returns D^(-1/2) (A + I) D^(-1/2) where D is the diagonal of row
    sums of A + I. Computed with an outer product of the scaling vector
    so a symmetric input yields a bit-exactly symmetric output.
    """
    a = as_matrix(a, "adjacency")
    n, m = a.shape
    if n != m:
        raise InputError(f"adjacency must be square, got {n}x{m}")
    if np.abs(a - a.T).max() > 1e-9:
        raise InputError("adjacency must be symmetric (max asymmetry above 1e-9)")

    with_loops = a + np.eye(n)
    inv_sqrt_deg = 1.0 / np.sqrt(with_loops.sum(axis=1))
    return with_loops * np.outer(inv_sqrt_deg, inv_sqrt_deg)


def prepare_view(features: np.ndarray, k: int, view_index: int) -> ViewBatch:
    """Build the normalized propagation matrix for one arriving view."""
    adj = build_knn_adjacency(features, k)
    return ViewBatch(
        features=as_matrix(features, "features"),
        adjacency_norm=normalize_adjacency(adj),
        view_index=view_index,
    )
