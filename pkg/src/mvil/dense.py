"""Dense float64 kernels every other module builds on.

Matrices are plain 2-D ``numpy.ndarray`` values in row-major order and
64-bit precision. Kernels are pure functions: inputs are never mutated,
so arrays can be shared freely between threads. On a fixed machine the
BLAS-backed product is reproducible run to run, which is what the
deterministic mode of the training engine relies on.
"""

import numpy as np

from .errors import ShapeError

__all__ = ["as_matrix", "matmul", "relu", "row_softmax"]


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a 2-D float64 array; reject anything else."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got ndim={m.ndim}")
    return m


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with an explicit conformance check."""
    a = as_matrix(a, "left operand")
    b = as_matrix(b, "right operand")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(
            f"cannot multiply {a.shape[0]}x{a.shape[1]} by {b.shape[0]}x{b.shape[1]}: "
            f"inner dimensions {a.shape[1]} != {b.shape[0]}"
        )
    return a @ b


def relu(m: np.ndarray) -> np.ndarray:
    """Elementwise max(x, 0)."""
    return np.maximum(as_matrix(m), 0.0)


def row_softmax(m: np.ndarray) -> np.ndarray:
    """Row-wise softmax, max-shifted for stability.

    Every output row sums to 1 up to float rounding and all entries are
    in (0, 1]; adding a constant to a row leaves its output unchanged.
    """
    m = as_matrix(m)
    shifted = m - m.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)
