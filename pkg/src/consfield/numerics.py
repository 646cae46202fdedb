"""Dense linear algebra helpers, seeded randomness and finite-difference oracles.

Matrices and vectors are plain ``numpy.float64`` arrays. The helpers here only
validate shapes and finiteness; arithmetic is delegated to numpy.

Randomness goes through :class:`Rng`, a thin wrapper around numpy's PCG64
bit generator. PCG64 is a fixed, documented algorithm (128-bit LCG state with
an XSL-RR output permutation, multiplier 0x2360ED051FC65DA44385DF649FCCF645)
whose streams are identical across platforms for a given seed, and seeds are
expanded with ``SeedSequence`` so streams can be split deterministically.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import OracleError, ShapeError

DEFAULT_STEP = 1e-5


def as_vector(x, dim: int | None = None) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise ShapeError(f"expected a 1-d vector, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise ShapeError(f"expected dimension {dim}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite entries")
    return v


def as_matrix(a, shape: tuple[int, int] | None = None) -> np.ndarray:
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeError(f"expected a 2-d matrix, got shape {m.shape}")
    if shape is not None and m.shape != tuple(shape):
        raise ShapeError(f"expected shape {tuple(shape)}, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def matmul(a, b) -> np.ndarray:
    """Matrix product ``a @ b`` with an explicit dimension check."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


class Rng:
    """Seeded random stream (PCG64).

    ``spawn`` derives independent child streams whose identity depends only
    on the parent seed and the spawn order.
    """

    def __init__(self, seed: int | np.random.SeedSequence = 0):
        if isinstance(seed, np.random.SeedSequence):
            self._seq = seed
            self.seed = int(seed.entropy) if isinstance(seed.entropy, int) else 0
        else:
            self.seed = int(seed)
            self._seq = np.random.SeedSequence(self.seed)
        self.gen = np.random.Generator(np.random.PCG64(self._seq))

    def spawn(self, n: int = 1) -> list["Rng"]:
        return [Rng(s) for s in self._seq.spawn(n)]

    def child(self) -> "Rng":
        return self.spawn(1)[0]

    def uniform(self, low=0.0, high=1.0, size=None):
        return self.gen.uniform(low, high, size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self.gen.normal(loc, scale, size)

    def random(self, size=None):
        return self.gen.random(size)

    def permutation(self, n: int) -> np.ndarray:
        return self.gen.permutation(n)

    def integers(self, low, high=None, size=None):
        return self.gen.integers(low, high, size)


def _check_finite(value, what, x):
    if not np.all(np.isfinite(value)):
        raise OracleError(f"non-finite {what} near x={np.array2string(np.asarray(x))}")


def finite_diff_jacobian(f: Callable[[np.ndarray], np.ndarray], x, h: float = DEFAULT_STEP) -> np.ndarray:
    """Central-difference Jacobian: ``J[i, j] = (f_i(x + h e_j) - f_i(x - h e_j)) / 2h``."""
    if not h > 0:
        raise ValueError("step h must be positive")
    x = as_vector(x)
    f0 = np.asarray(f(x), dtype=np.float64)
    _check_finite(f0, "field value", x)
    jac = np.empty((f0.shape[0], x.shape[0]))
    for j in range(x.shape[0]):
        e = np.zeros_like(x)
        e[j] = h
        fp = np.asarray(f(x + e), dtype=np.float64)
        fm = np.asarray(f(x - e), dtype=np.float64)
        _check_finite(fp, "field value", x + e)
        _check_finite(fm, "field value", x - e)
        jac[:, j] = (fp - fm) / (2.0 * h)
    return jac


def finite_diff_grad(F: Callable[[np.ndarray], float], x, h: float = DEFAULT_STEP) -> np.ndarray:
    """Central-difference gradient of a scalar field."""
    jac = finite_diff_jacobian(lambda z: np.atleast_1d(F(z)), x, h)
    return jac[0]
