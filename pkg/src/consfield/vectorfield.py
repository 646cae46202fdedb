"""Uniform point -> vector interface used by the analysis and extraction code."""
from __future__ import annotations

from typing import Callable, Optional

import numpy as np

from .numerics import DEFAULT_STEP, as_vector, finite_diff_jacobian


class VectorField:
    """A map R^D -> R^D, optionally carrying an analytic Jacobian.

    ``batch`` evaluates many points at once (rows of an ``(N, D)`` array); if
    not supplied it falls back to a Python loop over ``fn``.
    """

    def __init__(
        self,
        dim: int,
        fn: Callable[[np.ndarray], np.ndarray],
        jac: Optional[Callable[[np.ndarray], np.ndarray]] = None,
        batch: Optional[Callable[[np.ndarray], np.ndarray]] = None,
        batch_jac: Optional[Callable[[np.ndarray], np.ndarray]] = None,
        name: str = "field",
    ):
        self.dim = int(dim)
        self._fn = fn
        self._jac = jac
        self._batch = batch
        self._batch_jac = batch_jac
        self.name = name

    @property
    def has_jacobian(self) -> bool:
        return self._jac is not None

    def __call__(self, x) -> np.ndarray:
        x = as_vector(x, self.dim)
        return np.asarray(self._fn(x), dtype=np.float64)

    def evaluate(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if self._batch is not None:
            return np.asarray(self._batch(pts), dtype=np.float64)
        return np.array([self._fn(p) for p in pts], dtype=np.float64).reshape(pts.shape[0], self.dim)

    def jacobian(self, x, h: float = DEFAULT_STEP) -> np.ndarray:
        """Analytic Jacobian when available, central differences otherwise."""
        x = as_vector(x, self.dim)
        if self._jac is not None:
            return np.asarray(self._jac(x), dtype=np.float64)
        return finite_diff_jacobian(self._fn, x, h)

    def jacobians(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if self._batch_jac is not None:
            return np.asarray(self._batch_jac(pts), dtype=np.float64)
        return np.stack([self.jacobian(p) for p in pts])

    def __add__(self, other: "VectorField") -> "VectorField":
        if other.dim != self.dim:
            raise ValueError("cannot add fields of different dimension")
        jac = None
        if self.has_jacobian and other.has_jacobian:
            jac = lambda x: self._jac(x) + other._jac(x)  # noqa: E731
        return VectorField(
            self.dim,
            lambda x: self._fn(x) + other._fn(x),
            jac=jac,
            batch=lambda p: self.evaluate(p) + other.evaluate(p),
            name=f"{self.name}+{other.name}",
        )


def linear_field(A, name: str = "linear") -> VectorField:
    """The field x -> A x with its exact (constant) Jacobian."""
    A = np.array(A, dtype=np.float64)
    d = A.shape[0]
    return VectorField(
        d,
        lambda x: A @ x,
        jac=lambda x: A.copy(),
        batch=lambda p: p @ A.T,
        batch_jac=lambda p: np.broadcast_to(A, (p.shape[0], d, d)).copy(),
        name=name,
    )
