"""Conservativeness diagnostics for vector fields.

A field is conservative on a simply connected domain exactly when its
Jacobian is symmetric everywhere; the tools here measure how far a field is
from that, either through the Jacobian (``symmetricity``, ``curl2d``) or
through circulation along closed paths (``line_integral``).
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import PreconditionError, ShapeError, UndefinedMetricError
from .numerics import Rng, as_matrix
from .vectorfield import VectorField

CONSERVATIVE = "conservative-within-tol"
NON_CONSERVATIVE = "non-conservative"


def symmetricity(A) -> float:
    """Fraction of the squared Frobenius norm carried by the symmetric part of ``A``.

    Returns 1 for symmetric and 0 for antisymmetric matrices.
    """
    A = as_matrix(A)
    if A.shape[0] != A.shape[1]:
        raise ShapeError(f"symmetricity needs a square matrix, got {A.shape}")
    total = np.sum(A * A)
    if total == 0.0:
        raise UndefinedMetricError("symmetricity of the zero matrix is undefined")
    S = 0.5 * (A + A.T)
    return float(min(1.0, np.sum(S * S) / total))


def symmetricity_batch(As: np.ndarray) -> np.ndarray:
    """``symmetricity`` over a stack of matrices; NaN where a matrix is zero."""
    As = np.asarray(As, dtype=np.float64)
    S = 0.5 * (As + np.swapaxes(As, -1, -2))
    num = np.sum(S * S, axis=(-2, -1))
    den = np.sum(As * As, axis=(-2, -1))
    out = np.full(num.shape, np.nan)
    ok = den > 0
    out[ok] = np.minimum(1.0, num[ok] / den[ok])
    return out


def _require_2d(f: VectorField):
    if f.dim != 2:
        raise ShapeError(f"curl is only defined here for 2-d fields, got dimension {f.dim}")


def curl2d(f: VectorField, x) -> float:
    """Scalar curl ``df2/dx1 - df1/dx2`` at ``x``."""
    _require_2d(f)
    J = f.jacobian(x)
    return float(J[1, 0] - J[0, 1])


def grid_points(box, n: int) -> np.ndarray:
    """``n*n`` equally spaced points of a 2-d box, x varying fastest."""
    if n < 2:
        raise ValueError("grid needs at least 2 points per axis")
    (x0, x1), (y0, y1) = box
    xs = np.linspace(x0, x1, n)
    ys = np.linspace(y0, y1, n)
    gx, gy = np.meshgrid(xs, ys)
    return np.column_stack([gx.ravel(), gy.ravel()])


def curl_grid(f: VectorField, box, n: int) -> tuple[np.ndarray, float]:
    """Curl on an ``n x n`` grid over ``box``.

    Returns an ``(n*n, 3)`` array of ``x, y, curl`` rows and the mean absolute
    curl.
    """
    _require_2d(f)
    pts = grid_points(box, n)
    J = f.jacobians(pts)
    c = J[:, 1, 0] - J[:, 0, 1]
    return np.column_stack([pts, c]), float(np.mean(np.abs(c)))


def line_integral(f: VectorField, path, steps: int = 1) -> float:
    """Composite midpoint rule for the work integral of ``f`` along a polyline."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    path = np.atleast_2d(np.asarray(path, dtype=np.float64))
    if path.shape[0] < 2:
        return 0.0
    t = (np.arange(steps) + 0.5) / steps
    total = 0.0
    for a, b in zip(path[:-1], path[1:]):
        seg = b - a
        if not np.any(seg):
            continue
        mids = a + t[:, None] * seg
        vals = f.evaluate(mids)
        if not np.all(np.isfinite(vals)):
            raise FloatingPointError("non-finite field value along path")
        total += float(np.sum(vals @ seg)) / steps
    return total


def energy_by_line_integral(f: VectorField, x, x0, steps: int = 256) -> float:
    """Potential difference ``F(x) - F(x0)`` by integrating ``f`` along the straight segment."""
    return line_integral(f, np.vstack([x0, x]), steps)


def sufficient_condition_construct(W, C, E, tol: float = 1e-8) -> np.ndarray:
    """Decoder ``R = C W E`` that makes a linear auto-encoder conservative.

    ``C`` (D x D) and ``E`` (H x H) must be symmetric and ``C`` must commute
    with ``W E W^T``; then ``R W^T = C W E W^T`` is symmetric.
    """
    W = as_matrix(W)
    d, h = W.shape
    C = as_matrix(C, (d, d))
    E = as_matrix(E, (h, h))
    for name, M in (("C", C), ("E", E)):
        asym = np.linalg.norm(M - M.T)
        if asym > tol * max(1.0, np.linalg.norm(M)):
            raise PreconditionError(f"{name} is not symmetric (||{name} - {name}^T|| = {asym:.3e})")
    G = W @ E @ W.T
    comm = float(np.linalg.norm(C @ G - G @ C))
    scale = max(1.0, np.linalg.norm(C) * np.linalg.norm(G))
    if comm > tol * scale:
        raise PreconditionError(f"C does not commute with W E W^T (||C(WEW^T) - (WEW^T)C|| = {comm:.3e})")
    R = C @ W @ E
    P = R @ W.T
    if np.any(P) and symmetricity(P) < 1.0 - 1e-10:
        raise PreconditionError(f"constructed R W^T is not symmetric (sym = {symmetricity(P)!r})")
    return R


@dataclass
class ConservativityReport:
    mean_sym: float
    min_sym: float
    mean_abs_curl: Optional[float]
    path_residual: float
    verdict: str
    tol: float = 1e-3
    tol_curl: float = 1e-2

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ConservativityReport":
        return cls(**json.loads(text))


def _triangle_loops(lo, hi, n_loops, rng):
    d = lo.shape[0]
    for _ in range(n_loops):
        a, b, c = (lo + (hi - lo) * rng.random(d) for _ in range(3))
        yield np.vstack([a, b, c, a])


def conservativity_report(
    f: VectorField,
    probes: Sequence,
    tol: float = 1e-3,
    tol_curl: float = 1e-2,
    grid_n: int = 24,
    n_loops: int = 8,
    loop_steps: int = 64,
    rng: Optional[Rng] = None,
) -> ConservativityReport:
    """Summarize Jacobian symmetry, curl (2-d only) and loop circulation of ``f``.

    The path residual is the mean absolute circulation around ``n_loops``
    random triangles inside the bounding box of the probes. Probes where the
    Jacobian vanishes are skipped in the symmetry statistics.
    """
    probes = np.atleast_2d(np.asarray(probes, dtype=np.float64))
    if probes.shape[0] == 0:
        raise ValueError("conservativity_report needs at least one probe")
    rng = rng if rng is not None else Rng(0)
    sym = symmetricity_batch(f.jacobians(probes))
    sym = sym[np.isfinite(sym)]
    if sym.size == 0:
        raise UndefinedMetricError("Jacobian vanishes at every probe")
    lo, hi = probes.min(axis=0), probes.max(axis=0)
    hi = np.where(hi > lo, hi, lo + 1.0)
    curl_mean = None
    if f.dim == 2:
        _, curl_mean = curl_grid(f, ((lo[0], hi[0]), (lo[1], hi[1])), grid_n)
    circ = [abs(line_integral(f, loop, loop_steps)) for loop in _triangle_loops(lo, hi, n_loops, rng)]
    mean_sym = float(np.mean(sym))
    ok = mean_sym >= 1.0 - tol and (curl_mean is None or curl_mean <= tol_curl)
    return ConservativityReport(
        mean_sym=mean_sym,
        min_sym=float(np.min(sym)),
        mean_abs_curl=curl_mean,
        path_residual=float(np.mean(circ)),
        verdict=CONSERVATIVE if ok else NON_CONSERVATIVE,
        tol=tol,
        tol_curl=tol_curl,
    )
