"""Synthetic 2-d manifolds, IDX image files, corruption operators and grids."""
from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .analysis import grid_points
from .errors import FormatError
from .numerics import Rng

IDX_IMAGES = 0x00000803
IDX_LABELS = 0x00000801

SPIRAL_R0 = 0.1
SPIRAL_GROWTH = 0.3
SPIRAL_TURNS = 3 * np.pi
CIRCLE_RADIUS = 0.8


@dataclass
class Dataset:
    points: np.ndarray
    provenance: str
    seed: Optional[int] = None
    labels: Optional[np.ndarray] = None

    def __len__(self):
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"x_{i + 1}" for i in range(self.dim)])
        for row in self.points:
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


def gen_synthetic(kind: str, n: int, sigma: float = 0.0, rng: Optional[Rng] = None) -> Dataset:
    """Noisy samples of a line, circle or spiral in the plane.

    line:   (t, 0.5 t + 0.1), t ~ U[-1, 1]
    circle: radius 0.8, angle ~ U[0, 2 pi)
    spiral: r = 0.1 + 0.3 theta, theta ~ U[0, 3 pi], divided by its maximum radius
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    rng = rng if rng is not None else Rng(0)
    if kind == "line":
        t = rng.uniform(-1.0, 1.0, n)
        pts = np.column_stack([t, 0.5 * t + 0.1])
    elif kind == "circle":
        a = rng.uniform(0.0, 2 * np.pi, n)
        pts = CIRCLE_RADIUS * np.column_stack([np.cos(a), np.sin(a)])
    elif kind == "spiral":
        th = rng.uniform(0.0, SPIRAL_TURNS, n)
        r = (SPIRAL_R0 + SPIRAL_GROWTH * th) / (SPIRAL_R0 + SPIRAL_GROWTH * SPIRAL_TURNS)
        pts = np.column_stack([r * np.cos(th), r * np.sin(th)])
    else:
        raise ValueError(f"unknown synthetic dataset {kind!r}")
    if sigma > 0:
        pts = pts + rng.normal(0.0, sigma, pts.shape)
    return Dataset(pts, kind, rng.seed)


def _read_be32(buf: bytes, offset: int) -> int:
    if len(buf) < offset + 4:
        raise FormatError("truncated header", offset)
    return struct.unpack_from(">I", buf, offset)[0]


def read_idx(path) -> np.ndarray:
    """Raw array stored in an unsigned-byte IDX file (images or labels)."""
    buf = Path(path).read_bytes()
    magic = _read_be32(buf, 0)
    if magic not in (IDX_IMAGES, IDX_LABELS):
        raise FormatError(f"bad IDX magic 0x{magic:08x}", 0)
    ndim = magic & 0xFF
    shape = tuple(_read_be32(buf, 4 + 4 * i) for i in range(ndim))
    start = 4 + 4 * ndim
    size = int(np.prod(shape))
    if len(buf) < start + size:
        raise FormatError(f"truncated payload: need {size} bytes, have {len(buf) - start}", len(buf))
    if size == 0:
        return np.zeros(shape, dtype=np.uint8)
    return np.frombuffer(buf, dtype=np.uint8, count=size, offset=start).reshape(shape)


def write_idx(path, array) -> None:
    a = np.asarray(array)
    if a.dtype != np.uint8:
        raise ValueError("IDX writer only handles uint8 arrays")
    if a.ndim == 3:
        magic = IDX_IMAGES
    elif a.ndim == 1:
        magic = IDX_LABELS
    else:
        raise ValueError("expected an (N, rows, cols) image stack or a 1-d label vector")
    header = struct.pack(">I", magic) + b"".join(struct.pack(">I", s) for s in a.shape)
    Path(path).write_bytes(header + a.tobytes())


def _area_weights(n_in: int, n_out: int) -> np.ndarray:
    # Row i holds the fractional overlap of each input cell with output cell i.
    scale = n_in / n_out
    M = np.zeros((n_out, n_in))
    for i in range(n_out):
        lo, hi = i * scale, (i + 1) * scale
        for k in range(int(np.floor(lo)), int(np.ceil(hi))):
            M[i, k] = min(hi, k + 1) - max(lo, k)
    return M / scale


def downscale(images: np.ndarray, size: int = 8) -> np.ndarray:
    """Area-average an ``(N, r, c)`` stack down to ``(N, size, size)``."""
    _, r, c = images.shape
    Mr, Mc = _area_weights(r, size), _area_weights(c, size)
    return np.einsum("ik,nkl,jl->nij", Mr, images, Mc)


def load_idx(path, labels_path=None, size: Optional[int] = None, limit: Optional[int] = None) -> Dataset:
    """Images from an IDX file as flattened vectors in ``[0, 1]``, optionally down-scaled."""
    raw = read_idx(path)
    if raw.ndim == 1:
        return Dataset(raw.astype(np.float64)[:, None], "idx-file")
    imgs = raw.astype(np.float64) / 255.0
    if limit is not None:
        imgs = imgs[:limit]
    if size is not None and imgs.shape[0]:
        imgs = downscale(imgs, size)
    labels = None
    if labels_path is not None:
        labels = read_idx(labels_path)[: imgs.shape[0]]
    return Dataset(imgs.reshape(imgs.shape[0], int(np.prod(imgs.shape[1:]))), "idx-file", labels=labels)


def load_digits(n: Optional[int] = None, rng: Optional[Rng] = None) -> Dataset:
    """The bundled 8x8 handwritten digits (1797 images) scaled to ``[0, 1]``.

    With ``n`` a seeded subset of that many images is returned.
    """
    from sklearn.datasets import load_digits as _sk_digits

    d = _sk_digits()
    X = d.data / 16.0
    y = d.target
    if n is not None and n < X.shape[0]:
        rng = rng if rng is not None else Rng(0)
        idx = np.sort(rng.permutation(X.shape[0])[:n])
        X, y = X[idx], y[idx]
    return Dataset(X, "idx-file", None if rng is None else rng.seed, labels=y)


def salt_pepper(x, p: float = 0.25, rng: Optional[Rng] = None) -> np.ndarray:
    """Replace each entry, with probability ``p``, by 0 or 1 (even odds)."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    rng = rng if rng is not None else Rng(0)
    x = np.asarray(x, dtype=np.float64)
    hit = rng.random(x.shape) < p
    val = (rng.random(x.shape) < 0.5).astype(np.float64)
    return np.where(hit, val, x)


def binomial_sample(D: int, q: float = 0.5, rng: Optional[Rng] = None, size: Optional[int] = None) -> np.ndarray:
    """Independent Bernoulli(q) coordinates; ``size`` stacks that many vectors."""
    if not 0.0 <= q <= 1.0:
        raise ValueError("q must lie in [0, 1]")
    rng = rng if rng is not None else Rng(0)
    shape = (D,) if size is None else (size, D)
    return (rng.random(shape) < q).astype(np.float64)


def grid2d(box, n: int) -> Dataset:
    """``n x n`` lattice over ``box`` including its corners."""
    return Dataset(grid_points(box, n), "grid")
