"""Learning the conservative part of a vector field with a tied auto-encoder.

A tied auto-encoder can only represent gradient fields, so regressing one
onto samples of an arbitrary field keeps (approximately) the least-squares
closest conservative component and discards the rotational remainder.
"""
from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .autoencoder import (
    AeParams,
    TrainConfig,
    energy_batch,
    get_activation,
    init_params,
    jacobian_batch,
    reconstruct_batch,
    train,
)
from .errors import ContractError, ShapeError
from .numerics import Rng
from .vectorfield import VectorField, linear_field

SPIRAL_SINK = np.array([[-1.0, 1.0], [-1.0, -1.0]])


def analytic_spiral_sink() -> VectorField:
    """The linear spiralling sink ``(x, y) -> (-x + y, -x - y)``."""
    return linear_field(SPIRAL_SINK, name="spiral_sink")


def rotation_field() -> VectorField:
    """Pure rotation ``(x, y) -> (-y, x)``; divergence- and gradient-free."""
    return linear_field([[0.0, -1.0], [1.0, 0.0]], name="rotation")


def sink_field() -> VectorField:
    """Gradient field ``(x, y) -> (-x, -y)`` of ``-|x|^2 / 2``."""
    return linear_field(-np.eye(2), name="sink")


def ae_reconstruction_field(p: AeParams) -> VectorField:
    return VectorField(
        p.D,
        lambda x: reconstruct_batch(p, x[None, :])[0],
        jac=lambda x: jacobian_batch(p, x[None, :])[0],
        batch=lambda X: reconstruct_batch(p, X),
        batch_jac=lambda X: jacobian_batch(p, X),
        name="reconstruction",
    )


def ae_dynamics_field(p: AeParams) -> VectorField:
    """``x -> r(x) - x``; for tied weights this is the gradient of the energy."""
    eye = np.eye(p.D)
    return VectorField(
        p.D,
        lambda x: reconstruct_batch(p, x[None, :])[0] - x,
        jac=lambda x: jacobian_batch(p, x[None, :])[0] - eye,
        batch=lambda X: reconstruct_batch(p, X) - X,
        batch_jac=lambda X: jacobian_batch(p, X) - eye,
        name="dynamics",
    )


def interpolate_params(theta0: AeParams, thetaK: AeParams, beta: float) -> AeParams:
    """Untied parameters ``(1 - beta) * theta0 + beta * thetaK``; ``beta = 1`` is ``thetaK``."""
    if not 0.0 <= beta <= 1.0:
        raise ValueError("beta must lie in [0, 1]")
    if theta0.W.shape != thetaK.W.shape:
        raise ShapeError(f"shape mismatch {theta0.W.shape} vs {thetaK.W.shape}")
    if theta0.act != thetaK.act:
        raise ContractError(f"activation mismatch {theta0.act.kind} vs {thetaK.act.kind}")

    def mix(a, b):
        if beta == 0.0:
            return a.copy()
        if beta == 1.0:
            return b.copy()
        return (1.0 - beta) * a + beta * b

    return AeParams(
        mix(theta0.W, thetaK.W),
        mix(theta0.R, thetaK.R),
        mix(theta0.b, thetaK.b),
        mix(theta0.c, thetaK.c),
        theta0.act,
        tied=False,
    )


def _box_bounds(box, dim: Optional[int] = None):
    arr = np.asarray(box, dtype=np.float64)
    if arr.ndim == 1:
        if dim is None:
            raise ValueError("a scalar (lo, hi) box needs an explicit dimension")
        arr = np.tile(arr, (dim, 1))
    if arr.shape[-1] != 2 or not np.all(np.isfinite(arr)) or np.any(arr[:, 1] < arr[:, 0]):
        raise ValueError(f"invalid box {box!r}")
    return arr[:, 0], arr[:, 1]


@dataclass
class FieldSampleSet:
    """Pairs ``(x_i, y_i)``; ``displacement`` marks ``y`` as ``f(x)`` of a dynamics-style field."""

    x: np.ndarray
    y: np.ndarray
    box: np.ndarray
    seed: Optional[int] = None
    displacement: bool = False

    def __len__(self):
        return self.x.shape[0]

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    def reconstruction_targets(self) -> np.ndarray:
        return self.y + self.x if self.displacement else self.y

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        d = self.dim
        w.writerow([f"x_{i + 1}" for i in range(d)] + [f"y_{i + 1}" for i in range(d)])
        for a, b in zip(self.x, self.y):
            w.writerow([repr(float(v)) for v in np.concatenate([a, b])])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, displacement: bool = False) -> "FieldSampleSet":
        rows = list(csv.reader(io.StringIO(text)))
        d = len(rows[0]) // 2
        vals = np.array(rows[1:], dtype=np.float64).reshape(-1, 2 * d)
        x, y = vals[:, :d], vals[:, d:]
        box = np.column_stack([x.min(axis=0), x.max(axis=0)]) if len(x) else np.zeros((d, 2))
        return cls(x, y, box, displacement=displacement)


def sample_field(f: VectorField, box, N: int, rng: Rng, displacement: bool = False) -> FieldSampleSet:
    """``N`` uniform points in ``box`` paired with ``f``; non-finite values are redrawn (at most ``10 N`` draws)."""
    if N < 1:
        raise ValueError("N must be >= 1")
    lo, hi = _box_bounds(box, f.dim)
    xs, ys = [], []
    drawn = kept = 0
    while kept < N:
        need = N - kept
        if drawn + need > 10 * N:
            raise RuntimeError(f"only {kept} of {N} finite samples after {drawn} draws")
        X = lo + (hi - lo) * rng.random((need, f.dim))
        Y = f.evaluate(X)
        ok = np.all(np.isfinite(Y), axis=1)
        xs.append(X[ok])
        ys.append(Y[ok])
        drawn += need
        kept += int(ok.sum())
    return FieldSampleSet(np.vstack(xs), np.vstack(ys), np.column_stack([lo, hi]), rng.seed, displacement)


def extract_conservative(samples: FieldSampleSet, arch, cfg: TrainConfig, rng: Optional[Rng] = None):
    """Regress a freshly initialized tied auto-encoder onto the sampled field.

    ``arch`` is ``(H, activation)``. Returns the tied parameters and the
    training history.
    """
    if len(samples) == 0:
        raise ValueError("no samples to fit")
    H, act = arch
    rng = rng if rng is not None else Rng(cfg.seed)
    p0 = init_params(samples.dim, int(H), get_activation(act), tied=True, rng=rng)
    return train(p0, samples.x, cfg, targets=samples.reconstruction_targets())


def discrimination_fraction(p: AeParams, clean, corrupted) -> float:
    """Fraction of pairs whose clean point has strictly higher energy than its corrupted partner."""
    if not p.tied:
        raise ContractError("discrimination needs a tied model with a closed-form energy")
    clean = np.atleast_2d(np.asarray(clean, dtype=np.float64))
    corrupted = np.atleast_2d(np.asarray(corrupted, dtype=np.float64))
    if clean.shape != corrupted.shape:
        raise ShapeError("clean and corrupted sets must be paired one to one")
    return float(np.mean(energy_batch(p, clean) > energy_batch(p, corrupted)))


@dataclass
class BetaRecord:
    beta: float
    loss: float
    fraction: float


@dataclass
class BetaSweepResult:
    records: list = field(default_factory=list)

    @property
    def betas(self) -> np.ndarray:
        return np.array([r.beta for r in self.records])

    @property
    def losses(self) -> np.ndarray:
        return np.array([r.loss for r in self.records])

    @property
    def fractions(self) -> np.ndarray:
        return np.array([r.fraction for r in self.records])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["beta", "loss", "fraction"])
        for r in self.records:
            w.writerow([repr(r.beta), repr(r.loss), repr(r.fraction)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "BetaSweepResult":
        rows = csv.DictReader(io.StringIO(text))
        return cls([BetaRecord(float(r["beta"]), float(r["loss"]), float(r["fraction"])) for r in rows])


def _thread_cap() -> int:
    try:
        return max(1, int(os.environ.get("CONSFIELD_THREADS", "1")))
    except ValueError:
        return 1


def beta_sweep(
    theta0: AeParams,
    thetaK: AeParams,
    betas: Sequence[float],
    box,
    N: int,
    arch,
    cfg: TrainConfig,
    clean,
    corrupted,
    rng: Rng,
    workers: Optional[int] = None,
) -> BetaSweepResult:
    """Fit the conservative part of each interpolated field and score its energy.

    Every leg gets its own child stream of ``rng`` (assigned in the sorted
    beta order), so the result does not depend on how legs are scheduled.
    """
    betas = sorted(float(b) for b in betas)
    legs = rng.spawn(len(betas))

    def run(i):
        beta, leg = betas[i], legs[i]
        sample_rng, init_rng = leg.spawn(2)
        f = ae_reconstruction_field(interpolate_params(theta0, thetaK, beta))
        samples = sample_field(f, box, N, sample_rng)
        p, hist = extract_conservative(samples, arch, cfg, init_rng)
        return BetaRecord(beta, hist[-1].loss, discrimination_fraction(p, clean, corrupted))

    workers = workers if workers is not None else _thread_cap()
    if workers > 1 and len(betas) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(run, range(len(betas))))
    else:
        records = [run(i) for i in range(len(betas))]
    return BetaSweepResult(records)


def cosine_similarity_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    return np.sum(a * b, axis=1) / np.maximum(na * nb, 1e-300)
