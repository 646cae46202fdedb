"""One-hidden-layer auto-encoder ``r(x) = R h(W^T x + b) + c`` viewed as a vector field.

Points are row vectors throughout the batch code: for an ``(N, D)`` array
``X`` the pre-activations are ``X @ W + b`` and reconstructions
``h(U) @ R.T + c``. With tied weights ``R`` and ``W`` are the same array, so
``r(x) - x`` is the gradient of the closed-form :func:`energy`.
"""
from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .analysis import grid_points, symmetricity_batch
from .errors import ContractError, DivergenceError, ShapeError
from .numerics import Rng, as_matrix, as_vector

log = logging.getLogger(__name__)


def _sigmoid(u):
    out = np.empty_like(u)
    pos = u >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-u[pos]))
    eu = np.exp(u[~pos])
    out[~pos] = eu / (1.0 + eu)
    return out


class Activation:
    """Elementwise hidden activation bundled with its derivatives and antiderivative."""

    KINDS = ("sigmoid", "relu", "linear")

    def __init__(self, kind: str):
        if kind not in self.KINDS:
            raise ValueError(f"unknown activation {kind!r}; choose from {self.KINDS}")
        self.kind = kind

    def __repr__(self):
        return f"Activation({self.kind!r})"

    def __eq__(self, other):
        return isinstance(other, Activation) and other.kind == self.kind

    def __hash__(self):
        return hash(self.kind)

    def h(self, u):
        u = np.asarray(u, dtype=np.float64)
        if self.kind == "sigmoid":
            return _sigmoid(u)
        if self.kind == "relu":
            return np.maximum(u, 0.0)
        return u.copy()

    def dh(self, u):
        u = np.asarray(u, dtype=np.float64)
        if self.kind == "sigmoid":
            s = _sigmoid(u)
            return s * (1.0 - s)
        if self.kind == "relu":
            # h'(0) := 0
            return (u > 0).astype(np.float64)
        return np.ones_like(u)

    def d2h(self, u):
        u = np.asarray(u, dtype=np.float64)
        if self.kind == "sigmoid":
            s = _sigmoid(u)
            return s * (1.0 - s) * (1.0 - 2.0 * s)
        return np.zeros_like(u)

    def antiderivative(self, u):
        """``H`` with ``H' = h`` and ``H(-inf) = 0`` (sigmoid, relu) or ``H(0) = 0`` (linear)."""
        u = np.asarray(u, dtype=np.float64)
        if self.kind == "sigmoid":
            return np.logaddexp(0.0, u)
        if self.kind == "relu":
            return 0.5 * np.maximum(u, 0.0) ** 2
        return 0.5 * u * u


SIGMOID = Activation("sigmoid")
RELU = Activation("relu")
LINEAR = Activation("linear")


def get_activation(kind) -> Activation:
    return kind if isinstance(kind, Activation) else Activation(str(kind))


class AeParams:
    """Encoder ``W`` (D x H), decoder ``R`` (D x H), biases ``b`` (H) and ``c`` (D).

    With ``tied=True`` the decoder *is* the encoder array; writing to one
    writes to the other.
    """

    def __init__(self, W, R=None, b=None, c=None, act="sigmoid", tied=False):
        self.W = np.array(as_matrix(W), dtype=np.float64)
        D, H = self.W.shape
        self.tied = bool(tied)
        if self.tied:
            if R is not None and not np.array_equal(np.asarray(R), self.W):
                raise ContractError("tied parameters require R == W")
            self.R = self.W
        else:
            if R is None:
                raise ContractError("untied parameters need a decoder matrix R")
            self.R = np.array(as_matrix(R, (D, H)), dtype=np.float64)
        self.b = np.zeros(H) if b is None else np.array(as_vector(b, H))
        self.c = np.zeros(D) if c is None else np.array(as_vector(c, D))
        self.act = get_activation(act)

    @property
    def D(self) -> int:
        return self.W.shape[0]

    @property
    def H(self) -> int:
        return self.W.shape[1]

    def copy(self) -> "AeParams":
        return AeParams(self.W, None if self.tied else self.R, self.b, self.c, self.act, self.tied)

    def untie(self) -> "AeParams":
        return AeParams(self.W, self.R.copy(), self.b, self.c, self.act, tied=False)

    def __repr__(self):
        return f"AeParams(D={self.D}, H={self.H}, act={self.act.kind!r}, tied={self.tied})"

    def to_dict(self) -> dict:
        return {
            "D": self.D,
            "H": self.H,
            "activation": self.act.kind,
            "tied": self.tied,
            "W": self.W.tolist(),
            "R": self.R.tolist(),
            "b": self.b.tolist(),
            "c": self.c.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AeParams":
        W = np.asarray(d["W"], dtype=np.float64).reshape(d["D"], d["H"])
        R = np.asarray(d["R"], dtype=np.float64).reshape(d["D"], d["H"])
        tied = bool(d["tied"])
        return cls(W, None if tied else R, d["b"], d["c"], d["activation"], tied)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "AeParams":
        return cls.from_dict(json.loads(text))


def init_params(D: int, H: int, act="sigmoid", tied=False, rng: Optional[Rng] = None) -> AeParams:
    """Fan-scaled uniform initialization, ``U(-s, s)`` with ``s = sqrt(6 / (D + H))``; zero biases."""
    rng = rng if rng is not None else Rng(0)
    s = np.sqrt(6.0 / (D + H))
    W = rng.uniform(-s, s, (D, H))
    R = None if tied else rng.uniform(-s, s, (D, H))
    return AeParams(W, R, np.zeros(H), np.zeros(D), act, tied)


def _check_points(p: AeParams, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != p.D:
        raise ShapeError(f"points have dimension {X.shape[1]}, model expects {p.D}")
    return X


def reconstruct_batch(p: AeParams, X) -> np.ndarray:
    X = _check_points(p, X)
    return p.act.h(X @ p.W + p.b) @ p.R.T + p.c


def reconstruct(p: AeParams, x) -> np.ndarray:
    """``r(x) = R h(W^T x + b) + c``."""
    x = as_vector(x)
    if x.shape[0] != p.D:
        raise ShapeError(f"input has dimension {x.shape[0]}, model expects {p.D}")
    return reconstruct_batch(p, x[None, :])[0]


def jacobian_batch(p: AeParams, X) -> np.ndarray:
    X = _check_points(p, X)
    d = p.act.dh(X @ p.W + p.b)
    return np.einsum("ik,nk,jk->nij", p.R, d, p.W)


def jacobian(p: AeParams, x) -> np.ndarray:
    """Reconstruction Jacobian ``R diag(h'(W^T x + b)) W^T``."""
    x = as_vector(x)
    if x.shape[0] != p.D:
        raise ShapeError(f"input has dimension {x.shape[0]}, model expects {p.D}")
    return jacobian_batch(p, x[None, :])[0]


def energy_batch(p: AeParams, X) -> np.ndarray:
    if not p.tied:
        raise ContractError("closed-form energy needs tied weights; integrate the field instead")
    X = _check_points(p, X)
    U = X @ p.W + p.b
    diff = X - p.c
    return np.sum(p.act.antiderivative(U), axis=1) - 0.5 * np.sum(diff * diff, axis=1)


def energy(p: AeParams, x) -> float:
    """Potential ``F(x) = sum_k H(u_k) - |x - c|^2 / 2`` whose gradient is ``r(x) - x``."""
    return float(energy_batch(p, as_vector(x, p.D)[None, :])[0])


@dataclass
class TrainConfig:
    epochs: int = 100
    batch_size: int = 32
    learning_rate: float = 1e-3
    contraction: float = 0.0
    denoise_sigma: float = 0.0
    weight_length: Optional[float] = None
    seed: int = 0
    optimizer: str = "adam"
    momentum: float = 0.9
    probe_count: int = 256
    curl_grid: int = 24

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.contraction < 0 or self.denoise_sigma < 0:
            raise ValueError("contraction and denoise_sigma must be non-negative")
        if self.weight_length is not None and not self.weight_length > 0:
            raise ValueError("weight_length must be positive when set")
        if self.optimizer not in ("adam", "sgd-momentum"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


@dataclass
class AeGrads:
    W: np.ndarray
    R: np.ndarray
    b: np.ndarray
    c: np.ndarray


def _objective(p, Xin, T, eps, need_grad):
    N = Xin.shape[0]
    act = p.act
    U = Xin @ p.W + p.b
    Hh = act.h(U)
    E = Hh @ p.R.T + p.c - T
    loss = np.sum(E * E) / N
    if eps > 0:
        Dp = act.dh(U)
        A = p.R.T @ p.R
        B = p.W.T @ p.W
        M = A * B
        S = Dp.T @ Dp / N
        loss += eps * np.sum(S * M)
    if not need_grad:
        return loss, None

    gE = 2.0 * E / N
    gR = gE.T @ Hh
    gc = gE.sum(axis=0)
    delta = (gE @ p.R) * act.dh(U)
    if eps > 0:
        gR = gR + 2.0 * eps * p.R @ (S * B)
        gWpen = 2.0 * eps * p.W @ (S * A)
        delta = delta + (2.0 * eps / N) * (Dp @ M) * act.d2h(U)
    gW = Xin.T @ delta
    gb = delta.sum(axis=0)
    if eps > 0:
        gW = gW + gWpen
    if p.tied:
        gW = gW + gR
        gR = gW
    return loss, AeGrads(gW, gR, gb, gc)


def loss_and_grad(p: AeParams, batch, cfg: TrainConfig, rng: Optional[Rng] = None, targets=None):
    """Mean contractive squared error over ``batch`` and its exact parameter gradients.

    Per point the loss is ``|r(x~) - t|^2 + eps * |dr/dx (x~)|_F^2`` where
    ``x~`` is the input after optional Gaussian corruption and ``t`` is the
    clean input, or the supplied regression target.
    """
    X = _check_points(p, batch)
    if X.shape[0] == 0:
        raise ValueError("empty batch")
    T = X if targets is None else np.atleast_2d(np.asarray(targets, dtype=np.float64))
    if T.shape != X.shape:
        raise ShapeError(f"targets shape {T.shape} does not match inputs {X.shape}")
    Xin = X
    if cfg.denoise_sigma > 0:
        if rng is None:
            raise ValueError("denoising needs an Rng")
        Xin = X + rng.normal(0.0, cfg.denoise_sigma, X.shape)
    loss, grads = _objective(p, Xin, T, cfg.contraction, True)
    if not np.isfinite(loss):
        raise DivergenceError("loss is not finite")
    return float(loss), grads


def evaluate_loss(p: AeParams, X, contraction: float = 0.0, targets=None) -> float:
    """Noise-free objective over a whole dataset."""
    X = _check_points(p, X)
    T = X if targets is None else np.atleast_2d(np.asarray(targets, dtype=np.float64))
    return float(_objective(p, X, T, contraction, False)[0])


def _project_columns(p: AeParams, alpha: float):
    norms2 = np.sum(p.W * p.W, axis=0)
    if np.any(norms2 == 0.0):
        raise ContractError("cannot rescale a zero-norm weight column")
    p.W *= np.sqrt(alpha / norms2)


def weight_length_project(p: AeParams, alpha: float) -> AeParams:
    """Copy of ``p`` with every encoder column rescaled to squared length ``alpha``."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    q = p.copy()
    _project_columns(q, alpha)
    return q


class _Optimizer:
    def __init__(self, cfg: TrainConfig):
        self.cfg = cfg
        self.t = 0
        self.m = {}
        self.v = {}

    def step(self, params: dict, grads: dict):
        self.t += 1
        lr = self.cfg.learning_rate
        for k, g in grads.items():
            if k not in self.m:
                self.m[k] = np.zeros_like(g)
                self.v[k] = np.zeros_like(g)
            if self.cfg.optimizer == "adam":
                b1, b2 = 0.9, 0.999
                self.m[k] = b1 * self.m[k] + (1 - b1) * g
                self.v[k] = b2 * self.v[k] + (1 - b2) * g * g
                mhat = self.m[k] / (1 - b1**self.t)
                vhat = self.v[k] / (1 - b2**self.t)
                params[k] -= lr * mhat / (np.sqrt(vhat) + 1e-8)
            else:
                self.m[k] = self.cfg.momentum * self.m[k] - lr * g
                params[k] += self.m[k]


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    sym_mean: float
    curl_mean: Optional[float] = None


@dataclass
class TrainHistory:
    """Per-epoch diagnostics; record 0 describes the parameters before any update."""

    records: list = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __getitem__(self, i) -> EpochRecord:
        return self.records[i]

    def column(self, name: str) -> np.ndarray:
        return np.array([np.nan if getattr(r, name) is None else getattr(r, name) for r in self.records])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epoch", "loss", "sym_mean", "curl_mean"])
        for r in self.records:
            w.writerow([r.epoch, repr(r.loss), repr(r.sym_mean), "" if r.curl_mean is None else repr(r.curl_mean)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "TrainHistory":
        rows = csv.DictReader(io.StringIO(text))
        return cls([
            EpochRecord(int(r["epoch"]), float(r["loss"]), float(r["sym_mean"]),
                        float(r["curl_mean"]) if r["curl_mean"] else None)
            for r in rows
        ])


def probe_diagnostics(p: AeParams, probes: np.ndarray, curl_pts: Optional[np.ndarray]):
    """Mean reconstruction-Jacobian symmetricity at ``probes`` and mean |curl| at ``curl_pts``."""
    sym = symmetricity_batch(jacobian_batch(p, probes))
    sym_mean = float(np.nanmean(sym)) if np.any(np.isfinite(sym)) else float("nan")
    curl_mean = None
    if curl_pts is not None:
        J = jacobian_batch(p, curl_pts)
        curl_mean = float(np.mean(np.abs(J[:, 1, 0] - J[:, 0, 1])))
    return sym_mean, curl_mean


def default_probes(data: np.ndarray, cfg: TrainConfig, rng: Rng):
    """Symmetry probes drawn from the data and, for 2-d data, a curl grid over its bounding box."""
    n = min(cfg.probe_count, data.shape[0])
    probes = data[np.sort(rng.permutation(data.shape[0])[:n])]
    curl_pts = None
    if data.shape[1] == 2:
        lo, hi = data.min(axis=0), data.max(axis=0)
        curl_pts = grid_points(((lo[0], hi[0]), (lo[1], hi[1])), cfg.curl_grid)
    return probes, curl_pts


def train(
    p0: AeParams,
    data,
    cfg: TrainConfig,
    probes: Optional[Sequence] = None,
    targets=None,
    curl_points=None,
):
    """Minibatch training of a copy of ``p0``; returns the trained parameters and history.

    With ``targets`` the model regresses ``r(x_i)`` onto ``targets[i]``
    instead of reconstructing ``x_i``. The weight-length projection, when
    configured, is applied after every update.
    """
    X = _check_points(p0, data)
    if X.shape[0] == 0:
        raise ValueError("training data is empty")
    T = None if targets is None else np.asarray(targets, dtype=np.float64).reshape(X.shape)
    rng = Rng(cfg.seed)
    probe_rng, shuffle_rng, noise_rng = rng.spawn(3)
    if probes is None:
        probes, auto_curl = default_probes(X, cfg, probe_rng)
        if curl_points is None:
            curl_points = auto_curl
    probes = _check_points(p0, probes)
    if curl_points is not None and p0.D != 2:
        curl_points = None

    p = p0.copy()
    if cfg.weight_length is not None:
        _project_columns(p, cfg.weight_length)
    opt = _Optimizer(cfg)
    params = {"W": p.W, "b": p.b, "c": p.c}
    if not p.tied:
        params["R"] = p.R

    hist = TrainHistory()

    def record(epoch):
        loss = evaluate_loss(p, X, cfg.contraction, T)
        if not np.isfinite(loss):
            raise DivergenceError(f"loss diverged at epoch {epoch}", epoch=epoch)
        sym_mean, curl_mean = probe_diagnostics(p, probes, curl_points)
        hist.records.append(EpochRecord(epoch, loss, sym_mean, curl_mean))

    record(0)
    N = X.shape[0]
    for epoch in range(1, cfg.epochs + 1):
        order = shuffle_rng.permutation(N)
        for bi, start in enumerate(range(0, N, cfg.batch_size)):
            idx = order[start:start + cfg.batch_size]
            try:
                _, g = loss_and_grad(p, X[idx], cfg, noise_rng, None if T is None else T[idx])
            except DivergenceError as exc:
                raise DivergenceError(f"loss diverged at epoch {epoch}, batch {bi}", epoch, bi) from exc
            grads = {"W": g.W, "b": g.b, "c": g.c}
            if not p.tied:
                grads["R"] = g.R
            opt.step(params, grads)
            if cfg.weight_length is not None:
                _project_columns(p, cfg.weight_length)
        record(epoch)
        log.debug("epoch %d loss %.6g sym %.4f", epoch, hist[-1].loss, hist[-1].sym_mean)
    return p, hist
