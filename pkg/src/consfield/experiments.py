"""Desk-scale experiment drivers shared by the CLI and the acceptance suite.

Each ``run_*`` function is a pure function of its :class:`ExperimentConfig`
and returns in-memory results; writing artifacts is left to the CLI.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import data as data_mod
from .analysis import curl_grid, grid_points
from .autoencoder import AeParams, TrainHistory, get_activation, init_params, train
from .config import ExperimentConfig
from .errors import ConfigError
from .fields import (
    BetaSweepResult,
    FieldSampleSet,
    ae_dynamics_field,
    analytic_spiral_sink,
    beta_sweep,
    cosine_similarity_rows,
    extract_conservative,
    rotation_field,
    sink_field,
)
from .numerics import Rng
from .vectorfield import VectorField

SOURCE_FIELDS = {
    "spiral_sink": (analytic_spiral_sink, np.array([[-1.0, 0.0], [0.0, -1.0]])),
    "rotation": (rotation_field, np.zeros((2, 2))),
    "sink": (sink_field, np.array([[-1.0, 0.0], [0.0, -1.0]])),
}


def parse_box(text: str, dim: int = 2) -> np.ndarray:
    vals = [float(v) for v in text.split(",")]
    if len(vals) == 2:
        return np.tile(vals, (dim, 1))
    if len(vals) == 2 * dim:
        return np.array(vals).reshape(dim, 2)
    raise ConfigError(f"box {text!r} must have 2 or {2 * dim} numbers")


def make_dataset(cfg: ExperimentConfig, rng: Rng) -> data_mod.Dataset:
    kind = cfg.get("data", "kind")
    n = cfg.get_int("data", "n")
    if kind in ("line", "circle", "spiral"):
        return data_mod.gen_synthetic(kind, n, cfg.get_float("data", "sigma") or 0.0, rng)
    if kind == "digits":
        return data_mod.load_digits(n, rng)
    if kind == "idx":
        path = cfg.get("data", "path")
        if not path:
            raise ConfigError("data.path is required for idx datasets")
        try:
            return data_mod.load_idx(path, cfg.get("data", "labels") or None, cfg.get_int("data", "size") or None, n)
        except FileNotFoundError as exc:
            raise ConfigError(f"IDX file not found: {path}") from exc
    if kind == "grid":
        return data_mod.grid2d(parse_box(cfg.get("probe", "box")), n)
    raise ConfigError(f"unknown data.kind {kind!r}")


def make_model(cfg: ExperimentConfig, dim: int, rng: Rng) -> AeParams:
    try:
        act = get_activation(cfg.get("model", "activation"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return init_params(dim, cfg.get_int("model", "hidden"), act, cfg.get_bool("model", "tied"), rng)


@dataclass
class TrainRun:
    params: AeParams
    initial: AeParams
    history: TrainHistory
    data: np.ndarray


def run_train(cfg: ExperimentConfig) -> TrainRun:
    data_rng, init_rng = Rng(cfg.seed).spawn(2)
    ds = make_dataset(cfg, data_rng)
    p0 = make_model(cfg, ds.dim, init_rng)
    p, hist = train(p0, ds.points, cfg.train_config())
    return TrainRun(p, p0, hist, ds.points)


def run_curl_scan(cfg: ExperimentConfig) -> TrainRun:
    if cfg.get("data", "kind") not in ("line", "circle", "spiral", "grid"):
        raise ConfigError("curl-scan needs a 2-d dataset (line, circle, spiral or grid)")
    run = run_train(cfg)
    if run.data.shape[1] != 2:
        raise ConfigError(f"curl-scan needs 2-d data, got dimension {run.data.shape[1]}")
    return run


@dataclass
class ExtractRun:
    params: AeParams
    history: TrainHistory
    samples: FieldSampleSet
    source: VectorField
    learned: VectorField
    report: dict


def extraction_metrics(learned: VectorField, source: VectorField, conservative: np.ndarray, pts: np.ndarray,
                       box, grid_n: int, min_norm: float) -> dict:
    """Agreement of a learned field with a known conservative part on ``pts``."""
    v = learned.evaluate(pts)
    truth = pts @ conservative.T
    src = source.evaluate(pts)
    tn = np.linalg.norm(truth, axis=1)
    keep = tn >= min_norm
    _, curl_mean = curl_grid(learned, box, grid_n)
    _, src_curl = curl_grid(source, box, grid_n)
    out = {
        "mean_abs_curl": curl_mean,
        "source_mean_abs_curl": src_curl,
        "magnitude_ratio": float(np.mean(np.linalg.norm(v, axis=1)) / np.mean(np.linalg.norm(src, axis=1))),
        "cosine_mean": None,
        "relative_error_mean": None,
        "points": int(pts.shape[0]),
    }
    if np.any(keep):
        out["cosine_mean"] = float(np.mean(cosine_similarity_rows(v[keep], truth[keep])))
        out["relative_error_mean"] = float(np.mean(np.linalg.norm(v[keep] - truth[keep], axis=1) / tn[keep]))
    return out


def run_extract(cfg: ExperimentConfig) -> ExtractRun:
    name = cfg.get("extract", "field")
    if name not in SOURCE_FIELDS:
        raise ConfigError(f"unknown extract.field {name!r}; choose from {sorted(SOURCE_FIELDS)}")
    make_field, conservative = SOURCE_FIELDS[name]
    source = make_field()
    box = parse_box(cfg.get("extract", "box"))
    n = cfg.get_int("extract", "grid")
    pts = grid_points(box, n)
    domain = cfg.get("extract", "domain")
    if domain == "disk":
        centre = box.mean(axis=1)
        radius = 0.5 * np.min(box[:, 1] - box[:, 0])
        pts = pts[np.linalg.norm(pts - centre, axis=1) <= radius + 1e-12]
    elif domain != "box":
        raise ConfigError(f"extract.domain must be box or disk, got {domain!r}")
    samples = FieldSampleSet(pts, source.evaluate(pts), box, cfg.seed, displacement=True)
    arch = (cfg.get_int("model", "hidden"), cfg.get("model", "activation"))
    p, hist = extract_conservative(samples, arch, cfg.train_config(), Rng(cfg.seed))
    learned = ae_dynamics_field(p)
    report = extraction_metrics(learned, source, conservative, pts, box, n, cfg.get_float("extract", "min_norm"))
    report.update({"field": name, "domain": domain, "final_loss": hist[-1].loss, "initial_loss": hist[0].loss})
    return ExtractRun(p, hist, samples, source, learned, report)


def random_endpoint(D: int, H: int, act, scale: float, rng: Rng) -> AeParams:
    """Untied auto-encoder with i.i.d. ``N(0, scale^2)`` weights and encoder bias, zero decoder bias."""
    return AeParams(rng.normal(0, scale, (D, H)), rng.normal(0, scale, (D, H)), rng.normal(0, scale, H),
                    np.zeros(D), act, tied=False)


@dataclass
class SweepRun:
    result: BetaSweepResult
    conservative: AeParams
    random: AeParams
    summary: dict


def run_beta_sweep(cfg: ExperimentConfig, workers: Optional[int] = None) -> SweepRun:
    data_rng, k_rng, zero_rng, pair_rng, sweep_rng = Rng(cfg.seed).spawn(5)
    ds = make_dataset(cfg, data_rng)
    X = ds.points
    H = cfg.get_int("model", "hidden")
    act = get_activation(cfg.get("model", "activation"))
    base = cfg.train_config()

    # Conservative endpoint: tied auto-encoder trained on the data itself.
    k_cfg = replace(base, epochs=cfg.get_int("sweep", "conservative_epochs"),
                    learning_rate=cfg.get_float("sweep", "conservative_lr"))
    thetaK, _ = train(init_params(ds.dim, H, act, True, k_rng), X, k_cfg)
    theta0 = random_endpoint(ds.dim, H, act, cfg.get_float("sweep", "random_scale"), zero_rng)

    pairs = min(cfg.get_int("sweep", "pairs"), X.shape[0])
    clean = X[np.sort(pair_rng.permutation(X.shape[0])[:pairs])]
    corruption = cfg.get("sweep", "corruption")
    if corruption == "salt_pepper":
        corrupted = data_mod.salt_pepper(clean, cfg.get_float("sweep", "corruption_p"), pair_rng)
    elif corruption == "binomial":
        corrupted = data_mod.binomial_sample(ds.dim, cfg.get_float("sweep", "binomial_q"), pair_rng, pairs)
    else:
        raise ConfigError(f"sweep.corruption must be salt_pepper or binomial, got {corruption!r}")

    result = beta_sweep(theta0, thetaK, cfg.get_floats("sweep", "betas"), parse_box(cfg.get("sweep", "box"), ds.dim),
                        cfg.get_int("sweep", "samples"), (H, act), base, clean, corrupted, sweep_rng, workers)
    fr = result.fractions
    summary = {
        "betas": result.betas.tolist(),
        "losses": result.losses.tolist(),
        "fractions": fr.tolist(),
        "max_fraction_drop": float(np.max(fr[:-1] - fr[1:])) if fr.size > 1 else 0.0,
        "pairs": pairs,
        "corruption": corruption,
        "samples": cfg.get_int("sweep", "samples"),
    }
    return SweepRun(result, thetaK, theta0, summary)
