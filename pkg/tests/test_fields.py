import numpy as np
import pytest
from conftest import random_params

from consfield.analysis import CONSERVATIVE, conservativity_report, curl_grid, grid_points, symmetricity_batch
from consfield.autoencoder import AeParams, TrainConfig, init_params, train
from consfield.data import load_digits, salt_pepper
from consfield.errors import ContractError, ShapeError
from consfield.fields import (
    BetaSweepResult,
    FieldSampleSet,
    ae_dynamics_field,
    ae_reconstruction_field,
    analytic_spiral_sink,
    beta_sweep,
    cosine_similarity_rows,
    discrimination_fraction,
    extract_conservative,
    interpolate_params,
    rotation_field,
    sample_field,
)
from consfield.numerics import Rng, finite_diff_jacobian
from consfield.vectorfield import VectorField

BOX = ((-1, 1), (-1, 1))


def test_spiral_sink_values():
    f = analytic_spiral_sink()
    np.testing.assert_array_equal(f([0.0, 0.0]), [0.0, 0.0])
    np.testing.assert_array_equal(f([1.0, 0.0]), [-1.0, -1.0])
    np.testing.assert_array_equal(f.jacobian([0.2, 0.3]), [[-1, 1], [-1, -1]])


def test_spiral_sink_conservative_part():
    A = analytic_spiral_sink().jacobian([0.0, 0.0])
    np.testing.assert_array_equal(0.5 * (A + A.T), -np.eye(2))
    np.testing.assert_array_equal(0.5 * (A - A.T), [[0, 1], [-1, 0]])


def test_tied_dynamics_field_is_conservative(rng):
    p = random_params(rng, 2, 8, "relu", tied=True)
    assert conservativity_report(ae_dynamics_field(p), rng.uniform(-1, 1, (50, 2))).verdict == CONSERVATIVE


def test_reconstruction_field_with_zero_encoder(rng):
    p = AeParams(np.zeros((3, 4)), rng.normal(size=(3, 4)), rng.normal(size=4), rng.normal(size=3), "sigmoid")
    f = ae_reconstruction_field(p)
    const = p.R @ (1 / (1 + np.exp(-p.b))) + p.c
    for x in rng.normal(size=(5, 3)):
        np.testing.assert_allclose(f(x), const, atol=1e-14)


@pytest.mark.parametrize("which", [ae_reconstruction_field, ae_dynamics_field])
def test_ae_field_jacobian_matches_fd(which, rng):
    f = which(random_params(rng, 3, 5, "sigmoid", tied=False))
    for x in rng.normal(size=(10, 3)):
        assert np.max(np.abs(f.jacobian(x) - finite_diff_jacobian(f, x))) < 1e-6


def test_field_batch_matches_pointwise(rng):
    f = ae_dynamics_field(random_params(rng, 3, 5, "relu", tied=False))
    X = rng.normal(size=(6, 3))
    np.testing.assert_allclose(f.evaluate(X), np.array([f(x) for x in X]), atol=1e-14)
    np.testing.assert_allclose(f.jacobians(X), np.array([f.jacobian(x) for x in X]), atol=1e-14)


def test_interpolate_endpoints(rng):
    a = random_params(rng, 3, 4, "sigmoid", tied=False)
    b = random_params(rng, 3, 4, "sigmoid", tied=True)
    for beta, ref in ((0.0, a), (1.0, b)):
        q = interpolate_params(a, b, beta)
        assert not q.tied
        for name in "WRbc":
            np.testing.assert_array_equal(getattr(q, name), getattr(ref, name))
    mid = interpolate_params(a, b, 0.5)
    for name in "WRbc":
        np.testing.assert_allclose(getattr(mid, name), (getattr(a, name) + getattr(b, name)) / 2, atol=1e-15)


def test_interpolate_mismatch(rng):
    a = random_params(rng, 3, 4, "sigmoid", tied=False)
    with pytest.raises(ShapeError):
        interpolate_params(a, random_params(rng, 3, 5, "sigmoid", False), 0.5)
    with pytest.raises(ContractError):
        interpolate_params(a, random_params(rng, 3, 4, "relu", False), 0.5)
    with pytest.raises(ValueError):
        interpolate_params(a, a, 1.5)


def test_sample_field_constant():
    f = VectorField(2, lambda x: np.array([1.0, -2.0]))
    s = sample_field(f, BOX, 20, Rng(0))
    assert np.all(s.y == [1.0, -2.0])
    assert np.all(np.abs(s.x) <= 1)


def test_sample_field_rejects_zero():
    with pytest.raises(ValueError):
        sample_field(analytic_spiral_sink(), BOX, 0, Rng(0))


def test_sample_field_deterministic():
    a = sample_field(analytic_spiral_sink(), BOX, 30, Rng(4))
    b = sample_field(analytic_spiral_sink(), BOX, 30, Rng(4))
    assert a.to_csv() == b.to_csv()


def test_sample_field_resamples_non_finite():
    f = VectorField(2, lambda x: x if x[0] > 0 else np.array([np.nan, 0.0]),
                    batch=lambda X: np.where(X[:, :1] > 0, X, np.nan))
    s = sample_field(f, [(-0.5, 1.0), (0.0, 1.0)], 40, Rng(0))
    assert len(s) == 40 and np.all(np.isfinite(s.y))
    never = VectorField(2, lambda x: np.full(2, np.inf), batch=lambda X: np.full(X.shape, np.inf))
    with pytest.raises(RuntimeError):
        sample_field(never, BOX, 5, Rng(0))


def test_sample_set_csv_round_trip():
    s = sample_field(analytic_spiral_sink(), BOX, 5, Rng(0))
    text = s.to_csv()
    assert text.splitlines()[0] == "x_1,x_2,y_1,y_2"
    back = FieldSampleSet.from_csv(text)
    np.testing.assert_array_equal(back.x, s.x)
    np.testing.assert_array_equal(back.y, s.y)


def test_extract_realizable_target():
    teacher = init_params(3, 8, "sigmoid", True, Rng(5))
    teacher.W *= 3.0
    teacher.b[:] = Rng(6).normal(0, 1, 8)
    s = sample_field(ae_reconstruction_field(teacher), [(-1, 1)] * 3, 400, Rng(0))
    p, hist = extract_conservative(s, (8, "sigmoid"), TrainConfig(epochs=400, learning_rate=1e-2), Rng(1))
    assert p.tied
    assert hist[-1].loss < 1e-3 * hist[0].loss


def grid_samples(field, n=32, disk=False):
    pts = grid_points(BOX, n)
    if disk:
        pts = pts[np.linalg.norm(pts, axis=1) <= 1.0]
    return FieldSampleSet(pts, field.evaluate(pts), np.array(BOX), displacement=True)


def test_extract_spiral_sink():
    s = grid_samples(analytic_spiral_sink())
    p, _ = extract_conservative(s, (200, "relu"), TrainConfig(epochs=300, learning_rate=1e-3), Rng(0))
    learned = ae_dynamics_field(p)
    v, truth = learned.evaluate(s.x), -s.x
    keep = np.linalg.norm(truth, axis=1) >= 0.05
    assert np.mean(cosine_similarity_rows(v[keep], truth[keep])) >= 0.95
    assert curl_grid(learned, BOX, 32)[1] <= 0.2
    assert np.all(symmetricity_batch(learned.jacobians(s.x)) >= 1 - 1e-9)


def test_extract_rotation_on_disk_is_rejected():
    s = grid_samples(rotation_field(), disk=True)
    p, _ = extract_conservative(s, (200, "relu"), TrainConfig(epochs=300, learning_rate=1e-3), Rng(0))
    v = ae_dynamics_field(p).evaluate(s.x)
    assert np.mean(np.linalg.norm(v, axis=1)) <= 0.2 * np.mean(np.linalg.norm(s.y, axis=1))


def test_extract_linear_field_recovers_symmetric_part():
    A = np.array([[1.0, 0.5], [-0.5, 0.6]])
    pts = grid_points(BOX, 21)
    s = FieldSampleSet(pts, pts @ A.T, np.array(BOX))
    p, _ = extract_conservative(s, (2, "linear"), TrainConfig(epochs=300, learning_rate=1e-2), Rng(3))
    assert np.linalg.norm(p.W @ p.W.T - 0.5 * (A + A.T)) <= 0.1 * np.linalg.norm(A)


def test_discrimination_ties_and_contract(rng):
    p = random_params(rng, 4, 3, "sigmoid", tied=True)
    X = rng.random((10, 4))
    assert discrimination_fraction(p, X, X) == 0.0
    with pytest.raises(ContractError):
        discrimination_fraction(random_params(rng, 4, 3, "sigmoid", tied=False), X, X)
    with pytest.raises(ShapeError):
        discrimination_fraction(p, X, X[:5])


def test_discrimination_trained_model():
    X = load_digits(600, Rng(0)).points
    p, _ = train(init_params(64, 32, "sigmoid", True, Rng(1)), X, TrainConfig(epochs=20))
    clean = X[:200]
    assert discrimination_fraction(p, clean, salt_pepper(clean, 0.5, Rng(2))) >= 0.95


def small_sweep(workers):
    X = load_digits(200, Rng(0)).points[:, :16]
    k, _ = train(init_params(16, 8, "sigmoid", True, Rng(1)), X, TrainConfig(epochs=5))
    r = Rng(2)
    zero = AeParams(r.normal(size=(16, 8)), r.normal(size=(16, 8)), r.normal(size=8), np.zeros(16), "sigmoid")
    clean = X[:50]
    return beta_sweep(zero, k, [1.0, 0.0, 0.5], [0, 1], 100, (8, "sigmoid"), TrainConfig(epochs=3), clean,
                      salt_pepper(clean, 0.25, Rng(3)), Rng(4), workers=workers)


def test_beta_sweep_structure_and_determinism():
    a, b, c = small_sweep(1), small_sweep(1), small_sweep(3)
    assert list(a.betas) == [0.0, 0.5, 1.0]
    assert np.all((a.fractions >= 0) & (a.fractions <= 1))
    assert a.to_csv() == b.to_csv() == c.to_csv()
    assert a.losses[-1] < a.losses[0]
    assert BetaSweepResult.from_csv(a.to_csv()).to_csv() == a.to_csv()
    assert a.to_csv().splitlines()[0] == "beta,loss,fraction"
