import struct

import numpy as np
import pytest

from consfield.data import (
    SPIRAL_GROWTH,
    SPIRAL_R0,
    SPIRAL_TURNS,
    binomial_sample,
    downscale,
    gen_synthetic,
    grid2d,
    load_digits,
    load_idx,
    read_idx,
    salt_pepper,
    write_idx,
)
from consfield.errors import FormatError
from consfield.numerics import Rng


def test_circle_noiseless():
    ds = gen_synthetic("circle", 4, 0.0, Rng(0))
    np.testing.assert_allclose(np.linalg.norm(ds.points, axis=1), 0.8, atol=1e-12)


def test_line_noiseless():
    p = gen_synthetic("line", 50, 0.0, Rng(0)).points
    np.testing.assert_allclose(p[:, 1], 0.5 * p[:, 0] + 0.1, atol=1e-12)
    assert np.all(np.abs(p[:, 0]) <= 1)


def test_spiral_noiseless_on_curve():
    p = gen_synthetic("spiral", 200, 0.0, Rng(0)).points
    rmax = SPIRAL_R0 + SPIRAL_GROWTH * SPIRAL_TURNS
    r = np.linalg.norm(p, axis=1) * rmax
    theta = (r - SPIRAL_R0) / SPIRAL_GROWTH
    np.testing.assert_allclose(p * rmax, np.column_stack([r * np.cos(theta), r * np.sin(theta)]), atol=1e-12)


@pytest.mark.parametrize("kind", ["line", "circle", "spiral"])
def test_synthetic_seeded(kind):
    a = gen_synthetic(kind, 100, 0.05, Rng(9)).points
    b = gen_synthetic(kind, 100, 0.05, Rng(9)).points
    np.testing.assert_array_equal(a, b)


def test_spiral_bounds():
    p = gen_synthetic("spiral", 1000, 0.02, Rng(0)).points
    assert np.all(np.abs(p) <= 1.1)


def test_synthetic_bad_args():
    with pytest.raises(ValueError):
        gen_synthetic("torus", 10)
    with pytest.raises(ValueError):
        gen_synthetic("line", 0)


def test_idx_round_trip(tmp_path):
    imgs = Rng(0).integers(0, 256, (5, 28, 28)).astype(np.uint8)
    path = tmp_path / "imgs.idx"
    write_idx(path, imgs)
    np.testing.assert_array_equal(read_idx(path), imgs)
    assert path.read_bytes()[:4] == b"\x00\x00\x08\x03"
    ds = load_idx(path)
    np.testing.assert_allclose(ds.points, imgs.reshape(5, -1) / 255.0)


def test_idx_labels(tmp_path):
    labels = np.arange(10, dtype=np.uint8)
    write_idx(tmp_path / "l.idx", labels)
    assert (tmp_path / "l.idx").read_bytes()[:4] == b"\x00\x00\x08\x01"
    np.testing.assert_array_equal(read_idx(tmp_path / "l.idx"), labels)


def test_idx_empty(tmp_path):
    write_idx(tmp_path / "e.idx", np.zeros((0, 28, 28), np.uint8))
    assert len(load_idx(tmp_path / "e.idx")) == 0


def test_idx_all_white(tmp_path):
    write_idx(tmp_path / "w.idx", np.full((2, 28, 28), 255, np.uint8))
    ds = load_idx(tmp_path / "w.idx", size=8)
    assert ds.dim == 64
    np.testing.assert_allclose(ds.points, 1.0, atol=1e-12)


def test_idx_bad_magic(tmp_path):
    (tmp_path / "bad").write_bytes(struct.pack(">IIII", 0x803 + 0x100, 1, 2, 2) + b"\0" * 4)
    with pytest.raises(FormatError, match="offset 0"):
        read_idx(tmp_path / "bad")


def test_idx_truncated(tmp_path):
    (tmp_path / "t").write_bytes(struct.pack(">IIII", 0x803, 2, 28, 28) + b"\0" * 100)
    with pytest.raises(FormatError, match="truncated"):
        read_idx(tmp_path / "t")
    (tmp_path / "h").write_bytes(b"\x00\x00\x08")
    with pytest.raises(FormatError):
        read_idx(tmp_path / "h")


def test_downscale_preserves_mean():
    img = Rng(1).random((3, 28, 28))
    small = downscale(img, 8)
    assert small.shape == (3, 8, 8)
    np.testing.assert_allclose(small.mean(axis=(1, 2)), img.mean(axis=(1, 2)), atol=1e-12)


def test_downscale_block_average():
    # 7 x 7 -> 2 x 2 uses 3.5 x 3.5 cells; the first cell covers rows/cols 0..3 with weight 0.5 on index 3
    img = np.zeros((1, 7, 7))
    img[0, 3, 3] = 1.0
    np.testing.assert_allclose(downscale(img, 2)[0], np.full((2, 2), 0.25 / 3.5**2), atol=1e-15)


def test_salt_pepper_bounds():
    x = Rng(0).random(100)
    np.testing.assert_array_equal(salt_pepper(x, 0.0, Rng(1)), x)
    assert set(np.unique(salt_pepper(x, 1.0, Rng(1)))) <= {0.0, 1.0}


def test_salt_pepper_rate():
    x = np.full(10_000, 0.5)
    changed = np.sum(salt_pepper(x, 0.25, Rng(3)) != 0.5)
    assert abs(changed - 2500) <= 200


def test_binomial():
    assert not binomial_sample(20, 0.0, Rng(0)).any()
    assert binomial_sample(20, 1.0, Rng(0)).all()
    assert abs(binomial_sample(10_000, 0.5, Rng(0)).mean() - 0.5) <= 0.02
    assert binomial_sample(5, 0.5, Rng(0), size=3).shape == (3, 5)


def test_grid2d():
    np.testing.assert_array_equal(grid2d(((0, 1), (0, 1)), 2).points, [[0, 0], [1, 0], [0, 1], [1, 1]])
    g = grid2d(((0, 1), (0, 1)), 3).points
    assert any(np.allclose(p, [0.5, 0.5]) for p in g)
    xs = np.unique(grid2d(((-1, 2), (0, 1)), 7).points[:, 0])
    np.testing.assert_allclose(np.diff(xs), 0.5, atol=1e-12)


def test_load_digits_scaled():
    ds = load_digits(300, Rng(0))
    assert ds.points.shape == (300, 64)
    assert ds.points.min() >= 0 and ds.points.max() <= 1
    np.testing.assert_array_equal(ds.points, load_digits(300, Rng(0)).points)


def test_dataset_csv():
    text = gen_synthetic("circle", 3, 0.0, Rng(0)).to_csv()
    assert text.splitlines()[0] == "x_1,x_2" and len(text.splitlines()) == 4
