import numpy as np
import pytest

from maskkd import tensor as T
from maskkd.ascm import (
    SelectionUnits,
    flatten_descriptor,
    generate_masks,
    pooled_descriptor,
    unflatten_descriptor,
)
from maskkd.nets import ConfigError
from maskkd.tensor import ShapeError, Tape, Tensor


def sig(x):
    return 1.0 / (1.0 + np.exp(-x))


def test_zero_channel_units_give_half():
    u = SelectionUnits(3, 4)
    u.m_c.data[...] = 0
    ms = generate_masks(u, Tensor(np.random.default_rng(0).normal(size=(4, 3, 3))))
    assert np.all(ms.channel.data == 0.5)


def test_zero_fused_gives_half():
    ms = generate_masks(SelectionUnits(2, 4, seed=3), Tensor(np.zeros((4, 3, 3))))
    assert np.all(ms.channel.data == 0.5) and np.all(ms.spatial.data == 0.5)


def test_direct_formula_oracle():
    rng = np.random.default_rng(1)
    u = SelectionUnits(2, 2, seed=5)
    f = rng.normal(size=(2, 1, 1)).astype(np.float32)
    ms = generate_masks(u, Tensor(f))
    v = f.reshape(2)
    for m in range(2):
        for k in range(2):
            assert ms.channel.data[m, k] == pytest.approx(sig(u.m_c.data[m] * v[k]), abs=1e-6)
        assert ms.spatial.data[m, 0, 0] == pytest.approx(sig(np.dot(u.m_s.data[m], v)), abs=1e-6)


def test_shapes_and_strict_range():
    rng = np.random.default_rng(2)
    ms = generate_masks(SelectionUnits(4, 6, seed=0), Tensor(rng.normal(0, 30, size=(6, 5, 3))))
    assert ms.channel.shape == (4, 6) and ms.spatial.shape == (4, 5, 3)
    for m in (ms.channel.data, ms.spatial.data):
        assert m.min() > 0 and m.max() < 1


def test_batched_shapes():
    ms = generate_masks(SelectionUnits(3, 4), Tensor(np.ones((2, 4, 3, 3))))
    assert ms.channel.shape == (2, 3, 4) and ms.spatial.shape == (2, 3, 3, 3)


def test_initial_masks_not_degenerate():
    ms = generate_masks(SelectionUnits(4, 8, seed=0), Tensor(np.random.default_rng(3).normal(size=(8, 4, 4))))
    assert np.ptp(ms.spatial.data) > 0.1


def test_channel_mismatch():
    with pytest.raises(ShapeError):
        generate_masks(SelectionUnits(2, 4), Tensor(np.zeros((3, 2, 2))))


def test_needs_a_mask():
    with pytest.raises(ConfigError):
        SelectionUnits(0, 4)


def test_adaptive_to_fused_features():
    u = SelectionUnits(2, 4, seed=7)
    rng = np.random.default_rng(4)
    f = rng.normal(size=(4, 3, 3))
    a = generate_masks(u, Tensor(f)).spatial.data
    b = generate_masks(u, Tensor(f + 0.1 * rng.normal(size=f.shape))).spatial.data
    assert np.abs(a - b).max() > 1e-4


def test_unit_gradients_nonzero():
    u = SelectionUnits(2, 4, seed=8)
    f = Tensor(np.random.default_rng(5).normal(size=(4, 3, 3)))
    with Tape() as tape:
        ms = generate_masks(u, f)
        loss = T.add(T.sum_all(T.square(ms.channel)), T.sum_all(T.square(ms.spatial)))
    tape.backward(loss)
    assert np.abs(u.m_c.grad).sum() > 0 and np.abs(u.m_s.grad).sum() > 0


class TestDescriptors:
    def test_pooled_is_mean(self):
        f = np.random.default_rng(6).normal(size=(3, 2, 2)).astype(np.float32)
        np.testing.assert_allclose(pooled_descriptor(Tensor(f)).data, f.mean(axis=(1, 2))[None], atol=1e-6)

    def test_single_pixel_flatten(self):
        f = np.arange(3.0).reshape(3, 1, 1)
        np.testing.assert_array_equal(flatten_descriptor(Tensor(f)).data, f.reshape(3, 1))

    def test_round_trip_bitwise(self):
        f = np.random.default_rng(7).normal(size=(4, 3, 5)).astype(np.float32)
        back = unflatten_descriptor(flatten_descriptor(Tensor(f)), 3, 5).data
        assert back.tobytes() == f.tobytes()

    def test_index_table(self):
        f = np.arange(8.0).reshape(2, 2, 2)
        z = flatten_descriptor(Tensor(f)).data
        # z[c, i*W + j] == f[c, i, j]
        table = {(0, 0): 0, (0, 1): 1, (0, 2): 2, (0, 3): 3, (1, 0): 4, (1, 1): 5, (1, 2): 6, (1, 3): 7}
        for (c, p), val in table.items():
            assert z[c, p] == val
