import numpy as np
import pytest

from maskkd.nets import (
    STUDENT_DEFAULT,
    TEACHER_DEFAULT,
    AlignLayer,
    ConfigError,
    ConvNet,
    NetConfig,
    align,
    build_student,
    build_teacher,
    inherit_init,
)
from maskkd.tensor import ShapeError, Tensor


def test_same_seed_same_checksum():
    assert build_teacher().checksum() == build_teacher().checksum()
    assert ConvNet(NetConfig(8, 2, 4, seed=1)).checksum() != ConvNet(NetConfig(8, 2, 4, seed=2)).checksum()


def test_teacher_larger_than_student():
    assert build_teacher().param_count() > build_student().param_count()


def test_param_count_formula():
    net = ConvNet(NetConfig(channels=5, depth=2, num_classes=3))
    want = (5 * 3 * 9 + 5) + (5 * 5 * 9 + 5) + (3 * 5 + 3)
    assert net.param_count() == want


@pytest.mark.parametrize("h,w", [(16, 16), (4, 4), (5, 7)])
def test_forward_preserves_spatial_dims(h, w):
    net = build_student()
    logits, feats = net.forward(Tensor(np.zeros((3, h, w))))
    assert logits.shape == (4, h, w)
    assert feats[0].shape == (16, h, w)


def test_head_tap_returns_logits():
    net = ConvNet(NetConfig(8, 2, 4, feature_tap=2))
    logits, feats = net.forward(Tensor(np.random.default_rng(0).uniform(size=(3, 6, 6))))
    assert feats[0] is logits
    assert net.tap_channels() == 4


def test_second_tap_half_resolution():
    _, feats = build_student().forward(Tensor(np.zeros((2, 3, 8, 8))), taps=2)
    assert feats[1].shape == (2, 16, 4, 4)


def test_tap_out_of_range():
    with pytest.raises(ConfigError):
        ConvNet(NetConfig(8, 2, 4, feature_tap=3))


class TestAlign:
    def test_identity_marker_passthrough(self):
        x = Tensor(np.random.default_rng(0).normal(size=(2, 3, 3)))
        assert align(x, AlignLayer(2, 2, identity=True)) is x

    def test_identity_kernel(self):
        a = AlignLayer(2, 2)
        a.kernel.data[...] = np.eye(2).reshape(2, 2, 1, 1)
        x = np.random.default_rng(1).normal(size=(2, 3, 3)).astype(np.float32)
        np.testing.assert_array_equal(align(Tensor(x), a).data, x)

    def test_matmul_oracle(self):
        a = AlignLayer(2, 3, seed=4)
        x = np.random.default_rng(2).normal(size=(2, 2, 2)).astype(np.float32)
        w = a.kernel.data[:, :, 0, 0]
        want = np.einsum("oc,chw->ohw", w, x)
        np.testing.assert_allclose(align(Tensor(x), a).data, want, atol=1e-6)

    def test_channel_mismatch(self):
        with pytest.raises(ShapeError):
            align(Tensor(np.zeros((3, 2, 2))), AlignLayer(2, 4))

    def test_identity_needs_equal_channels(self):
        with pytest.raises(ConfigError):
            AlignLayer(2, 4, identity=True)


class TestInherit:
    def test_identical_architectures(self):
        t = ConvNet(NetConfig(4, 2, 3, seed=1))
        s = ConvNet(NetConfig(4, 2, 3, seed=2))
        assert inherit_init(s, t) == len(t.parameters())
        assert s.checksum() == t.checksum()

    def test_default_configs(self):
        t, s = build_teacher(), build_student()
        tp = t.named_parameters()
        want = sum(1 for n, p in s.named_parameters().items() if n in tp and tp[n].shape == p.shape)
        assert inherit_init(s, t) == want == 1
        np.testing.assert_array_equal(s.head_bias.data, t.head_bias.data)

    def test_class_count_differs(self):
        t = ConvNet(NetConfig(8, 2, 5))
        s = ConvNet(NetConfig(4, 2, 3))
        assert inherit_init(s, t) == 0

    def test_teacher_untouched(self):
        t, s = build_teacher(), build_student()
        before = t.checksum()
        inherit_init(s, t)
        assert t.checksum() == before


def test_load_state_shape_mismatch():
    net = ConvNet(NetConfig(4, 1, 2))
    state = {n: p.data.copy() for n, p in net.named_parameters().items()}
    state["head.bias"] = np.zeros(5, np.float32)
    with pytest.raises(ShapeError):
        net.load_state(state)


def test_defaults():
    assert (TEACHER_DEFAULT.channels, TEACHER_DEFAULT.depth) == (32, 4)
    assert (STUDENT_DEFAULT.channels, STUDENT_DEFAULT.depth) == (16, 2)
