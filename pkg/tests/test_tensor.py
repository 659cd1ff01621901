import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from maskkd import tensor as T
from maskkd.gradcheck import op_cases, run_case
from maskkd.optim import SGD, sgd_step
from maskkd.tensor import ContractError, ShapeError, Tape, Tensor


def naive_matmul(a, b):
    n, k = a.shape
    m = b.shape[1]
    out = np.zeros((n, m))
    for i in range(n):
        for j in range(m):
            for t in range(k):
                out[i, j] += a[i, t] * b[t, j]
    return out


def naive_conv(x, w, stride, pad):
    c_in, h, wd = x.shape
    c_out, _, k, _ = w.shape
    xp = np.zeros((c_in, h + 2 * pad, wd + 2 * pad))
    xp[:, pad:pad + h, pad:pad + wd] = x
    ho = (h + 2 * pad - k) // stride + 1
    wo = (wd + 2 * pad - k) // stride + 1
    out = np.zeros((c_out, ho, wo))
    for o in range(c_out):
        for i in range(ho):
            for j in range(wo):
                for c in range(c_in):
                    for di in range(k):
                        for dj in range(k):
                            out[o, i, j] += w[o, c, di, dj] * xp[c, i * stride + di, j * stride + dj]
    return out


class TestMatmul:
    def test_identity(self):
        b = Tensor([[1, 2], [3, 4]])
        np.testing.assert_array_equal(T.matmul(Tensor(np.eye(2)), b).data, b.data)

    def test_projector(self):
        out = T.matmul(Tensor([[1, 0], [0, 0]]), Tensor([[5, 6], [7, 8]]))
        np.testing.assert_array_equal(out.data, [[5, 6], [0, 0]])

    def test_against_triple_loop(self):
        rng = np.random.default_rng(3)
        a, b = rng.normal(size=(3, 4)), rng.normal(size=(4, 2))
        out = T.matmul(Tensor(a), Tensor(b))
        np.testing.assert_allclose(out.data, naive_matmul(a, b), atol=1e-6)

    def test_shape_error_names_both_shapes(self):
        with pytest.raises(ShapeError, match=r"\(2, 3\).*\(2, 3\)"):
            T.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))


class TestConv2d:
    def test_identity_kernel(self):
        rng = np.random.default_rng(0)
        x = Tensor(rng.normal(size=(3, 4, 5)))
        k = Tensor(np.eye(3).reshape(3, 3, 1, 1))
        np.testing.assert_array_equal(T.conv2d(x, k).data, x.data)

    def test_zero_kernel(self):
        x = Tensor(np.random.default_rng(1).normal(size=(2, 5, 5)))
        out = T.conv2d(x, Tensor(np.zeros((4, 2, 3, 3))), 1, 1)
        assert out.shape == (4, 5, 5)
        assert not out.data.any()

    @pytest.mark.parametrize("stride,pad", [(1, 1), (1, 0), (2, 1)])
    def test_against_naive_loops(self, stride, pad):
        rng = np.random.default_rng(7)
        x, w = rng.normal(size=(3, 5, 5)), rng.normal(size=(2, 3, 3, 3))
        out = T.conv2d(Tensor(x), Tensor(w), stride, pad)
        np.testing.assert_allclose(out.data, naive_conv(x, w, stride, pad), atol=1e-5)

    def test_k1_is_bitwise_per_pixel_matmul(self):
        rng = np.random.default_rng(11)
        x = rng.normal(size=(4, 3, 5)).astype(np.float32)
        w = rng.normal(size=(6, 4, 1, 1)).astype(np.float32)
        conv = T.conv2d(Tensor(x), Tensor(w)).data.reshape(6, 15)
        mm = T.matmul(Tensor(w.reshape(6, 4)), Tensor(x.reshape(4, 15))).data
        assert conv.tobytes() == mm.tobytes()

    def test_batched_matches_per_image(self):
        rng = np.random.default_rng(2)
        x, w = rng.normal(size=(3, 2, 6, 6)), rng.normal(size=(4, 2, 3, 3))
        batched = T.conv2d(Tensor(x), Tensor(w), 1, 1).data
        for i in range(3):
            np.testing.assert_allclose(batched[i], T.conv2d(Tensor(x[i]), Tensor(w), 1, 1).data, atol=1e-6)

    def test_non_integral_output(self):
        with pytest.raises(ShapeError):
            T.conv2d(Tensor(np.ones((1, 4, 4))), Tensor(np.ones((1, 1, 3, 3))), stride=2, pad=1)

    def test_kernel_size_restricted(self):
        with pytest.raises(ShapeError):
            T.conv2d(Tensor(np.ones((1, 6, 6))), Tensor(np.ones((1, 1, 5, 5))))


class TestSoftmax:
    def test_symmetric_row(self):
        np.testing.assert_allclose(T.softmax_rows(Tensor([[0.0, 0.0]])).data, [[0.5, 0.5]])

    def test_closed_form(self):
        out = T.softmax_rows(Tensor([[math.log(2), 0.0]])).data
        np.testing.assert_allclose(out, [[2 / 3, 1 / 3]], atol=1e-7)

    def test_no_overflow(self):
        out = T.softmax_rows(Tensor([[1000.0, 0.0]])).data
        assert np.all(np.isfinite(out))
        np.testing.assert_allclose(out, [[1.0, 0.0]], atol=1e-6)

    @settings(max_examples=200, deadline=None)
    @given(arrays(np.float32, st.tuples(st.integers(1, 6), st.integers(1, 9)),
                  elements=st.floats(-1e4, 1e4, width=32)))
    def test_rows_sum_to_one(self, x):
        out = T.softmax_rows(Tensor(x)).data
        np.testing.assert_allclose(out.sum(axis=-1), 1.0, atol=1e-6)


class TestSigmoid:
    def test_zero(self):
        assert T.sigmoid(Tensor([0.0])).data[0] == 0.5

    def test_strictly_positive(self):
        assert T.sigmoid(Tensor([-50.0])).data[0] > 0

    def test_strict_range_in_f32(self):
        y = T.sigmoid(Tensor([-500.0, -50.0, 30.0, 500.0])).data
        assert y.min() > 0 and y.max() < 1

    def test_symmetry(self):
        x = np.linspace(-8, 8, 101)
        s = T.sigmoid(Tensor(x)).data + T.sigmoid(Tensor(-x)).data
        np.testing.assert_allclose(s, 1.0, atol=1e-7)


class TestAvgPool:
    def test_constant(self):
        out = T.avg_pool_spatial(Tensor(np.full((3, 4, 4), 2.5)))
        np.testing.assert_array_equal(out.data, [[2.5, 2.5, 2.5]])

    def test_single_pixel(self):
        x = np.array([1.0, -2.0, 3.0]).reshape(3, 1, 1)
        np.testing.assert_array_equal(T.avg_pool_spatial(Tensor(x)).data, [[1.0, -2.0, 3.0]])

    def test_against_summation(self):
        x = np.random.default_rng(5).normal(size=(2, 2, 2))
        want = [sum(x[c, i, j] for i in range(2) for j in range(2)) / 4 for c in range(2)]
        np.testing.assert_allclose(T.avg_pool_spatial(Tensor(x)).data[0], want, atol=1e-6)


class TestBackward:
    def test_sum_gives_ones(self):
        x = Tensor(np.arange(6.0).reshape(2, 3), requires_grad=True)
        with Tape() as tape:
            loss = T.sum_all(x)
        tape.backward(loss)
        np.testing.assert_array_equal(x.grad, np.ones((2, 3)))

    def test_square_gives_2x(self):
        x = Tensor([1.0, -2.0, 3.5], requires_grad=True)
        with Tape() as tape:
            loss = T.sum_all(T.mul(x, x))
        tape.backward(loss)
        np.testing.assert_allclose(x.grad, 2 * x.data)

    def test_fan_out_accumulates(self):
        x = Tensor([2.0], requires_grad=True)
        with Tape() as tape:
            y = T.add(x, x)
            loss = T.sum_all(T.mul(y, x))  # 2x^2
        tape.backward(loss)
        np.testing.assert_allclose(x.grad, [8.0])

    def test_non_scalar_rejected(self):
        x = Tensor([1.0, 2.0], requires_grad=True)
        with Tape() as tape:
            y = T.scale(x, 2.0)
        with pytest.raises(ContractError):
            tape.backward(y)

    def test_tape_is_topological(self):
        x = Tensor(np.ones((2, 2)), requires_grad=True)
        with Tape() as tape:
            T.sum_all(T.relu(T.matmul(x, x)))
        seen = {id(x)}
        for node in tape.nodes:
            assert all(id(i) in seen or not i.requires_grad for i in node.inputs)
            seen.add(id(node.out))

    def test_no_tape_no_recording(self):
        x = Tensor([1.0], requires_grad=True)
        y = T.scale(x, 3.0)
        assert not y.requires_grad

    def test_linearity(self):
        rng = np.random.default_rng(9)
        x = Tensor(rng.normal(size=(3, 4)), requires_grad=True, dtype=np.float64)
        w = Tensor(rng.normal(size=(4, 2)), dtype=np.float64)

        def l1():
            return T.sum_all(T.square(T.matmul(x, w)))

        def l2():
            return T.mean_all(T.sigmoid(x))

        grads = []
        for fn in (l1, l2, lambda: T.add(T.scale(l1(), 0.3), T.scale(l2(), -2.0))):
            x.grad = None
            with Tape() as tape:
                loss = fn()
            tape.backward(loss)
            grads.append(x.grad.copy())
        np.testing.assert_allclose(grads[2], 0.3 * grads[0] - 2.0 * grads[1], atol=1e-5)


@pytest.mark.parametrize("name", sorted(op_cases()))
def test_gradcheck(name):
    for seed in range(3):
        assert run_case(name, seed) < 1e-3


class TestSgd:
    def test_zero_grad_no_decay_is_noop(self):
        p = Tensor([1.0, -2.0])
        opt = SGD([p], lr=0.1, momentum=0.9, weight_decay=0.0)
        p.grad = np.zeros(2, np.float32)
        opt.step()
        np.testing.assert_array_equal(p.data, [1.0, -2.0])

    def test_plain_descent(self):
        p = Tensor([1.0, -2.0])
        sgd_step([p], [np.array([0.5, 1.0])], SGD([p], lr=0.1, momentum=0.0, weight_decay=0.0))
        np.testing.assert_allclose(p.data, [0.95, -2.1], rtol=1e-7)

    def test_two_steps_unrolled(self):
        lr, mu, wd = 0.1, 0.9, 1e-4
        p0 = np.array([1.0, -0.5])
        g1, g2 = np.array([0.2, -0.1]), np.array([-0.3, 0.4])
        v1 = g1 + wd * p0
        p1 = p0 - lr * v1
        v2 = mu * v1 + g2 + wd * p1
        p2 = p1 - lr * v2
        p = Tensor(p0, dtype=np.float64)
        opt = SGD([p], lr, mu, wd)
        sgd_step([p], [g1], opt)
        sgd_step([p], [g2], opt)
        np.testing.assert_allclose(p.data, p2, atol=1e-7)

    def test_momentum_range(self):
        with pytest.raises(ContractError):
            SGD([Tensor([1.0])], lr=0.1, momentum=1.0)
