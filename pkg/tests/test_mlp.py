import numpy as np
import pytest

from capscan.learn import Adam, Mlp, flatten_params, linear_lr, unflatten_like
from capscan.learn.mlp import orthogonal
from capscan.learn.optim import clip_grad_norm


def fd_grad(f, x0, h=1e-5):
    g = np.zeros_like(x0)
    for i in range(x0.size):
        xp = x0.copy()
        xm = x0.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (f(xp) - f(xm)) / (2.0 * h)
    return g


def test_zero_params_zero_output():
    net = Mlp([3, 5, 2], np.random.default_rng(0))
    net.set_params([np.zeros_like(p) for p in net.params])
    out = net.forward(np.array([[1.0, -2.0, 3.0]]))
    assert np.array_equal(out, np.zeros((1, 2)))


def test_identity_single_layer():
    net = Mlp([3, 3], np.random.default_rng(0))
    net.set_params([np.eye(3), np.zeros(3)])
    x = np.array([[0.2, -0.5, 1.5]])
    assert np.array_equal(net.forward(x), x)


def test_golden_forward_vector():
    rng = np.random.default_rng(1234)
    net = Mlp([3, 4, 2], rng)
    out = net.forward(np.array([[0.3, -0.7, 1.1]]))[0]
    golden = np.array([-0.5322836293460529, -0.6484082559877103])
    assert np.array_equal(out, golden)


def test_backward_matches_finite_differences():
    rng = np.random.default_rng(5)
    net = Mlp([4, 8, 8, 3], rng)
    x = rng.normal(size=(6, 4))
    w_probe = rng.normal(size=(6, 3))
    shapes = net.params

    def loss_of(flat):
        net.set_params(unflatten_like(flat, shapes))
        out = net.forward(x)
        return float(np.sum(out * w_probe) + 0.5 * np.sum(out**2))

    flat0 = flatten_params(net.params)
    out, acts = net.forward(x, cache=True)
    analytic, dinput = net.backward(acts, w_probe + out)
    analytic_flat = flatten_params(analytic)
    numeric = fd_grad(loss_of, flat0)
    net.set_params(unflatten_like(flat0, shapes))
    denom = np.maximum(np.abs(numeric), 1e-8)
    assert np.max(np.abs(analytic_flat - numeric) / denom) <= 1e-4

    # input gradient against finite differences too
    def loss_of_input(xflat):
        out = net.forward(xflat.reshape(6, 4))
        return float(np.sum(out * w_probe) + 0.5 * np.sum(out**2))

    numeric_in = fd_grad(loss_of_input, x.ravel().copy())
    assert np.max(np.abs(dinput.ravel() - numeric_in)
                  / np.maximum(np.abs(numeric_in), 1e-8)) <= 1e-4


def test_gradient_zero_for_unused_param():
    # second output head unused by the loss -> its weights get zero grads
    net = Mlp([3, 4, 2], np.random.default_rng(7))
    x = np.random.default_rng(8).normal(size=(5, 3))
    out, acts = net.forward(x, cache=True)
    dout = np.zeros_like(out)
    dout[:, 0] = 1.0
    grads, _ = net.backward(acts, dout)
    last_w = grads[-2]
    assert np.array_equal(last_w[:, 1], np.zeros(4))


def test_gradient_linearity():
    net = Mlp([3, 6, 2], np.random.default_rng(9))
    x = np.random.default_rng(10).normal(size=(4, 3))
    out, acts = net.forward(x, cache=True)
    g1, _ = net.backward(acts, out)
    g2, _ = net.backward(acts, 2.0 * out)
    for a, b in zip(g1, g2):
        assert np.allclose(2.0 * a, b, rtol=1e-14)


def test_orthogonal_init_is_orthogonal():
    w = orthogonal(8, 8, gain=1.3, rng=np.random.default_rng(3))
    assert np.allclose(w @ w.T, 1.3**2 * np.eye(8), atol=1e-12)


def test_shape_mismatch_rejected():
    net = Mlp([3, 4, 2], np.random.default_rng(0))
    with pytest.raises(ValueError, match="input dim"):
        net.forward(np.zeros((1, 5)))


def test_linear_lr_schedule():
    assert linear_lr(0, 1000, 1e-3) == 1e-3
    assert linear_lr(1000, 1000, 1e-3) == 1e-10
    assert linear_lr(500, 1000, 1e-3) == pytest.approx(5e-4)
    assert linear_lr(2000, 1000, 1e-3) == 1e-10  # clamped past the end


def test_adam_converges_quadratic():
    x = np.array([5.0, -3.0])
    opt = Adam([x])
    for _ in range(2000):
        opt.step([2.0 * x], lr=0.05)
    assert np.allclose(x, 0.0, atol=1e-4)


def test_clip_grad_norm():
    g = [np.array([3.0, 4.0])]
    norm = clip_grad_norm(g, 0.5)
    assert norm == pytest.approx(5.0)
    assert np.linalg.norm(g[0]) == pytest.approx(0.5)
    g2 = [np.array([0.1, 0.0])]
    clip_grad_norm(g2, 0.5)
    assert np.array_equal(g2[0], [0.1, 0.0])


def test_flatten_round_trip():
    net = Mlp([3, 4, 2], np.random.default_rng(2))
    flat = flatten_params(net.params)
    back = unflatten_like(flat, net.params)
    for a, b in zip(net.params, back):
        assert np.array_equal(a, b)
