import numpy as np
import pytest

from twentyq.neural_core import (
    LstmCell,
    RMSProp,
    backward_through_time,
    clip_global_norm,
    dropout_backward,
    dropout_forward,
    finite_difference_gradients,
    linear_backward,
    linear_forward,
    load_params,
    lstm_unroll,
    max_relative_error,
    save_params,
    sigmoid,
    softmax_cross_entropy,
    tanh_backward,
    tanh_forward,
    xavier_uniform,
)

TOL = 1e-4


def test_sigmoid_stable_at_extremes():
    x = np.array([[-1000.0, 0.0, 1000.0]])
    y = sigmoid(x)
    assert np.all(np.isfinite(y))
    assert y[0, 0] == 0.0 and y[0, 1] == 0.5 and y[0, 2] == 1.0


def test_xavier_uniform_bounds():
    rng = np.random.default_rng(0)
    W = xavier_uniform(rng, 40, 60)
    limit = np.sqrt(6.0 / 100.0)
    assert W.shape == (40, 60)
    assert np.abs(W).max() <= limit


def test_linear_gradients_match_finite_differences():
    rng = np.random.default_rng(1)
    for _ in range(20):
        x = rng.normal(size=(3, 4))
        params = {"W": rng.normal(size=(4, 5)), "b": rng.normal(size=5)}
        R = rng.normal(size=(3, 5))

        def f():
            y, _ = linear_forward(x, params["W"], params["b"])
            return float(np.sum(y * R))

        y, cache = linear_forward(x, params["W"], params["b"])
        dx, dW, db = linear_backward(R, cache, params["W"])
        num = finite_difference_gradients(f, params)
        assert max_relative_error({"W": dW, "b": db}, num) < TOL
        num_x = finite_difference_gradients(f, {"x": x})
        assert max_relative_error({"x": dx}, {"x": num_x["x"]}) < TOL


def test_tanh_gradient():
    rng = np.random.default_rng(2)
    for _ in range(20):
        x = rng.normal(size=(2, 6))
        R = rng.normal(size=(2, 6))
        y, cache = tanh_forward(x)
        dx = tanh_backward(R, cache)

        def f():
            return float(np.sum(np.tanh(x) * R))

        num = finite_difference_gradients(f, {"x": x})
        assert max_relative_error({"x": dx}, num) < TOL


def test_lstm_zero_weights_zero_input():
    cell = LstmCell(3, 4)
    W = np.zeros((7, 16))
    b = np.zeros(16)
    x = np.zeros((1, 3))
    c0 = np.ones((1, 4)) * 0.8
    h, c, _ = cell.step(x, np.zeros((1, 4)), c0, W, b)
    # gates all 0.5, candidate tanh(0)=0 -> c' = 0.5*c
    assert np.allclose(c, 0.4)
    assert np.allclose(h, 0.5 * np.tanh(0.4))
    h0, c0 = cell.step(x, np.zeros((1, 4)), np.zeros((1, 4)), W, b)[:2]
    assert not h0.any() and not c0.any()


def test_lstm_saturated_forget_passes_cell_through():
    cell = LstmCell(2, 3)
    rng = np.random.default_rng(3)
    W = rng.normal(size=(5, 12)) * 0.01
    b = np.zeros(12)
    b[0:3] = -50.0   # input gate ~ 0
    b[3:6] = 50.0    # forget gate ~ 1
    c = rng.normal(size=(1, 3))
    _, c_new, _ = cell.step(rng.normal(size=(1, 2)), rng.normal(size=(1, 3)), c, W, b)
    assert np.allclose(c_new, c, atol=1e-12)


def test_lstm_step_gradients_match_finite_differences():
    rng = np.random.default_rng(4)
    cell = LstmCell(4, 5)
    for _ in range(20):
        params = {
            "W": rng.normal(size=(9, 20)) * 0.5,
            "b": rng.normal(size=20) * 0.5,
            "x": rng.normal(size=(2, 4)),
            "h": rng.normal(size=(2, 5)),
            "c": rng.normal(size=(2, 5)),
        }
        R_h = rng.normal(size=(2, 5))
        R_c = rng.normal(size=(2, 5))

        def f():
            h, c, _ = cell.step(params["x"], params["h"], params["c"],
                                params["W"], params["b"])
            return float(np.sum(h * R_h) + np.sum(c * R_c))

        h_new, c_new, cache = cell.step(params["x"], params["h"], params["c"],
                                        params["W"], params["b"])
        dx, dh, dc, dW, db = cell.backward_step(R_h, R_c, cache, params["W"])
        analytic = {"W": dW, "b": db, "x": dx, "h": dh, "c": dc}
        num = finite_difference_gradients(f, params)
        assert max_relative_error(analytic, num) < TOL


def test_bptt_matches_finite_differences_on_five_step_episode():
    rng = np.random.default_rng(5)
    cell = LstmCell(3, 4)
    for _ in range(20):
        params = {
            "W": rng.normal(size=(7, 16)) * 0.5,
            "b": rng.normal(size=16) * 0.3,
            "xs": rng.normal(size=(5, 2, 3)),
            "h0": rng.normal(size=(2, 4)) * 0.1,
            "c0": rng.normal(size=(2, 4)) * 0.1,
        }
        R = rng.normal(size=(5, 2, 4))

        def f():
            hs, _, _ = lstm_unroll(cell, params["xs"], params["h0"], params["c0"],
                                   params["W"], params["b"])
            return float(np.sum(hs * R))

        hs, _, caches = lstm_unroll(cell, params["xs"], params["h0"], params["c0"],
                                    params["W"], params["b"])
        dxs, dW, db, dh0, dc0 = backward_through_time(cell, caches, R, params["W"])
        analytic = {"W": dW, "b": db, "xs": dxs, "h0": dh0, "c0": dc0}
        num = finite_difference_gradients(f, params)
        assert max_relative_error(analytic, num) < TOL


def test_bptt_single_step_equals_step_backward():
    rng = np.random.default_rng(6)
    cell = LstmCell(3, 4)
    W = rng.normal(size=(7, 16))
    b = rng.normal(size=16)
    x = rng.normal(size=(1, 2, 3))
    h0 = rng.normal(size=(2, 4))
    c0 = rng.normal(size=(2, 4))
    R = rng.normal(size=(1, 2, 4))
    _, _, caches = lstm_unroll(cell, x, h0, c0, W, b)
    dxs, dW, db, dh0, dc0 = backward_through_time(cell, caches, R, W)
    dx1, dh1, dc1, dW1, db1 = cell.backward_step(R[0], np.zeros((2, 4)), caches[0], W)
    assert np.allclose(dxs[0], dx1) and np.allclose(dW, dW1) and np.allclose(db, db1)
    assert np.allclose(dh0, dh1) and np.allclose(dc0, dc1)


def test_bptt_zero_upstream_gives_zero_gradients():
    rng = np.random.default_rng(7)
    cell = LstmCell(2, 3)
    W = rng.normal(size=(5, 12))
    b = rng.normal(size=12)
    xs = rng.normal(size=(4, 1, 2))
    _, _, caches = lstm_unroll(cell, xs, np.zeros((1, 3)), np.zeros((1, 3)), W, b)
    dxs, dW, db, dh0, dc0 = backward_through_time(
        cell, caches, np.zeros((4, 1, 3)), W)
    for g in (dxs, dW, db, dh0, dc0):
        assert not np.asarray(g).any()


def test_bptt_requires_caches():
    with pytest.raises(ValueError):
        backward_through_time(LstmCell(2, 3), [], np.zeros((0, 1, 3)), np.zeros((5, 12)))


def test_rmsprop_hand_case():
    opt = RMSProp(lr=1e-3, rho=0.9, eps=1e-6)
    params = {"w": np.array([0.5])}
    opt.update(params, {"w": np.array([1.0])})
    assert np.isclose(opt.acc["w"][0], 0.1)
    # hand arithmetic: 0.5 - 0.001/(sqrt(0.1)+1e-6) = 0.5 - 3.1622677e-3
    assert np.isclose(params["w"][0], 0.5 - 3.1622677e-3, atol=1e-9)


def test_rmsprop_zero_gradient_decays_accumulator_only():
    opt = RMSProp(lr=1e-2, rho=0.9, eps=1e-6)
    params = {"w": np.array([1.0])}
    opt.update(params, {"w": np.array([2.0])})
    acc_before = opt.acc["w"].copy()
    w_before = params["w"].copy()
    opt.update(params, {"w": np.array([0.0])})
    assert np.isclose(opt.acc["w"][0], 0.9 * acc_before[0])
    assert params["w"][0] == w_before[0]


def test_rmsprop_step_magnitude_approaches_lr():
    opt = RMSProp(lr=1e-3, rho=0.9, eps=1e-6)
    params = {"w": np.array([0.0])}
    prev = 0.0
    for _ in range(400):
        prev = params["w"][0]
        opt.update(params, {"w": np.array([1.0])})
    assert np.isclose(abs(params["w"][0] - prev), 1e-3, rtol=1e-3)


def test_lr_zero_leaves_params_bit_identical():
    rng = np.random.default_rng(8)
    opt = RMSProp(lr=0.0)
    params = {"w": rng.normal(size=(3, 3))}
    snapshot = params["w"].tobytes()
    for _ in range(5):
        opt.update(params, {"w": rng.normal(size=(3, 3))})
    assert params["w"].tobytes() == snapshot


def test_dropout_rate_zero_and_eval_are_identity():
    rng = np.random.default_rng(9)
    x = rng.normal(size=(4, 7))
    y, cache = dropout_forward(x, 0.0, "train", rng)
    assert np.array_equal(y, x) and cache is None
    y, cache = dropout_forward(x, 0.9, "eval", rng)
    assert np.array_equal(y, x) and cache is None


def test_dropout_statistics_and_scaling():
    rng = np.random.default_rng(10)
    x = np.ones((1, 10_000))
    y, cache = dropout_forward(x, 0.3, "train", rng)
    zero_frac = float((y == 0).mean())
    assert 0.28 <= zero_frac <= 0.32
    survivors = y[y != 0]
    assert np.allclose(survivors, 1.0 / 0.7)
    dy = np.ones_like(y)
    dx = dropout_backward(dy, cache)
    assert np.array_equal(dx, cache)


def test_clip_global_norm():
    grads = {"a": np.array([3.0]), "b": np.array([4.0])}
    norm = clip_global_norm(grads, 10.0)
    assert norm == 5.0
    assert grads["a"][0] == 3.0  # under threshold: untouched
    norm = clip_global_norm(grads, 1.0)
    assert np.isclose(np.sqrt(grads["a"][0] ** 2 + grads["b"][0] ** 2), 1.0)


def test_softmax_cross_entropy_gradient():
    rng = np.random.default_rng(11)
    for _ in range(20):
        params = {"logits": rng.normal(size=(4, 3))}
        labels = rng.integers(0, 3, size=4)
        w = rng.random(4) + 0.5

        def f():
            loss, _ = softmax_cross_entropy(params["logits"], labels, w)
            return loss

        _, dlogits = softmax_cross_entropy(params["logits"], labels, w)
        num = finite_difference_gradients(f, params)
        assert max_relative_error({"logits": dlogits}, num) < TOL


def test_softmax_cross_entropy_perfect_prediction():
    logits = np.array([[100.0, 0.0, 0.0]])
    loss, _ = softmax_cross_entropy(logits, np.array([0]))
    assert loss < 1e-6


def test_checkpoint_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(12)
    params = {"lstm/W": rng.normal(size=(7, 16)), "embed/b": rng.normal(size=30)}
    manifest = save_params(tmp_path / "ckpt", params, {"note": "t"})
    assert manifest["note"] == "t"
    loaded, m2 = load_params(tmp_path / "ckpt")
    assert set(loaded) == set(params)
    for name in params:
        assert loaded[name].tobytes() == params[name].tobytes()
    loaded["lstm/W"][0, 0] = 99.0  # loaded arrays must be writable copies


def test_checkpoint_detects_corruption(tmp_path):
    params = {"w": np.ones((2, 2))}
    save_params(tmp_path / "ckpt", params)
    blob = (tmp_path / "ckpt" / "params.bin").read_bytes()
    (tmp_path / "ckpt" / "params.bin").write_bytes(blob[:-8] + b"\x00" * 8)
    with pytest.raises(ValueError):
        load_params(tmp_path / "ckpt")
