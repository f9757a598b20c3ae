import numpy as np
import pytest
from scipy.ndimage import minimum_filter

import surgiatm as sa


def random_case(rng, h=12, w=10):
    frame = rng.uniform(0.0, 1.0, size=(h, w, 3)).astype(np.float32)
    rho_raw = rng.normal(0.0, 2.0, size=(h, w, 3)).astype(np.float32)
    return frame, rho_raw


def reference_forward(frame, rho_raw, eta, z, apply_sigmoid):
    f = frame.astype(np.float64)
    dark = minimum_filter(f.min(axis=2), size=z, mode="nearest")
    d_hat = (dark + eta) / (1.0 + eta)
    r = rho_raw.astype(np.float64)
    rho = 1.0 / (1.0 + np.exp(-r)) if apply_sigmoid else r
    return f - d_hat[..., None] * (1.0 - rho)


def test_dark_channel_matches_min_filter():
    rng = np.random.default_rng(1)
    frame, _ = random_case(rng, 17, 23)
    for z in (1, 3, 7):
        expected = minimum_filter(frame.min(axis=2), size=z, mode="nearest")
        np.testing.assert_array_equal(sa.denorm_dark_channel(frame, z), expected)


def test_forward_matches_reference():
    rng = np.random.default_rng(2)
    for _ in range(20):
        frame, rho_raw = random_case(rng)
        out, handle = sa.atm_forward(frame, rho_raw, 0.1, 5, True)
        sa.release(handle)
        assert out.dtype == np.float32 and out.shape == frame.shape
        np.testing.assert_allclose(out, reference_forward(frame, rho_raw, 0.1, 5, True), atol=1e-6)


def test_repeated_calls_are_bitwise_identical():
    rng = np.random.default_rng(3)
    for _ in range(20):
        frame, rho_raw = random_case(rng)
        target = rng.uniform(size=frame.shape).astype(np.float32)
        a, ha = sa.atm_forward(frame, rho_raw, 0.1, 3)
        b, hb = sa.atm_forward(frame, rho_raw, 0.1, 3)
        assert ha != hb
        np.testing.assert_array_equal(a, b)
        np.testing.assert_array_equal(sa.atm_backward_target(ha, target, "l2"),
                                      sa.atm_backward_target(hb, target, "l2"))
        sa.release(ha)
        sa.release(hb)


def test_saturated_rho_is_identity():
    rng = np.random.default_rng(4)
    frame, _ = random_case(rng)
    out, handle = sa.atm_forward(frame, np.full_like(frame, 40.0), 0.1, 15)
    sa.release(handle)
    np.testing.assert_allclose(out, frame, atol=1e-6)


def test_zero_dark_pixel_coefficient():
    frame = np.full((5, 5, 3), 0.6, dtype=np.float32)
    frame[2, 2, 0] = 0.0
    rho_raw = np.zeros_like(frame)
    out, handle = sa.atm_forward(frame, rho_raw, 0.1, 3, False)
    sa.release(handle)
    # rho = 0 leaves I - d_hat, so the subtracted amount is d_hat itself.
    assert frame[2, 2, 1] - out[2, 2, 1] == pytest.approx(0.0909091, abs=1e-6)


def test_zero_residual_gives_zero_grad():
    # A saturated rho reproduces the input exactly, so the input is a
    # residual-free target even after narrowing to float32.
    rng = np.random.default_rng(5)
    frame, _ = random_case(rng)
    out, handle = sa.atm_forward(frame, np.full_like(frame, 40.0), 0.1, 3)
    np.testing.assert_array_equal(out, frame)
    grad = sa.atm_backward_target(handle, frame, "l2")
    sa.release(handle)
    assert not np.any(grad)


def test_l1_kink_is_zero():
    rng = np.random.default_rng(6)
    frame, _ = random_case(rng)
    rho_raw = np.full_like(frame, 40.0)
    rho_raw[0, 0, 0] = 0.0
    out, handle = sa.atm_forward(frame, rho_raw, 0.1, 3)
    target = frame.copy()
    target[0, 0, 0] = 1.0
    grad = sa.atm_backward_target(handle, target, "l1")
    sa.release(handle)
    assert grad[0, 0, 0] != 0.0
    mask = np.ones(frame.shape, dtype=bool)
    mask[0, 0, 0] = False
    assert not np.any(grad[mask])


def test_inputs_are_not_mutated():
    rng = np.random.default_rng(7)
    frame, rho_raw = random_case(rng)
    f0, r0 = frame.copy(), rho_raw.copy()
    out, handle = sa.atm_forward(frame, rho_raw, 0.1, 3)
    g = np.ones_like(out)
    g0 = g.copy()
    sa.atm_backward(handle, g)
    sa.release(handle)
    np.testing.assert_array_equal(frame, f0)
    np.testing.assert_array_equal(rho_raw, r0)
    np.testing.assert_array_equal(g, g0)


def test_handle_lifecycle():
    rng = np.random.default_rng(8)
    frame, rho_raw = random_case(rng)
    before = sa.live_states()
    _, handle = sa.atm_forward(frame, rho_raw, 0.1, 3)
    assert sa.live_states() == before + 1
    sa.release(handle)
    assert sa.live_states() == before
    with pytest.raises(sa.LifecycleError):
        sa.release(handle)
    with pytest.raises(sa.LifecycleError):
        sa.atm_backward(handle, np.ones_like(frame))


def test_shape_and_range_errors():
    rng = np.random.default_rng(9)
    frame, rho_raw = random_case(rng)
    with pytest.raises(ValueError):
        sa.atm_forward(frame, rho_raw[:, :5], 0.1, 3)
    with pytest.raises(ValueError):
        sa.atm_forward(frame * 3.0, rho_raw, 0.1, 3)
    with pytest.raises(ValueError):
        sa.atm_forward(frame, rho_raw, 0.1, 4)
    _, handle = sa.atm_forward(frame, rho_raw, 0.1, 3)
    with pytest.raises(ValueError):
        sa.atm_backward_target(handle, frame, "huber")
    sa.release(handle)


def test_matches_torch_autograd():
    torch = pytest.importorskip("torch")
    rng = np.random.default_rng(10)
    for _ in range(20):
        frame, rho_raw = random_case(rng, 8, 9)
        target = rng.uniform(size=frame.shape).astype(np.float32)

        rho = torch.tensor(rho_raw, requires_grad=True)
        out = sa.atm_layer(torch.tensor(frame), rho, 0.1, 3)
        ((out - torch.tensor(target)) ** 2).sum().backward()

        dark = torch.tensor(sa.denorm_dark_channel(frame, 3), dtype=torch.float64)
        d_hat = ((dark + 0.1) / 1.1).unsqueeze(-1)
        rho64 = torch.tensor(rho_raw, dtype=torch.float64, requires_grad=True)
        ref = torch.tensor(frame, dtype=torch.float64) - d_hat * (1.0 - torch.sigmoid(rho64))
        ((ref - torch.tensor(target, dtype=torch.float64)) ** 2).sum().backward()

        expected = rho64.grad.numpy()
        err = np.abs(rho.grad.numpy() - expected).max() / max(np.abs(expected).max(), 1e-6)
        assert err < 1e-4


def test_torch_function_releases_states():
    torch = pytest.importorskip("torch")
    rng = np.random.default_rng(11)
    frame, rho_raw = random_case(rng)
    before = sa.live_states()
    rho = torch.tensor(rho_raw, requires_grad=True)
    sa.atm_layer(torch.tensor(frame), rho).sum().backward()
    with torch.no_grad():
        sa.atm_layer(torch.tensor(frame), rho)
    assert sa.live_states() == before
