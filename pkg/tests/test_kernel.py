import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lccf.errors import ConfigError, DataError, NumericError
from lccf.features import FeatureConfig, FeatureMap
from lccf.kernel import (
    TrackerConfig,
    init_tracker,
    kernel_autocorrelation,
    kernel_crosscorrelation,
    lc_kcf_alpha_update,
    solve_kcf,
    track_sequence,
    track_step,
)
from lccf.spectral import ifft2

from oracles import dense_kernel_ridge, shifted_kernel_plane

GRAY1 = FeatureConfig(kind="gray", cell=(1, 1), block=(1, 1))


def fmap(data):
    return FeatureMap(data=np.asarray(data, dtype=np.float64), cell_size=1, config=GRAY1)


def test_autocorrelation_matches_shifted_inner_products():
    rng = np.random.default_rng(0)
    for channels in (1, 3):
        x = rng.standard_normal((channels, 5, 6))
        k_spec = kernel_autocorrelation(fmap(x), kernel_sigma=0.7)
        ref = shifted_kernel_plane(x, x, 0.7)
        np.testing.assert_allclose(ifft2(k_spec), ref, atol=1e-10)


def test_crosscorrelation_matches_shifted_inner_products():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((2, 4, 7))
    z = rng.standard_normal((2, 4, 7))
    k_spec = kernel_crosscorrelation(fmap(z), fmap(x), kernel_sigma=0.5)
    np.testing.assert_allclose(ifft2(k_spec), shifted_kernel_plane(z, x, 0.5), atol=1e-10)


def test_kernel_has_no_numel_division():
    # Doubling the signal scales the kernel exponent by 4 with no dependence
    # on the number of elements; the shifted-product oracle pins this down.
    x = np.full((1, 1, 8), 0.3)
    k = ifft2(kernel_autocorrelation(fmap(x), kernel_sigma=1.0))
    # At zero shift the exponent is exactly 0 regardless of scale.
    assert k[0, 0] == pytest.approx(1.0)
    x2 = x.copy()
    x2[0, 0, 0] = -0.3
    k2 = ifft2(kernel_autocorrelation(fmap(x2), kernel_sigma=1.0))
    # One flipped element at shift 1: ||x||^2+||x||^2-2<x,roll(x,1)> =
    # 2*(0.09*8) - 2*(0.09*6 - 0.09*2) = 0.72, not divided by numel 8.
    assert k2[0, 1] == pytest.approx(np.exp(-0.72))


def test_kernel_spectrum_validation():
    x = fmap(np.ones((1, 4, 4)))
    with pytest.raises(ConfigError):
        kernel_autocorrelation(x, kernel_sigma=0.0)
    with pytest.raises(ConfigError):
        kernel_crosscorrelation(x, fmap(np.ones((2, 4, 4))), kernel_sigma=0.5)


@pytest.mark.parametrize("length", [16, 32])
def test_solve_kcf_matches_dense_kernel_ridge(length):
    # 1-D signals as 1 x length planes; the dual solution must agree with
    # the dense circulant Gaussian-kernel matrix inverse.
    rng = np.random.default_rng(length)
    x = rng.standard_normal((1, 1, length))
    y = rng.standard_normal((1, length))
    lam = 1e-2
    alpha_hat = solve_kcf(kernel_autocorrelation(fmap(x), 0.5), np.fft.fft2(y), lam)
    alpha = ifft2(alpha_hat)
    ref = dense_kernel_ridge(x, y, lam, 0.5)
    assert np.max(np.abs(alpha - ref)) < 1e-8


def test_solve_kcf_two_dimensional_matches_dense():
    rng = np.random.default_rng(9)
    x = rng.standard_normal((2, 4, 4))
    y = rng.standard_normal((4, 4))
    alpha = ifft2(solve_kcf(kernel_autocorrelation(fmap(x), 0.8), np.fft.fft2(y), 1e-2))
    np.testing.assert_allclose(alpha, dense_kernel_ridge(x, y, 1e-2, 0.8), atol=1e-8)


def test_solve_kcf_validation():
    kxx = np.ones((4, 4), dtype=complex)
    with pytest.raises(ConfigError):
        solve_kcf(kxx, np.ones((3, 4), dtype=complex), 0.1)
    with pytest.raises(ConfigError):
        solve_kcf(kxx, np.ones((4, 4), dtype=complex), -0.1)
    with pytest.raises(NumericError, match="bin"):
        solve_kcf(np.zeros((4, 4), dtype=complex), np.ones((4, 4), dtype=complex), 0.0)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**31), sigma=st.floats(1e-6, 10.0), lam=st.floats(1e-6, 1.0))
def test_blended_update_equals_direct_penalized_solve(seed, sigma, lam):
    # eta * alpha_kcf + (1 - eta) * beta == (y_hat + sigma*beta)/(kxx+lam+sigma)
    rng = np.random.default_rng(seed)
    shape = (4, 4)
    kxx = rng.standard_normal(shape) + 1j * rng.standard_normal(shape) + 5.0
    yhat = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    beta = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    alpha_kcf = yhat / (kxx + lam)
    blended = lc_kcf_alpha_update(alpha_kcf, beta, kxx, lam, sigma)
    direct = (yhat + sigma * beta) / (kxx + lam + sigma)
    np.testing.assert_allclose(blended, direct, atol=1e-10)


def test_sigma_zero_short_circuits_to_plain_solution():
    rng = np.random.default_rng(2)
    kxx = rng.standard_normal((3, 3)) + 2.0 + 0j
    yhat = rng.standard_normal((3, 3)).astype(complex)
    beta = rng.standard_normal((3, 3)).astype(complex)
    alpha_kcf = yhat / (kxx + 0.1)
    out = lc_kcf_alpha_update(alpha_kcf, beta, kxx, 0.1, 0.0)
    np.testing.assert_array_equal(out, alpha_kcf)
    assert out is not alpha_kcf  # a defensive copy, not the same array


def test_eta_weights_lie_in_unit_interval():
    kxx = np.abs(np.random.default_rng(3).standard_normal((4, 4))) + 0j
    lam, sigma = 1e-4, 0.5
    eta = (kxx + lam) / (kxx + lam + sigma)
    assert np.all(eta.real > 0) and np.all(eta.real < 1)
    # With kernel values real and positive the blend interpolates.
    alpha = np.ones((4, 4), dtype=complex)
    beta = np.zeros((4, 4), dtype=complex)
    out = lc_kcf_alpha_update(alpha, beta, kxx, lam, sigma)
    assert np.all(out.real > 0) and np.all(out.real < 1)


def test_alpha_update_validation():
    a = np.ones((2, 2), dtype=complex)
    with pytest.raises(ConfigError):
        lc_kcf_alpha_update(a, np.ones((3, 3), dtype=complex), a, 0.1, 0.1)
    with pytest.raises(ConfigError):
        lc_kcf_alpha_update(a, a, a, 0.1, -1.0)


def test_tracker_config_validation():
    with pytest.raises(ConfigError):
        TrackerConfig(lam=0.0)
    with pytest.raises(ConfigError):
        TrackerConfig(sigma0=-1.0)
    with pytest.raises(ConfigError):
        TrackerConfig(c=1.0)
    with pytest.raises(ConfigError):
        TrackerConfig(T=0)
    with pytest.raises(ConfigError):
        TrackerConfig(rho=1.5)
    TrackerConfig(sigma0=0.0, latent=False)  # degenerate mode is legal


def _translation_frames(n=8, shift=2, size=(48, 64), seed=0, x0=8):
    rng = np.random.default_rng(seed)
    background = np.full(size, 0.5)
    patch = rng.random((12, 12))
    frames, boxes = [], []
    for t in range(n):
        frame = background.copy()
        x, y = x0 + shift * t, 18
        frame[y : y + 12, x : x + 12] = patch
        frames.append(frame)
        boxes.append((x, y, 12, 12))
    return frames, boxes


def test_tracker_follows_pure_translation_exactly():
    frames, boxes = _translation_frames()
    records = track_sequence(frames, boxes[0], TrackerConfig())
    assert [r.bbox for r in records] == boxes


def test_tracker_decodes_negative_displacement():
    frames, boxes = _translation_frames(shift=-2, seed=1, x0=40)
    records = track_sequence(frames, boxes[0], TrackerConfig())
    assert [r.bbox for r in records] == boxes


def test_track_sequence_record_layout():
    frames, boxes = _translation_frames(n=4)
    config = TrackerConfig(sigma0=0.25)
    records = track_sequence(frames, boxes[0], config)
    assert len(records) == 4
    first = records[0]
    assert (first.frame_index, first.bbox, first.score, first.sigma, first.epsilon) == (
        0,
        boxes[0],
        1.0,
        0.25,
        0.0,
    )
    assert [r.frame_index for r in records] == [0, 1, 2, 3]
    for r in records[1:]:
        assert np.isfinite(r.score) and r.epsilon >= 0 and r.sigma >= 0.25


def test_init_clamps_out_of_frame_box():
    frames, _ = _translation_frames(n=2)
    state = init_tracker(frames[0], (-5, -5, 12, 12), TrackerConfig())
    assert state.bbox == (0, 0, 12, 12)


def test_degenerate_boxes_rejected():
    frames, _ = _translation_frames(n=2)
    with pytest.raises(DataError):
        init_tracker(frames[0], (0, 0, 0, 12), TrackerConfig())
    with pytest.raises(DataError):
        init_tracker(frames[0], (0, 0, 500, 500), TrackerConfig())
    with pytest.raises(DataError):
        track_sequence([], (0, 0, 4, 4), TrackerConfig())


def test_window_too_large_for_frame_rejected():
    tiny = np.full((10, 10), 0.5)
    tiny[2:8, 2:8] = 0.9
    with pytest.raises(DataError, match="window"):
        init_tracker(tiny, (1, 1, 8, 8), TrackerConfig(padding=3.0))


def test_replicated_crop_equals_edge_padding():
    frames, boxes = _translation_frames(n=2)
    config = TrackerConfig()
    state = init_tracker(frames[0], (0, 0, 12, 12), config)
    wh, ww = state.window_size
    # Re-derive the crop with np.pad and compare against the state template
    # (gray features are crop - 0.5 times the Hann window).
    cy, cx = 0 + 6, 0 + 6
    top, left = cy - wh // 2, cx - ww // 2
    padded = np.pad(frames[0], max(wh, ww), mode="edge")
    crop = padded[
        max(wh, ww) + top : max(wh, ww) + top + wh, max(wh, ww) + left : max(wh, ww) + left + ww
    ]
    expected = (crop - 0.5) * state.hann
    np.testing.assert_allclose(state.template[0], expected, atol=1e-12)


def test_latent_off_keeps_history_empty():
    frames, boxes = _translation_frames(n=3)
    config = TrackerConfig(sigma0=0.0, latent=False)
    state = init_tracker(frames[0], boxes[0], config)
    assert len(state.alpha_history) == 0
    state, _, _ = track_step(state, frames[1], config)
    assert len(state.alpha_history) == 0
    assert state.penalty.sigma == 0.0


def test_latent_history_respects_capacity():
    frames, boxes = _translation_frames(n=8)
    config = TrackerConfig(T=3)
    state = init_tracker(frames[0], boxes[0], config)
    for frame in frames[1:]:
        state, _, _ = track_step(state, frame, config)
    assert len(state.alpha_history) == 3


def test_beta_is_projection_of_previous_iterates():
    frames, boxes = _translation_frames(n=3)
    config = TrackerConfig()
    state = init_tracker(frames[0], boxes[0], config)
    before = state.alpha_history.entries()
    state, _, _ = track_step(state, frames[1], config)
    # beta was projected from the history as it stood before the push.
    from lccf.subspace import SubspaceHistory, project_subspace

    hist = SubspaceHistory(capacity=config.T)
    for e in before:
        hist.push(e)
    expected = project_subspace(state.alpha, hist).reshape(state.alpha.shape)
    np.testing.assert_array_equal(state.beta, expected)
