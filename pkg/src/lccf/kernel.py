"""Kernelized correlation filtering and the latent-constrained tracker.

All kernel arithmetic is elementwise in the frequency domain, exploiting the
circulant structure of shifted-patch kernel matrices. The Gaussian kernel
correlation follows
    k(tau) = exp(-max(0, ||x||^2 + ||z||^2 - 2 <z, shift_tau(x)>) / sigma^2)
with no numel division; the clamp suppresses negative round-off.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError, NumericError
from .features import FeatureConfig, FeatureMap, extract_features
from .linear import detect_peak
from .spectral import cosine_window, fft2, gaussian_response, ifft2
from .subspace import PenaltySchedule, SubspaceHistory, project_subspace, update_penalty

__all__ = [
    "TrackerConfig",
    "TrackerState",
    "TrackRecord",
    "kernel_autocorrelation",
    "kernel_crosscorrelation",
    "solve_kcf",
    "lc_kcf_alpha_update",
    "init_tracker",
    "track_step",
    "track_sequence",
]


def _gray_tracking_config() -> FeatureConfig:
    return FeatureConfig(kind="gray", cell=(1, 1), block=(1, 1))


@dataclass(frozen=True)
class TrackerConfig:
    """Tracker settings; defaults follow common kernelized-filter practice.

    `latent=False` disables the subspace machinery entirely; together with
    sigma0=0 this is the plain-KCF degenerate mode.
    """

    lam: float = 1e-4
    sigma0: float = 1e-4
    c: float = 2.0
    T: int = 16
    padding: float = 1.5
    kernel_sigma: float = 0.5
    rho: float = 0.1
    feature: FeatureConfig = field(default_factory=_gray_tracking_config)
    output_sigma_factor: float = 0.1
    latent: bool = True

    def __post_init__(self) -> None:
        if self.lam <= 0 or self.kernel_sigma <= 0 or self.padding <= 0:
            raise ConfigError("lam, kernel_sigma and padding must be positive")
        if self.sigma0 < 0:
            raise ConfigError(f"sigma0 must be >= 0, got {self.sigma0}")
        if self.c <= 1:
            raise ConfigError(f"c must be > 1, got {self.c}")
        if self.T < 1:
            raise ConfigError(f"T must be >= 1, got {self.T}")
        if not (0 <= self.rho <= 1):
            raise ConfigError(f"rho must be in [0, 1], got {self.rho}")
        if self.output_sigma_factor <= 0:
            raise ConfigError("output_sigma_factor must be positive")


@dataclass
class TrackerState:
    """Per-sequence mutable state; single-owner, strictly sequential."""

    bbox: tuple[int, int, int, int]
    template: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    alpha_history: SubspaceHistory
    penalty: PenaltySchedule
    frame_index: int
    window_size: tuple[int, int]
    hann: np.ndarray
    yhat: np.ndarray
    last_score: float = 1.0
    last_epsilon: float = 0.0


@dataclass(frozen=True)
class TrackRecord:
    """One output row per frame: box, peak score, and solver state."""

    frame_index: int
    bbox: tuple[int, int, int, int]
    score: float
    sigma: float
    epsilon: float


def _feature_norm2(x: FeatureMap) -> float:
    return float(np.sum(x.data * x.data))


def _correlation_sum(zf: np.ndarray, xf: np.ndarray) -> np.ndarray:
    """sum_k ifft2(z_hat_k * conj(x_hat_k)), a real plane of <z, shift(x)>."""
    return ifft2(np.sum(zf * np.conj(xf), axis=0))


def _gauss_kernel(corr: np.ndarray, xx: float, zz: float, kernel_sigma: float) -> np.ndarray:
    arg = np.maximum(0.0, xx + zz - 2.0 * corr)
    return np.exp(-arg / (kernel_sigma * kernel_sigma))


def kernel_autocorrelation(x: FeatureMap, kernel_sigma: float) -> np.ndarray:
    """Spectrum of the Gaussian kernel between x and all cyclic shifts of x."""
    if kernel_sigma <= 0:
        raise ConfigError(f"kernel_sigma must be positive, got {kernel_sigma}")
    xf = x.spectra()
    xx = _feature_norm2(x)
    k = _gauss_kernel(_correlation_sum(xf, xf), xx, xx, kernel_sigma)
    return np.fft.fft2(k)


def kernel_crosscorrelation(z: FeatureMap, x: FeatureMap, kernel_sigma: float) -> np.ndarray:
    """Spectrum of the Gaussian kernel between z and all cyclic shifts of x."""
    if kernel_sigma <= 0:
        raise ConfigError(f"kernel_sigma must be positive, got {kernel_sigma}")
    if z.channels != x.channels or z.shape != x.shape:
        raise ConfigError(
            f"feature maps disagree: {z.channels}x{z.shape} vs {x.channels}x{x.shape}"
        )
    k = _gauss_kernel(
        _correlation_sum(z.spectra(), x.spectra()), _feature_norm2(x), _feature_norm2(z), kernel_sigma
    )
    return np.fft.fft2(k)


def _check_denominator(denom: np.ndarray) -> None:
    mods = np.abs(denom)
    if mods.min() < 1e-12:
        r, c = np.argwhere(mods < 1e-12)[0]
        raise NumericError(f"singular kernel denominator at bin ({r}, {c})")


def solve_kcf(kxx: np.ndarray, yhat: np.ndarray, lam: float) -> np.ndarray:
    """Dual solution alpha_hat = y_hat / (k_hat^xx + lambda), elementwise."""
    kxx = np.asarray(kxx, dtype=np.complex128)
    yhat = np.asarray(yhat, dtype=np.complex128)
    if kxx.shape != yhat.shape:
        raise ConfigError(f"kernel spectrum {kxx.shape} != response spectrum {yhat.shape}")
    if lam < 0:
        raise ConfigError(f"lambda must be >= 0, got {lam}")
    denom = kxx + lam
    _check_denominator(denom)
    return yhat / denom


def lc_kcf_alpha_update(
    alpha_kcf: np.ndarray,
    beta: np.ndarray,
    kxx: np.ndarray,
    lam: float,
    sigma: float,
) -> np.ndarray:
    """Blend the fresh dual solution with the latent projection.

    eta = (k_hat^xx + lambda) / (k_hat^xx + lambda + sigma) elementwise;
    returns eta * alpha_kcf + (1 - eta) * beta. sigma = 0 short-circuits to
    alpha_kcf exactly (eta would be identically 1).
    """
    alpha_kcf = np.asarray(alpha_kcf, dtype=np.complex128)
    beta = np.asarray(beta, dtype=np.complex128)
    kxx = np.asarray(kxx, dtype=np.complex128)
    if not (alpha_kcf.shape == beta.shape == kxx.shape):
        raise ConfigError("alpha, beta and kernel spectrum shapes disagree")
    if sigma < 0:
        raise ConfigError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return alpha_kcf.copy()
    denom = kxx + lam + sigma
    _check_denominator(denom)
    eta = (kxx + lam) / denom
    return eta * alpha_kcf + (1.0 - eta) * beta


def _window_geometry(
    bbox: tuple[int, int, int, int], config: TrackerConfig
) -> tuple[int, int]:
    """Search-window size in pixels, trimmed to a whole number of cells."""
    _, _, w, h = bbox
    cell = config.feature.cell[0] if config.feature.kind == "hog" else 1
    wh = max(int(h * config.padding), 2 * cell)
    ww = max(int(w * config.padding), 2 * cell)
    wh -= wh % cell
    ww -= ww % cell
    return wh, ww


def _crop(frame: np.ndarray, bbox: tuple[int, int, int, int], size: tuple[int, int]) -> np.ndarray:
    """Window centered on the box center, replicating pixels at the border."""
    x, y, w, h = bbox
    wh, ww = size
    cy, cx = y + h // 2, x + w // 2
    rows = np.clip(np.arange(cy - wh // 2, cy - wh // 2 + wh), 0, frame.shape[0] - 1)
    cols = np.clip(np.arange(cx - ww // 2, cx - ww // 2 + ww), 0, frame.shape[1] - 1)
    return frame[rows[:, None], cols[None, :]]


def _window_features(
    frame: np.ndarray, bbox: tuple[int, int, int, int], config: TrackerConfig, state: TrackerState
) -> FeatureMap:
    crop = _crop(frame, bbox, state.window_size)
    if config.feature.kind == "gray":
        # Pixel scale is [0, 1]; the fixed -0.5 shift centers the crop without
        # per-crop contrast rescaling (which would amplify occluders).
        return extract_features(crop - 0.5, config.feature, window=state.hann)
    return extract_features(crop, config.feature, window=state.hann)


def _validate_bbox(frame: np.ndarray, bbox: tuple[int, int, int, int]) -> tuple[int, int, int, int]:
    x, y, w, h = (int(v) for v in bbox)
    fh, fw = frame.shape
    if w < 1 or h < 1:
        raise DataError(f"degenerate target box {bbox}")
    if w > fw or h > fh:
        raise DataError(f"target box {bbox} larger than frame {fw}x{fh}")
    x = min(max(x, 0), fw - w)
    y = min(max(y, 0), fh - h)
    return x, y, w, h


def init_tracker(frame: np.ndarray, bbox: tuple[int, int, int, int], config: TrackerConfig) -> TrackerState:
    """Build the initial state: template, plain dual solution, and latent seed."""
    frame = np.asarray(frame, dtype=np.float64)
    if frame.ndim != 2:
        raise DataError(f"frames must be 2-D grayscale, got shape {frame.shape}")
    bbox = _validate_bbox(frame, bbox)
    x, y, w, h = bbox
    wh, ww = _window_geometry(bbox, config)
    if wh > frame.shape[0] or ww > frame.shape[1]:
        raise DataError(f"search window {ww}x{wh} exceeds frame {frame.shape[1]}x{frame.shape[0]}")

    cell = config.feature.cell[0] if config.feature.kind == "hog" else 1
    gh, gw = wh // cell, ww // cell
    hann = cosine_window(gw, gh)

    output_sigma = config.output_sigma_factor * np.sqrt(w * h) / cell
    centred = gaussian_response(gw, gh, (gh // 2, gw // 2), output_sigma**2)
    yhat = fft2(np.roll(centred.plane, (-(gh // 2), -(gw // 2)), axis=(0, 1)))

    state = TrackerState(
        bbox=bbox,
        template=np.empty(0),
        alpha=np.empty(0),
        beta=np.empty(0),
        alpha_history=SubspaceHistory(capacity=config.T),
        penalty=PenaltySchedule(sigma=config.sigma0, c=config.c),
        frame_index=0,
        window_size=(wh, ww),
        hann=hann,
        yhat=yhat,
    )
    feat = _window_features(frame, bbox, config, state)
    state.template = feat.data.copy()
    kxx = kernel_autocorrelation(feat, config.kernel_sigma)
    state.alpha = solve_kcf(kxx, yhat, config.lam)
    state.beta = state.alpha.copy()
    if config.latent:
        state.alpha_history.push(state.alpha)
    return state


def _template_map(state: TrackerState, config: TrackerConfig) -> FeatureMap:
    cell = config.feature.cell[0] if config.feature.kind == "hog" else 1
    return FeatureMap(data=state.template, cell_size=cell, config=config.feature)


def track_step(
    state: TrackerState, frame: np.ndarray, config: TrackerConfig
) -> tuple[TrackerState, tuple[int, int, int, int], np.ndarray]:
    """Advance one frame: detect, relocate, retrain, update latent state.

    Returns the mutated state, the predicted box, and the response plane.
    """
    frame = np.asarray(frame, dtype=np.float64)
    if frame.ndim != 2:
        raise DataError(f"frames must be 2-D grayscale, got shape {frame.shape}")

    # (a) search crop at the current box; (b) correlation response.
    z = _window_features(frame, state.bbox, config, state)
    kzx = kernel_crosscorrelation(z, _template_map(state, config), config.kernel_sigma)
    response = ifft2(kzx * state.alpha)

    # (c) re-center on the response peak; indices past half-size wrap negative.
    pr, pc, score = detect_peak(response)
    gh, gw = response.shape
    dr = pr if pr <= gh // 2 else pr - gh
    dc = pc if pc <= gw // 2 else pc - gw
    cell = config.feature.cell[0] if config.feature.kind == "hog" else 1
    x, y, w, h = state.bbox
    bbox = _validate_bbox(frame, (x + dc * cell, y + dr * cell, w, h))

    # (d) retrain the dual variable on the new crop.
    x_new = _window_features(frame, bbox, config, state)
    kxx = kernel_autocorrelation(x_new, config.kernel_sigma)
    alpha_kcf = solve_kcf(kxx, state.yhat, config.lam)
    alpha_new = lc_kcf_alpha_update(
        alpha_kcf, state.beta, kxx, config.lam, state.penalty.sigma
    )

    # (e) residual drives the strict penalty schedule.
    eps = float(np.linalg.norm(alpha_new - state.alpha))
    state.penalty = update_penalty(state.penalty, eps, "strict")

    # (f) project onto the stored iterates (excluding the new one), then push.
    if config.latent:
        state.beta = project_subspace(alpha_new, state.alpha_history).reshape(alpha_new.shape)
        state.alpha_history.push(alpha_new)

    # (g) appearance template update.
    state.template = (1.0 - config.rho) * state.template + config.rho * x_new.data
    state.alpha = alpha_new
    state.bbox = bbox
    state.frame_index += 1
    state.last_score = score
    state.last_epsilon = eps
    return state, bbox, response


def track_sequence(
    frames: list[np.ndarray], init_bbox: tuple[int, int, int, int], config: TrackerConfig
) -> list[TrackRecord]:
    """Run the tracker over a full sequence; deterministic for fixed inputs.

    The first record echoes the initial box with filler score 1.0 and
    epsilon 0.0 (no detection happens on the init frame).
    """
    if not frames:
        raise DataError("need at least one frame")
    state = init_tracker(frames[0], init_bbox, config)
    records = [TrackRecord(0, state.bbox, 1.0, config.sigma0, 0.0)]
    for i, frame in enumerate(frames[1:], start=1):
        state, bbox, _ = track_step(state, frame, config)
        records.append(
            TrackRecord(i, bbox, state.last_score, state.penalty.sigma, state.last_epsilon)
        )
    return records
