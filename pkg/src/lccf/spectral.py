"""Deterministic 2-D FFT helpers, desired-response synthesis, and image
normalization shared by every solver in the package.

Convention: unnormalized forward DFT, 1/(W*H) inverse (numpy's default), so
elementwise spectrum products compose as circular correlation/convolution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericError

__all__ = [
    "DesiredResponse",
    "fft2",
    "ifft2",
    "gaussian_response",
    "normalize_image",
    "cosine_window",
]


def _as_plane(values: np.ndarray, name: str = "plane") -> np.ndarray:
    arr = np.asarray(values)
    if arr.ndim != 2:
        raise ConfigError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.size == 0:
        raise ConfigError(f"{name} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"{name} contains non-finite values")
    return arr


@dataclass(frozen=True)
class DesiredResponse:
    """A synthetic response plane with a known unit peak.

    plane values lie in [0, 1]; the strict maximum 1.0 sits at `peak`
    (row, col); `variance` is the Gaussian spatial variance in pixels^2.
    """

    plane: np.ndarray
    peak: tuple[int, int]
    variance: float


def fft2(plane: np.ndarray) -> np.ndarray:
    """Forward 2-D DFT (unnormalized) of a finite real or complex plane."""
    return np.fft.fft2(_as_plane(plane))


def ifft2(spec: np.ndarray, imag_tol: float = 1e-6) -> np.ndarray:
    """Inverse 2-D DFT with 1/(W*H) normalization, returning the real part.

    A conjugate-symmetric spectrum inverts to a real plane up to round-off;
    imaginary residue above `imag_tol` signals a corrupted spectrum and
    raises instead of being silently discarded.
    """
    spec = _as_plane(np.asarray(spec, dtype=np.complex128), "spectrum")
    plane = np.fft.ifft2(spec)
    residue = float(np.max(np.abs(plane.imag)))
    if residue > imag_tol:
        raise NumericError(
            f"inverse FFT imaginary residue {residue:.3e} exceeds {imag_tol:.1e}; "
            "spectrum is not conjugate-symmetric"
        )
    return plane.real


def gaussian_response(
    width: int, height: int, peak: tuple[int, int], variance: float
) -> DesiredResponse:
    """Gaussian-peaked desired response on a height x width plane.

    value(r, c) = exp(-((r - peak_row)^2 + (c - peak_col)^2) / (2 * variance))
    with the maximum 1.0 exactly at `peak` = (row, col).
    """
    if width < 1 or height < 1:
        raise ConfigError(f"degenerate plane {width}x{height}")
    if variance <= 0:
        raise ConfigError(f"variance must be positive, got {variance}")
    pr, pc = int(peak[0]), int(peak[1])
    if not (0 <= pr < height and 0 <= pc < width):
        raise ConfigError(f"peak {peak} outside {height}x{width} plane")
    rows = np.arange(height, dtype=np.float64)[:, None] - pr
    cols = np.arange(width, dtype=np.float64)[None, :] - pc
    plane = np.exp(-(rows**2 + cols**2) / (2.0 * variance))
    return DesiredResponse(plane=plane, peak=(pr, pc), variance=float(variance))


def normalize_image(plane: np.ndarray) -> np.ndarray:
    """Shift and scale a plane to zero mean and unit population std.

    Constant input is an error, not silent zeros: a zero plane would poison
    filter training invisibly.
    """
    plane = _as_plane(plane).astype(np.float64)
    if plane.size < 2:
        raise ConfigError("normalize_image needs at least 2 pixels")
    std = float(plane.std())
    if std < 1e-12:
        raise NumericError("degenerate image: zero variance, cannot normalize")
    return (plane - plane.mean()) / std


def cosine_window(width: int, height: int) -> np.ndarray:
    """Separable Hann taper: zero on the border, maximal at the center."""
    if width < 2 or height < 2:
        raise ConfigError(f"cosine_window needs width, height >= 2, got {width}x{height}")
    return np.outer(np.hanning(height), np.hanning(width))
