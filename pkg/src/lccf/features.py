"""Feature extraction: grayscale passthrough and a compact HOG variant.

HOG here uses unsigned orientations on [0, pi) with bin centers at multiples
of pi/orientations, linear interpolation between the two nearest centers,
centered-difference gradients with replicated borders, and L2 block
normalization with a small epsilon regularizer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .spectral import _as_plane

__all__ = ["FeatureConfig", "FeatureMap", "extract_gray", "extract_hog", "extract_features"]

_BLOCK_EPS = 1e-5


@dataclass(frozen=True)
class FeatureConfig:
    """Extraction settings: `kind` is "gray" or "hog"; `cell` and `block`
    are measured in pixels and block must be an integer multiple of cell."""

    kind: str = "gray"
    orientations: int = 5
    cell: tuple[int, int] = (5, 5)
    block: tuple[int, int] = (5, 5)

    def __post_init__(self) -> None:
        if self.kind not in ("gray", "hog"):
            raise ConfigError(f"unknown feature kind {self.kind!r}")
        if self.orientations < 1:
            raise ConfigError("orientations must be >= 1")
        if min(self.cell) < 1 or min(self.block) < 1:
            raise ConfigError("cell and block dimensions must be >= 1")
        if self.kind == "hog":
            if self.cell[0] != self.cell[1]:
                raise ConfigError("hog cells must be square (displacements scale by one cell size)")
            if self.block[0] % self.cell[0] or self.block[1] % self.cell[1]:
                raise ConfigError(f"block {self.block} is not a multiple of cell {self.cell}")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "orientations": self.orientations,
            "cell": list(self.cell),
            "block": list(self.block),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureConfig":
        try:
            return cls(
                kind=d["kind"],
                orientations=int(d["orientations"]),
                cell=tuple(d["cell"]),
                block=tuple(d["block"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed feature descriptor: {d!r}") from exc


@dataclass
class FeatureMap:
    """K-channel feature tensor of shape (K, rows, cols) on a cell grid."""

    data: np.ndarray
    cell_size: int
    config: FeatureConfig = field(default_factory=FeatureConfig)

    def __post_init__(self) -> None:
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 3:
            raise ConfigError(f"feature data must be (K, rows, cols), got {self.data.shape}")
        if not np.all(np.isfinite(self.data)):
            raise ConfigError("feature data contains non-finite values")

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape[1], self.data.shape[2]

    def spectra(self) -> np.ndarray:
        """Per-channel forward DFT, shape (K, rows, cols) complex."""
        return np.fft.fft2(self.data, axes=(-2, -1))


def extract_gray(
    image: np.ndarray, config: FeatureConfig, window: np.ndarray | None = None
) -> FeatureMap:
    """Single-channel passthrough at cell size 1, optionally windowed."""
    image = _as_plane(image, "image").astype(np.float64)
    if window is not None:
        if window.shape != image.shape:
            raise ConfigError(f"window shape {window.shape} != image shape {image.shape}")
        image = image * window
    return FeatureMap(data=image[None, :, :], cell_size=1, config=config)


def extract_hog(image: np.ndarray, config: FeatureConfig) -> FeatureMap:
    """Orientation-histogram features on a floor(dims/cell) cell grid.

    Channels are the orientation bins; each cell's histogram is weighted by
    gradient magnitude and normalized over its (block/cell)-tile of cells.
    """
    image = _as_plane(image, "image").astype(np.float64)
    ch, cw = config.cell
    rows, cols = image.shape
    n_cr, n_cc = rows // ch, cols // cw
    if n_cr < 1 or n_cc < 1:
        raise ConfigError(f"image {rows}x{cols} smaller than one {ch}x{cw} cell")

    padded = np.pad(image, 1, mode="edge")
    gx = padded[1:-1, 2:] - padded[1:-1, :-2]
    gy = padded[2:, 1:-1] - padded[:-2, 1:-1]
    mag = np.hypot(gx, gy)
    theta = np.mod(np.arctan2(gy, gx), np.pi)  # unsigned, in [0, pi)

    nbins = config.orientations
    bin_width = np.pi / nbins
    pos = theta / bin_width
    lower = np.floor(pos).astype(np.intp)
    frac = pos - lower

    # Trailing pixels beyond the last full cell are dropped.
    sl = np.s_[: n_cr * ch, : n_cc * cw]
    cell_r = (np.arange(n_cr * ch) // ch)[:, None].repeat(n_cc * cw, axis=1)
    cell_c = (np.arange(n_cc * cw) // cw)[None, :].repeat(n_cr * ch, axis=0)

    hist = np.zeros((nbins, n_cr, n_cc), dtype=np.float64)
    np.add.at(hist, (lower[sl] % nbins, cell_r, cell_c), ((1.0 - frac) * mag)[sl])
    np.add.at(hist, ((lower[sl] + 1) % nbins, cell_r, cell_c), (frac * mag)[sl])

    hist /= _block_divisors(hist, config)
    return FeatureMap(data=hist, cell_size=ch, config=config)


def _block_divisors(hist: np.ndarray, config: FeatureConfig) -> np.ndarray:
    """L2 norms over non-overlapping block tiles, one divisor per cell."""
    br = config.block[0] // config.cell[0]
    bc = config.block[1] // config.cell[1]
    _, n_cr, n_cc = hist.shape
    energy = np.sum(hist**2, axis=0)
    div = np.empty((n_cr, n_cc), dtype=np.float64)
    for r0 in range(0, n_cr, br):
        for c0 in range(0, n_cc, bc):
            tile = np.s_[r0 : r0 + br, c0 : c0 + bc]
            div[tile] = np.sqrt(np.sum(energy[tile]) + _BLOCK_EPS**2)
    return div[None, :, :]


def extract_features(
    image: np.ndarray, config: FeatureConfig, window: np.ndarray | None = None
) -> FeatureMap:
    """Dispatch on config.kind; `window` tapers the channels after extraction."""
    if config.kind == "gray":
        return extract_gray(image, config, window=window)
    fmap = extract_hog(image, config)
    if window is not None:
        if window.shape != fmap.shape:
            raise ConfigError(f"window shape {window.shape} != feature grid {fmap.shape}")
        fmap.data = fmap.data * window[None, :, :]
    return fmap
