"""Corpus loading, seeded synthetic benchmarks, and image corruption.

Every generator and corruption is a pure function of (input, spec, seed);
per-sample RNG streams are split from the corpus seed so generation order
never matters. Corruption operates on [0, 1] intensities, before any
zero-mean/unit-std normalization done by training code.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ConfigError, DataError

__all__ = [
    "DetectionSample",
    "GeneratedSample",
    "CorruptionSpec",
    "MotionSpec",
    "OcclusionSpec",
    "load_image",
    "save_image",
    "load_detection_corpus",
    "write_detection_manifest",
    "add_gaussian_noise",
    "add_occlusion",
    "apply_corruption",
    "synth_detection_corpus",
    "write_detection_corpus",
    "synth_tracking_sequence",
    "load_tracking_sequence",
    "write_tracking_sequence",
]


# ---------------------------------------------------------------------------
# image and manifest IO


def load_image(path: str | Path) -> np.ndarray:
    """8-bit grayscale image as float64 in [0, 1]."""
    try:
        with Image.open(path) as im:
            return np.asarray(im.convert("L"), dtype=np.float64) / 255.0
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read image {path}: {exc}") from exc


def save_image(plane: np.ndarray, path: str | Path) -> None:
    """Write a [0, 1] plane as an 8-bit grayscale file (format by suffix)."""
    arr = np.asarray(plane, dtype=np.float64)
    if arr.ndim != 2:
        raise DataError(f"image must be 2-D, got shape {arr.shape}")
    quantized = np.clip(np.rint(arr * 255.0), 0, 255).astype(np.uint8)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(quantized, mode="L").save(path)


@dataclass(frozen=True)
class DetectionSample:
    """One annotated image: target peak and optional eye pair, all (row, col)."""

    image_path: Path
    peak: tuple[int, int]
    eyes: tuple[tuple[int, int], tuple[int, int]] | None = None

    def load(self) -> np.ndarray:
        return load_image(self.image_path)


_MANIFEST_FIELDS = ("image", "peak_row", "peak_col")
_EYE_FIELDS = ("le_row", "le_col", "re_row", "re_col")


def load_detection_corpus(manifest: str | Path) -> list[DetectionSample]:
    """Parse and validate a detection manifest CSV.

    Columns: image,peak_row,peak_col and optionally le_row,le_col,re_row,
    re_col. Image paths resolve relative to the manifest's directory;
    coordinates are checked against the actual image dimensions.
    """
    manifest = Path(manifest)
    if not manifest.is_file():
        raise DataError(f"manifest not found: {manifest}")
    base = manifest.parent
    samples: list[DetectionSample] = []
    with open(manifest, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{manifest}: empty file, expected a header row") from None
        header = [h.strip() for h in header]
        if tuple(header[:3]) != _MANIFEST_FIELDS or (
            len(header) > 3 and tuple(header[3:]) != _EYE_FIELDS
        ):
            raise DataError(f"{manifest}: unrecognized header {header}")
        has_eyes = len(header) > 3
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(f"{manifest}:{lineno}: expected {len(header)} fields, got {len(row)}")
            path = (base / row[0]).resolve() if not Path(row[0]).is_absolute() else Path(row[0])
            if not path.is_file():
                raise DataError(f"{manifest}:{lineno}: image not found: {path}")
            try:
                coords = [int(v) for v in row[1:]]
            except ValueError:
                raise DataError(f"{manifest}:{lineno}: non-integer coordinate in {row[1:]}") from None
            try:
                with Image.open(path) as im:
                    width, height = im.size
            except OSError as exc:
                raise DataError(f"{manifest}:{lineno}: unreadable image {path}: {exc}") from exc
            points = [(coords[i], coords[i + 1]) for i in range(0, len(coords), 2)]
            for pr, pc in points:
                if not (0 <= pr < height and 0 <= pc < width):
                    raise DataError(
                        f"{manifest}:{lineno}: point ({pr}, {pc}) outside {height}x{width} image"
                    )
            eyes = (points[1], points[2]) if has_eyes else None
            samples.append(DetectionSample(image_path=path, peak=points[0], eyes=eyes))
    return samples


def write_detection_manifest(samples: list[DetectionSample], path: str | Path) -> None:
    """Write a manifest; image paths go relative to the manifest directory
    when possible so the corpus stays relocatable."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    has_eyes = any(s.eyes is not None for s in samples)
    if has_eyes and not all(s.eyes is not None for s in samples):
        raise DataError("manifest cannot mix samples with and without eye annotations")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_MANIFEST_FIELDS + (_EYE_FIELDS if has_eyes else ()))
        for s in samples:
            try:
                rel = Path(s.image_path).resolve().relative_to(path.parent.resolve())
            except ValueError:
                rel = Path(s.image_path)
            row = [str(rel), s.peak[0], s.peak[1]]
            if has_eyes:
                le, re_ = s.eyes
                row += [le[0], le[1], re_[0], re_[1]]
            writer.writerow(row)


# ---------------------------------------------------------------------------
# corruption


@dataclass(frozen=True)
class CorruptionSpec:
    """Reproducible corruption: Gaussian noise or a blanking rectangle."""

    kind: str
    noise_variance: float = 0.0
    occlusion_fraction: float = 0.25
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("gaussian_noise", "occlusion"):
            raise ConfigError(f"unknown corruption kind {self.kind!r}")
        if self.noise_variance < 0:
            raise ConfigError(f"noise variance must be >= 0, got {self.noise_variance}")
        if self.kind == "occlusion" and not (0 < self.occlusion_fraction < 1):
            raise ConfigError(
                f"occlusion fraction must be in (0, 1), got {self.occlusion_fraction}"
            )


def _check_unit_range(image: np.ndarray) -> np.ndarray:
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim != 2:
        raise DataError(f"image must be 2-D, got shape {arr.shape}")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise DataError("corruption expects intensities scaled to [0, 1]")
    return arr


def add_gaussian_noise(image: np.ndarray, variance: float, seed: int) -> np.ndarray:
    """Add one draw of default_rng(seed).normal(0, sqrt(variance)) and clamp
    to [0, 1]. Deterministic per seed; variance 0 returns the image bitwise."""
    arr = _check_unit_range(image)
    if variance < 0:
        raise ConfigError(f"variance must be >= 0, got {variance}")
    noise = np.random.default_rng(seed).normal(0.0, np.sqrt(variance), arr.shape)
    return np.clip(arr + noise, 0.0, 1.0)


def add_occlusion(image: np.ndarray, fraction: float, seed: int) -> np.ndarray:
    """Blank one axis-aligned rectangle of area fraction*W*H with zeros.

    The aspect ratio (width/height) is drawn uniformly from [0.5, 2] and the
    position uniformly among fitting placements, all from default_rng(seed).
    """
    arr = _check_unit_range(image)
    if not (0 < fraction < 1):
        raise ConfigError(f"fraction must be in (0, 1), got {fraction}")
    height, width = arr.shape
    rng = np.random.default_rng(seed)
    area = fraction * width * height
    aspect = rng.uniform(0.5, 2.0)
    rect_w = max(1, int(round(np.sqrt(area * aspect))))
    rect_h = max(1, int(round(area / rect_w)))
    if rect_h > height or rect_w > width:
        raise DataError(
            f"occlusion rectangle {rect_w}x{rect_h} cannot fit in {width}x{height} image"
        )
    top = int(rng.integers(0, height - rect_h + 1))
    left = int(rng.integers(0, width - rect_w + 1))
    out = arr.copy()
    out[top : top + rect_h, left : left + rect_w] = 0.0
    return out


def apply_corruption(image: np.ndarray, spec: CorruptionSpec, seed: int | None = None) -> np.ndarray:
    """Dispatch on spec.kind; `seed` overrides spec.rng_seed when given."""
    use_seed = spec.rng_seed if seed is None else seed
    if spec.kind == "gaussian_noise":
        return add_gaussian_noise(image, spec.noise_variance, use_seed)
    return add_occlusion(image, spec.occlusion_fraction, use_seed)


# ---------------------------------------------------------------------------
# synthetic corpora


@dataclass(frozen=True)
class GeneratedSample:
    """In-memory synthetic detection sample with exact annotations."""

    image: np.ndarray
    peak: tuple[int, int]
    eyes: tuple[tuple[int, int], tuple[int, int]]


def _smooth_background(height: int, width: int, rng: np.random.Generator) -> np.ndarray:
    """Low-frequency textured field in [0.35, 0.65]."""
    noise = rng.standard_normal((height, width))
    fr = np.fft.fftfreq(height)[:, None]
    fc = np.fft.fftfreq(width)[None, :]
    envelope = np.exp(-(fr**2 + fc**2) / (2.0 * 0.03**2))
    field = np.fft.ifft2(np.fft.fft2(noise) * envelope).real
    peak_mag = np.max(np.abs(field))
    if peak_mag > 0:
        field = field / peak_mag
    return 0.5 + 0.15 * field

_GLYPH_RADIUS = 6  # glyph spans 13x13 pixels


def _target_glyph() -> np.ndarray:
    """Fixed ring-and-bar pattern in [-1, 1]; identical across samples so a
    correlation filter can learn it."""
    r = _GLYPH_RADIUS
    yy, xx = np.mgrid[-r : r + 1, -r : r + 1]
    dist = np.hypot(yy, xx)
    ring = ((dist >= r - 2) & (dist <= r)).astype(np.float64)
    bar_h = (np.abs(yy) <= 1) & (np.abs(xx) <= r - 3)
    bar_v = (np.abs(xx) <= 1) & (np.abs(yy) <= r - 3)
    glyph = ring - 0.9 * (bar_h | bar_v).astype(np.float64)
    glyph[r, r] = 1.0
    return glyph


_EYE_OFFSET = 10  # columns from the peak to each eye mark


def synth_detection_corpus(
    n: int, width: int, height: int, seed: int, contrast: float = 0.35
) -> list[GeneratedSample]:
    """Textured scenes with one glyph target each and a flanking eye pair.

    The stored peak is the rendered glyph center by construction; the eye
    marks sit _EYE_OFFSET columns to each side of it.
    """
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    margin = _GLYPH_RADIUS + _EYE_OFFSET + 2
    if width <= 2 * margin or height <= 2 * margin:
        raise ConfigError(f"degenerate dimensions {width}x{height} for glyph corpus")
    glyph = _target_glyph()
    r = _GLYPH_RADIUS
    samples = []
    for child in np.random.SeedSequence(seed).spawn(n):
        rng = np.random.default_rng(child)
        image = _smooth_background(height, width, rng)
        pr = int(rng.integers(margin, height - margin))
        pc = int(rng.integers(margin, width - margin))
        image[pr - r : pr + r + 1, pc - r : pc + r + 1] += contrast * glyph
        eyes = ((pr, pc - _EYE_OFFSET), (pr, pc + _EYE_OFFSET))
        for er, ec in eyes:
            image[er, ec] = min(1.0, image[er, ec] + 0.25)
        samples.append(GeneratedSample(image=np.clip(image, 0.0, 1.0), peak=(pr, pc), eyes=eyes))
    return samples


def write_detection_corpus(
    samples: list[GeneratedSample], out_dir: str | Path, prefix: str = "sample"
) -> Path:
    """Write PNGs plus a manifest; returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    detection_samples = []
    for i, s in enumerate(samples):
        name = f"{prefix}_{i:04d}.png"
        save_image(s.image, out_dir / name)
        detection_samples.append(
            DetectionSample(image_path=out_dir / name, peak=s.peak, eyes=s.eyes)
        )
    manifest = out_dir / "manifest.csv"
    write_detection_manifest(detection_samples, manifest)
    return manifest


# ---------------------------------------------------------------------------
# synthetic tracking sequences


@dataclass(frozen=True)
class MotionSpec:
    """Linear target motion over a static background."""

    start_bbox: tuple[int, int, int, int]
    velocity: tuple[float, float] = (2.0, 0.0)
    frame_size: tuple[int, int] = (96, 128)  # (height, width)
    contrast: float = 0.35
    allow_exit: bool = False


@dataclass(frozen=True)
class OcclusionSpec:
    """Blank part of the target box on frames start..end inclusive.

    `fraction` of the box area is covered by a full-height band anchored at
    the box's left edge and filled with `fill`.
    """

    start_frame: int
    end_frame: int
    fraction: float = 0.5
    fill: float = 0.0

    def __post_init__(self) -> None:
        if self.start_frame > self.end_frame:
            raise ConfigError("occlusion start_frame must be <= end_frame")
        if not (0 < self.fraction <= 1):
            raise ConfigError(f"occlusion fraction must be in (0, 1], got {self.fraction}")
        if not (0 <= self.fill <= 1):
            raise ConfigError(f"occlusion fill must be in [0, 1], got {self.fill}")


def synth_tracking_sequence(
    n_frames: int,
    motion: MotionSpec,
    occlusion: OcclusionSpec | None = None,
    seed: int = 0,
) -> tuple[list[np.ndarray], list[tuple[int, int, int, int]]]:
    """Target patch translating over a textured background.

    Ground truth is exact by construction: box t is the rendered integer
    position. The occlusion event touches pixel content only; it never
    consumes RNG state, so the clean render of the same seed is identical
    outside the occluded frames.
    """
    if n_frames < 2:
        raise ConfigError(f"need at least 2 frames, got {n_frames}")
    x0, y0, w, h = motion.start_bbox
    if w < 1 or h < 1:
        raise ConfigError(f"degenerate target box {motion.start_bbox}")
    fh, fw = motion.frame_size
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    background = _smooth_background(fh, fw, rng)
    texture = rng.uniform(-1.0, 1.0, (h, w))
    ridge = np.add.outer(
        np.cos(np.linspace(0, 2 * np.pi, h)), np.cos(np.linspace(0, 2 * np.pi, w))
    )
    patch = np.clip(0.5 + motion.contrast * (0.6 * texture + 0.4 * ridge / 2.0), 0.0, 1.0)

    frames: list[np.ndarray] = []
    boxes: list[tuple[int, int, int, int]] = []
    vx, vy = motion.velocity
    for t in range(n_frames):
        x = int(round(x0 + t * vx))
        y = int(round(y0 + t * vy))
        if not (0 <= x <= fw - w and 0 <= y <= fh - h):
            if motion.allow_exit:
                x = min(max(x, 0), fw - w)
                y = min(max(y, 0), fh - h)
            else:
                raise DataError(f"target leaves the frame at t={t} (box x={x}, y={y})")
        frame = background.copy()
        frame[y : y + h, x : x + w] = patch
        if occlusion is not None and occlusion.start_frame <= t <= occlusion.end_frame:
            band = max(1, int(round(w * occlusion.fraction)))
            frame[y : y + h, x : x + band] = occlusion.fill
        frames.append(frame)
        boxes.append((x, y, w, h))
    return frames, boxes


# ---------------------------------------------------------------------------
# tracking-benchmark sequence directories

_GROUND_TRUTH_NAMES = ("groundtruth_rect.txt", "groundtruth.txt")
_FRAME_SUFFIXES = (".png", ".jpg", ".jpeg", ".pgm", ".bmp")


def _frame_sort_key(path: Path) -> tuple[int, str]:
    digits = re.sub(r"\D", "", path.stem)
    return (int(digits) if digits else 1 << 31, path.name)


def read_ground_truth(path: str | Path) -> list[tuple[int, int, int, int]]:
    """Boxes from a benchmark ground-truth file: one 'x,y,w,h' line per
    frame, comma/tab separated, 1-based corner; returned 0-based."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"ground truth file not found: {path}")
    boxes = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        parts = re.split(r"[,\t ]+", line)
        if len(parts) != 4:
            raise DataError(f"{path}:{lineno}: expected 4 integers, got {line!r}")
        try:
            x, y, w, h = (int(float(v)) for v in parts)
        except ValueError:
            raise DataError(f"{path}:{lineno}: non-numeric box {line!r}") from None
        if w < 1 or h < 1:
            raise DataError(f"{path}:{lineno}: degenerate box {line!r}")
        boxes.append((x - 1, y - 1, w, h))
    if not boxes:
        raise DataError(f"{path}: no boxes found")
    return boxes


def load_tracking_sequence(
    seq_dir: str | Path,
) -> tuple[list[Path], list[tuple[int, int, int, int]]]:
    """Frame paths (numerically ordered) and ground-truth boxes of a
    benchmark-layout sequence directory (frames in img/ or flat)."""
    seq_dir = Path(seq_dir)
    if not seq_dir.is_dir():
        raise DataError(f"sequence directory not found: {seq_dir}")
    img_dir = seq_dir / "img" if (seq_dir / "img").is_dir() else seq_dir
    frames = sorted(
        (p for p in img_dir.iterdir() if p.suffix.lower() in _FRAME_SUFFIXES),
        key=_frame_sort_key,
    )
    if not frames:
        raise DataError(f"no frames found under {img_dir}")
    gt_path = next(
        (seq_dir / name for name in _GROUND_TRUTH_NAMES if (seq_dir / name).is_file()), None
    )
    if gt_path is None:
        gt_path = next(iter(sorted(seq_dir.glob("*.txt"))), None)
    if gt_path is None:
        raise DataError(f"no ground-truth file found in {seq_dir}")
    return frames, read_ground_truth(gt_path)


def write_tracking_sequence(
    seq_dir: str | Path,
    frames: list[np.ndarray],
    boxes: list[tuple[int, int, int, int]],
    image_format: str = "png",
) -> None:
    """Write frames to img/ and boxes to groundtruth_rect.txt (1-based)."""
    if len(frames) != len(boxes):
        raise DataError(f"{len(frames)} frames but {len(boxes)} boxes")
    seq_dir = Path(seq_dir)
    for i, frame in enumerate(frames, start=1):
        save_image(frame, seq_dir / "img" / f"{i:04d}.{image_format}")
    lines = [f"{x + 1},{y + 1},{w},{h}" for x, y, w, h in boxes]
    (seq_dir / "groundtruth_rect.txt").write_text("\n".join(lines) + "\n")
