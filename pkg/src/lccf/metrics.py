"""Detection and tracking metrics plus the delimited curve format.

Threshold semantics differ deliberately: localization counts strict
d < tau while precision counts center distance <= threshold; each matches
the protocol it implements.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError

__all__ = [
    "Curve",
    "interocular_distance",
    "localization_rate",
    "pixel_deviation",
    "precision_curve",
    "success_curve",
    "iou",
    "emit_curves",
    "read_curves",
    "SUCCESS_THRESHOLDS",
]

# Standard benchmark overlap grid: 0, 0.05, ..., 1 (21 points).
SUCCESS_THRESHOLDS = tuple(np.round(np.arange(0.0, 1.0001, 0.05), 10))


@dataclass(frozen=True)
class Curve:
    """Fractions over an ascending threshold grid."""

    kind: str
    thresholds: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.thresholds) != len(self.values):
            raise ConfigError("thresholds and values disagree in length")
        if any(b <= a for a, b in zip(self.thresholds, self.thresholds[1:])):
            raise ConfigError("thresholds must be strictly ascending")
        if any(not (0 <= v <= 1) for v in self.values):
            raise ConfigError("curve values must lie in [0, 1]")


def _point(p) -> np.ndarray:
    arr = np.asarray(p, dtype=np.float64)
    if arr.shape != (2,):
        raise ConfigError(f"expected a 2-point, got shape {arr.shape}")
    return arr


def interocular_distance(pred, truth, left_eye, right_eye) -> float:
    """Localization error as a fraction of the eye-to-eye distance."""
    pred, truth = _point(pred), _point(truth)
    le, re = _point(left_eye), _point(right_eye)
    denom = float(np.linalg.norm(le - re))
    if denom < 1e-12:
        raise ConfigError("coincident eyes: interocular distance is zero")
    return float(np.linalg.norm(pred - truth)) / denom


def localization_rate(distances, tau: float) -> float:
    """Fraction of normalized distances strictly below tau."""
    arr = np.asarray(distances, dtype=np.float64)
    if arr.size == 0:
        raise DataError("localization_rate needs at least one distance")
    if tau <= 0:
        raise ConfigError(f"tau must be positive, got {tau}")
    return float(np.mean(arr < tau))


def pixel_deviation(pred, truth) -> float:
    """Euclidean pixel distance between predicted peak and target center."""
    return float(np.linalg.norm(_point(pred) - _point(truth)))


def _centers(boxes: np.ndarray) -> np.ndarray:
    return np.stack([boxes[:, 0] + boxes[:, 2] / 2.0, boxes[:, 1] + boxes[:, 3] / 2.0], axis=1)


def _box_array(boxes, name: str) -> np.ndarray:
    arr = np.asarray(boxes, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 4:
        raise ConfigError(f"{name} must be an (N, 4) box array, got shape {arr.shape}")
    return arr


def precision_curve(predicted, truth, thresholds) -> Curve:
    """Fraction of frames whose center error is <= each threshold."""
    pred = _box_array(predicted, "predicted")
    gt = _box_array(truth, "truth")
    if len(pred) != len(gt):
        raise DataError(f"length mismatch: {len(pred)} predictions vs {len(gt)} truths")
    if len(pred) == 0:
        raise DataError("precision_curve needs at least one frame")
    dist = np.linalg.norm(_centers(pred) - _centers(gt), axis=1)
    grid = tuple(float(t) for t in thresholds)
    values = tuple(float(np.mean(dist <= t)) for t in grid)
    return Curve(kind="precision", thresholds=grid, values=values)


def iou(box_a, box_b) -> float:
    """Intersection-over-union of two (x, y, w, h) boxes with positive area."""
    ax, ay, aw, ah = (float(v) for v in box_a)
    bx, by, bw, bh = (float(v) for v in box_b)
    if aw <= 0 or ah <= 0 or bw <= 0 or bh <= 0:
        raise ConfigError("boxes must have positive area")
    ix = max(0.0, min(ax + aw, bx + bw) - max(ax, bx))
    iy = max(0.0, min(ay + ah, by + bh) - max(ay, by))
    inter = ix * iy
    return inter / (aw * ah + bw * bh - inter)


def success_curve(predicted, truth, thresholds=SUCCESS_THRESHOLDS) -> tuple[Curve, float]:
    """Overlap success per threshold plus its mean (the AUC)."""
    pred = _box_array(predicted, "predicted")
    gt = _box_array(truth, "truth")
    if len(pred) != len(gt):
        raise DataError(f"length mismatch: {len(pred)} predictions vs {len(gt)} truths")
    if len(pred) == 0:
        raise DataError("success_curve needs at least one frame")
    overlaps = np.array([iou(p, t) for p, t in zip(pred, gt)])
    grid = tuple(float(t) for t in thresholds)
    values = tuple(float(np.mean(overlaps >= t)) for t in grid)
    curve = Curve(kind="success", thresholds=grid, values=values)
    return curve, float(np.mean(values))


def emit_curves(curves: list[Curve], path: str | Path, metadata: dict | None = None) -> None:
    """Write curves as CSV: '# key=value' comment lines, a kind,threshold,
    value header, then rows ordered by curve kind and ascending threshold.

    Float formatting uses repr, so a round-trip through read_curves is exact.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        for key in sorted(metadata or {}):
            fh.write(f"# {key}={(metadata or {})[key]}\n")
        writer = csv.writer(fh)
        writer.writerow(["kind", "threshold", "value"])
        for curve in sorted(curves, key=lambda c: c.kind):
            for t, v in zip(curve.thresholds, curve.values):
                writer.writerow([curve.kind, repr(float(t)), repr(float(v))])


def read_curves(path: str | Path) -> tuple[list[Curve], dict]:
    """Parse a file written by emit_curves; returns (curves, metadata)."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"curves file not found: {path}")
    metadata: dict[str, str] = {}
    rows: list[tuple[str, float, float]] = []
    with open(path, newline="") as fh:
        data_lines = []
        for line in fh:
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                metadata[key.strip()] = value
            else:
                data_lines.append(line)
        reader = csv.reader(data_lines)
        header = next(reader, None)
        if header != ["kind", "threshold", "value"]:
            raise DataError(f"{path}: unrecognized curves header {header}")
        for row in reader:
            if not row:
                continue
            if len(row) != 3:
                raise DataError(f"{path}: malformed row {row}")
            rows.append((row[0], float(row[1]), float(row[2])))
    curves = []
    for kind in sorted({r[0] for r in rows}):
        pts = [(t, v) for k, t, v in rows if k == kind]
        curves.append(
            Curve(kind=kind, thresholds=tuple(t for t, _ in pts), values=tuple(v for _, v in pts))
        )
    return curves, metadata
