"""Batch command-line front end: lccf train|detect|eval-detect|track|eval-track|corrupt|synth.

Reproducibility is the product: every run directory receives the fully
resolved configuration and a machine-readable summary, outputs carry no
timestamps, and a rerun with the same seed and inputs is byte-identical.
Config files are JSON with flat dotted keys ("train.solver"); command-line
flags override file values.

Exit codes: 2 configuration error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import data as dsets
from . import kernel as kcf
from . import linear as lcf
from . import metrics as mx
from .errors import ConfigError, DataError, ToolkitError
from .features import FeatureConfig, extract_features
from .spectral import gaussian_response, normalize_image

_BOXES_HEADER = ["frame_index", "x", "y", "w", "h", "peak_score", "sigma", "epsilon"]
_DETECTIONS_HEADER = ["image", "pred_row", "pred_col", "score"]


# ---------------------------------------------------------------------------
# config plumbing


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        cfg = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"config file {path} must hold a JSON object of dotted keys")
    return cfg


def _resolve(command: str, defaults: dict, file_cfg: dict, args: argparse.Namespace) -> dict:
    """default < config-file < explicit flag, keyed '<command>.<name>'."""
    resolved = {}
    for name, default in defaults.items():
        value = default
        key = f"{command}.{name}"
        if key in file_cfg:
            value = file_cfg[key]
        flag = getattr(args, name.replace("-", "_"), None)
        if flag is not None:
            value = flag
        resolved[key] = value
    unknown = [k for k in file_cfg if k.split(".", 1)[0] == command and k not in resolved]
    if unknown:
        raise ConfigError(f"unknown config keys for {command}: {unknown}")
    return resolved


def _out_dir(args: argparse.Namespace) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, obj: dict) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _finish_run(out: Path, resolved: dict, summary: dict) -> None:
    _write_json(out / "resolved_config.json", resolved)
    _write_json(out / "summary.json", summary)


def _feature_config(kind: str, cell: int | None, orientations: int) -> FeatureConfig:
    if kind == "gray":
        size = 1 if cell is None else int(cell)
        return FeatureConfig(kind="gray", cell=(size, size), block=(size, size))
    size = 4 if cell is None else int(cell)
    return FeatureConfig(
        kind="hog", orientations=int(orientations), cell=(size, size), block=(size, size)
    )


# ---------------------------------------------------------------------------
# train / detect / eval-detect


_TRAIN_DEFAULTS = {
    "solver": "mccf",
    "feature": "gray",
    "cell": 5,
    "orientations": 5,
    "lambda": 1e-4,
    "maxiter": 12,
    "sigma0": 0.25,
    "eta": 0.7,
    "initial-fraction": 0.5,
    "response-variance": 2.0,
    "seed": 0,
}


def _training_inputs(
    samples: list[dsets.DetectionSample], feature: FeatureConfig, response_variance: float
) -> tuple[list, list]:
    maps, responses = [], []
    shape = None
    cell = feature.cell[0] if feature.kind == "hog" else 1
    for s in samples:
        image = normalize_image(s.load())
        if shape is None:
            shape = image.shape
        elif image.shape != shape:
            raise DataError(f"{s.image_path}: image dims {image.shape} differ from {shape}")
        fmap = extract_features(image, feature)
        gh, gw = fmap.shape
        peak = (s.peak[0] // cell, s.peak[1] // cell)
        if not (peak[0] < gh and peak[1] < gw):
            raise DataError(f"{s.image_path}: peak {s.peak} falls outside the feature grid")
        resp = gaussian_response(gw, gh, peak, response_variance / (cell * cell))
        maps.append(fmap)
        responses.append(resp.plane)
    return maps, responses


def cmd_train(args: argparse.Namespace) -> int:
    resolved = _resolve("train", _TRAIN_DEFAULTS, _load_config_file(args.config), args)
    out = _out_dir(args)
    get = lambda name: resolved[f"train.{name}"]
    solver = get("solver")
    if solver not in ("mccf", "lc-lcf"):
        raise ConfigError(f"unknown solver {solver!r}")
    feature = _feature_config(get("feature"), get("cell"), get("orientations"))

    samples = dsets.load_detection_corpus(args.manifest)
    if not samples:
        raise DataError(f"{args.manifest}: training needs at least one sample")
    order = np.random.default_rng(int(get("seed"))).permutation(len(samples))
    samples = [samples[i] for i in order]

    maps, responses = _training_inputs(samples, feature, float(get("response-variance")))
    ts = lcf.TrainingSet.from_samples(
        maps,
        responses,
        lam=float(get("lambda")),
        response_info={"kind": "gaussian", "variance": float(get("response-variance"))},
    )

    if solver == "mccf":
        filt, records = lcf.solve_mccf(ts), []
    else:
        config = lcf.LcLcfConfig(
            maxiter=int(get("maxiter")),
            sigma0=float(get("sigma0")),
            eta=float(get("eta")),
            lam=float(get("lambda")),
            initial_fraction=float(get("initial-fraction")),
        )
        filt, records = lcf.solve_lc_lcf(ts, config)

    model_path = out / "model.lccf"
    lcf.save_model(filt, model_path)
    with open(out / "trace.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "epsilon", "sigma", "subset_size"])
        for r in records:
            writer.writerow([r.iteration, repr(r.epsilon), repr(r.sigma), r.subset_size])
    outputs = ["model.lccf", "trace.csv"]
    if records:
        from .report import render_trace

        render_trace(records, out / "figures" / "trace.png")
        outputs.append("figures/trace.png")

    resolved["command"] = "train"
    _finish_run(
        out,
        resolved,
        {
            "command": "train",
            "solver": solver,
            "n_samples": len(samples),
            "objective": lcf.training_objective(ts, filt),
            "iterations": len(records),
            "outputs": outputs,
        },
    )
    return 0


def cmd_detect(args: argparse.Namespace) -> int:
    resolved = _resolve("detect", {}, _load_config_file(args.config), args)
    out = _out_dir(args)
    filt = lcf.load_model(args.model)
    samples = dsets.load_detection_corpus(args.manifest)
    cell = filt.feature.cell[0] if filt.feature.kind == "hog" else 1

    rows = []
    for s in samples:
        image = normalize_image(s.load())
        fmap = extract_features(image, filt.feature)
        if fmap.channels != filt.channels or fmap.shape != filt.shape:
            raise ConfigError(
                f"{s.image_path}: feature grid {fmap.channels}x{fmap.shape} incompatible "
                f"with model {filt.channels}x{filt.shape}"
            )
        r, c, score = lcf.detect_peak(lcf.apply_filter(filt, fmap))
        rows.append([str(s.image_path), r * cell + cell // 2, c * cell + cell // 2, repr(score)])

    with open(out / "detections.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_DETECTIONS_HEADER)
        writer.writerows(rows)

    resolved["command"] = "detect"
    _finish_run(
        out,
        resolved,
        {"command": "detect", "n_images": len(rows), "outputs": ["detections.csv"]},
    )
    return 0


def _parse_grid(spec: str) -> list[float]:
    try:
        start, step, stop = (float(v) for v in spec.split(":"))
    except ValueError:
        raise ConfigError(f"grid must be start:step:stop, got {spec!r}") from None
    if step <= 0 or stop < start:
        raise ConfigError(f"bad grid {spec!r}")
    return [float(t) for t in np.arange(start, stop + step * 1e-9, step)]


def _read_detections(path: str | Path) -> dict[str, tuple[int, int]]:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"detections file not found: {path}")
    preds = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != _DETECTIONS_HEADER:
            raise DataError(f"{path}: unrecognized detections header {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                preds[row[0]] = (int(row[1]), int(row[2]))
            except (IndexError, ValueError):
                raise DataError(f"{path}:{lineno}: malformed detection row {row}") from None
    return preds


def cmd_eval_detect(args: argparse.Namespace) -> int:
    resolved = _resolve(
        "eval-detect", {"tau-grid": "0.02:0.02:0.3"}, _load_config_file(args.config), args
    )
    out = _out_dir(args)
    taus = _parse_grid(resolved["eval-detect.tau-grid"])
    preds = _read_detections(args.detections)
    samples = dsets.load_detection_corpus(args.manifest)

    matched = []
    for s in samples:
        key = str(s.image_path)
        if key not in preds:
            raise DataError(f"no detection row for manifest image {key}")
        matched.append((s, preds.pop(key)))
    if preds:
        raise DataError(f"detections reference images absent from the manifest: {sorted(preds)[:3]}")
    if not matched:
        raise DataError("nothing to evaluate: empty manifest")

    summary: dict = {"command": "eval-detect", "n_images": len(matched)}
    outputs = []
    if all(s.eyes is not None for s, _ in matched):
        distances = [
            mx.interocular_distance(pred, s.peak, s.eyes[0], s.eyes[1]) for s, pred in matched
        ]
        curve = mx.Curve(
            kind="localization",
            thresholds=tuple(taus),
            values=tuple(mx.localization_rate(distances, t) for t in taus),
        )
        mx.emit_curves([curve], out / "curves.csv", metadata={"n_images": len(matched)})
        from .report import render_curves

        render_curves([curve], out / "figures" / "curves.png")
        outputs += ["curves.csv", "figures/curves.png"]
        summary["mean_distance"] = float(np.mean(distances))
    else:
        deviations = [(str(s.image_path), mx.pixel_deviation(pred, s.peak)) for s, pred in matched]
        with open(out / "deviations.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["image", "deviation"])
            for name, dev in deviations:
                writer.writerow([name, repr(dev)])
        devs = np.array([d for _, d in deviations])
        summary["pixel_deviation"] = {
            "mean": float(devs.mean()),
            "median": float(np.median(devs)),
            "max": float(devs.max()),
        }
        outputs.append("deviations.csv")

    summary["outputs"] = outputs
    resolved["command"] = "eval-detect"
    _finish_run(out, resolved, summary)
    return 0


# ---------------------------------------------------------------------------
# track / eval-track


_TRACK_DEFAULTS = {
    "tracker": "lc-kcf",
    "lambda": 1e-4,
    "sigma0": 1e-4,
    "c": 2.0,
    "T": 16,
    "padding": 1.5,
    "kernel-sigma": 0.5,
    "rho": 0.1,
    "feature": "gray",
    "cell": None,
    "orientations": 5,
}


def cmd_track(args: argparse.Namespace) -> int:
    resolved = _resolve("track", _TRACK_DEFAULTS, _load_config_file(args.config), args)
    out = _out_dir(args)
    get = lambda name: resolved[f"track.{name}"]
    tracker = get("tracker")
    if tracker not in ("kcf", "lc-kcf"):
        raise ConfigError(f"unknown tracker {tracker!r}")
    degenerate = tracker == "kcf"
    if degenerate:
        # Plain-KCF mode: no latent constraint, sigma pinned to zero.
        resolved["track.sigma0"] = 0.0
    config = kcf.TrackerConfig(
        lam=float(get("lambda")),
        sigma0=float(resolved["track.sigma0"]),
        c=float(get("c")),
        T=int(get("T")),
        padding=float(get("padding")),
        kernel_sigma=float(get("kernel-sigma")),
        rho=float(get("rho")),
        feature=_feature_config(get("feature"), get("cell"), get("orientations")),
        latent=not degenerate,
    )

    frame_paths, gt_boxes = dsets.load_tracking_sequence(args.sequence)
    frames = [dsets.load_image(p) for p in frame_paths]
    records = kcf.track_sequence(frames, gt_boxes[0], config)

    with open(out / "boxes.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_BOXES_HEADER)
        for r in records:
            x, y, w, h = r.bbox
            writer.writerow(
                [r.frame_index, x + 1, y + 1, w, h, repr(r.score), repr(r.sigma), repr(r.epsilon)]
            )

    resolved["command"] = "track"
    _finish_run(
        out,
        resolved,
        {
            "command": "track",
            "tracker": tracker,
            "n_frames": len(records),
            "final_sigma": records[-1].sigma,
            "outputs": ["boxes.csv"],
        },
    )
    return 0


def _read_boxes_csv(path: str | Path) -> list[tuple[int, int, int, int]]:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"boxes file not found: {path}")
    boxes = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != _BOXES_HEADER:
            raise DataError(f"{path}: unrecognized boxes header {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                x, y, w, h = (int(v) for v in row[1:5])
            except (IndexError, ValueError):
                raise DataError(f"{path}:{lineno}: malformed box row {row}") from None
            boxes.append((x - 1, y - 1, w, h))
    if not boxes:
        raise DataError(f"{path}: no boxes found")
    return boxes


def cmd_eval_track(args: argparse.Namespace) -> int:
    resolved = _resolve(
        "eval-track", {"precision-max": 50}, _load_config_file(args.config), args
    )
    out = _out_dir(args)
    pred = _read_boxes_csv(args.boxes)
    truth_path = Path(args.truth)
    if truth_path.is_dir():
        _, truth = dsets.load_tracking_sequence(truth_path)
    else:
        truth = dsets.read_ground_truth(truth_path)
    if len(pred) != len(truth):
        raise DataError(f"length mismatch: {len(pred)} predictions vs {len(truth)} truth boxes")

    pmax = int(resolved["eval-track.precision-max"])
    precision = mx.precision_curve(pred, truth, thresholds=range(1, pmax + 1))
    success, auc = mx.success_curve(pred, truth)
    p20 = precision.values[19] if pmax >= 20 else precision.values[-1]
    mx.emit_curves(
        [precision, success],
        out / "curves.csv",
        metadata={"auc": auc, "n_frames": len(pred), "precision_at_20": p20},
    )
    from .report import render_curves

    render_curves([precision, success], out / "figures" / "curves.png")

    resolved["command"] = "eval-track"
    _finish_run(
        out,
        resolved,
        {
            "command": "eval-track",
            "n_frames": len(pred),
            "auc": auc,
            "precision_at_20": p20,
            "outputs": ["curves.csv", "figures/curves.png"],
        },
    )
    return 0


# ---------------------------------------------------------------------------
# corrupt / synth


_CORRUPT_DEFAULTS = {"kind": None, "variance": 0.05, "fraction": 0.25, "seed": 0}


def cmd_corrupt(args: argparse.Namespace) -> int:
    resolved = _resolve("corrupt", _CORRUPT_DEFAULTS, _load_config_file(args.config), args)
    out = _out_dir(args)
    get = lambda name: resolved[f"corrupt.{name}"]
    if get("kind") is None:
        raise ConfigError("corrupt requires --kind {gaussian_noise,occlusion}")
    spec = dsets.CorruptionSpec(
        kind=get("kind"),
        noise_variance=float(get("variance")),
        occlusion_fraction=float(get("fraction")),
        rng_seed=int(get("seed")),
    )
    samples = dsets.load_detection_corpus(args.manifest)
    if not samples:
        raise DataError(f"{args.manifest}: nothing to corrupt")

    corrupted = []
    children = np.random.SeedSequence(int(get("seed"))).spawn(len(samples))
    for i, (s, child) in enumerate(zip(samples, children)):
        image = dsets.apply_corruption(s.load(), spec, seed=child)
        path = out / "images" / f"corrupt_{i:04d}.png"
        dsets.save_image(image, path)
        corrupted.append(dsets.DetectionSample(image_path=path, peak=s.peak, eyes=s.eyes))

    dsets.write_detection_manifest(samples + corrupted, out / "manifest.csv")
    dsets.write_detection_manifest(corrupted, out / "corrupted_only.csv")

    resolved["command"] = "corrupt"
    _finish_run(
        out,
        resolved,
        {
            "command": "corrupt",
            "kind": spec.kind,
            "n_clean": len(samples),
            "n_corrupted": len(corrupted),
            "outputs": ["manifest.csv", "corrupted_only.csv", "images/"],
        },
    )
    return 0


_SYNTH_DEFAULTS = {
    "kind": None,
    "n": 10,
    "width": 128,
    "height": 128,
    "contrast": 0.35,
    "seed": 0,
    "frames": 60,
    "start-box": "10,36,24,24",
    "velocity": "2,0",
    "occlude-start": -1,
    "occlude-end": -1,
    "occlude-fraction": 0.5,
    "occlude-fill": 0.0,
}


def _parse_ints(spec: str, n: int, what: str) -> tuple:
    try:
        values = tuple(float(v) for v in spec.split(","))
    except ValueError:
        raise ConfigError(f"{what} must be {n} comma-separated numbers, got {spec!r}") from None
    if len(values) != n:
        raise ConfigError(f"{what} must have {n} components, got {spec!r}")
    return values


def cmd_synth(args: argparse.Namespace) -> int:
    resolved = _resolve("synth", _SYNTH_DEFAULTS, _load_config_file(args.config), args)
    out = _out_dir(args)
    get = lambda name: resolved[f"synth.{name}"]
    kind = get("kind")
    if kind == "detect":
        samples = dsets.synth_detection_corpus(
            int(get("n")),
            int(get("width")),
            int(get("height")),
            int(get("seed")),
            contrast=float(get("contrast")),
        )
        manifest = dsets.write_detection_corpus(samples, out)
        summary = {
            "command": "synth",
            "kind": "detect",
            "n_samples": len(samples),
            "outputs": [manifest.name],
        }
    elif kind == "track":
        x, y, w, h = (int(v) for v in _parse_ints(get("start-box"), 4, "start-box"))
        vx, vy = _parse_ints(get("velocity"), 2, "velocity")
        motion = dsets.MotionSpec(
            start_bbox=(x, y, w, h),
            velocity=(vx, vy),
            frame_size=(int(get("height")), int(get("width"))),
            contrast=float(get("contrast")),
        )
        occlusion = None
        if int(get("occlude-start")) >= 0:
            occlusion = dsets.OcclusionSpec(
                start_frame=int(get("occlude-start")),
                end_frame=int(get("occlude-end")),
                fraction=float(get("occlude-fraction")),
                fill=float(get("occlude-fill")),
            )
        frames, boxes = dsets.synth_tracking_sequence(
            int(get("frames")), motion, occlusion, seed=int(get("seed"))
        )
        dsets.write_tracking_sequence(out, frames, boxes)
        summary = {
            "command": "synth",
            "kind": "track",
            "n_frames": len(frames),
            "outputs": ["img/", "groundtruth_rect.txt"],
        }
    else:
        raise ConfigError("synth requires --kind {detect,track}")

    resolved["command"] = "synth"
    _finish_run(out, resolved, summary)
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file with flat dotted keys")
    parser.add_argument("--out-dir", required=True, help="run directory for all outputs")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lccf",
        description="Correlation-filter training, tracking, and evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a detection filter from a manifest")
    p.add_argument("manifest")
    p.add_argument("--solver", choices=["mccf", "lc-lcf"])
    p.add_argument("--feature", choices=["gray", "hog"])
    p.add_argument("--cell", type=int)
    p.add_argument("--orientations", type=int)
    p.add_argument("--lambda", dest="lambda_", type=float)
    p.add_argument("--maxiter", type=int)
    p.add_argument("--sigma0", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--initial-fraction", type=float)
    p.add_argument("--response-variance", type=float)
    p.add_argument("--seed", type=int)
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("detect", help="run a trained filter over a manifest")
    p.add_argument("model")
    p.add_argument("manifest")
    _add_common(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("eval-detect", help="localization curves from detections")
    p.add_argument("detections")
    p.add_argument("manifest")
    p.add_argument("--tau-grid", help="start:step:stop, default 0.02:0.02:0.3")
    _add_common(p)
    p.set_defaults(func=cmd_eval_detect)

    p = sub.add_parser("track", help="track a benchmark-layout sequence directory")
    p.add_argument("sequence")
    p.add_argument("--tracker", choices=["kcf", "lc-kcf"])
    p.add_argument("--lambda", dest="lambda_", type=float)
    p.add_argument("--sigma0", type=float)
    p.add_argument("--c", type=float)
    p.add_argument("--T", type=int)
    p.add_argument("--padding", type=float)
    p.add_argument("--kernel-sigma", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--feature", choices=["gray", "hog"])
    p.add_argument("--cell", type=int)
    p.add_argument("--orientations", type=int)
    _add_common(p)
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("eval-track", help="precision/success curves from boxes")
    p.add_argument("boxes")
    p.add_argument("truth", help="ground-truth file or sequence directory")
    p.add_argument("--precision-max", type=int)
    _add_common(p)
    p.set_defaults(func=cmd_eval_track)

    p = sub.add_parser("corrupt", help="corrupt a corpus and merge manifests")
    p.add_argument("manifest")
    p.add_argument("--kind", choices=["gaussian_noise", "occlusion"])
    p.add_argument("--variance", type=float)
    p.add_argument("--fraction", type=float)
    p.add_argument("--seed", type=int)
    _add_common(p)
    p.set_defaults(func=cmd_corrupt)

    p = sub.add_parser("synth", help="generate a synthetic corpus or sequence")
    p.add_argument("--kind", choices=["detect", "track"])
    p.add_argument("--n", type=int)
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.add_argument("--contrast", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--frames", type=int)
    p.add_argument("--start-box")
    p.add_argument("--velocity")
    p.add_argument("--occlude-start", type=int)
    p.add_argument("--occlude-end", type=int)
    p.add_argument("--occlude-fraction", type=float)
    p.add_argument("--occlude-fill", type=float)
    _add_common(p)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    # argparse stores --lambda as lambda_; map it back for resolution.
    if hasattr(args, "lambda_"):
        setattr(args, "lambda", args.lambda_)
    try:
        return args.func(args)
    except ToolkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
