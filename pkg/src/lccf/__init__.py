"""Latent-constrained correlation filters: training, tracking, evaluation."""

from .errors import ConfigError, DataError, NumericError, ToolkitError
from .features import FeatureConfig, FeatureMap, extract_features, extract_gray, extract_hog
from .kernel import (
    TrackRecord,
    TrackerConfig,
    TrackerState,
    init_tracker,
    kernel_autocorrelation,
    kernel_crosscorrelation,
    lc_kcf_alpha_update,
    solve_kcf,
    track_sequence,
    track_step,
)
from .linear import (
    FilterSpectrum,
    IterationRecord,
    LcLcfConfig,
    TrainingSet,
    apply_filter,
    detect_peak,
    load_model,
    save_model,
    solve_lc_lcf,
    solve_mccf,
    training_objective,
)
from .metrics import (
    Curve,
    interocular_distance,
    iou,
    localization_rate,
    pixel_deviation,
    precision_curve,
    success_curve,
)
from .spectral import cosine_window, fft2, gaussian_response, ifft2, normalize_image
from .subspace import (
    PenaltySchedule,
    SubspaceHistory,
    convergence_certificate,
    project_subspace,
    update_penalty,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "Curve",
    "DataError",
    "FeatureConfig",
    "FeatureMap",
    "FilterSpectrum",
    "IterationRecord",
    "LcLcfConfig",
    "NumericError",
    "PenaltySchedule",
    "SubspaceHistory",
    "ToolkitError",
    "TrackRecord",
    "TrackerConfig",
    "TrackerState",
    "TrainingSet",
    "apply_filter",
    "convergence_certificate",
    "cosine_window",
    "detect_peak",
    "extract_features",
    "extract_gray",
    "extract_hog",
    "fft2",
    "gaussian_response",
    "ifft2",
    "init_tracker",
    "interocular_distance",
    "iou",
    "kernel_autocorrelation",
    "kernel_crosscorrelation",
    "lc_kcf_alpha_update",
    "load_model",
    "localization_rate",
    "normalize_image",
    "pixel_deviation",
    "precision_curve",
    "project_subspace",
    "save_model",
    "solve_kcf",
    "solve_lc_lcf",
    "solve_mccf",
    "success_curve",
    "track_sequence",
    "track_step",
    "training_objective",
    "update_penalty",
]
