"""Multi-channel correlation filters in the frequency domain.

The ridge system diagonalizes over frequency bins: each bin d carries an
independent K x K Hermitian solve
    (lambda*I + sum_i X_i(d)^H X_i(d)) h(d) = sum_i X_i(d)^H y_i(d),
equivalent to the dense KD x KD system by its banded structure. The
latent-constrained solver reuses the same solve with a sigma-augmented
diagonal and couples iterations through the subspace projection.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, NumericError
from .features import FeatureConfig, FeatureMap
from .spectral import ifft2
from .subspace import PenaltySchedule, SubspaceHistory, project_subspace, update_penalty

__all__ = [
    "FilterSpectrum",
    "TrainingSet",
    "LcLcfConfig",
    "IterationRecord",
    "solve_mccf",
    "solve_lc_lcf",
    "apply_filter",
    "detect_peak",
    "training_objective",
    "save_model",
    "load_model",
]

_MAGIC = b"LCCF"
_FORMAT_VERSION = 1


@dataclass
class FilterSpectrum:
    """Frequency-domain multi-channel filter: (K, H, W) complex bins plus
    the feature and response descriptors it was trained with."""

    data: np.ndarray
    feature: FeatureConfig = field(default_factory=FeatureConfig)
    response: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.data = np.asarray(self.data, dtype=np.complex128)
        if self.data.ndim != 3:
            raise ConfigError(f"filter data must be (K, H, W), got {self.data.shape}")
        if not np.all(np.isfinite(self.data)):
            raise NumericError("filter spectrum contains non-finite values")

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape[1], self.data.shape[2]


@dataclass
class TrainingSet:
    """Frequency-domain training samples: X of shape (N, K, H, W) and Y of
    shape (N, H, W), both complex, with one shared ridge weight."""

    X: np.ndarray
    Y: np.ndarray
    lam: float
    feature: FeatureConfig = field(default_factory=FeatureConfig)
    response: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.X = np.asarray(self.X, dtype=np.complex128)
        self.Y = np.asarray(self.Y, dtype=np.complex128)
        if self.X.ndim != 4 or self.Y.ndim != 3:
            raise ConfigError(
                f"expected X (N,K,H,W) and Y (N,H,W), got {self.X.shape} and {self.Y.shape}"
            )
        if self.X.shape[0] != self.Y.shape[0] or self.X.shape[2:] != self.Y.shape[1:]:
            raise ConfigError(f"X {self.X.shape} and Y {self.Y.shape} disagree")
        if self.X.shape[0] == 0:
            raise ConfigError("training set is empty")
        if self.lam < 0:
            raise ConfigError(f"lambda must be >= 0, got {self.lam}")
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.Y))):
            raise NumericError("training spectra contain non-finite values")

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @classmethod
    def from_samples(
        cls,
        maps: list[FeatureMap],
        responses: list[np.ndarray],
        lam: float,
        response_info: dict | None = None,
    ) -> "TrainingSet":
        """Build from spatial feature maps and spatial response planes."""
        if not maps or len(maps) != len(responses):
            raise ConfigError("need equally many feature maps and responses, at least one")
        X = np.stack([m.spectra() for m in maps])
        Y = np.stack([np.fft.fft2(np.asarray(r, dtype=np.float64)) for r in responses])
        return cls(X=X, Y=Y, lam=lam, feature=maps[0].config, response=dict(response_info or {}))


@dataclass(frozen=True)
class LcLcfConfig:
    """Latent-constrained linear solver settings."""

    maxiter: int = 12
    sigma0: float = 0.25
    eta: float = 0.7
    lam: float = 1e-4
    initial_fraction: float = 0.5

    def __post_init__(self) -> None:
        if self.maxiter < 1:
            raise ConfigError(f"maxiter must be >= 1, got {self.maxiter}")
        if self.sigma0 <= 0:
            raise ConfigError(f"sigma0 must be > 0, got {self.sigma0}")
        if not (0 < self.eta <= 1):
            raise ConfigError(f"eta must be in (0, 1], got {self.eta}")
        if self.lam < 0:
            raise ConfigError(f"lambda must be >= 0, got {self.lam}")
        if not (0 < self.initial_fraction <= 1):
            raise ConfigError(f"initial_fraction must be in (0, 1], got {self.initial_fraction}")


@dataclass
class IterationRecord:
    """One solver iteration: residual, the sigma used by the solve, the
    subset size solved over, and (optionally) the iterate and projection."""

    iteration: int
    epsilon: float
    sigma: float
    subset_size: int
    h_next: np.ndarray | None = None
    g_prev: np.ndarray | None = None


def _accumulate(X: np.ndarray, Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Normal-equation pieces: A (H,W,K,K) Hermitian and b (H,W,K)."""
    A = np.einsum("nkhw,nlhw->hwkl", np.conj(X), X)
    b = np.einsum("nkhw,nhw->hwk", np.conj(X), Y)
    return A, b


def _solve_bins(A: np.ndarray, b: np.ndarray, shift: float) -> np.ndarray:
    """Solve (A(d) + shift*I) h(d) = b(d) for every bin; returns (K,H,W)."""
    K = A.shape[-1]
    lhs = A + shift * np.eye(K)
    try:
        sol = np.linalg.solve(lhs, b[..., None])[..., 0]
    except np.linalg.LinAlgError:
        raise NumericError(_singular_bin_message(lhs)) from None
    if not np.all(np.isfinite(sol)):
        r, c = np.argwhere(~np.all(np.isfinite(sol), axis=-1))[0]
        raise NumericError(f"non-finite filter solution at frequency bin ({r}, {c})")
    return np.moveaxis(sol, -1, 0)


def _singular_bin_message(lhs: np.ndarray) -> str:
    K = lhs.shape[-1]
    ranks = np.linalg.matrix_rank(lhs)
    bad = np.argwhere(ranks < K)
    if bad.size:
        r, c = bad[0]
        return f"singular system at frequency bin ({r}, {c}): data rank-deficient and lambda too small"
    return "singular system in per-bin solve"


def solve_mccf(ts: TrainingSet) -> FilterSpectrum:
    """Ridge solution of the multi-channel correlation filter."""
    A, b = _accumulate(ts.X, ts.Y)
    h = _solve_bins(A, b, ts.lam)
    return FilterSpectrum(data=h, feature=ts.feature, response=dict(ts.response))


def solve_lc_lcf(
    ts: TrainingSet,
    config: LcLcfConfig,
    extra_history: list[np.ndarray] | None = None,
    keep_iterates: bool = False,
) -> tuple[FilterSpectrum, list[IterationRecord]]:
    """Latent-constrained linear filter over a growing sample subset.

    Starts from the ridge solution on the first floor(initial_fraction*N)
    samples, then iterates the sigma-augmented solve, the penalty schedule
    (scaled mode), and the projection onto stored iterates. The subset grows
    at the start of each iteration on the schedule
    n_t = B0 + floor(t*(N-B0)/maxiter), landing exactly on N at t=maxiter.

    `extra_history` seeds the projection history with additional vectors
    (e.g. a reference solution for certificate experiments). Returns the
    final filter and the per-iteration trace.
    """
    N = ts.n_samples
    B0 = int(config.initial_fraction * N)
    if B0 < 1:
        raise ConfigError(
            f"initial_fraction {config.initial_fraction} of {N} samples leaves an empty subset"
        )

    A, b = _accumulate(ts.X[:B0], ts.Y[:B0])
    h_prev = _solve_bins(A, b, config.lam)

    history = SubspaceHistory()
    for extra in extra_history or []:
        history.push(extra)
    history.push(h_prev)

    g = h_prev.copy()
    schedule = PenaltySchedule(sigma=config.sigma0, eta=config.eta)
    records: list[IterationRecord] = []
    n_prev = B0

    for t in range(1, config.maxiter + 1):
        n_t = B0 + (t * (N - B0)) // config.maxiter
        if n_t > n_prev:
            dA, db = _accumulate(ts.X[n_prev:n_t], ts.Y[n_prev:n_t])
            A += dA
            b += db
            n_prev = n_t
        sigma = schedule.sigma
        rhs = b + sigma * np.moveaxis(g, 0, -1)
        h_next = _solve_bins(A, rhs, config.lam + sigma)
        eps = float(np.linalg.norm(h_next - h_prev))
        records.append(
            IterationRecord(
                iteration=t,
                epsilon=eps,
                sigma=sigma,
                subset_size=n_t,
                h_next=h_next.copy() if keep_iterates else None,
                g_prev=g.copy() if keep_iterates else None,
            )
        )
        schedule = update_penalty(schedule, eps, "scaled")
        g = project_subspace(h_next, history).reshape(h_next.shape)
        history.push(h_next)
        h_prev = h_next

    filt = FilterSpectrum(data=h_prev, feature=ts.feature, response=dict(ts.response))
    return filt, records


def apply_filter(filt: FilterSpectrum, features: FeatureMap) -> np.ndarray:
    """Correlation response plane of the filter over one feature map."""
    if features.channels != filt.channels:
        raise ConfigError(f"feature channels {features.channels} != filter channels {filt.channels}")
    if features.shape != filt.shape:
        raise ConfigError(f"feature grid {features.shape} != filter grid {filt.shape}")
    spec = np.sum(features.spectra() * filt.data, axis=0)
    return ifft2(spec)


def detect_peak(response: np.ndarray) -> tuple[int, int, float]:
    """Global maximum of a response plane.

    Ties break to the smallest row, then the smallest column (C-order
    argmax takes the first occurrence).
    """
    response = np.asarray(response, dtype=np.float64)
    if response.ndim != 2 or response.size == 0:
        raise ConfigError(f"response must be a non-empty 2-D plane, got shape {response.shape}")
    idx = int(np.argmax(response))
    r, c = divmod(idx, response.shape[1])
    return r, c, float(response[r, c])


def training_objective(ts: TrainingSet, filt: FilterSpectrum) -> float:
    """Spatial-domain ridge objective of a filter on a training set:
    sum_i ||sum_k x_ik * h_k - y_i||^2 + lambda * sum_k ||h_k||^2,
    evaluated in the frequency domain (Parseval scales both terms by 1/D).
    """
    if ts.X.shape[1] != filt.channels or ts.X.shape[2:] != filt.data.shape[1:]:
        raise ConfigError("training set and filter dimensions disagree")
    D = filt.data.shape[1] * filt.data.shape[2]
    resid = np.einsum("nkhw,khw->nhw", ts.X, filt.data) - ts.Y
    data_term = float(np.sum(np.abs(resid) ** 2))
    reg_term = float(ts.lam * np.sum(np.abs(filt.data) ** 2))
    return (data_term + reg_term) / D


def save_model(filt: FilterSpectrum, path: str | Path) -> None:
    """Write a filter in the binary model format.

    Layout: magic "LCCF", format version u16, then K, W, H as u32 (all
    little-endian), a u32-length-prefixed UTF-8 JSON descriptor, then
    K*W*H complex values as interleaved little-endian f64 (re, im) pairs,
    row-major within each channel, channel-major overall.
    """
    K, (H, W) = filt.channels, filt.shape
    descriptor = json.dumps(
        {"feature": filt.feature.to_dict(), "response": filt.response}, sort_keys=True
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<HIII", _FORMAT_VERSION, K, W, H))
        fh.write(struct.pack("<I", len(descriptor)))
        fh.write(descriptor)
        fh.write(np.ascontiguousarray(filt.data).astype("<c16").tobytes())


def load_model(path: str | Path) -> FilterSpectrum:
    """Read a filter written by save_model; validates magic and version."""
    blob = Path(path).read_bytes()
    if blob[:4] != _MAGIC:
        raise DataError(f"{path}: not a model file (bad magic {blob[:4]!r})")
    try:
        version, K, W, H = struct.unpack_from("<HIII", blob, 4)
        offset = 4 + struct.calcsize("<HIII")
        (desc_len,) = struct.unpack_from("<I", blob, offset)
        offset += 4
        descriptor = json.loads(blob[offset : offset + desc_len].decode("utf-8"))
        offset += desc_len
    except (struct.error, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: truncated or corrupt model header") from exc
    if version != _FORMAT_VERSION:
        raise DataError(f"{path}: unsupported model format version {version}")
    expected = K * W * H * 16
    payload = blob[offset:]
    if len(payload) != expected:
        raise DataError(f"{path}: expected {expected} payload bytes, found {len(payload)}")
    data = np.frombuffer(payload, dtype="<c16").astype(np.complex128).reshape(K, H, W)
    return FilterSpectrum(
        data=data,
        feature=FeatureConfig.from_dict(descriptor.get("feature", {})),
        response=descriptor.get("response", {}),
    )
