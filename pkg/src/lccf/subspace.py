"""Subspace-constrained ADMM machinery shared by the linear and kernelized
solvers: the inverse-distance projection onto stored iterates, the penalty
schedule, and the empirical convergence certificate.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace
from typing import Iterator

import numpy as np

from .errors import ConfigError

__all__ = [
    "SubspaceHistory",
    "PenaltySchedule",
    "project_subspace",
    "update_penalty",
    "convergence_certificate",
]

# Distances below this are treated as exact hits; the projection then
# returns the matching entry verbatim (the inverse-distance limit).
_ZERO_DISTANCE = 1e-12


class SubspaceHistory:
    """Ordered store of past solution vectors defining the latent subspace.

    With a capacity T the store keeps the T most recent entries, evicting
    oldest first. Entries are flattened complex vectors of one shared length.
    """

    def __init__(self, capacity: int | None = None) -> None:
        if capacity is not None and capacity < 1:
            raise ConfigError(f"history capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._entries: deque[np.ndarray] = deque(maxlen=capacity)

    def push(self, vector: np.ndarray) -> None:
        vec = np.asarray(vector, dtype=np.complex128).ravel().copy()
        if self._entries and vec.size != self._entries[0].size:
            raise ConfigError(
                f"entry length {vec.size} != history length {self._entries[0].size}"
            )
        self._entries.append(vec)

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[np.ndarray]:
        return iter(self._entries)

    def entries(self) -> list[np.ndarray]:
        return list(self._entries)


def project_subspace(current: np.ndarray, history: SubspaceHistory) -> np.ndarray:
    """Inverse-distance-weighted convex combination of history entries.

    Weights are w_i = (1/d_i) / sum_j (1/d_j) with d_i the Euclidean
    distance from `current` to entry i; an entry at (numerically) zero
    distance is returned verbatim. The output lies in the span of the
    stored entries and the weights form a convex combination.
    """
    if len(history) == 0:
        raise ConfigError("cannot project onto an empty history")
    cur = np.asarray(current, dtype=np.complex128).ravel()
    entries = history.entries()
    if cur.size != entries[0].size:
        raise ConfigError(f"vector length {cur.size} != history length {entries[0].size}")
    dists = np.array([np.linalg.norm(cur - e) for e in entries])
    hit = np.nonzero(dists < _ZERO_DISTANCE)[0]
    if hit.size:
        return entries[hit[0]].copy()
    inv = 1.0 / dists
    weights = inv / inv.sum()
    return np.einsum("i,ij->j", weights, np.stack(entries))


@dataclass(frozen=True)
class PenaltySchedule:
    """State of the sigma penalty: current weight, improvement factor eta
    (scaled mode), growth multiplier c (strict mode), and best residual.

    sigma = 0 is the documented degenerate mode where the latent constraint
    is disabled; both update rules then leave sigma at 0.
    """

    sigma: float
    eta: float = 0.7
    c: float = 2.0
    eps_best: float = float("inf")

    def __post_init__(self) -> None:
        if self.sigma < 0:
            raise ConfigError(f"sigma must be >= 0, got {self.sigma}")
        if not (0 < self.eta <= 1):
            raise ConfigError(f"eta must be in (0, 1], got {self.eta}")
        if self.c <= 1:
            raise ConfigError(f"growth multiplier c must be > 1, got {self.c}")
        if self.eps_best < 0:
            raise ConfigError(f"eps_best must be >= 0, got {self.eps_best}")


def update_penalty(schedule: PenaltySchedule, eps: float, mode: str) -> PenaltySchedule:
    """One penalty-schedule step.

    scaled mode: improvement means eps < eta * eps_best; otherwise sigma
    doubles. strict mode: improvement means eps < eps_best; otherwise sigma
    grows by the factor c. On improvement sigma is kept and eps_best updated.
    """
    if eps < 0:
        raise ConfigError(f"eps must be >= 0, got {eps}")
    if mode == "scaled":
        if eps < schedule.eta * schedule.eps_best:
            return replace(schedule, eps_best=eps)
        return replace(schedule, sigma=2.0 * schedule.sigma)
    if mode == "strict":
        if eps < schedule.eps_best:
            return replace(schedule, eps_best=eps)
        return replace(schedule, sigma=schedule.c * schedule.sigma)
    raise ConfigError(f"unknown penalty mode {mode!r}")


def convergence_certificate(
    h_next: np.ndarray,
    h_prev: np.ndarray,
    g_prev: np.ndarray,
    h_star: np.ndarray,
    tol: float = 1e-8,
) -> tuple[float, float, bool]:
    """Evaluate the per-iteration descent inequality against a saddle point.

    Returns (lhs, rhs, holds) with
        lhs = ||h_next - h_star||^2
        rhs = 1/2 ||h_star - h_prev||^2 - 1/2 ||h_next - g_prev||^2
    and holds = (lhs <= rhs + tol).
    """
    vecs = [np.asarray(v, dtype=np.complex128).ravel() for v in (h_next, h_prev, g_prev, h_star)]
    sizes = {v.size for v in vecs}
    if len(sizes) != 1:
        raise ConfigError(f"certificate vectors disagree in length: {sorted(sizes)}")
    h_next, h_prev, g_prev, h_star = vecs
    lhs = float(np.linalg.norm(h_next - h_star) ** 2)
    rhs = float(
        0.5 * np.linalg.norm(h_star - h_prev) ** 2 - 0.5 * np.linalg.norm(h_next - g_prev) ** 2
    )
    return lhs, rhs, lhs <= rhs + tol
