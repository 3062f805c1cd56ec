import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lccf.errors import ConfigError
from lccf.subspace import (
    PenaltySchedule,
    SubspaceHistory,
    convergence_certificate,
    project_subspace,
    update_penalty,
)


def _history(*vectors):
    hist = SubspaceHistory()
    for v in vectors:
        hist.push(v)
    return hist


def test_history_capacity_evicts_oldest():
    hist = SubspaceHistory(capacity=2)
    for value in (1.0, 2.0, 3.0):
        hist.push(np.array([value]))
    assert len(hist) == 2
    assert [e[0].real for e in hist.entries()] == [2.0, 3.0]


def test_history_rejects_mixed_lengths_and_bad_capacity():
    hist = _history(np.zeros(4))
    with pytest.raises(ConfigError):
        hist.push(np.zeros(5))
    with pytest.raises(ConfigError):
        SubspaceHistory(capacity=0)


def test_history_stores_copies():
    source = np.ones(3, dtype=np.complex128)
    hist = _history(source)
    source[:] = 0
    np.testing.assert_array_equal(hist.entries()[0], np.ones(3))


def test_projection_single_entry():
    hist = _history(np.array([1.0, 2.0]))
    np.testing.assert_allclose(project_subspace(np.array([5.0, 5.0]), hist), [1.0, 2.0])


def test_projection_zero_distance_returns_entry_verbatim():
    entry = np.array([1.0 + 2.0j, 3.0])
    hist = _history(entry, np.array([9.0, 9.0]))
    out = project_subspace(entry + 1e-15, hist)
    np.testing.assert_array_equal(out, entry)


def test_projection_weights_are_inverse_distance():
    # current sits 1 away from a and 3 away from b: weights 3/4 and 1/4.
    a, b = np.array([0.0]), np.array([4.0])
    out = project_subspace(np.array([1.0]), _history(a, b))
    assert out[0] == pytest.approx(0.75 * 0.0 + 0.25 * 4.0)


def test_projection_rejects_empty_history_and_length_mismatch():
    with pytest.raises(ConfigError):
        project_subspace(np.zeros(2), SubspaceHistory())
    with pytest.raises(ConfigError):
        project_subspace(np.zeros(3), _history(np.zeros(2)))


@settings(max_examples=60, deadline=None)
@given(
    n=st.integers(1, 5),
    dim=st.integers(1, 6),
    seed=st.integers(0, 2**31),
)
def test_projection_is_a_convex_combination(n, dim, seed):
    rng = np.random.default_rng(seed)
    entries = [rng.standard_normal(dim) + 1j * rng.standard_normal(dim) for _ in range(n)]
    current = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    hist = _history(*entries)
    out = project_subspace(current, hist)
    # Recompute the weights independently and check the combination is convex.
    dists = np.array([np.linalg.norm(current - e) for e in entries])
    if np.any(dists < 1e-12):
        np.testing.assert_array_equal(out, entries[int(np.argmin(dists))])
        return
    weights = (1.0 / dists) / np.sum(1.0 / dists)
    assert weights.min() > 0
    assert np.sum(weights) == pytest.approx(1.0)
    np.testing.assert_allclose(out, sum(w * e for w, e in zip(weights, entries)), atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(dim=st.integers(1, 6), seed=st.integers(0, 2**31))
def test_projection_translation_equivariance(dim, seed):
    rng = np.random.default_rng(seed)
    entries = [rng.standard_normal(dim) for _ in range(3)]
    current = rng.standard_normal(dim)
    shift = rng.standard_normal(dim)
    base = project_subspace(current, _history(*entries))
    shifted = project_subspace(current + shift, _history(*(e + shift for e in entries)))
    np.testing.assert_allclose(shifted, base + shift, atol=1e-9)


def test_penalty_validation():
    with pytest.raises(ConfigError):
        PenaltySchedule(sigma=-1.0)
    with pytest.raises(ConfigError):
        PenaltySchedule(sigma=1.0, eta=0.0)
    with pytest.raises(ConfigError):
        PenaltySchedule(sigma=1.0, c=1.0)
    PenaltySchedule(sigma=0.0)  # degenerate mode is allowed


def test_scaled_mode_doubles_on_stall():
    sched = PenaltySchedule(sigma=0.25, eta=0.7)
    sched = update_penalty(sched, 10.0, "scaled")  # 10 < inf: improvement
    assert sched.sigma == 0.25 and sched.eps_best == 10.0
    sched = update_penalty(sched, 8.0, "scaled")  # 8 >= 0.7*10: stall
    assert sched.sigma == 0.5 and sched.eps_best == 10.0
    sched = update_penalty(sched, 6.9, "scaled")  # 6.9 < 7: improvement
    assert sched.sigma == 0.5 and sched.eps_best == 6.9


def test_strict_mode_multiplies_by_c():
    sched = PenaltySchedule(sigma=1e-4, c=3.0)
    sched = update_penalty(sched, 5.0, "strict")
    assert sched.sigma == 1e-4 and sched.eps_best == 5.0
    sched = update_penalty(sched, 5.0, "strict")  # not strictly better
    assert sched.sigma == pytest.approx(3e-4)
    sched = update_penalty(sched, 4.0, "strict")
    assert sched.eps_best == 4.0 and sched.sigma == pytest.approx(3e-4)


def test_update_penalty_rejects_bad_input():
    sched = PenaltySchedule(sigma=1.0)
    with pytest.raises(ConfigError):
        update_penalty(sched, -1.0, "strict")
    with pytest.raises(ConfigError):
        update_penalty(sched, 1.0, "loose")


@settings(max_examples=60, deadline=None)
@given(
    mode=st.sampled_from(["scaled", "strict"]),
    sigma=st.floats(0.0, 10.0),
    eps_seq=st.lists(st.floats(0.0, 100.0), min_size=1, max_size=10),
)
def test_penalty_sigma_never_decreases(mode, sigma, eps_seq):
    sched = PenaltySchedule(sigma=sigma)
    for eps in eps_seq:
        nxt = update_penalty(sched, eps, mode)
        assert nxt.sigma >= sched.sigma
        assert nxt.eps_best <= sched.eps_best
        sched = nxt
    if sigma == 0.0:
        assert sched.sigma == 0.0  # degenerate mode is absorbing


def test_certificate_computes_documented_quantities():
    h_next = np.array([1.0, 0.0])
    h_prev = np.array([2.0, 0.0])
    g_prev = np.array([1.5, 0.0])
    h_star = np.array([0.0, 0.0])
    lhs, rhs, holds = convergence_certificate(h_next, h_prev, g_prev, h_star)
    assert lhs == pytest.approx(1.0)
    assert rhs == pytest.approx(0.5 * 4.0 - 0.5 * 0.25)
    assert holds


def test_certificate_detects_violation_and_tolerance():
    zero = np.zeros(2)
    far = np.array([10.0, 0.0])
    lhs, rhs, holds = convergence_certificate(far, zero, zero, zero)
    assert lhs > rhs and not holds
    # Tolerance rescues borderline cases.
    _, _, ok = convergence_certificate(far, zero, zero, zero, tol=1e6)
    assert ok


def test_certificate_rejects_mismatched_lengths():
    with pytest.raises(ConfigError):
        convergence_certificate(np.zeros(2), np.zeros(3), np.zeros(2), np.zeros(2))
