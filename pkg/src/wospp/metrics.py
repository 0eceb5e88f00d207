"""Observables computed from swarm snapshots.

All functions are pure over immutable inputs; the per-snapshot bundle used
by the trace writers lives in :func:`standard_samples`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .engine import SwarmState, TIMER_OFF

METRIC_NAMES = (
    "delta_phi_max", "rms_to_centroid", "candidate_count",
    "mean_angular_error", "n_est_mean", "n_est_std", "n_err_percent",
    "mean_nn_distance",
)


@dataclass
class MetricSample:
    timestep: int
    name: str
    value: float
    per_agent: Optional[list[float]] = None

    def __post_init__(self) -> None:
        if self.name not in METRIC_NAMES:
            raise ValueError(f"unknown metric name {self.name!r}")


def delta_phi_max(timers: Sequence[int], cycle_max: int) -> Optional[float]:
    """Width of the smallest phase arc containing all timer phases.

    Timers map to phases 2*pi*t/cycle_max on the circle; the width equals
    2*pi minus the largest gap between circularly sorted phases. Returns
    None when any timer is deactivated (the metric is undefined then).
    """
    t = np.asarray(timers)
    if (t == TIMER_OFF).any():
        return None
    phases = np.sort((2.0 * np.pi * t / cycle_max) % (2.0 * np.pi))
    if len(phases) == 1:
        return 0.0
    gaps = np.diff(phases)
    wrap = 2.0 * np.pi - phases[-1] + phases[0]
    return float(2.0 * np.pi - max(gaps.max(initial=0.0), wrap))


def rms_to_centroid(positions: np.ndarray) -> float:
    """Root mean square distance of agents from their mean position."""
    pos = np.asarray(positions, dtype=float)
    centroid = pos.mean(axis=0)
    return float(np.sqrt(np.mean(np.sum((pos - centroid) ** 2, axis=1))))


def n_err_percent(n_est_mean: float, true_n: int) -> float:
    """Percentage underestimate of swarm size (positive = too low)."""
    if true_n < 2:
        raise ValueError("true_n must be >= 2")
    return 100.0 * (true_n - n_est_mean) / true_n


def circular_difference(a: float, b: float) -> float:
    """Absolute angular difference in [0, pi]."""
    return abs(float(np.angle(np.exp(1j * (a - b)))))


def mean_angular_error(estimates: Sequence[Optional[np.ndarray]],
                       reference_bearings: Sequence[np.ndarray]
                       ) -> Optional[float]:
    """Mean absolute circular error between estimates and references.

    Absent estimates are skipped; returns None if nothing remains.
    """
    if len(estimates) != len(reference_bearings):
        raise ValueError("estimates and references must pair up")
    errors = []
    for est, ref in zip(estimates, reference_bearings):
        if est is None:
            continue
        errors.append(circular_difference(
            np.arctan2(est[1], est[0]), np.arctan2(ref[1], ref[0])))
    if not errors:
        return None
    return float(np.mean(errors))


def candidate_count(scratches) -> int:
    return sum(1 for sc in scratches if sc.candidate)


def mean_nn_distance(positions: np.ndarray) -> float:
    """Mean over agents of the distance to their nearest neighbor."""
    pos = np.asarray(positions, dtype=float)
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.linalg.norm(diff, axis=2)
    np.fill_diagonal(dist, np.inf)
    return float(dist.min(axis=1).mean())


def standard_samples(state: SwarmState) -> list[MetricSample]:
    """The per-snapshot metric bundle written to metrics files."""
    t = state.time
    samples = [
        MetricSample(t, "rms_to_centroid", rms_to_centroid(state.positions)),
        MetricSample(t, "mean_nn_distance", mean_nn_distance(state.positions)),
    ]
    if state.scratch:
        samples.append(MetricSample(
            t, "candidate_count", float(candidate_count(state.scratch))))
        ests = [sc.n_est for sc in state.scratch]
        mean = float(np.mean(ests))
        samples.append(MetricSample(t, "n_est_mean", mean))
        samples.append(MetricSample(t, "n_est_std", float(np.std(ests))))
        samples.append(MetricSample(
            t, "n_err_percent", n_err_percent(mean, state.n_agents)))
    dphi = delta_phi_max(state.timers, state.config.cycle_max)
    if dphi is not None:
        samples.append(MetricSample(t, "delta_phi_max", dphi))
    return samples
