"""Reference policies: fixed threshold, random threshold, always-final-layer,
and the offline oracle that replays every arm to find the best fixed one.

The oracle replays all arms over the same realized stream (common random
numbers), so desk-scale gap estimates are stable; its per-arm means are the
ground truth that regret computations use.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .bandit import RewardParams, RunTrace, natural_criterion, run_policy
from .env import SampleOutcomes, ThresholdGrid
from .exits import Criterion


class FixedPolicy:
    """Plays one threshold every round."""

    name = "fixed"

    def __init__(self, tau: float):
        if not (0.0 < tau <= 1.0):
            raise ValueError(f"tau {tau!r} outside (0, 1]")
        self.tau = tau

    def select(self, round_number: int) -> float:
        return self.tau

    def observe(self, arm, reward_value) -> None:
        pass


class RandomPolicy:
    """Plays a uniformly random grid arm every round (seeded)."""

    name = "random"

    def __init__(self, grid: ThresholdGrid, seed: int):
        self.grid = grid
        self._rng = np.random.default_rng(seed)
        self._k = len(grid)

    def select(self, round_number: int) -> float:
        return self.grid.values[int(self._rng.integers(self._k))]

    def observe(self, arm, reward_value) -> None:
        pass


class FinalLayerPolicy:
    """Never exits early; the runner bypasses thresholding on a None arm."""

    name = "final"

    def select(self, round_number: int) -> None:
        return None

    def observe(self, arm, reward_value) -> None:
        pass


def fixed_policy(tau: float) -> FixedPolicy:
    return FixedPolicy(tau)


def random_policy(grid: ThresholdGrid, seed: int) -> RandomPolicy:
    return RandomPolicy(grid, seed)


def final_layer_policy() -> FinalLayerPolicy:
    return FinalLayerPolicy()


def replay_arm(
    tau: float,
    samples,
    params: RewardParams,
    criterion: Optional[Criterion] = None,
    *,
    grid: Optional[ThresholdGrid] = None,
    seed: Optional[int] = None,
    num_rounds: Optional[int] = None,
) -> RunTrace:
    """Trace of playing one fixed arm over the whole stream."""
    if grid is None:
        grid = ThresholdGrid((tau,))
    return run_policy(
        FixedPolicy(tau), samples, params, criterion,
        grid=grid, label=f"fixed{tau:g}", seed=seed, num_rounds=num_rounds,
    )


def oracle_best_arm(
    grid: ThresholdGrid,
    samples: list[SampleOutcomes],
    params: RewardParams,
    criterion: Optional[Criterion] = None,
) -> tuple[float, dict[float, float]]:
    """Exhaustively replay every arm; return (best arm, per-arm mean rewards).

    Mean reward ties break toward the smallest threshold. The means define
    the gaps used by every regret metric downstream.
    """
    if criterion is None:
        criterion = natural_criterion(params.variant)
    means: dict[float, float] = {}
    for tau in grid.values:
        trace = replay_arm(tau, samples, params, criterion, grid=grid)
        means[tau] = math.fsum(trace.rewards) / len(trace)
    best = grid.values[0]
    for tau in grid.values[1:]:
        if means[tau] > means[best]:
            best = tau
    return best, means
