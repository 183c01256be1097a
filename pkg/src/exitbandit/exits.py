"""Exit rule: leave at the first layer whose exit score clears the threshold.

The score criterion is configurable; the primary criterion multiplies the
reported confidence by the reliability scorer's complement, so a layer only
qualifies when the model is both confident and believed reliable.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .env import SampleOutcomes


class Criterion(enum.Enum):
    """Which per-layer exit score the policy thresholds."""

    PRODUCT = "product"            # confidence * (1 - reliability_risk)
    CONFIDENCE = "confidence"      # raw confidence
    RELIABILITY = "reliability"    # 1 - reliability_risk


@dataclass(frozen=True, slots=True)
class ExitDecision:
    """Outcome of running the exit rule on one sample.

    per_layer_scores holds exactly the scores that were evaluated, in layer
    order; its length equals exit_layer (layers past the exit are never
    scored).
    """

    exit_layer: int
    score_at_exit: float
    early: bool
    per_layer_scores: tuple[float, ...]


def layer_score(outcome, criterion: Criterion) -> float:
    """Exit score of a single layer outcome under the given criterion."""
    if criterion is Criterion.PRODUCT:
        return outcome.confidence * (1.0 - outcome.reliability_risk)
    if criterion is Criterion.CONFIDENCE:
        return outcome.confidence
    if criterion is Criterion.RELIABILITY:
        return 1.0 - outcome.reliability_risk
    raise ValueError(f"unknown criterion {criterion!r}")


def decide(
    sample: SampleOutcomes, threshold: float, criterion: Criterion = Criterion.PRODUCT
) -> ExitDecision:
    """First layer with score >= threshold wins; the last layer needs no score.

    The comparison is inclusive: a score exactly equal to the threshold
    exits. Layers beyond the exit are never evaluated.
    """
    if not (0.0 < threshold <= 1.0):
        raise ValueError(f"threshold {threshold!r} outside (0, 1]")
    per_layer = sample.per_layer
    last = len(per_layer) - 1
    scores: list[float] = []
    for pos in range(last):
        s = layer_score(per_layer[pos], criterion)
        scores.append(s)
        if s >= threshold:
            return ExitDecision(pos + 1, s, True, tuple(scores))
    s = layer_score(per_layer[last], criterion)
    scores.append(s)
    return ExitDecision(last + 1, s, False, tuple(scores))


def exit_distribution(
    samples, threshold: float, criterion: Criterion = Criterion.PRODUCT
) -> np.ndarray:
    """Empirical exit-layer histogram of the rule over a sample set.

    Returns an array of length num_layers summing to 1 (within float error).
    """
    samples = list(samples)
    if len(samples) == 0:
        raise ValueError("no samples given")
    num_layers = samples[0].num_layers
    layers = np.fromiter(
        (decide(s, threshold, criterion).exit_layer for s in samples),
        dtype=np.int64,
        count=len(samples),
    )
    counts = np.bincount(layers, minlength=num_layers + 1)[1:]
    return counts / layers.size
