"""Domain types for the early-exit threshold environment.

The environment is a stream of samples; each sample exposes one outcome per
exit layer of a depth-L network. Threshold policies pick an exit threshold
per round, and the outcome at the chosen exit layer determines the reward.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field

import numpy as np

DEFAULT_GRID_SIZE = 10
DEFAULT_GRID_LOW = 0.5
DEFAULT_GRID_HIGH = 1.0


@dataclass(frozen=True)
class ThresholdGrid:
    """Finite, strictly increasing set of candidate exit thresholds in (0, 1]."""

    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.values) == 0:
            raise ValueError("threshold grid must be non-empty")
        for v in self.values:
            if not (0.0 < v <= 1.0):
                raise ValueError(f"threshold {v!r} outside (0, 1]")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValueError("threshold grid must be strictly increasing")

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def index_of(self, value: float) -> int:
        """Position of an exact grid value; raises ValueError if absent."""
        return self.values.index(value)


def default_grid() -> ThresholdGrid:
    """Ten equally spaced thresholds from 0.5 to 1.0, both endpoints included.

    linspace pins the endpoints exactly; construction is reproducible
    bit-for-bit across calls.
    """
    values = np.linspace(DEFAULT_GRID_LOW, DEFAULT_GRID_HIGH, DEFAULT_GRID_SIZE)
    return ThresholdGrid(tuple(float(v) for v in values))


@dataclass(frozen=True)
class GeneratorParams:
    """Knobs of the synthetic multi-exit sample generator.

    num_layers: depth L of the simulated network (>= 2).
    difficulty_spread: std of the per-sample difficulty draw.
    depth_gain: how fast correctness improves with relative depth.
    confidence_noise: std of the noise added to reported confidence.
    reliability_signal: in [0, 1]; 1.0 makes the reliability feature exact,
        0.0 makes it pure noise.
    overconfidence_rate: probability that a sample gets one shallow layer
        corrupted to be confidently wrong.
    noise_accuracy_drag: couples confidence noise into effective difficulty,
        so noisier inputs are also harder (0.0 disables the coupling).
    seed: generator identity; mixed into every per-round RNG stream.
    """

    num_layers: int = 12
    difficulty_spread: float = 2.0
    depth_gain: float = 10.0
    confidence_noise: float = 0.05
    reliability_signal: float = 0.85
    overconfidence_rate: float = 0.12
    noise_accuracy_drag: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if self.num_layers < 2:
            raise ValueError("num_layers must be >= 2")
        if self.difficulty_spread < 0:
            raise ValueError("difficulty_spread must be >= 0")
        if self.confidence_noise < 0:
            raise ValueError("confidence_noise must be >= 0")
        if not (0.0 <= self.reliability_signal <= 1.0):
            raise ValueError("reliability_signal must be in [0, 1]")
        if not (0.0 <= self.overconfidence_rate <= 1.0):
            raise ValueError("overconfidence_rate must be in [0, 1]")
        if self.noise_accuracy_drag < 0:
            raise ValueError("noise_accuracy_drag must be >= 0")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")


@dataclass(frozen=True, slots=True)
class LayerOutcome:
    """What the simulated network reports at one exit layer for one sample.

    confidence is the max-class probability the model would report;
    reliability_risk is the scorer's estimate that the prediction is
    unreliable (the exit score multiplies confidence by 1 - reliability_risk);
    correct_prob is the true probability that the predicted label is right;
    realized_correct is the Bernoulli(correct_prob) draw fixed at generation.
    """

    layer_index: int
    confidence: float
    reliability_risk: float
    correct_prob: float
    realized_correct: bool
    g_features: tuple[float, ...]

    def __post_init__(self):
        # constructed in bulk by the generator; keep checks flat and cheap
        if self.layer_index < 1:
            raise ValueError("layer_index is 1-based")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence={self.confidence!r} outside [0, 1]")
        if not 0.0 <= self.reliability_risk <= 1.0:
            raise ValueError(f"reliability_risk={self.reliability_risk!r} outside [0, 1]")
        if not 0.0 <= self.correct_prob <= 1.0:
            raise ValueError(f"correct_prob={self.correct_prob!r} outside [0, 1]")


@dataclass(frozen=True, slots=True)
class SampleOutcomes:
    """Per-layer outcomes of one sample, ordered layer 1..L."""

    per_layer: tuple[LayerOutcome, ...]

    def __post_init__(self):
        if len(self.per_layer) < 2:
            raise ValueError("a sample needs at least 2 layers")
        for i, out in enumerate(self.per_layer, start=1):
            if out.layer_index != i:
                raise ValueError("per_layer must be ordered 1..L without gaps")

    @property
    def num_layers(self) -> int:
        return len(self.per_layer)

    @property
    def final_label_correct_prob(self) -> float:
        """correct_prob at the deepest layer."""
        return self.per_layer[-1].correct_prob


@dataclass(frozen=True)
class ShiftSchedule:
    """Piecewise-constant generator parameters over the round axis.

    segments: (start_round, params) pairs; the first start_round must be 1
    and starts must be strictly increasing. A segment applies from its start
    round (inclusive) until the next segment begins.
    """

    segments: tuple[tuple[int, GeneratorParams], ...]
    _starts: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.segments) == 0:
            raise ValueError("schedule needs at least one segment")
        starts = [s for s, _ in self.segments]
        if starts[0] != 1:
            raise ValueError("first segment must start at round 1")
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ValueError("segment starts must be strictly increasing")
        object.__setattr__(self, "_starts", tuple(starts))

    @classmethod
    def constant(cls, params: GeneratorParams) -> "ShiftSchedule":
        return cls(((1, params),))


def active_params(schedule: ShiftSchedule, round_index: int) -> GeneratorParams:
    """Parameters governing a given 1-based round.

    Right-continuous at boundaries: the round equal to a segment start
    already uses the new segment.
    """
    if round_index < 1:
        raise ValueError("round_index is 1-based")
    pos = bisect.bisect_right(schedule._starts, round_index) - 1
    return schedule.segments[pos][1]
