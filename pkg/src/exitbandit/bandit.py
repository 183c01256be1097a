"""UCB bandit over an exit-threshold grid.

One arm per candidate threshold. Each round: pick an arm, run the exit rule
on the next stream sample, collect a depth-penalized reward, update that
arm's running mean. The first |grid| rounds play every arm once (round-robin
initialization with the pull count already at 1, so the mean after the first
observation is that observation); afterwards the arm maximizing

    Q(arm) + gamma * sqrt(ln(round) / N(arm))

is played, ties going to the smallest threshold. select_arm and update are
deliberately plain-Python over flat lists: per-round controller overhead has
a microsecond budget and numpy's per-call cost dominates at ten arms.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .env import SampleOutcomes, ThresholdGrid
from .exits import Criterion, ExitDecision, decide, layer_score


class RewardVariant(enum.Enum):
    """Which score components the per-round reward uses.

    The depth penalty is lambda * exit_layer; "penalized" variants subtract
    it, the others reward the bare score. Each variant's score term matches
    the exit criterion the engine pairs it with (see natural_criterion).
    """

    PRODUCT_PENALIZED = "product_penalized"        # conf * reliab - lambda * layer
    PRODUCT = "product"                            # conf * reliab
    CONFIDENCE = "confidence"                      # conf
    CONFIDENCE_PENALIZED = "confidence_penalized"  # conf - lambda * layer
    RELIABILITY = "reliability"                    # reliab
    RELIABILITY_PENALIZED = "reliability_penalized"


_PENALIZED = frozenset(
    {
        RewardVariant.PRODUCT_PENALIZED,
        RewardVariant.CONFIDENCE_PENALIZED,
        RewardVariant.RELIABILITY_PENALIZED,
    }
)


def natural_criterion(variant: RewardVariant) -> Criterion:
    """Exit criterion whose score matches the variant's reward score term."""
    if variant in (RewardVariant.PRODUCT_PENALIZED, RewardVariant.PRODUCT):
        return Criterion.PRODUCT
    if variant in (RewardVariant.CONFIDENCE, RewardVariant.CONFIDENCE_PENALIZED):
        return Criterion.CONFIDENCE
    return Criterion.RELIABILITY


def has_penalty(variant: RewardVariant) -> bool:
    return variant in _PENALIZED


@dataclass(frozen=True)
class RewardParams:
    """Reward shape: per-layer cost lam, depth L, and the component variant."""

    lam: float
    num_layers: int
    variant: RewardVariant = RewardVariant.PRODUCT_PENALIZED

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be >= 0")
        if self.num_layers < 1:
            raise ValueError("num_layers must be >= 1")


def lambda_from_epsilon(epsilon: float, num_layers: int) -> float:
    """Per-layer cost that spends a total risk budget epsilon over L layers."""
    if not (0.0 < epsilon < 1.0):
        raise ValueError("epsilon must be in (0, 1)")
    if num_layers < 1:
        raise ValueError("num_layers must be >= 1")
    return epsilon / num_layers


def reward(decision: ExitDecision, params: RewardParams) -> float:
    """Reward of one decided round.

    Penalized variants: score_at_exit - lam * exit_layer (the final layer
    pays the full lam * L). Unpenalized variants: the bare score. The score
    term is whatever criterion produced the decision, so rewards stay
    consistent with the exit rule that generated them.
    """
    if has_penalty(params.variant):
        return decision.score_at_exit - params.lam * decision.exit_layer
    return decision.score_at_exit


def ucb_index(q: float, n: int, t: int, gamma: float) -> float:
    """Optimism index q + gamma * sqrt(ln(t) / n) for the round numbered t."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if t < 1:
        raise ValueError("t must be >= 1")
    return q + gamma * math.sqrt(math.log(t) / n)


@dataclass
class BanditState:
    """Mutable per-run bandit state.

    q[i], n[i] align with grid.values[i]. t counts completed rounds, so
    sum(n) == t holds from the end of initialization onward. n starts at 1
    per arm and the first observed reward keeps n at 1 (the initialization
    convention); from the second observation onward n increments per pull.
    """

    grid: ThresholdGrid
    gamma: float = math.sqrt(2.0)
    q_values: list[float] = field(default_factory=list)
    pull_counts: list[int] = field(default_factory=list)
    observations: list[int] = field(default_factory=list)
    t: int = 0

    def __post_init__(self):
        if self.gamma < 1.0:
            raise ValueError("gamma must be >= 1")
        k = len(self.grid)
        if not self.q_values:
            self.q_values = [0.0] * k
        if not self.pull_counts:
            self.pull_counts = [1] * k
        if not self.observations:
            self.observations = [0] * k

    @property
    def q(self) -> dict[float, float]:
        """Arm -> empirical mean reward view."""
        return dict(zip(self.grid.values, self.q_values))

    @property
    def n(self) -> dict[float, int]:
        """Arm -> pull count view."""
        return dict(zip(self.grid.values, self.pull_counts))

    def select_index(self, log_of: Optional[float] = None) -> int:
        """Grid index of the arm to play in the upcoming round.

        log_of overrides the log argument (fixed-horizon mode passes the
        total round count instead of the current round).
        """
        t_next = self.t + 1
        k = len(self.q_values)
        if t_next <= k:
            return t_next - 1
        log_t = math.log(t_next if log_of is None else log_of)
        gamma = self.gamma
        q = self.q_values
        n = self.pull_counts
        best = 0
        best_index = q[0] + gamma * math.sqrt(log_t / n[0])
        for i in range(1, k):
            v = q[i] + gamma * math.sqrt(log_t / n[i])
            if v > best_index:
                best_index = v
                best = i
        return best

    def update_index(self, i: int, reward_value: float) -> None:
        """Record one observed reward for arm i and advance the round count."""
        obs = self.observations[i] + 1
        self.observations[i] = obs
        if obs == 1:
            self.q_values[i] = reward_value
        else:
            n = self.pull_counts[i] + 1
            self.pull_counts[i] = n
            self.q_values[i] += (reward_value - self.q_values[i]) / n
        self.t += 1


def select_arm(state: BanditState, grid: ThresholdGrid) -> float:
    """Threshold to play next: round-robin through the grid, then UCB argmax.

    Ties in the UCB index break toward the smallest threshold (the scan is
    in increasing threshold order and only a strictly larger index wins).
    """
    if grid.values != state.grid.values:
        raise ValueError("state was built for a different grid")
    return grid.values[state.select_index()]


def update(state: BanditState, arm: float, reward_value: float) -> BanditState:
    """Fold one observed reward into the arm's running mean; returns state.

    The mean equals the definitional sum-of-rewards / observation-count at
    every step (to float accumulation error).
    """
    state.update_index(state.grid.index_of(arm), reward_value)
    return state


@dataclass
class RunTrace:
    """Per-round record of one policy run plus identifying metadata.

    arms holds the threshold played each round (None on rounds where the
    policy bypassed thresholds and forced the final layer). cum_regret stays
    None until a per-arm means table is attached (see metrics).
    """

    policy: str
    arms: list
    exit_layers: np.ndarray
    scores: np.ndarray
    rewards: np.ndarray
    correct_probs: np.ndarray
    realized: np.ndarray
    reliabilities: np.ndarray
    grid: ThresholdGrid
    reward_params: RewardParams
    criterion: Criterion
    num_layers: int
    seed: Optional[int] = None
    cum_regret: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.arms)


def final_layer_decision(sample: SampleOutcomes, criterion: Criterion) -> ExitDecision:
    """Decision that skips thresholding entirely and exits at the last layer."""
    last = sample.per_layer[-1]
    s = layer_score(last, criterion)
    return ExitDecision(last.layer_index, s, False, (s,))


def run_policy(
    policy,
    samples,
    reward_params: RewardParams,
    criterion: Optional[Criterion] = None,
    *,
    grid: Optional[ThresholdGrid] = None,
    label: Optional[str] = None,
    seed: Optional[int] = None,
    num_rounds: Optional[int] = None,
) -> RunTrace:
    """Drive any arm-picking policy over a sample stream and record the trace.

    policy must expose select(round_number) -> threshold-or-None and
    observe(arm, reward_value). A None arm forces a final-layer exit.
    samples may be any iterable (a generator streams without materializing);
    num_rounds, when given, truncates after that many samples.
    """
    traces = run_many(
        [policy],
        samples,
        reward_params,
        criterion,
        grid=grid,
        labels=None if label is None else [label],
        seed=seed,
        num_rounds=num_rounds,
    )
    return traces[0]


def run_many(
    policies,
    samples,
    reward_params: RewardParams,
    criterion: Optional[Criterion] = None,
    *,
    grid: Optional[ThresholdGrid] = None,
    labels: Optional[list] = None,
    seed: Optional[int] = None,
    num_rounds: Optional[int] = None,
) -> list[RunTrace]:
    """Run several policies in lockstep over one shared sample stream.

    Every policy sees the identical samples (common random numbers), so
    cross-policy comparisons are paired. Exit decisions are computed once
    per distinct arm per round, not once per policy. Returns one RunTrace
    per policy, in input order.
    """
    if criterion is None:
        criterion = natural_criterion(reward_params.variant)
    if not policies:
        raise ValueError("no policies given")
    if labels is not None and len(labels) != len(policies):
        raise ValueError("labels and policies differ in length")
    num_layers = reward_params.num_layers

    k = len(policies)
    arms: list[list] = [[] for _ in range(k)]
    exit_layers: list[list[int]] = [[] for _ in range(k)]
    scores: list[list[float]] = [[] for _ in range(k)]
    rewards: list[list[float]] = [[] for _ in range(k)]
    cps: list[list[float]] = [[] for _ in range(k)]
    realized: list[list[bool]] = [[] for _ in range(k)]
    reliab: list[list[float]] = [[] for _ in range(k)]

    lam = reward_params.lam
    penalized = has_penalty(reward_params.variant)
    if num_rounds is not None:
        samples = itertools.islice(samples, num_rounds)
    t = 0
    for t, sample in enumerate(samples, start=1):
        if sample.num_layers != num_layers:
            raise ValueError("stream depth does not match reward_params.num_layers")
        decided: dict = {}
        for j, policy in enumerate(policies):
            arm = policy.select(t)
            d = decided.get(arm)
            if d is None:
                if arm is None:
                    d = final_layer_decision(sample, criterion)
                else:
                    d = decide(sample, arm, criterion)
                decided[arm] = d
            r = d.score_at_exit - lam * d.exit_layer if penalized else d.score_at_exit
            policy.observe(arm, r)
            at_exit = sample.per_layer[d.exit_layer - 1]
            arms[j].append(arm)
            exit_layers[j].append(d.exit_layer)
            scores[j].append(d.score_at_exit)
            rewards[j].append(r)
            cps[j].append(at_exit.correct_prob)
            realized[j].append(at_exit.realized_correct)
            reliab[j].append(1.0 - at_exit.reliability_risk)
    if t == 0:
        raise ValueError("empty sample stream")

    traces = []
    for j, policy in enumerate(policies):
        name = labels[j] if labels is not None else getattr(policy, "name", "policy")
        traces.append(RunTrace(
            policy=name,
            arms=arms[j],
            exit_layers=np.asarray(exit_layers[j], dtype=np.int32),
            scores=np.asarray(scores[j]),
            rewards=np.asarray(rewards[j]),
            correct_probs=np.asarray(cps[j]),
            realized=np.asarray(realized[j], dtype=bool),
            reliabilities=np.asarray(reliab[j]),
            grid=grid if grid is not None else default_run_grid(policy),
            reward_params=reward_params,
            criterion=criterion,
            num_layers=num_layers,
            seed=seed,
        ))
    return traces


def default_run_grid(policy) -> ThresholdGrid:
    grid = getattr(policy, "grid", None)
    if grid is None:
        raise ValueError("pass grid= for policies that do not carry one")
    return grid


class UcbPolicy:
    """Adapter exposing BanditState through the runner's policy protocol."""

    name = "ucb"

    def __init__(
        self,
        grid: ThresholdGrid,
        gamma: float = math.sqrt(2.0),
        log_mode: str = "round",
        horizon: Optional[int] = None,
    ):
        if log_mode not in ("round", "horizon"):
            raise ValueError("log_mode must be 'round' or 'horizon'")
        if log_mode == "horizon":
            if horizon is None or horizon < 1:
                raise ValueError("horizon mode needs a positive horizon")
        self.grid = grid
        self.state = BanditState(grid=grid, gamma=gamma)
        self._log_of = float(horizon) if log_mode == "horizon" else None
        self._last_index: Optional[int] = None

    def select(self, round_number: int) -> float:
        i = self.state.select_index(self._log_of)
        self._last_index = i
        return self.grid.values[i]

    def observe(self, arm: float, reward_value: float) -> None:
        self.state.update_index(self._last_index, reward_value)


def run(
    grid: ThresholdGrid,
    samples,
    params: RewardParams,
    gamma: float = math.sqrt(2.0),
    num_rounds: Optional[int] = None,
    *,
    criterion: Optional[Criterion] = None,
    log_mode: str = "round",
    seed: Optional[int] = None,
) -> RunTrace:
    """Run the threshold-adaptation loop end to end over the stream.

    num_rounds defaults to the stream length (required when samples is an
    unsized iterable); a shorter value truncates. Deterministic: same
    (samples, gamma, params) in, same trace out.
    """
    if num_rounds is None:
        try:
            num_rounds = len(samples)
        except TypeError:
            raise ValueError("num_rounds is required for unsized streams") from None
    elif hasattr(samples, "__len__") and num_rounds > len(samples):
        raise ValueError("num_rounds exceeds stream length")
    horizon = num_rounds if log_mode == "horizon" else None
    policy = UcbPolicy(grid, gamma=gamma, log_mode=log_mode, horizon=horizon)
    return run_policy(
        policy,
        samples,
        params,
        criterion,
        grid=grid,
        label="ucb",
        seed=seed,
        num_rounds=num_rounds,
    )
