"""Trainer for the reliability scorer used by the product exit criterion.

The scorer is a single shared linear layer plus sigmoid over the per-layer
features and a normalized depth input. It is trained full-batch with plain
gradient descent on a depth-weighted objective: cross-entropy scaled up by
(1 + score), plus a squared hinge that keeps per-exit coverage from
collapsing below its target.

Coverage (the fraction of rows scored >= 0.5) is non-differentiable, so
training substitutes a steep sigmoid surrogate; reported coverage always
uses the exact indicator. Gradients are analytic and validated against
central finite differences in the test suite.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .env import SampleOutcomes

SCHEMA_NAME = "reliability-linear"
SCHEMA_VERSION = 1
SURROGATE_SHARPNESS = 50.0
CE_FLOOR = 1e-12


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


@dataclass(frozen=True)
class ReliabilityModel:
    """Linear scorer: sigmoid(w . [features, layer/num_layers, 1])."""

    weights: tuple[float, ...]
    num_layers: int

    def __post_init__(self):
        if self.num_layers < 2:
            raise ValueError("num_layers must be >= 2")
        if len(self.weights) < 3:
            raise ValueError("weights must cover >=1 feature, depth, bias")
        if not all(math.isfinite(w) for w in self.weights):
            raise ValueError("non-finite weight")

    @property
    def feature_dim(self) -> int:
        return len(self.weights) - 2

    def to_json(self) -> str:
        payload = {
            "schema": SCHEMA_NAME,
            "version": SCHEMA_VERSION,
            "num_layers": self.num_layers,
            "weights": list(self.weights),
        }
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> "ReliabilityModel":
        payload = json.loads(text)
        if payload.get("schema") != SCHEMA_NAME:
            raise ValueError(f"unknown schema {payload.get('schema')!r}")
        if payload.get("version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported version {payload.get('version')!r}")
        return cls(tuple(payload["weights"]), int(payload["num_layers"]))


@dataclass(frozen=True)
class CoverageTargets:
    """Per-exit floors for the fraction of rows the scorer may trust."""

    c_per_exit: tuple[float, ...]

    def __post_init__(self):
        if len(self.c_per_exit) == 0:
            raise ValueError("empty coverage targets")
        for c in self.c_per_exit:
            if not (0.0 <= c <= 1.0):
                raise ValueError(f"coverage target {c!r} outside [0, 1]")

    def __len__(self) -> int:
        return len(self.c_per_exit)


@dataclass(frozen=True)
class Hyperparams:
    learning_rate: float = 0.1
    epochs: int = 500
    sharpness: float = SURROGATE_SHARPNESS

    def __post_init__(self):
        if self.learning_rate <= 0.0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.sharpness <= 0.0:
            raise ValueError("sharpness must be positive")


@dataclass
class Dataset:
    """Flat per-(sample, layer) rows for full-batch training.

    inputs holds the augmented design matrix [features, layer/L, 1]; rows
    are grouped per layer via layer_rows so per-exit means are cheap.
    """

    inputs: np.ndarray
    cross_entropy: np.ndarray
    layer_index: np.ndarray
    correct: np.ndarray
    num_layers: int
    layer_rows: list[np.ndarray] = field(init=False)

    def __post_init__(self):
        n = self.inputs.shape[0]
        if n == 0:
            raise ValueError("empty dataset")
        if not (self.cross_entropy.shape == self.layer_index.shape == self.correct.shape == (n,)):
            raise ValueError("misaligned dataset columns")
        if np.any(self.cross_entropy < 0.0):
            raise ValueError("negative cross-entropy")
        self.layer_rows = [
            np.flatnonzero(self.layer_index == i)
            for i in range(1, self.num_layers + 1)
        ]
        if any(len(rows) == 0 for rows in self.layer_rows):
            raise ValueError("every layer needs at least one row")

    def __len__(self) -> int:
        return self.inputs.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.inputs.shape[1] - 2


def dataset_from_samples(samples: Sequence[SampleOutcomes]) -> Dataset:
    """One training row per (sample, layer).

    The cross-entropy column is the simulator's stand-in for a classifier
    loss: -log(correct_prob) when the layer's prediction realized correct,
    -log(1 - correct_prob) otherwise, floored away from log(0).
    """
    if len(samples) == 0:
        raise ValueError("no samples")
    num_layers = samples[0].num_layers
    rows = []
    ce = []
    layer = []
    correct = []
    for s in samples:
        if s.num_layers != num_layers:
            raise ValueError("mixed num_layers in sample batch")
        for out in s.per_layer:
            rows.append((*out.g_features, out.layer_index / num_layers, 1.0))
            p = min(max(out.correct_prob, CE_FLOOR), 1.0 - CE_FLOOR)
            ce.append(-math.log(p) if out.realized_correct else -math.log(1.0 - p))
            layer.append(out.layer_index)
            correct.append(out.realized_correct)
    return Dataset(
        inputs=np.asarray(rows, dtype=np.float64),
        cross_entropy=np.asarray(ce, dtype=np.float64),
        layer_index=np.asarray(layer, dtype=np.int64),
        correct=np.asarray(correct, dtype=bool),
        num_layers=num_layers,
    )


def score(model: ReliabilityModel, features: Sequence[float], layer_index: int) -> float:
    """Reliability of one layer's output, in (0, 1)."""
    if len(features) != model.feature_dim:
        raise ValueError(
            f"expected {model.feature_dim} features, got {len(features)}"
        )
    if not (1 <= layer_index <= model.num_layers):
        raise ValueError(f"layer_index {layer_index} outside 1..{model.num_layers}")
    x = np.asarray(
        (*features, layer_index / model.num_layers, 1.0), dtype=np.float64
    )
    w = np.asarray(model.weights, dtype=np.float64)
    return float(_sigmoid(np.dot(w, x)))


def batch_scores(model: ReliabilityModel, dataset: Dataset) -> np.ndarray:
    if dataset.feature_dim != model.feature_dim:
        raise ValueError("dataset feature dim does not match model")
    w = np.asarray(model.weights, dtype=np.float64)
    return _sigmoid(dataset.inputs @ w)


def coverage(model: ReliabilityModel, dataset: Dataset) -> float:
    """Exact fraction of rows scored >= 0.5 (boundary counts as covered)."""
    s = batch_scores(model, dataset)
    return float(np.mean(s >= 0.5))


def per_exit_coverage(model: ReliabilityModel, dataset: Dataset) -> np.ndarray:
    s = batch_scores(model, dataset)
    return np.asarray(
        [float(np.mean(s[rows] >= 0.5)) for rows in dataset.layer_rows]
    )


def hinge_sq(a: float) -> float:
    return max(0.0, a) ** 2


def per_exit_loss(ce: float, g_val: float, c_i: float, cov: float) -> float:
    """Scalar form of one exit's objective term."""
    if ce < 0.0:
        raise ValueError("ce must be >= 0")
    if not (0.0 < g_val < 1.0):
        raise ValueError("g_val must lie strictly inside (0, 1)")
    if not (0.0 <= cov <= 1.0):
        raise ValueError("cov must lie in [0, 1]")
    return ce * (1.0 + g_val) + hinge_sq(c_i - cov)


def aggregate_loss(per_exit: Sequence[float], num_layers: int) -> float:
    """Depth-weighted mean: sum(i * loss_i) / sum(i)."""
    if len(per_exit) == 0:
        raise ValueError("empty per-exit losses")
    if len(per_exit) != num_layers:
        raise ValueError("per-exit losses must have one entry per layer")
    weights = range(1, num_layers + 1)
    return sum(i * v for i, v in zip(weights, per_exit)) / sum(weights)


def compute_c(validation: Sequence[Sequence[bool]]) -> CoverageTargets:
    """Per-exit correctness rates of a validation set, used as floors."""
    arr = np.asarray(validation, dtype=bool)
    if arr.size == 0:
        raise ValueError("empty validation set")
    return CoverageTargets(tuple(float(v) for v in arr.mean(axis=0)))


def compute_c_from_samples(samples: Sequence[SampleOutcomes]) -> CoverageTargets:
    flags = [[out.realized_correct for out in s.per_layer] for s in samples]
    return compute_c(flags)


def objective(
    weights: np.ndarray,
    dataset: Dataset,
    targets: CoverageTargets,
    sharpness: float = SURROGATE_SHARPNESS,
) -> float:
    loss, _ = objective_gradient(weights, dataset, targets, sharpness)
    return loss


def objective_gradient(
    weights: np.ndarray,
    dataset: Dataset,
    targets: CoverageTargets,
    sharpness: float = SURROGATE_SHARPNESS,
) -> tuple[float, np.ndarray]:
    """Training objective and its analytic gradient.

    Per exit i: mean(ce * (1 + g)) + hinge_sq(c_i - smooth coverage), where
    the smooth coverage is mean(sigmoid(sharpness * (g - 0.5))). Exits are
    depth-weighted by i / sum(1..L).
    """
    if len(targets) != dataset.num_layers:
        raise ValueError("targets length must equal num_layers")
    w = np.asarray(weights, dtype=np.float64)
    g = _sigmoid(dataset.inputs @ w)
    g_prime = g * (1.0 - g)
    surrogate = _sigmoid(sharpness * (g - 0.5))
    surrogate_prime = sharpness * surrogate * (1.0 - surrogate)

    depth_weights = np.arange(1, dataset.num_layers + 1, dtype=np.float64)
    depth_weights /= depth_weights.sum()

    total = 0.0
    grad = np.zeros_like(w)
    for i, rows in enumerate(dataset.layer_rows):
        m = len(rows)
        x_i = dataset.inputs[rows]
        ce_i = dataset.cross_entropy[rows]
        fit = float(np.mean(ce_i * (1.0 + g[rows])))
        cov = float(np.mean(surrogate[rows]))
        gap = targets.c_per_exit[i] - cov
        total += depth_weights[i] * (fit + hinge_sq(gap))

        dg = (ce_i * g_prime[rows]) / m
        if gap > 0.0:
            dg = dg - (2.0 * gap / m) * surrogate_prime[rows] * g_prime[rows]
        grad += depth_weights[i] * (dg @ x_i)
    return total, grad


def finite_difference_gradient(
    weights: np.ndarray,
    dataset: Dataset,
    targets: CoverageTargets,
    sharpness: float = SURROGATE_SHARPNESS,
    step: float = 1e-6,
) -> np.ndarray:
    """Central differences of the training objective, for gradient checks."""
    w = np.asarray(weights, dtype=np.float64)
    out = np.zeros_like(w)
    for j in range(len(w)):
        hi = w.copy()
        lo = w.copy()
        hi[j] += step
        lo[j] -= step
        out[j] = (
            objective(hi, dataset, targets, sharpness)
            - objective(lo, dataset, targets, sharpness)
        ) / (2.0 * step)
    return out


def train(
    dataset: Dataset,
    targets: CoverageTargets,
    hyperparams: Optional[Hyperparams] = None,
    *,
    initial_weights: Optional[Sequence[float]] = None,
    loss_history: Optional[list[float]] = None,
) -> ReliabilityModel:
    """Full-batch gradient descent on the depth-weighted objective.

    The first epoch runs with all coverage floors at zero so the fit term
    settles before coverage pressure kicks in; remaining epochs use the
    supplied targets. A non-finite loss aborts with a diagnostic.
    """
    if hyperparams is None:
        hyperparams = Hyperparams()
    if len(targets) != dataset.num_layers:
        raise ValueError("targets length must equal num_layers")
    dim = dataset.feature_dim + 2
    if initial_weights is None:
        w = np.zeros(dim, dtype=np.float64)
    else:
        w = np.asarray(initial_weights, dtype=np.float64).copy()
        if w.shape != (dim,):
            raise ValueError(f"initial_weights must have length {dim}")
    warmup = CoverageTargets((0.0,) * dataset.num_layers)
    for epoch in range(hyperparams.epochs):
        active = warmup if epoch == 0 else targets
        loss, grad = objective_gradient(w, dataset, active, hyperparams.sharpness)
        if not math.isfinite(loss):
            raise FloatingPointError(
                f"non-finite loss {loss!r} at epoch {epoch + 1}; "
                f"|w|_max={np.max(np.abs(w)):.3g}, lr={hyperparams.learning_rate}"
            )
        if loss_history is not None:
            loss_history.append(loss)
        w -= hyperparams.learning_rate * grad
    return ReliabilityModel(tuple(float(v) for v in w), dataset.num_layers)


def rescore_sample(model: ReliabilityModel, sample: SampleOutcomes) -> SampleOutcomes:
    """Replace the generator's reliability risks with the trained scorer's.

    Everything else (confidence, correctness, features) is untouched, so the
    rescored stream isolates the effect of the learned scorer.
    """
    if sample.num_layers != model.num_layers:
        raise ValueError("model depth does not match sample depth")
    rescored = tuple(
        replace(
            out,
            reliability_risk=1.0 - score(model, out.g_features, out.layer_index),
        )
        for out in sample.per_layer
    )
    return SampleOutcomes(rescored)


def rescore_stream(
    model: ReliabilityModel, samples: Sequence[SampleOutcomes]
) -> list[SampleOutcomes]:
    return [rescore_sample(model, s) for s in samples]


def loss_interference_experiment(
    seed: int = 0,
    *,
    num_layers: int = 6,
    n_train: int = 2000,
    n_test: int = 4000,
    epochs: int = 300,
    learning_rate: float = 0.1,
    sharpness: float = SURROGATE_SHARPNESS,
) -> dict[str, float]:
    """Does adding the reliability term disturb the classifier it rides on?

    Builds a small multi-depth binary task (deeper layers see cleaner
    features), then trains the same logistic classifier twice from the same
    init: once on depth-weighted plain cross-entropy, once jointly with a
    reliability scorer under the full objective (ce scaled by 1 + g plus
    the coverage hinge). Returns both deepest-layer held-out accuracies and
    their gap.
    """
    rng = np.random.default_rng(seed)
    true_w = np.asarray([1.5, -1.0])

    def make_split(n):
        z = rng.standard_normal((n, 2))
        y = (z @ true_w > 0.0).astype(np.float64)
        # layer i sees z blurred by (L - i)/(L - 1); the deepest is clean
        xs = []
        for i in range(1, num_layers + 1):
            blur = 0.8 * (num_layers - i) / (num_layers - 1)
            xs.append(z + blur * rng.standard_normal((n, 2)))
        return np.stack(xs), y  # (L, n, 2)

    x_train, y_train = make_split(n_train)
    x_test, y_test = make_split(n_test)

    depth_w = np.arange(1, num_layers + 1, dtype=np.float64)
    depth_w /= depth_w.sum()
    depth_feature = np.arange(1, num_layers + 1, dtype=np.float64) / num_layers
    eps = 1e-12

    def forward_clf(v):
        logits = x_train @ v[:2] + v[2]
        p = _sigmoid(logits)
        ce = -(y_train * np.log(np.maximum(p, eps))
               + (1.0 - y_train) * np.log(np.maximum(1.0 - p, eps)))
        return p, ce

    def run(joint: bool):
        v = np.zeros(3)
        wg = np.zeros(4)
        targets = np.full(num_layers, 0.7)
        for epoch in range(epochs):
            p, ce = forward_clf(v)
            dce_dlogit = p - y_train  # (L, n)
            if joint:
                g_in = np.concatenate(
                    [
                        x_train,
                        np.broadcast_to(
                            depth_feature[:, None, None], (num_layers, n_train, 1)
                        ),
                        np.ones((num_layers, n_train, 1)),
                    ],
                    axis=2,
                )
                g = _sigmoid(g_in @ wg)
                gp = g * (1.0 - g)
                sur = _sigmoid(sharpness * (g - 0.5))
                sur_p = sharpness * sur * (1.0 - sur)
                scale = 1.0 + g
            else:
                scale = np.ones_like(p)
            grad_v = np.zeros(3)
            grad_g = np.zeros(4)
            for i in range(num_layers):
                coeff = depth_w[i] * scale[i] * dce_dlogit[i] / n_train
                grad_v[:2] += coeff @ x_train[i]
                grad_v[2] += coeff.sum()
                if joint:
                    cov = float(np.mean(sur[i]))
                    gap = (0.0 if epoch == 0 else targets[i]) - cov
                    dg = ce[i] * gp[i] / n_train
                    if gap > 0.0:
                        dg = dg - (2.0 * gap / n_train) * sur_p[i] * gp[i]
                    grad_g += depth_w[i] * (dg @ g_in[i])
            v -= learning_rate * grad_v
            if joint:
                wg -= learning_rate * grad_g
        return v

    def final_accuracy(v):
        logits = x_test[-1] @ v[:2] + v[2]
        return float(np.mean((logits > 0.0) == (y_test > 0.5)))

    acc_plain = final_accuracy(run(joint=False))
    acc_joint = final_accuracy(run(joint=True))
    return {
        "accuracy_plain_ce": acc_plain,
        "accuracy_joint": acc_joint,
        "gap": abs(acc_plain - acc_joint),
    }


def auc_score(scores: np.ndarray, labels: np.ndarray) -> float:
    """Rank-based AUC (probability a positive outranks a negative, ties 0.5)."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    pos = int(labels.sum())
    neg = labels.size - pos
    if pos == 0 or neg == 0:
        raise ValueError("AUC needs both classes present")
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(labels.size, dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    rank = 1
    while i < labels.size:
        j = i
        while j + 1 < labels.size and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        # average rank across the tie block
        avg = 0.5 * (rank + rank + (j - i))
        ranks[order[i : j + 1]] = avg
        rank += j - i + 1
        i = j + 1
    rank_sum = float(ranks[labels].sum())
    return (rank_sum - pos * (pos + 1) / 2.0) / (pos * neg)
