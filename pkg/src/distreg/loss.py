"""Distribution-aligned training objective for imbalanced regression.

The objective is a weighted sample-level error plus, scaled by ``dist_weight``,
a sequence distance between the soft-sorted batch predictions and a pseudo-label
sequence carrying the label distribution. Weights are inverse per-bin label
probabilities (floored and, by default, normalized to mean 1), so sparse label
regions count more in both terms.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput, InvalidWeight, ShapeMismatch
from .label_space import LabelDensity, bin_index
from .pseudo import PseudoSequence
from .softsort import SoftSortConfig, soft_sort, soft_sort_vjp

_BASES = ("l1", "l2")
_WEIGHTINGS = ("uniform", "inverse_probability")


@dataclass(frozen=True)
class SeqLossKind:
    """Base sequence distance (L1/L2) and its per-element weighting scheme."""

    base: str = "l2"
    weighting: str = "inverse_probability"

    def __post_init__(self):
        if self.base not in _BASES:
            raise InvalidInput(f"base must be one of {_BASES}, got {self.base!r}")
        if self.weighting not in _WEIGHTINGS:
            raise InvalidInput(f"weighting must be one of {_WEIGHTINGS}, got {self.weighting!r}")

    @classmethod
    def parse(cls, name: str) -> "SeqLossKind":
        """Parse names like "l1", "l2", "inv-l1", "inv-l2"."""
        key = name.strip().lower().replace("_", "-")
        if key.startswith("inv-"):
            return cls(base=key[4:], weighting="inverse_probability")
        return cls(base=key, weighting="uniform")

    @property
    def name(self) -> str:
        return ("inv-" if self.weighting == "inverse_probability" else "") + self.base


@dataclass(frozen=True)
class DistLossConfig:
    kind: SeqLossKind = SeqLossKind()
    dist_weight: float = 1.0
    weight_floor: float = 1e-4
    normalize_weights: bool = True

    def __post_init__(self):
        if not (np.isfinite(self.dist_weight) and self.dist_weight >= 0):
            raise InvalidInput(f"dist_weight must be finite and >= 0, got {self.dist_weight}")
        if not (0 < self.weight_floor <= 1):
            raise InvalidWeight(f"weight_floor must lie in (0, 1], got {self.weight_floor}")


@dataclass(frozen=True)
class LossOutput:
    total: float
    sample_term: float
    dist_term: float
    grad_predictions: np.ndarray = field(repr=False)


def weighted_seq_loss(pred_seq, target_seq, weights, kind: SeqLossKind):
    """Weighted mean L1/L2 distance between two sequences and its gradient
    with respect to the first. The L1 subgradient uses sign(0) = 0."""
    pred_seq = np.asarray(pred_seq, dtype=np.float64)
    target_seq = np.asarray(target_seq, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if pred_seq.shape != target_seq.shape or pred_seq.shape != weights.shape:
        raise ShapeMismatch(
            f"shapes differ: pred {pred_seq.shape}, target {target_seq.shape}, weights {weights.shape}"
        )
    if np.any(weights < 0):
        raise InvalidWeight("weights must be non-negative")
    n = pred_seq.size
    diff = pred_seq - target_seq
    if kind.base == "l1":
        value = float((weights * np.abs(diff)).sum() / n)
        grad = weights * np.sign(diff) / n
    else:
        value = float((weights * diff * diff).sum() / n)
        grad = 2.0 * weights * diff / n
    return value, grad


def inverse_weights(
    density: LabelDensity,
    targets,
    floor: float = 1e-4,
    normalize: bool = True,
) -> np.ndarray:
    """Per-element weights 1 / max(p(bin of target), floor), optionally rescaled
    to mean 1 so the loss scale stays comparable across weighting schemes."""
    if not (0 < floor <= 1):
        raise InvalidWeight(f"floor must lie in (0, 1], got {floor}")
    targets = np.asarray(targets, dtype=np.float64)
    idx = bin_index(density.space, targets)
    w = 1.0 / np.maximum(density.probs[idx], floor)
    if normalize:
        w = w / w.mean()
    return w


def dist_loss(
    predictions,
    labels,
    pseudo_labels: PseudoSequence,
    density: LabelDensity,
    sort_cfg: SoftSortConfig | None = None,
    cfg: DistLossConfig | None = None,
) -> LossOutput:
    """Total objective: sample-level weighted error plus dist_weight times the
    sequence distance between soft-sorted predictions and the pseudo-labels.

    The gradient with respect to the predictions routes the distribution term
    through the sorting operator's vector-Jacobian product. The sorting epsilon
    is resolved once per call and treated as a constant.
    """
    if cfg is None:
        cfg = DistLossConfig()
    predictions = np.asarray(predictions, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    targets = pseudo_labels.values
    if predictions.shape != labels.shape or predictions.shape != targets.shape:
        raise ShapeMismatch(
            f"shapes differ: predictions {predictions.shape}, labels {labels.shape}, "
            f"pseudo-labels {targets.shape}"
        )
    eps = sort_cfg.epsilon if sort_cfg is not None else None
    sort_res = soft_sort(predictions, SoftSortConfig(epsilon=eps, direction="ascending"))

    if cfg.kind.weighting == "inverse_probability":
        w_dist = inverse_weights(density, targets, cfg.weight_floor, cfg.normalize_weights)
        w_sample = inverse_weights(density, labels, cfg.weight_floor, cfg.normalize_weights)
    else:
        w_dist = np.ones_like(targets)
        w_sample = np.ones_like(labels)

    dist_term, grad_sorted = weighted_seq_loss(sort_res.sorted_values, targets, w_dist, cfg.kind)
    sample_term, grad_sample = weighted_seq_loss(predictions, labels, w_sample, cfg.kind)
    grad = grad_sample + cfg.dist_weight * soft_sort_vjp(sort_res, grad_sorted)
    total = sample_term + cfg.dist_weight * dist_term
    return LossOutput(total=total, sample_term=sample_term, dist_term=dist_term, grad_predictions=grad)
