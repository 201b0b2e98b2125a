"""Differentiable sorting by regularized projection, solved with pool-adjacent-violators.

The forward pass hard-sorts the input (O(n log n)), subtracts a strictly
decreasing anchor scaled by epsilon, and runs one isotonic regression on the
residual (O(n)). Values whose sorted gaps fall below epsilon pool into blocks;
each output entry is its block's mean, so the operator equals the exact sort
wherever gaps exceed epsilon and degrades gracefully to local averaging at
(near-)ties. The backward pass block-averages the upstream gradient and
un-permutes it, in O(n).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptySample, InvalidInput, ShapeMismatch

Blocks = tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class SoftSortConfig:
    """epsilon scales the regularizer; None picks a data-scaled default per call."""

    epsilon: float | None = None
    direction: str = "ascending"

    def __post_init__(self):
        if self.direction not in ("ascending", "descending"):
            raise InvalidInput(f"unknown direction {self.direction!r}")
        if self.epsilon is not None and not (np.isfinite(self.epsilon) and self.epsilon > 0):
            raise InvalidInput(f"epsilon must be finite and > 0, got {self.epsilon}")


@dataclass(frozen=True)
class SoftSortResult:
    sorted_values: np.ndarray = field(repr=False)
    permutation: np.ndarray = field(repr=False)
    blocks: Blocks
    direction: str
    epsilon: float


def default_epsilon(values) -> float:
    values = np.asarray(values, dtype=np.float64)
    spread = float(values.max() - values.min()) if values.size else 0.0
    return 1e-3 * (spread + 1e-12) / max(values.size, 1)


def isotonic_regression(values) -> tuple[np.ndarray, Blocks]:
    """Least-squares non-increasing fit; returns the fit and its pooled blocks.

    Single left-to-right pass: each new element starts a block, and adjacent
    blocks merge while the running means violate the ordering.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return values.copy(), ()
    if not np.all(np.isfinite(values)):
        raise InvalidInput("isotonic regression requires finite input")
    totals: list[float] = []
    counts: list[int] = []
    starts: list[int] = []
    for i, v in enumerate(values):
        total, count = float(v), 1
        # merge while previous mean < current mean
        while totals and totals[-1] * count < total * counts[-1]:
            total += totals.pop()
            count += counts.pop()
            starts.pop()
        totals.append(total)
        counts.append(count)
        starts.append(i + 1 - count)
    fitted = np.repeat(np.asarray(totals) / np.asarray(counts), counts)
    blocks = tuple((s, s + c) for s, c in zip(starts, counts))
    return fitted, blocks


def soft_sort(values, config: SoftSortConfig | None = None) -> SoftSortResult:
    """Differentiable surrogate of sorting ``values`` in the configured direction."""
    if config is None:
        config = SoftSortConfig()
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise EmptySample("cannot sort an empty batch")
    if not np.all(np.isfinite(values)):
        raise InvalidInput("soft sort requires finite input")
    n = values.size
    eps = config.epsilon if config.epsilon is not None else default_epsilon(values)
    if config.direction == "descending":
        permutation = np.argsort(-values, kind="stable")
    else:
        permutation = np.argsort(values, kind="stable")
    s = values[permutation]
    if n == 1:
        return SoftSortResult(s.copy(), permutation, ((0, 1),), config.direction, float(eps))
    # Residual against the anchor, in descending orientation either way.
    anchor = eps * np.arange(n, 0, -1, dtype=np.float64)
    residual = (s if config.direction == "descending" else -s) - anchor
    _, blocks = isotonic_regression(residual)
    starts = np.fromiter((b[0] for b in blocks), dtype=np.int64, count=len(blocks))
    sizes = np.fromiter((b[1] - b[0] for b in blocks), dtype=np.int64, count=len(blocks))
    means = np.add.reduceat(s, starts) / sizes
    sorted_values = np.repeat(means, sizes)
    return SoftSortResult(sorted_values, permutation, blocks, config.direction, float(eps))


def soft_sort_vjp(result: SoftSortResult, upstream) -> np.ndarray:
    """Vector-Jacobian product of soft_sort at its original input.

    The Jacobian block-averages within each pooled run and permutes back, so the
    product is the upstream gradient averaged per block and scattered through
    the inverse argsort.
    """
    upstream = np.asarray(upstream, dtype=np.float64)
    n = result.permutation.size
    if upstream.shape != (n,):
        raise ShapeMismatch(f"upstream has shape {upstream.shape}, expected ({n},)")
    starts = np.fromiter((b[0] for b in result.blocks), dtype=np.int64, count=len(result.blocks))
    sizes = np.fromiter((b[1] - b[0] for b in result.blocks), dtype=np.int64, count=len(result.blocks))
    means = np.add.reduceat(upstream, starts) / sizes
    grad_sorted = np.repeat(means, sizes)
    grad = np.empty(n, dtype=np.float64)
    grad[result.permutation] = grad_sorted
    return grad
