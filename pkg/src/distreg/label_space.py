"""Equal-width binning of a continuous label range and per-bin density estimates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EmptyDataset,
    EmptyRange,
    InvalidBandwidth,
    InvalidBinWidth,
    InvalidLabel,
)

_PROB_TOL = 1e-9


@dataclass(frozen=True)
class LabelSpace:
    """Discretization of [y_min, y_max) into equal-width bins.

    Each bin is represented by its lower bound, so ``centers[i] = y_min + i * delta_y``
    and the last bin may extend past ``y_max``.
    """

    y_min: float
    y_max: float
    delta_y: float
    num_bins: int
    centers: np.ndarray = field(repr=False)

    @property
    def edges(self) -> np.ndarray:
        """Bin edges, length ``num_bins + 1``."""
        return self.y_min + np.arange(self.num_bins + 1) * self.delta_y


@dataclass(frozen=True)
class LabelDensity:
    """Per-bin probabilities over a LabelSpace, non-negative and summing to 1."""

    space: LabelSpace
    probs: np.ndarray = field(repr=False)


def make_label_space(y_min: float, y_max: float, delta_y: float) -> LabelSpace:
    """Build a LabelSpace covering [y_min, y_max) with bins of width delta_y.

    The bin count is ``ceil((y_max - y_min) / delta_y)``; a small rounding snap keeps
    ranges that are exact multiples of the width from gaining a spurious bin.
    """
    if not (np.isfinite(delta_y) and delta_y > 0):
        raise InvalidBinWidth(f"bin width must be finite and > 0, got {delta_y}")
    if not (np.isfinite(y_min) and np.isfinite(y_max)) or y_max <= y_min:
        raise EmptyRange(f"need y_max > y_min, got [{y_min}, {y_max}]")
    num_bins = int(math.ceil(round((y_max - y_min) / delta_y, 9)))
    num_bins = max(num_bins, 1)
    centers = y_min + np.arange(num_bins, dtype=np.float64) * delta_y
    return LabelSpace(float(y_min), float(y_max), float(delta_y), num_bins, centers)


def bin_index(space: LabelSpace, y: float | np.ndarray) -> int | np.ndarray:
    """Map label value(s) to bin indices by the floor rule; out-of-range clamps to edge bins."""
    arr = np.asarray(y, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise InvalidLabel("labels must be finite")
    # clip before the int cast: enormous (finite) values would overflow int64
    idx = np.clip(np.floor((arr - space.y_min) / space.delta_y), 0, space.num_bins - 1)
    idx = idx.astype(np.int64)
    # Correct off-by-one from the division rounding against the actual edge values.
    edges = space.edges
    idx = np.where((idx < space.num_bins - 1) & (arr >= edges[idx + 1]), idx + 1, idx)
    idx = np.where((idx > 0) & (arr < edges[idx]), idx - 1, idx)
    if np.isscalar(y) or arr.ndim == 0:
        return int(idx)
    return idx


def histogram_density(space: LabelSpace, labels) -> LabelDensity:
    """Empirical per-bin probabilities, p_i = count(bin i) / N."""
    labels = np.asarray(labels, dtype=np.float64)
    if labels.size == 0:
        raise EmptyDataset("labels must be non-empty")
    idx = bin_index(space, labels)
    counts = np.bincount(idx, minlength=space.num_bins).astype(np.float64)
    return LabelDensity(space, counts / labels.size)


def silverman_bandwidth(labels: np.ndarray, floor: float) -> float:
    """Rule-of-thumb bandwidth 1.06 * std * N^(-1/5), floored for degenerate samples."""
    labels = np.asarray(labels, dtype=np.float64)
    sd = float(np.std(labels, ddof=1)) if labels.size > 1 else 0.0
    h = 1.06 * sd * labels.size ** (-1 / 5)
    return max(h, floor)


def kde_density(space: LabelSpace, labels, bandwidth: float | str = "auto") -> LabelDensity:
    """Gaussian-kernel density over the bin centers, normalized to a probability vector.

    ``bandwidth="auto"`` applies Silverman's rule with a floor of ``delta_y / 2`` so
    that constant label sets still yield a usable (narrow) kernel.
    """
    labels = np.asarray(labels, dtype=np.float64)
    if labels.size == 0:
        raise EmptyDataset("labels must be non-empty")
    if not np.all(np.isfinite(labels)):
        raise InvalidLabel("labels must be finite")
    if isinstance(bandwidth, str):
        if bandwidth != "auto":
            raise InvalidBandwidth(f"unknown bandwidth mode {bandwidth!r}")
        h = silverman_bandwidth(labels, floor=space.delta_y / 2)
    else:
        h = float(bandwidth)
        if not (np.isfinite(h) and h > 0):
            raise InvalidBandwidth(f"bandwidth must be finite and > 0, got {bandwidth}")
    # Evaluate the kernel sum at each bin center; shift by the row max before exp
    # so narrow bandwidths cannot underflow every entry at once.
    sq = (space.centers[:, None] - labels[None, :]) ** 2 / (2.0 * h * h)
    sq -= sq.min()
    mass = np.exp(-sq).sum(axis=1)
    total = mass.sum()
    probs = mass / total
    return LabelDensity(space, probs)


def check_density(density: LabelDensity) -> None:
    """Raise if the probability vector violates its contract."""
    probs = density.probs
    if probs.shape != (density.space.num_bins,):
        raise InvalidLabel("probs length must equal the bin count")
    if np.any(probs < 0) or abs(float(probs.sum()) - 1.0) > _PROB_TOL:
        raise InvalidLabel("probs must be non-negative and sum to 1")
