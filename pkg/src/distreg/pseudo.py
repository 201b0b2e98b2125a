"""Deterministic pseudo-label sequences realizing a label density at a given sample count.

A density over B bins and a sample count M are turned into integer expected
frequencies (sum exactly M, each within 1 of M * p_i) and expanded into the
ascending sequence of bin centers those frequencies describe.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptySample, FrequencySumMismatch, InvalidFrequency, InvalidSampleCount
from .label_space import LabelDensity, LabelSpace

# Frequencies arrive as M * p_i; values a hair below an integer are float noise
# from the normalized density, not fractional mass.
_FLOOR_SNAP = 1e-9
_SUM_TOL = 1e-6


@dataclass(frozen=True)
class FrequencyPlan:
    """Real and integer per-bin frequencies for an M-point sample."""

    m: int
    real_freqs: np.ndarray = field(repr=False)
    int_freqs: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class PseudoSequence:
    """Ascending length-M sequence of bin values encoding a distribution."""

    values: np.ndarray = field(repr=False)
    source: str = "labels"  # "labels" | "predictions"


def expected_frequencies(density: LabelDensity, m: int) -> np.ndarray:
    """Real-valued expected frequencies M * p_i."""
    if m < 1:
        raise InvalidSampleCount(f"sample count must be >= 1, got {m}")
    return m * density.probs


def round_frequencies(real_freqs, m: int) -> np.ndarray:
    """Round real frequencies to integers that still sum to exactly m.

    Floors every entry, then distributes the remainder a = m - sum(floors) as
    single units split between the head (first floor((a+1)/2) bins) and the tail
    (last floor(a/2) bins) of the bin list.
    """
    real_freqs = np.asarray(real_freqs, dtype=np.float64)
    if np.any(real_freqs < 0):
        raise InvalidFrequency("frequencies must be non-negative")
    if abs(float(real_freqs.sum()) - m) > _SUM_TOL:
        raise FrequencySumMismatch(
            f"frequencies sum to {real_freqs.sum()!r}, expected {m}"
        )
    floors = np.floor(real_freqs + _FLOOR_SNAP).astype(np.int64)
    b = real_freqs.size
    a = int(m - floors.sum())
    if a < 0 or a > b:
        raise FrequencySumMismatch(f"remainder {a} outside [0, {b}]")
    head = (a + 1) // 2
    tail = a // 2
    bonus = np.zeros(b, dtype=np.int64)
    bonus[:head] = 1
    if tail:
        bonus[b - tail:] = 1
    return floors + bonus


def expand_pseudo_labels(space: LabelSpace, int_freqs) -> PseudoSequence:
    """Expand integer frequencies into the ascending sequence of bin centers.

    Element j is the smallest center whose cumulative frequency reaches j, i.e.
    each center repeated by its count.
    """
    int_freqs = np.asarray(int_freqs, dtype=np.int64)
    if np.any(int_freqs < 0):
        raise InvalidFrequency("frequencies must be non-negative")
    if int_freqs.sum() < 1:
        raise EmptySample("all frequencies are zero")
    values = np.repeat(space.centers, int_freqs)
    return PseudoSequence(values=values, source="labels")


def make_pseudo_labels(density: LabelDensity, m: int) -> PseudoSequence:
    """Expected frequencies -> integer rounding -> ascending expansion."""
    real = expected_frequencies(density, m)
    ints = round_frequencies(real, m)
    return expand_pseudo_labels(density.space, ints)


def make_frequency_plan(density: LabelDensity, m: int) -> FrequencyPlan:
    real = expected_frequencies(density, m)
    ints = round_frequencies(real, m)
    return FrequencyPlan(m=m, real_freqs=real, int_freqs=ints)


class PseudoLabelCache:
    """Per-sample-count cache of pseudo-label sequences for one fixed density.

    The sequences depend only on (density, m); the fill is idempotent, so
    concurrent use at worst recomputes an identical entry.
    """

    def __init__(self, density: LabelDensity):
        self._density = density
        self._by_count: dict[int, PseudoSequence] = {}

    def get(self, m: int) -> PseudoSequence:
        seq = self._by_count.get(m)
        if seq is None:
            seq = make_pseudo_labels(self._density, m)
            self._by_count[m] = seq
        return seq
