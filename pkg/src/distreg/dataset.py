"""Synthetic imbalanced regression datasets, CSV persistence, and shot regions.

Training targets follow a configurable skewed law over [y_min, y_max] while the
validation and test splits are uniform over the same range, so evaluation is
balanced. Inputs are a smooth invertible transform of the target plus noise,
padded with pure-noise features up to the requested dimension.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyDataset, InvalidSpec, ParseError
from .label_space import LabelSpace, bin_index

SPLITS = ("train", "val", "test")
SHAPES = ("uniform", "exponential", "lognormal", "bimodal")
REGION_NAMES = ("many", "median", "few")


@dataclass(frozen=True)
class DatasetSpec:
    n_train: int = 20000
    n_eval: int = 2000
    d: int = 8
    shape: str = "exponential"
    rate: float = 0.65
    noise_sd: float = 2.0
    y_min: float = 0.0
    y_max: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if self.n_train < 1 or self.n_eval < 1:
            raise InvalidSpec("n_train and n_eval must be >= 1")
        if self.d < 1:
            raise InvalidSpec("d must be >= 1")
        if self.shape not in SHAPES:
            raise InvalidSpec(f"shape must be one of {SHAPES}, got {self.shape!r}")
        if not self.y_max > self.y_min:
            raise InvalidSpec("need y_max > y_min")
        if self.rate <= 0 or self.noise_sd < 0:
            raise InvalidSpec("rate must be > 0 and noise_sd >= 0")


@dataclass
class RegressionDataset:
    inputs: np.ndarray = field(repr=False)  # (N, d)
    targets: np.ndarray = field(repr=False)  # (N,)
    split: np.ndarray = field(repr=False)  # (N,) of "train" | "val" | "test"

    def rows(self, split: str) -> tuple[np.ndarray, np.ndarray]:
        mask = self.split == split
        return self.inputs[mask], self.targets[mask]

    @property
    def dim(self) -> int:
        return self.inputs.shape[1]


@dataclass(frozen=True)
class ShotRegions:
    """Per-bin many/median/few labels derived from training-split bin counts."""

    scheme: str  # "absolute" | "fractions"
    thresholds: tuple[float, float]
    bin_regions: tuple[str, ...]
    bin_counts: tuple[int, ...]

    def region_of(self, space: LabelSpace, targets) -> np.ndarray:
        idx = bin_index(space, np.asarray(targets, dtype=np.float64))
        return np.asarray(self.bin_regions, dtype=object)[idx]


def _sample_targets(spec: DatasetSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    lo, hi, r = spec.y_min, spec.y_max, spec.rate
    width = hi - lo
    if spec.shape == "uniform":
        return rng.uniform(lo, hi, size=n)
    if spec.shape == "exponential":
        # inverse-CDF sampling of the truncated exponential
        u = rng.uniform(0, 1, size=n)
        return lo - np.log1p(-u * (1 - np.exp(-r * width))) / r
    if spec.shape == "lognormal":
        out = np.empty(n)
        filled = 0
        while filled < n:
            draw = lo + rng.lognormal(mean=0.0, sigma=r, size=2 * (n - filled))
            draw = draw[draw < hi]
            take = min(draw.size, n - filled)
            out[filled:filled + take] = draw[:take]
            filled += take
        return out
    # bimodal: dominant low mode, small far mode
    comp = rng.uniform(0, 1, size=n) < 0.85
    vals = np.where(
        comp,
        rng.normal(lo + 0.2 * width, 0.08 * width, size=n),
        rng.normal(lo + 0.8 * width, 0.06 * width, size=n),
    )
    return np.clip(vals, lo, np.nextafter(hi, lo))


def _inputs_from_targets(spec: DatasetSpec, y: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    n = y.size
    width = spec.y_max - spec.y_min
    base = np.column_stack([y, (y - spec.y_min) ** 2 / width, np.sin(y)])
    base = base + rng.normal(scale=spec.noise_sd, size=base.shape)
    if spec.d <= 3:
        return base[:, : spec.d]
    noise = rng.normal(size=(n, spec.d - 3))
    return np.column_stack([base, noise])


def synth_imbalanced(spec: DatasetSpec) -> RegressionDataset:
    """Generate a seeded dataset: skewed train targets, uniform val/test targets."""
    rng = np.random.default_rng(spec.seed)
    y_train = _sample_targets(spec, spec.n_train, rng)
    y_val = rng.uniform(spec.y_min, spec.y_max, size=spec.n_eval)
    y_test = rng.uniform(spec.y_min, spec.y_max, size=spec.n_eval)
    y = np.concatenate([y_train, y_val, y_test])
    inputs = _inputs_from_targets(spec, y, rng)
    split = np.array(
        ["train"] * spec.n_train + ["val"] * spec.n_eval + ["test"] * spec.n_eval, dtype=object
    )
    return RegressionDataset(inputs=inputs, targets=y, split=split)


def assign_regions(
    train_targets,
    space: LabelSpace,
    scheme: str = "absolute",
    thresholds: tuple[float, float] | None = None,
) -> ShotRegions:
    """Label each bin many/median/few from training counts.

    absolute: count < low -> few, low <= count <= high -> median, count > high -> many
    (defaults 20/100). fractions: relative to the largest bin count n_max,
    count > high*n_max -> many, count < low*n_max -> few (defaults 0.15/0.5).
    """
    train_targets = np.asarray(train_targets, dtype=np.float64)
    if train_targets.size == 0:
        raise EmptyDataset("need training targets to assign regions")
    if scheme not in ("absolute", "fractions"):
        raise InvalidSpec(f"unknown region scheme {scheme!r}")
    if thresholds is None:
        thresholds = (20.0, 100.0) if scheme == "absolute" else (0.15, 0.5)
    low, high = thresholds
    if not low < high:
        raise InvalidSpec(f"need low < high thresholds, got {thresholds}")
    counts = np.bincount(bin_index(space, train_targets), minlength=space.num_bins)
    if scheme == "fractions":
        n_max = counts.max()
        cut_low, cut_high = low * n_max, high * n_max
        regions = np.where(counts > cut_high, "many", np.where(counts < cut_low, "few", "median"))
    else:
        regions = np.where(counts > high, "many", np.where(counts < low, "few", "median"))
    return ShotRegions(
        scheme=scheme,
        thresholds=(float(low), float(high)),
        bin_regions=tuple(str(r) for r in regions),
        bin_counts=tuple(int(c) for c in counts),
    )


def save_csv(dataset: RegressionDataset, path: str, comments=()) -> None:
    """Write rows as ``x_0..x_{d-1},y,split``; floats use shortest round-trip repr.

    Optional comment lines are emitted first, prefixed with '# '."""
    d = dataset.dim
    header = ",".join([f"x_{j}" for j in range(d)] + ["y", "split"])
    lines = [f"# {c}" for c in comments]
    lines.append(header)
    for i in range(dataset.targets.size):
        cells = [repr(float(v)) for v in dataset.inputs[i]]
        cells.append(repr(float(dataset.targets[i])))
        cells.append(str(dataset.split[i]))
        lines.append(",".join(cells))
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, path)


def load_csv(path: str) -> RegressionDataset:
    """Read a dataset written by save_csv; '#' lines are ignored as comments."""
    with open(path) as fh:
        raw = [line.rstrip("\n") for line in fh]
    rows = [(i + 1, line) for i, line in enumerate(raw) if line and not line.startswith("#")]
    if not rows:
        raise ParseError(f"{path}: no content")
    header_no, header = rows[0]
    cols = header.split(",")
    if len(cols) < 3 or cols[-2] != "y" or cols[-1] != "split":
        raise ParseError(f"{path}:{header_no}: header must end with 'y,split', got {header!r}")
    d = len(cols) - 2
    expected = [f"x_{j}" for j in range(d)]
    if cols[:d] != expected:
        raise ParseError(f"{path}:{header_no}: feature columns must be x_0..x_{d - 1}")
    inputs, targets, split = [], [], []
    for line_no, line in rows[1:]:
        cells = line.split(",")
        if len(cells) != d + 2:
            raise ParseError(f"{path}:{line_no}: expected {d + 2} cells, got {len(cells)}")
        if cells[-1] not in SPLITS:
            raise ParseError(f"{path}:{line_no}: unknown split {cells[-1]!r}")
        try:
            inputs.append([float(c) for c in cells[:d]])
            targets.append(float(cells[d]))
        except ValueError as exc:
            raise ParseError(f"{path}:{line_no}: {exc}") from None
        split.append(cells[-1])
    if not targets:
        raise ParseError(f"{path}: no data rows")
    return RegressionDataset(
        inputs=np.asarray(inputs, dtype=np.float64),
        targets=np.asarray(targets, dtype=np.float64),
        split=np.asarray(split, dtype=object),
    )
