"""Flat, fully-serializable run configuration shared by every CLI subcommand.

A run is determined by (config, seed): the same resolved RunConfig always
produces byte-identical artifacts. Configs load from ``key=value`` text files
(one pair per line, ``#`` comments); unknown keys are rejected.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .dataset import DatasetSpec
from .errors import ConfigError
from .loss import DistLossConfig, SeqLossKind
from .nnet import TrainConfig


@dataclass(frozen=True)
class RunConfig:
    # run identity
    tag: str = "run"
    out_root: str = "runs"
    dataset_csv: str = ""
    checkpoint: str = ""
    seed: int = 0
    # dataset synthesis
    n_train: int = 20000
    n_eval: int = 2000
    d: int = 8
    shape: str = "exponential"
    rate: float = 0.65
    noise_sd: float = 2.0
    y_min: float = 0.0
    y_max: float = 10.0
    # label binning and density estimate
    delta_y: float = 0.5
    bandwidth: str = "auto"
    # objective
    seq_loss: str = "inv-l2"
    dist_weight: float = 1.0
    weight_floor: float = 1e-4
    normalize_weights: bool = True
    sort_epsilon: str = "auto"
    # model and optimization
    hidden: str = "64,64"
    activation: str = "relu"
    epochs: int = 36
    batch_size: int = 256
    lr: float = 1e-3
    lr_decay: float = 0.1
    lr_milestones: str = "auto"
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    weight_decay: float = 1e-4
    freeze_hidden: bool = False
    final_batch: str = "regenerate"
    # shot regions and metrics
    region_scheme: str = "fractions"
    region_low: str = "auto"
    region_high: str = "auto"
    gm_eps: float = 1e-10

    # -- derived views ---------------------------------------------------
    def dataset_spec(self) -> DatasetSpec:
        return DatasetSpec(
            n_train=self.n_train,
            n_eval=self.n_eval,
            d=self.d,
            shape=self.shape,
            rate=self.rate,
            noise_sd=self.noise_sd,
            y_min=self.y_min,
            y_max=self.y_max,
            seed=self.seed,
        )

    def hidden_dims(self) -> tuple:
        if not self.hidden.strip():
            return ()
        try:
            return tuple(int(p) for p in self.hidden.split(","))
        except ValueError:
            raise ConfigError(f"hidden must be a comma list of ints, got {self.hidden!r}") from None

    def bandwidth_value(self) -> float | str:
        return "auto" if self.bandwidth == "auto" else _as_float("bandwidth", self.bandwidth)

    def sort_epsilon_value(self) -> float | None:
        return None if self.sort_epsilon == "auto" else _as_float("sort_epsilon", self.sort_epsilon)

    def milestones(self) -> tuple | None:
        if self.lr_milestones == "auto":
            return None
        if not self.lr_milestones.strip():
            return ()
        try:
            return tuple(int(p) for p in self.lr_milestones.split(","))
        except ValueError:
            raise ConfigError(
                f"lr_milestones must be 'auto' or a comma list of ints, got {self.lr_milestones!r}"
            ) from None

    def region_thresholds(self) -> tuple:
        defaults = (20.0, 100.0) if self.region_scheme == "absolute" else (0.15, 0.5)
        low = defaults[0] if self.region_low == "auto" else _as_float("region_low", self.region_low)
        high = defaults[1] if self.region_high == "auto" else _as_float("region_high", self.region_high)
        return (low, high)

    def loss_config(self) -> DistLossConfig:
        return DistLossConfig(
            kind=SeqLossKind.parse(self.seq_loss),
            dist_weight=self.dist_weight,
            weight_floor=self.weight_floor,
            normalize_weights=self.normalize_weights,
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            lr=self.lr,
            lr_decay=self.lr_decay,
            lr_milestones=self.milestones(),
            hidden=self.hidden_dims(),
            activation=self.activation,
            beta1=self.beta1,
            beta2=self.beta2,
            adam_eps=self.adam_eps,
            weight_decay=self.weight_decay,
            freeze_hidden=self.freeze_hidden,
            final_batch=self.final_batch,
            sort_epsilon=self.sort_epsilon_value(),
            gm_eps=self.gm_eps,
            seed=self.seed,
        )


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _as_float(key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{key} must be a number or 'auto', got {raw!r}") from None


def coerce(key: str, raw: str):
    """Coerce a raw string to the declared type of a RunConfig field."""
    if key not in _FIELDS:
        raise ConfigError(f"unknown config key {key!r}")
    target = _FIELDS[key].type
    raw = raw.strip()
    try:
        if target == "int":
            return int(raw)
        if target == "float":
            return float(raw)
        if target == "bool":
            lowered = raw.lower()
            if lowered in ("true", "1", "yes", "on"):
                return True
            if lowered in ("false", "0", "no", "off"):
                return False
            raise ValueError(raw)
        return raw
    except ValueError:
        raise ConfigError(f"cannot parse {key}={raw!r} as {target}") from None


def parse_config_text(text: str) -> dict:
    """Parse ``key=value`` lines into coerced values; unknown keys reject."""
    out = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {line_no}: expected key=value, got {stripped!r}")
        key, _, raw = stripped.partition("=")
        out[key.strip()] = coerce(key.strip(), raw)
    return out


def load_config(path: str) -> dict:
    with open(path) as fh:
        return parse_config_text(fh.read())


def resolve_config(file_values: dict | None = None, overrides: dict | None = None) -> RunConfig:
    """defaults < config file < explicit overrides."""
    merged = {}
    for source in (file_values or {}, overrides or {}):
        for key, value in source.items():
            if key not in _FIELDS:
                raise ConfigError(f"unknown config key {key!r}")
            merged[key] = value
    cfg = RunConfig(**merged)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    if cfg.epochs < 1 or cfg.batch_size < 1:
        raise ConfigError("epochs and batch_size must be >= 1")
    if cfg.final_batch not in ("regenerate", "drop"):
        raise ConfigError(f"final_batch must be regenerate|drop, got {cfg.final_batch!r}")
    if cfg.region_scheme not in ("absolute", "fractions"):
        raise ConfigError(f"region_scheme must be absolute|fractions, got {cfg.region_scheme!r}")
    low, high = cfg.region_thresholds()
    if not low < high:
        raise ConfigError(f"region thresholds must satisfy low < high, got ({low}, {high})")
    # fail fast on anything unparseable
    cfg.hidden_dims()
    cfg.bandwidth_value()
    cfg.sort_epsilon_value()
    cfg.milestones()
    SeqLossKind.parse(cfg.seq_loss)


def config_to_dict(cfg: RunConfig) -> dict:
    return dataclasses.asdict(cfg)


def config_to_text(cfg: RunConfig) -> str:
    lines = [f"{f.name}={getattr(cfg, f.name)}" for f in dataclasses.fields(RunConfig)]
    return "\n".join(lines) + "\n"
