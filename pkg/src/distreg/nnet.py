"""Small fully-connected regressor with hand-written backprop, Adam, and a
seeded mini-batch training loop driving the distribution-aligned objective."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .dataset import RegressionDataset, ShotRegions
from .errors import InvalidInput, InvalidTape, NonFiniteGradient, ShapeMismatch
from .evaluation import RegionReport, region_metrics
from .label_space import LabelDensity, LabelSpace
from .loss import DistLossConfig, dist_loss
from .pseudo import PseudoLabelCache
from .softsort import SoftSortConfig

_ACTIVATIONS = ("relu", "tanh")


@dataclass
class MlpParams:
    layer_dims: tuple
    activation: str
    weights: list = field(repr=False)
    biases: list = field(repr=False)


@dataclass
class MlpGrads:
    weights: list
    biases: list


@dataclass
class Tape:
    """Activation record tying a forward pass to the exact params it used."""

    params: MlpParams
    activations: list
    pre: list


@dataclass
class AdamState:
    step: int
    m_w: list
    v_w: list
    m_b: list
    v_b: list
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps_hat: float = 1e-8
    weight_decay: float = 1e-4


def init_params(layer_dims, activation: str = "relu", rng=None) -> MlpParams:
    """He/Xavier-initialized weights (by activation), zero biases, output dim 1."""
    layer_dims = tuple(int(d) for d in layer_dims)
    if len(layer_dims) < 2 or layer_dims[-1] != 1:
        raise InvalidInput(f"layer_dims must end in 1, got {layer_dims}")
    if activation not in _ACTIVATIONS:
        raise InvalidInput(f"activation must be one of {_ACTIVATIONS}")
    if rng is None:
        rng = np.random.default_rng(0)
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
        scale = np.sqrt((2.0 if activation == "relu" else 1.0) / fan_in)
        weights.append(rng.normal(scale=scale, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpParams(layer_dims, activation, weights, biases)


def forward(params: MlpParams, batch_inputs) -> tuple[np.ndarray, Tape]:
    """Affine/activation stack; hidden layers activated, output layer linear."""
    a = np.asarray(batch_inputs, dtype=np.float64)
    if a.ndim != 2 or a.shape[1] != params.layer_dims[0]:
        raise ShapeMismatch(
            f"inputs have shape {a.shape}, expected (n, {params.layer_dims[0]})"
        )
    activations = [a]
    pre = []
    last = len(params.weights) - 1
    for layer, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = a @ w + b
        pre.append(z)
        if layer < last:
            a = np.maximum(z, 0.0) if params.activation == "relu" else np.tanh(z)
        else:
            a = z
        activations.append(a)
    return a[:, 0], Tape(params=params, activations=activations, pre=pre)


def backward(params: MlpParams, tape: Tape, grad_predictions) -> MlpGrads:
    """Exact parameter gradients of grad_predictions . predictions."""
    if tape.params is not params:
        raise InvalidTape("tape was recorded with different parameters")
    grad_predictions = np.asarray(grad_predictions, dtype=np.float64)
    n = tape.activations[0].shape[0]
    if grad_predictions.shape != (n,):
        raise ShapeMismatch(f"grad has shape {grad_predictions.shape}, expected ({n},)")
    delta = grad_predictions[:, None]
    grads_w = [None] * len(params.weights)
    grads_b = [None] * len(params.biases)
    for layer in range(len(params.weights) - 1, -1, -1):
        grads_w[layer] = tape.activations[layer].T @ delta
        grads_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = delta @ params.weights[layer].T
            if params.activation == "relu":
                delta = delta * (tape.pre[layer - 1] > 0)
            else:
                delta = delta * (1.0 - tape.activations[layer] ** 2)
    return MlpGrads(weights=grads_w, biases=grads_b)


def init_adam(
    params: MlpParams,
    lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps_hat: float = 1e-8,
    weight_decay: float = 1e-4,
) -> AdamState:
    return AdamState(
        step=0,
        m_w=[np.zeros_like(w) for w in params.weights],
        v_w=[np.zeros_like(w) for w in params.weights],
        m_b=[np.zeros_like(b) for b in params.biases],
        v_b=[np.zeros_like(b) for b in params.biases],
        lr=lr,
        beta1=beta1,
        beta2=beta2,
        eps_hat=eps_hat,
        weight_decay=weight_decay,
    )


def adam_step(
    params: MlpParams,
    grads: MlpGrads,
    state: AdamState,
    frozen_layers=(),
) -> tuple[MlpParams, AdamState]:
    """One Adam update with coupled L2 decay added to the gradients.

    Frozen layers keep both their parameters and their moments untouched.
    """
    for g in grads.weights + grads.biases:
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradient("gradient contains NaN or Inf; step aborted")
    t = state.step + 1
    bc1 = 1.0 - state.beta1**t
    bc2 = 1.0 - state.beta2**t
    frozen = set(frozen_layers)
    new_w, new_b = [], []
    m_w, v_w, m_b, v_b = [], [], [], []

    def update(theta, g, m, v):
        g = g + state.weight_decay * theta
        m = state.beta1 * m + (1 - state.beta1) * g
        v = state.beta2 * v + (1 - state.beta2) * g * g
        theta = theta - state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps_hat)
        return theta, m, v

    for layer in range(len(params.weights)):
        if layer in frozen:
            new_w.append(params.weights[layer])
            new_b.append(params.biases[layer])
            m_w.append(state.m_w[layer])
            v_w.append(state.v_w[layer])
            m_b.append(state.m_b[layer])
            v_b.append(state.v_b[layer])
            continue
        w, mw, vw = update(params.weights[layer], grads.weights[layer], state.m_w[layer], state.v_w[layer])
        b, mb, vb = update(params.biases[layer], grads.biases[layer], state.m_b[layer], state.v_b[layer])
        new_w.append(w)
        new_b.append(b)
        m_w.append(mw)
        v_w.append(vw)
        m_b.append(mb)
        v_b.append(vb)
    new_params = MlpParams(params.layer_dims, params.activation, new_w, new_b)
    new_state = replace(state, step=t, m_w=m_w, v_w=v_w, m_b=m_b, v_b=v_b)
    return new_params, new_state


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    batch_size: int = 256
    lr: float = 1e-3
    lr_decay: float = 0.1
    lr_milestones: tuple | None = None  # None -> 2/3 and 8/9 of the epochs
    hidden: tuple = (64, 64)
    activation: str = "relu"
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    weight_decay: float = 1e-4
    freeze_hidden: bool = False
    final_batch: str = "regenerate"  # or "drop"
    sort_epsilon: float | None = None
    gm_eps: float = 1e-10
    seed: int = 0


@dataclass
class EpochRecord:
    epoch: int
    lr: float
    train_total: float
    train_sample: float
    train_dist: float
    val_report: RegionReport


@dataclass
class TrainResult:
    params: MlpParams
    adam: AdamState
    epochs: list


def _milestones(cfg: TrainConfig) -> tuple:
    if cfg.lr_milestones is not None:
        return tuple(int(m) for m in cfg.lr_milestones)
    return (int(round(cfg.epochs * 2 / 3)), int(round(cfg.epochs * 8 / 9)))


def train(
    dataset: RegressionDataset,
    space: LabelSpace,
    density: LabelDensity,
    regions: ShotRegions,
    loss_cfg: DistLossConfig,
    cfg: TrainConfig,
) -> TrainResult:
    """Seeded mini-batch training against the distribution-aligned objective.

    Randomness is derived from cfg.seed via a SeedSequence split into an
    init stream and a shuffle stream, in that order. Pseudo-labels are cached
    per batch size; a final short batch gets its own (cached) sequence.
    """
    X_train, y_train = dataset.rows("train")
    X_val, y_val = dataset.rows("val")
    if X_train.shape[0] == 0:
        raise InvalidInput("dataset has no training rows")
    if X_val.shape[0] == 0:
        raise InvalidInput("dataset has no validation rows")
    init_ss, shuffle_ss = np.random.SeedSequence(cfg.seed).spawn(2)
    params = init_params(
        (dataset.dim, *cfg.hidden, 1), cfg.activation, np.random.default_rng(init_ss)
    )
    state = init_adam(
        params,
        lr=cfg.lr,
        beta1=cfg.beta1,
        beta2=cfg.beta2,
        eps_hat=cfg.adam_eps,
        weight_decay=cfg.weight_decay,
    )
    frozen = tuple(range(len(params.weights) - 1)) if cfg.freeze_hidden else ()
    cache = PseudoLabelCache(density)
    sort_cfg = SoftSortConfig(epsilon=cfg.sort_epsilon)
    rng = np.random.default_rng(shuffle_ss)
    milestones = _milestones(cfg)
    n = y_train.size
    records = []
    for epoch in range(cfg.epochs):
        lr_now = cfg.lr * cfg.lr_decay ** sum(epoch >= m for m in milestones)
        state = replace(state, lr=lr_now)
        order = rng.permutation(n)
        totals = np.zeros(3)
        batches = 0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            if idx.size < cfg.batch_size and cfg.final_batch == "drop" and batches:
                continue
            pseudo = cache.get(idx.size)
            preds, tape = forward(params, X_train[idx])
            if not np.all(np.isfinite(preds)):
                raise NonFiniteGradient(
                    f"predictions diverged at epoch {epoch}, step {batches}"
                )
            out = dist_loss(preds, y_train[idx], pseudo, density, sort_cfg, loss_cfg)
            grads = backward(params, tape, out.grad_predictions)
            params, state = adam_step(params, grads, state, frozen)
            totals += (out.total, out.sample_term, out.dist_term)
            batches += 1
        val_preds, _ = forward(params, X_val)
        report = region_metrics(val_preds, y_val, regions, space, cfg.gm_eps)
        records.append(
            EpochRecord(
                epoch=epoch,
                lr=lr_now,
                train_total=float(totals[0] / batches),
                train_sample=float(totals[1] / batches),
                train_dist=float(totals[2] / batches),
                val_report=report,
            )
        )
    return TrainResult(params=params, adam=state, epochs=records)


def predict(params: MlpParams, inputs) -> np.ndarray:
    return forward(params, inputs)[0]


CHECKPOINT_VERSION = 1


def checkpoint_to_dict(params: MlpParams, adam: AdamState | None = None) -> dict:
    """Stable textual dump of the model and, optionally, optimizer state."""
    payload = {
        "format_version": CHECKPOINT_VERSION,
        "layer_dims": list(params.layer_dims),
        "activation": params.activation,
        "weights": [w.tolist() for w in params.weights],
        "biases": [b.tolist() for b in params.biases],
    }
    if adam is not None:
        payload["adam"] = {
            "step": adam.step,
            "lr": adam.lr,
            "beta1": adam.beta1,
            "beta2": adam.beta2,
            "eps_hat": adam.eps_hat,
            "weight_decay": adam.weight_decay,
            "m_w": [m.tolist() for m in adam.m_w],
            "v_w": [v.tolist() for v in adam.v_w],
            "m_b": [m.tolist() for m in adam.m_b],
            "v_b": [v.tolist() for v in adam.v_b],
        }
    return payload


def checkpoint_from_dict(payload: dict) -> tuple[MlpParams, AdamState | None]:
    if payload.get("format_version") != CHECKPOINT_VERSION:
        raise InvalidInput(f"unsupported checkpoint version {payload.get('format_version')!r}")
    params = MlpParams(
        layer_dims=tuple(payload["layer_dims"]),
        activation=payload["activation"],
        weights=[np.asarray(w, dtype=np.float64) for w in payload["weights"]],
        biases=[np.asarray(b, dtype=np.float64) for b in payload["biases"]],
    )
    adam = None
    if payload.get("adam") is not None:
        raw = payload["adam"]
        adam = AdamState(
            step=raw["step"],
            m_w=[np.asarray(m, dtype=np.float64) for m in raw["m_w"]],
            v_w=[np.asarray(v, dtype=np.float64) for v in raw["v_w"]],
            m_b=[np.asarray(m, dtype=np.float64) for m in raw["m_b"]],
            v_b=[np.asarray(v, dtype=np.float64) for v in raw["v_b"]],
            lr=raw["lr"],
            beta1=raw["beta1"],
            beta2=raw["beta2"],
            eps_hat=raw["eps_hat"],
            weight_decay=raw["weight_decay"],
        )
    return params, adam
