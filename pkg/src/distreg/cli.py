"""Command-line front end: gen / train / eval / ablate.

Every run writes JSON/CSV artifacts (plus rendered figures) into
``<out_root>/<tag>/``, each embedding the resolved config, and is fully
determined by that config: re-running reproduces the files byte for byte.

Exit codes: 0 success, 2 config error, 3 numeric failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from . import plots
from .config import RunConfig, coerce, config_to_dict, load_config, resolve_config
from .dataset import assign_regions, load_csv, save_csv, synth_imbalanced
from .errors import ConfigError, DistregError, NonFiniteGradient, ParseError
from .evaluation import emit_report, region_metrics, report_to_dict
from .label_space import bin_index, kde_density, make_label_space
from .nnet import checkpoint_from_dict, checkpoint_to_dict, predict, train

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

ABLATE_AXES = {
    "seq_loss_kind": "seq_loss",
    "batch_size": "batch_size",
    "dist_weight": "dist_weight",
    "imbalance_ratio": "rate",
}

_EPOCH_COLUMNS = (
    "epoch", "lr", "train_total", "train_sample", "train_dist",
    "val_all_mae", "val_all_gm", "val_many_mae", "val_many_gm",
    "val_median_mae", "val_median_gm", "val_few_mae", "val_few_gm",
    "val_wasserstein1",
)

_TABLE_METRICS = (
    "all_mae", "all_gm", "many_mae", "many_gm", "median_mae", "median_gm",
    "few_mae", "few_gm", "wasserstein1",
)


def _atomic_write(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _write_json(path: str, payload: dict) -> None:
    _atomic_write(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _config_comments(cfg: RunConfig) -> list:
    resolved = config_to_dict(cfg)
    return [f"{k}={resolved[k]}" for k in sorted(resolved)]


def _run_dir(cfg: RunConfig) -> str:
    path = os.path.join(cfg.out_root, cfg.tag)
    os.makedirs(os.path.join(path, "figures"), exist_ok=True)
    return path


def _load_or_synth(cfg: RunConfig):
    if cfg.dataset_csv:
        return load_csv(cfg.dataset_csv)
    return synth_imbalanced(cfg.dataset_spec())


def build_pipeline(cfg: RunConfig):
    """Dataset plus the label space, density, and shot regions derived from it."""
    ds = _load_or_synth(cfg)
    if cfg.dataset_csv:
        lo = float(ds.targets.min())
        hi = float(ds.targets.max())
        if hi <= lo:
            hi = lo + cfg.delta_y
    else:
        lo, hi = cfg.y_min, cfg.y_max
    space = make_label_space(lo, hi, cfg.delta_y)
    y_train = ds.rows("train")[1]
    density = kde_density(space, y_train, cfg.bandwidth_value())
    regions = assign_regions(y_train, space, cfg.region_scheme, cfg.region_thresholds())
    return ds, space, density, regions


def _train_histogram_csv(space, y_train) -> str:
    counts = np.bincount(bin_index(space, y_train), minlength=space.num_bins)
    lines = ["bin_center,count"]
    lines.extend(f"{repr(float(c))},{int(n)}" for c, n in zip(space.centers, counts))
    return "\n".join(lines) + "\n"


def cmd_gen(cfg: RunConfig) -> int:
    out = _run_dir(cfg)
    ds, space, _, _ = build_pipeline(cfg)
    save_csv(ds, os.path.join(out, "dataset.csv"), comments=_config_comments(cfg))
    y_train = ds.rows("train")[1]
    hist_csv = _train_histogram_csv(space, y_train)
    comment_block = "".join(f"# {c}\n" for c in _config_comments(cfg))
    _atomic_write(os.path.join(out, "histogram.csv"), comment_block + hist_csv)
    counts = np.bincount(bin_index(space, y_train), minlength=space.num_bins)
    plots.save_label_histogram(space, counts, os.path.join(out, "figures", "label_histogram.png"))
    sys.stdout.write(hist_csv)
    return EXIT_OK


def _epoch_rows(records) -> str:
    lines = [",".join(_EPOCH_COLUMNS)]
    for rec in records:
        cells = [str(rec.epoch), repr(rec.lr), repr(rec.train_total),
                 repr(rec.train_sample), repr(rec.train_dist)]
        for region in ("all", "many", "median", "few"):
            stats = rec.val_report.regions.get(region)
            if stats is None:
                cells.extend(["", ""])
            else:
                cells.extend([repr(stats.mae), repr(stats.gm)])
        cells.append(repr(rec.val_report.wasserstein1))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def cmd_train(cfg: RunConfig) -> int:
    out = _run_dir(cfg)
    ds, space, density, regions = build_pipeline(cfg)
    result = train(ds, space, density, regions, cfg.loss_config(), cfg.train_config())
    payload = checkpoint_to_dict(result.params, result.adam)
    payload["config"] = config_to_dict(cfg)
    _write_json(os.path.join(out, "checkpoint.json"), payload)
    comment_block = "".join(f"# {c}\n" for c in _config_comments(cfg))
    _atomic_write(os.path.join(out, "epochs.csv"), comment_block + _epoch_rows(result.epochs))
    plots.save_training_curves(result.epochs, os.path.join(out, "figures", "training_curve.png"))
    last = result.epochs[-1].val_report.regions["all"]
    sys.stdout.write(
        f"trained {cfg.epochs} epochs; final val all-MAE {last.mae:.4f} "
        f"-> {os.path.join(out, 'checkpoint.json')}\n"
    )
    return EXIT_OK


def _load_checkpoint(cfg: RunConfig):
    path = cfg.checkpoint or os.path.join(cfg.out_root, cfg.tag, "checkpoint.json")
    with open(path) as fh:
        payload = json.load(fh)
    params, _ = checkpoint_from_dict(payload)
    return params


def cmd_eval(cfg: RunConfig) -> int:
    out = _run_dir(cfg)
    ds, space, density, regions = build_pipeline(cfg)
    params = _load_checkpoint(cfg)
    X_test, y_test = ds.rows("test")
    if y_test.size == 0:
        raise ConfigError("dataset has no test rows")
    preds = predict(params, X_test)
    report = region_metrics(preds, y_test, regions, space, cfg.gm_eps)
    resolved = config_to_dict(cfg)
    emit_report(report, os.path.join(out, "report.json"), "json", config=resolved)
    emit_report(report, os.path.join(out, "report.csv"), "csv", config=resolved)
    comment_block = "".join(f"# {c}\n" for c in _config_comments(cfg))
    hist_lines = ["bin_center,label_count,prediction_count"]
    hist_lines.extend(
        f"{repr(float(c))},{l},{p}"
        for c, l, p in zip(space.centers, report.label_hist, report.pred_hist)
    )
    _atomic_write(os.path.join(out, "histograms.csv"), comment_block + "\n".join(hist_lines) + "\n")
    plots.save_distribution_comparison(
        space, report.label_hist, report.pred_hist,
        os.path.join(out, "figures", "distribution_comparison.png"),
    )
    all_stats = report.regions["all"]
    few = report.regions["few"]
    few_txt = f"{few.mae:.4f}" if few else "n/a"
    sys.stdout.write(
        f"test all-MAE {all_stats.mae:.4f}, few-MAE {few_txt}, "
        f"W1 {report.wasserstein1:.4f} -> {os.path.join(out, 'report.json')}\n"
    )
    return EXIT_OK


def run_point(cfg: RunConfig):
    """Train and evaluate one configuration in memory; returns the test report."""
    ds, space, density, regions = build_pipeline(cfg)
    result = train(ds, space, density, regions, cfg.loss_config(), cfg.train_config())
    X_test, y_test = ds.rows("test")
    preds = predict(result.params, X_test)
    return region_metrics(preds, y_test, regions, space, cfg.gm_eps)


def _table_row(value, report) -> dict:
    row = {"value": value}
    for name in ("all", "many", "median", "few"):
        stats = report.regions.get(name)
        row[f"{name}_mae"] = None if stats is None else stats.mae
        row[f"{name}_gm"] = None if stats is None else stats.gm
    row["wasserstein1"] = report.wasserstein1
    return row


def cmd_ablate(cfg: RunConfig, axis: str, values: str) -> int:
    if axis not in ABLATE_AXES:
        raise ConfigError(f"unknown ablation axis {axis!r}")
    key = ABLATE_AXES[axis]
    raw_values = [v.strip() for v in values.split(",") if v.strip()]
    if not raw_values:
        raise ConfigError("ablate needs at least one value")
    out = _run_dir(cfg)
    rows = []
    for raw in raw_values:
        point_cfg = dataclasses.replace(cfg, **{key: coerce(key, raw)})
        report = run_point(point_cfg)
        rows.append(_table_row(getattr(point_cfg, key), report))
        sys.stdout.write(f"{axis}={raw}: few-MAE "
                         f"{rows[-1]['few_mae'] if rows[-1]['few_mae'] is not None else float('nan'):.4f}\n")
    table = {"axis": axis, "rows": rows, "config": config_to_dict(cfg)}
    _write_json(os.path.join(out, f"ablation_{axis}.json"), table)
    lines = [f"# {c}" for c in _config_comments(cfg)]
    lines.append(",".join(["axis", "value", *_TABLE_METRICS]))
    for row in rows:
        cells = [axis, str(row["value"])]
        cells.extend("" if row[m] is None else repr(row[m]) for m in _TABLE_METRICS)
        lines.append(",".join(cells))
    _atomic_write(os.path.join(out, f"ablation_{axis}.csv"), "\n".join(lines) + "\n")
    plots.save_ablation_figure(
        axis,
        [row["value"] for row in rows],
        [row["few_mae"] if row["few_mae"] is not None else 0.0 for row in rows],
        os.path.join(out, "figures", f"ablation_{axis}.png"),
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="distreg",
        description="Imbalanced-regression training with distribution-aligned loss",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("gen", "synthesize a dataset and emit its training-label histogram"),
        ("train", "train a model and write a checkpoint plus epoch log"),
        ("eval", "evaluate a checkpoint on the test split"),
        ("ablate", "sweep one config axis and tabulate region metrics"),
    ):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", default=None, help="flat key=value config file")
        for field in dataclasses.fields(RunConfig):
            flag = "--" + field.name.replace("_", "-")
            sp.add_argument(flag, dest=f"opt_{field.name}", metavar="V", default=None)
        if name == "ablate":
            sp.add_argument("--axis", required=True, choices=sorted(ABLATE_AXES))
            sp.add_argument("--values", required=True,
                            help="comma-separated axis values, e.g. 64,128,256")
    return parser


def _resolve_from_args(args) -> RunConfig:
    file_values = load_config(args.config) if args.config else None
    overrides = {}
    for field in dataclasses.fields(RunConfig):
        raw = getattr(args, f"opt_{field.name}")
        if raw is not None:
            overrides[field.name] = coerce(field.name, raw)
    return resolve_config(file_values, overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve_from_args(args)
        if args.command == "gen":
            return cmd_gen(cfg)
        if args.command == "train":
            return cmd_train(cfg)
        if args.command == "eval":
            return cmd_eval(cfg)
        return cmd_ablate(cfg, args.axis, args.values)
    except NonFiniteGradient as exc:
        sys.stderr.write(f"numeric failure: {exc}\n")
        return EXIT_NUMERIC
    except ParseError as exc:
        sys.stderr.write(f"I/O error: {exc}\n")
        return EXIT_IO
    except OSError as exc:
        sys.stderr.write(f"I/O error: {exc}\n")
        return EXIT_IO
    except DistregError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
