"""Shot-region error metrics and serializable evaluation reports."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .dataset import ShotRegions
from .errors import EmptyHistogram, EmptyRegion, ShapeMismatch, UnsupportedFormat
from .label_space import LabelSpace, bin_index

REPORT_REGIONS = ("all", "many", "median", "few")


@dataclass(frozen=True)
class RegionStats:
    mae: float
    gm: float
    count: int


@dataclass(frozen=True)
class RegionReport:
    """Per-region MAE/GM plus the label-vs-prediction histogram discrepancy.

    Regions with no test samples are recorded as None, not as zeros.
    """

    regions: dict
    wasserstein1: float
    label_hist: tuple
    pred_hist: tuple


def mae(errors) -> float:
    errors = np.asarray(errors, dtype=np.float64)
    if errors.size == 0:
        raise EmptyRegion("mae of an empty region")
    return float(np.mean(np.abs(errors)))


def gm(errors, eps: float = 1e-10) -> float:
    """Geometric mean of absolute errors, computed in log space."""
    errors = np.asarray(errors, dtype=np.float64)
    if errors.size == 0:
        raise EmptyRegion("gm of an empty region")
    if eps <= 0:
        raise EmptyRegion(f"eps must be > 0, got {eps}")
    return float(np.exp(np.mean(np.log(np.abs(errors) + eps))))


def wasserstein1_hist(h1, h2, delta_y: float) -> float:
    """Earth-mover distance between two histograms over the same bins:
    delta_y times the summed absolute difference of the normalized CDFs."""
    h1 = np.asarray(h1, dtype=np.float64)
    h2 = np.asarray(h2, dtype=np.float64)
    if h1.shape != h2.shape:
        raise ShapeMismatch(f"histogram shapes differ: {h1.shape} vs {h2.shape}")
    t1, t2 = h1.sum(), h2.sum()
    if t1 <= 0 or t2 <= 0:
        raise EmptyHistogram("histograms must have positive total mass")
    cdf1 = np.cumsum(h1 / t1)
    cdf2 = np.cumsum(h2 / t2)
    return float(delta_y * np.abs(cdf1 - cdf2).sum())


def region_metrics(
    predictions,
    targets,
    regions: ShotRegions,
    space: LabelSpace,
    gm_eps: float = 1e-10,
) -> RegionReport:
    """Metrics for all/many/median/few regions, where each evaluation row
    inherits the region of its target's bin."""
    predictions = np.asarray(predictions, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if predictions.shape != targets.shape:
        raise ShapeMismatch(f"predictions {predictions.shape} vs targets {targets.shape}")
    errors = predictions - targets
    row_regions = regions.region_of(space, targets)
    stats: dict = {"all": RegionStats(mae(errors), gm(errors, gm_eps), int(errors.size))}
    for name in REPORT_REGIONS[1:]:
        mask = row_regions == name
        n = int(mask.sum())
        stats[name] = RegionStats(mae(errors[mask]), gm(errors[mask], gm_eps), n) if n else None
    label_hist = np.bincount(bin_index(space, targets), minlength=space.num_bins)
    pred_hist = np.bincount(bin_index(space, predictions), minlength=space.num_bins)
    w1 = wasserstein1_hist(label_hist, pred_hist, space.delta_y)
    return RegionReport(
        regions=stats,
        wasserstein1=w1,
        label_hist=tuple(int(c) for c in label_hist),
        pred_hist=tuple(int(c) for c in pred_hist),
    )


def report_to_dict(report: RegionReport) -> dict:
    return {
        "regions": {
            name: (
                None
                if report.regions.get(name) is None
                else {
                    "mae": report.regions[name].mae,
                    "gm": report.regions[name].gm,
                    "count": report.regions[name].count,
                }
            )
            for name in REPORT_REGIONS
        },
        "wasserstein1": report.wasserstein1,
        "histograms": {
            "labels": list(report.label_hist),
            "predictions": list(report.pred_hist),
        },
    }


def report_from_dict(payload: dict) -> RegionReport:
    regions = {}
    for name in REPORT_REGIONS:
        entry = payload["regions"].get(name)
        regions[name] = (
            None if entry is None else RegionStats(entry["mae"], entry["gm"], entry["count"])
        )
    return RegionReport(
        regions=regions,
        wasserstein1=payload["wasserstein1"],
        label_hist=tuple(payload["histograms"]["labels"]),
        pred_hist=tuple(payload["histograms"]["predictions"]),
    )


def emit_report(report: RegionReport, path: str, format: str = "json", config: dict | None = None) -> None:
    """Serialize a report; json is the canonical machine format, csv is a
    metric,region,value flattening. Writes are atomic (temp file + rename)."""
    if format == "json":
        payload = report_to_dict(report)
        if config is not None:
            payload["config"] = config
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    elif format == "csv":
        lines = []
        if config is not None:
            lines.extend(f"# {k}={config[k]}" for k in sorted(config))
        lines.append("metric,region,value")
        for name in REPORT_REGIONS:
            entry = report.regions.get(name)
            for metric in ("mae", "gm", "count"):
                value = "" if entry is None else repr(getattr(entry, metric))
                lines.append(f"{metric},{name},{value}")
        lines.append(f"wasserstein1,,{report.wasserstein1!r}")
        text = "\n".join(lines) + "\n"
    else:
        raise UnsupportedFormat(f"unknown report format {format!r}")
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def read_report(path: str) -> RegionReport:
    """Load a JSON report written by emit_report."""
    with open(path) as fh:
        return report_from_dict(json.load(fh))
