import json

import numpy as np
import pytest

from distreg.dataset import assign_regions
from distreg.errors import EmptyHistogram, EmptyRegion, ShapeMismatch, UnsupportedFormat
from distreg.evaluation import (
    emit_report,
    gm,
    mae,
    read_report,
    region_metrics,
    wasserstein1_hist,
)
from distreg.label_space import bin_index, make_label_space


class TestMae:
    def test_basic(self):
        assert mae([1, 3]) == 2
        assert mae([0, 0]) == 0

    def test_signed_residuals(self):
        residuals = np.array([1.5, -2.5, 0.5, -0.5])
        assert mae(residuals) == pytest.approx((1.5 + 2.5 + 0.5 + 0.5) / 4)

    def test_empty(self):
        with pytest.raises(EmptyRegion):
            mae([])


class TestGm:
    def test_equal_errors(self):
        assert gm([2, 2], eps=1e-12) == pytest.approx(2.0)

    def test_geometric_mean_of_two(self):
        assert gm([1, 4], eps=1e-12) == pytest.approx(2.0, rel=1e-9)

    def test_zero_error_stays_finite(self):
        errors = [0.0, 2.0, 3.0]
        value = gm(errors, eps=1e-10)
        assert np.isfinite(value)
        assert value <= mae(errors)

    def test_gm_never_exceeds_mae(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            errors = rng.normal(scale=3, size=rng.integers(1, 50))
            assert gm(errors, eps=1e-10) <= mae(errors) + 1e-6

    def test_empty(self):
        with pytest.raises(EmptyRegion):
            gm([])


class TestWasserstein:
    def test_identical(self):
        assert wasserstein1_hist([3, 1, 2], [3, 1, 2], 0.5) == 0.0

    def test_unit_mass_moved_one_bin(self):
        assert wasserstein1_hist([1, 0], [0, 1], 1.0) == pytest.approx(1.0)

    def test_hand_cdf_sum(self):
        # normalized: (0.5, 0.5, 0) vs (0, 0.5, 0.5); CDF diffs (0.5, 0.5, 0)
        assert wasserstein1_hist([2, 2, 0], [0, 2, 2], 1.0) == pytest.approx(1.0)
        assert wasserstein1_hist([2, 2, 0], [0, 2, 2], 0.25) == pytest.approx(0.25)

    def test_symmetry_and_nonnegativity(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            h1 = rng.integers(0, 20, size=8)
            h2 = rng.integers(0, 20, size=8)
            if h1.sum() == 0 or h2.sum() == 0:
                continue
            w12 = wasserstein1_hist(h1, h2, 0.7)
            assert w12 >= 0
            assert w12 == pytest.approx(wasserstein1_hist(h2, h1, 0.7))

    def test_zero_iff_equal_normalized(self):
        assert wasserstein1_hist([1, 2, 1], [2, 4, 2], 1.0) == pytest.approx(0.0)
        assert wasserstein1_hist([1, 2, 1], [1, 2, 2], 1.0) > 0

    def test_mass_scaling_invariance(self):
        h1, h2 = np.array([5, 1, 0, 2]), np.array([1, 1, 3, 3])
        assert wasserstein1_hist(h1, h2, 1.0) == pytest.approx(wasserstein1_hist(3 * h1, 7 * h2, 1.0))

    def test_errors(self):
        with pytest.raises(ShapeMismatch):
            wasserstein1_hist([1, 2], [1, 2, 3], 1.0)
        with pytest.raises(EmptyHistogram):
            wasserstein1_hist([0, 0], [1, 0], 1.0)


def make_fixture():
    space = make_label_space(0, 4, 1)
    train_targets = np.concatenate(
        [np.full(150, 0.5), np.full(50, 1.5), np.full(30, 2.5), np.full(5, 3.5)]
    )
    regions = assign_regions(train_targets, space, "absolute", (20, 100))
    assert regions.bin_regions == ("many", "median", "median", "few")
    return space, regions


class TestRegionMetrics:
    def test_perfect_predictions(self):
        space, regions = make_fixture()
        targets = np.array([0.5, 1.5, 2.5, 3.5])
        report = region_metrics(targets.copy(), targets, regions, space)
        for name in ("all", "many", "median", "few"):
            assert report.regions[name].mae == 0.0
            assert report.regions[name].gm <= 1e-9
        assert report.wasserstein1 == 0.0

    def test_single_few_shot_error(self):
        space, regions = make_fixture()
        targets = np.array([0.5, 3.5])
        preds = np.array([0.5, 8.5])
        report = region_metrics(preds, targets, regions, space)
        assert report.regions["few"].mae == pytest.approx(5.0)
        assert report.regions["few"].count == 1
        assert report.regions["median"] is None

    def test_counts_partition(self):
        space, regions = make_fixture()
        rng = np.random.default_rng(2)
        targets = rng.uniform(0, 4, size=100)
        report = region_metrics(targets + rng.normal(size=100), targets, regions, space)
        total = sum(report.regions[n].count for n in ("many", "median", "few") if report.regions[n])
        assert total == report.regions["all"].count == 100

    def test_all_mae_is_count_weighted_mean(self):
        space, regions = make_fixture()
        rng = np.random.default_rng(3)
        targets = rng.uniform(0, 4, size=200)
        preds = targets + rng.normal(size=200)
        report = region_metrics(preds, targets, regions, space)
        weighted = sum(
            report.regions[n].mae * report.regions[n].count
            for n in ("many", "median", "few")
            if report.regions[n] is not None
        )
        assert weighted / 200 == pytest.approx(report.regions["all"].mae, abs=1e-9)

    def test_matches_brute_force_recomputation(self):
        space, regions = make_fixture()
        rng = np.random.default_rng(4)
        targets = rng.uniform(0, 4, size=300)
        preds = targets + rng.normal(scale=2, size=300)
        report = region_metrics(preds, targets, regions, space, gm_eps=1e-10)
        lookup = dict(zip(space.centers, regions.bin_regions))
        for name in ("many", "median", "few"):
            errs = [
                abs(p - t)
                for p, t in zip(preds, targets)
                if lookup[space.centers[bin_index(space, t)]] == name
            ]
            if not errs:
                assert report.regions[name] is None
                continue
            assert report.regions[name].mae == pytest.approx(np.mean(errs))
            assert report.regions[name].gm == pytest.approx(
                np.exp(np.mean(np.log(np.array(errs) + 1e-10)))
            )

    def test_shape_mismatch(self):
        space, regions = make_fixture()
        with pytest.raises(ShapeMismatch):
            region_metrics([1.0], [1.0, 2.0], regions, space)


class TestEmitReport:
    def test_json_round_trip(self, tmp_path):
        space, regions = make_fixture()
        rng = np.random.default_rng(5)
        targets = rng.uniform(0, 4, size=50)
        report = region_metrics(targets + rng.normal(size=50), targets, regions, space)
        path = str(tmp_path / "report.json")
        emit_report(report, path, "json", config={"seed": 1})
        assert read_report(path) == report
        payload = json.loads(open(path).read())
        assert payload["config"] == {"seed": 1}

    def test_absent_region_serialized_as_null(self, tmp_path):
        space, regions = make_fixture()
        report = region_metrics([0.4], [0.5], regions, space)
        path = str(tmp_path / "report.json")
        emit_report(report, path, "json")
        payload = json.loads(open(path).read())
        assert payload["regions"]["few"] is None
        assert read_report(path) == report

    def test_csv_flattening(self, tmp_path):
        space, regions = make_fixture()
        report = region_metrics([0.4, 3.4], [0.5, 3.5], regions, space)
        path = str(tmp_path / "report.csv")
        emit_report(report, path, "csv", config={"tag": "t"})
        lines = open(path).read().strip().splitlines()
        assert lines[0] == "# tag=t"
        assert lines[1] == "metric,region,value"
        assert any(line.startswith("mae,few,") for line in lines)
        assert any(line.startswith("wasserstein1,,") for line in lines)

    def test_unknown_format(self, tmp_path):
        space, regions = make_fixture()
        report = region_metrics([0.4], [0.5], regions, space)
        with pytest.raises(UnsupportedFormat):
            emit_report(report, str(tmp_path / "r.yaml"), "yaml")
