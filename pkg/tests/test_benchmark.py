"""Tests for benchmark orchestration and report files."""

import json

import numpy as np
import pytest

from config.run_config import from_dict
from pipelines.nepdf import PairSample
from services.benchmark import (
    BASELINES,
    FoldResult,
    aggregate,
    baseline_aurocs,
    dataset_digest,
    evaluate_models,
    load_pairs,
    model_paths,
    prepare_pairs,
    run_benchmark,
    train_models,
    write_report,
)
from utils.errors import EmptyDataset, ShapeMismatch
from utils.io import read_csv, read_digest


@pytest.fixture
def sim_config_dict(run_config_dict):
    """Few small V-structure systems scored by a 3-class network."""
    data = dict(run_config_dict)
    del data["synth"]
    data["simulate"] = {"structure": "v", "systems": 6, "steps": 80}
    data["eval"] = {"folds": 2, "mode": "multiclass"}
    return data


class TestPreparePairs:
    """Tests for load_pairs() and prepare_pairs()."""

    def test_synth_is_augmented(self, run_config_dict):
        config = from_dict(run_config_dict)
        pairs = prepare_pairs(load_pairs(config), config)
        assert len(pairs) == 48
        assert sum(p.id.endswith(":T") for p in pairs) == 24
        assert {p.label for p in pairs} == {1, -1}

    def test_simulation_not_augmented(self, sim_config_dict):
        config = from_dict(sim_config_dict)
        pairs = prepare_pairs(load_pairs(config), config)
        assert len(pairs) == 36
        assert not any(p.id.endswith(":T") for p in pairs)

    def test_direction_mode_drops_independent(self, sim_config_dict):
        sim_config_dict["eval"]["mode"] = "direction"
        config = from_dict(sim_config_dict)
        pairs = prepare_pairs(load_pairs(config), config)
        assert len(pairs) == 24
        assert all(p.label != 0 for p in pairs)

    def test_empty(self, run_config_dict):
        with pytest.raises(EmptyDataset):
            prepare_pairs([], from_dict(run_config_dict))

    def test_dataset_digest_tracks_content(self):
        x = np.arange(5.0)
        a = PairSample(id="a", x=x, y=x**2, label=1)
        b = PairSample(id="a", x=x, y=x**2 + 1e-12, label=1)
        assert dataset_digest([a]) == dataset_digest([a])
        assert dataset_digest([a]) != dataset_digest([b])


class TestRunBenchmark:
    """Tests for run_benchmark()."""

    def test_direction_report(self, run_config_dict):
        report = run_benchmark(from_dict(run_config_dict))
        assert report.metric == "direction_auroc"
        assert len(report.folds) == 2
        ids = [s.id for s in report.scores]
        assert len(ids) == len(set(ids)) == 48
        for s in report.scores:
            assert 0.0 <= s.score_causal <= 1.0
            assert s.predicted in (1, -1)
        assert report.config["architecture"][0]["kind"] == "conv3x3"
        assert "output_dir" not in report.config

    def test_aggregate_is_fold_mean(self, run_config_dict):
        report = run_benchmark(from_dict(run_config_dict))
        aurocs = [f.auroc for f in report.folds]
        assert report.aggregate["mean_auroc"] == float(np.mean(aurocs))
        assert report.aggregate["std_auroc"] == float(np.std(aurocs))
        for name in BASELINES:
            assert f"mean_baseline_{name}" in report.aggregate

    def test_deterministic(self, run_config_dict):
        a = run_benchmark(from_dict(run_config_dict))
        b = run_benchmark(from_dict(run_config_dict))
        assert a.to_dict() == b.to_dict()
        assert [s.y_pred for s in a.scores] == [s.y_pred for s in b.scores]

    def test_multiclass_simulation(self, sim_config_dict):
        report = run_benchmark(from_dict(sim_config_dict))
        assert report.metric == "mean_ovr_auroc"
        assert all(0.0 <= f.auroc <= 1.0 for f in report.folds)
        for s in report.scores:
            assert s.y_pred == pytest.approx(s.y_ind * (2 * s.score_causal - 1))
        assert report.reference == {}

    def test_chalearn_reference(self, sim_config_dict):
        sim_config_dict["eval"]["mode"] = "chalearn"
        sim_config_dict["eval"]["baselines"] = False
        report = run_benchmark(from_dict(sim_config_dict))
        assert report.reference == {"chalearn_bidirectional_auc": 0.74}
        assert all(f.baselines == {} for f in report.folds)
        assert all(-1.0 <= s.y_pred <= 1.0 for s in report.scores)


class TestAggregate:
    """Tests for aggregate() and baseline_aurocs()."""

    def test_undefined_folds_skipped(self):
        folds = [
            FoldResult(0, 10, 5, 0.8, 0.5, 0.5),
            FoldResult(1, 10, 5, None, 0.7, 0.7),
        ]
        out = aggregate(folds)
        assert out["mean_auroc"] == 0.8
        assert out["std_auroc"] == 0.0
        assert out["mean_accuracy"] == pytest.approx(0.6)
        assert out["mean_baseline_pearson"] is None

    def test_baseline_aurocs(self):
        labels = np.array([1, -1, 0, 0])
        scores = {
            "pearson": np.array([0.9, 0.8, 0.1, 0.2]),
            "mutual_information": np.array([0.1, 0.2, 0.3, 0.4]),
            "bivariate_fit": np.array([1.0, -1.0, 0.0, 0.0]),
        }
        out = baseline_aurocs(scores, labels)
        assert out == {"pearson": 1.0, "mutual_information": 0.0, "bivariate_fit": 1.0}

    def test_baseline_undefined_without_independent(self):
        labels = np.array([1, -1])
        scores = {name: np.array([0.5, 0.1]) for name in BASELINES}
        assert baseline_aurocs(scores, labels)["pearson"] is None


class TestTrainAndEvaluate:
    """Tests for train_models(), evaluate_models() and report files."""

    def test_evaluate_trained_models(self, run_config_dict):
        config = from_dict(run_config_dict)
        models = {name: r.network for name, r in train_models(config).items()}
        report = evaluate_models(config, models)
        assert len(report.folds) == 1
        assert report.folds[0].n_test == 48
        assert len(report.scores) == 48

    def test_wrong_k_rejected(self, run_config_dict):
        config = from_dict(run_config_dict)
        models = {name: r.network for name, r in train_models(config).items()}
        run_config_dict["nepdf"]["k"] = 16
        with pytest.raises(ShapeMismatch):
            evaluate_models(from_dict(run_config_dict), models)

    def test_missing_classifier(self, run_config_dict):
        with pytest.raises(EmptyDataset):
            evaluate_models(from_dict(run_config_dict), {})

    def test_model_paths(self):
        assert model_paths("m.bin", "multiclass") == {"multiclass": "m.bin"}
        assert model_paths("m.bin", "chalearn") == {"causal": "m.bin.causal", "ind": "m.bin.ind"}

    def test_write_report(self, tmp_path, run_config_dict):
        config = from_dict(run_config_dict)
        report = run_benchmark(config)
        report_path, scores_path = write_report(report, str(tmp_path), stem="cell")
        with open(report_path, encoding="utf-8") as f:
            data = json.load(f)
        assert data["config_digest"] == config.digest()
        assert len(data["folds"]) == 2
        assert read_digest(scores_path) == config.digest()
        frame = read_csv(scores_path)
        assert list(frame.columns) == ["id", "true_label", "score_causal", "y_ind", "y_pred"]
        assert len(frame) == len(report.scores)
