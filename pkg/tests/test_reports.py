#!/usr/bin/env python3
"""
Tests for report files and charts
"""
import json
import sys
from pathlib import Path

import numpy as np
import pandas as pd
import plotly.graph_objects as go
import pytest

sys.path.append(str(Path(__file__).parent.parent))

from src.dataset.episodes import Episode, EpisodeDataset, EpisodeLabel
from src.evaluation.harness import SD_COMMENT, ConfusionMatrix, EvalReport
from src.reports.generator import ReportGenerator
from src.visualization.charts import ChartGenerator


@pytest.fixture
def dataset():
    labels = [EpisodeLabel.EXPERT] * 4 + [EpisodeLabel.WEAK] * 4
    returns = [9.0, 9.5, 10.0, 8.5, 0.0, 1.0, 0.5, 2.0]
    episodes = [
        Episode(i, label, np.zeros((1, 2)), np.zeros((1, 1)), np.array([r]))
        for i, (label, r) in enumerate(zip(labels, returns))
    ]
    return EpisodeDataset(2, 1, 1, tuple(episodes))


@pytest.fixture
def reports(tmp_path):
    return ReportGenerator(tmp_path)


class TestReportGenerator:
    """Test CSV and JSON writers"""

    def test_histogram_csv(self, reports, dataset):
        """One row per bin with counts summing to the dataset size"""
        frame = pd.read_csv(reports.histogram_csv(dataset, 4, "hist.csv"))
        assert list(frame.columns) == ["bin_lo", "bin_hi", "count"]
        assert len(frame) == 4
        assert frame["count"].sum() == 8

    def test_label_histogram_is_bimodal(self, reports, dataset):
        """Expert counts sit in the top bin and weak counts in the bottom one"""
        frame = pd.read_csv(reports.label_histogram_csv(dataset, 2, "labels.csv"))
        assert list(frame["expert"]) == [0, 4]
        assert list(frame["weak"]) == [4, 0]
        assert list(frame["unknown"]) == [0, 0]

    def test_loss_curve_csv(self, reports):
        """Curves are written in order with their phase names"""
        path = reports.loss_curve_csv({"phase1": [(1, 0.5), (10, 0.25)], "phase2": [(1, 0.2)]}, "loss.csv")
        frame = pd.read_csv(path)
        assert list(frame["phase"]) == ["phase1", "phase1", "phase2"]
        assert list(frame["step"]) == [1, 10, 1]

    def test_returns_csv(self, reports):
        """Per-episode returns with their index"""
        frame = pd.read_csv(reports.returns_csv(EvalReport.from_returns([3.0, 4.0], [0]), "returns.csv"))
        assert list(frame.columns) == ["episode", "return"]
        assert list(frame["return"]) == [3.0, 4.0]

    def test_confusion_csv(self, reports):
        """Header tp,fp,tn,fn,accuracy,precision,recall"""
        path = reports.confusion_csv(ConfusionMatrix(tp=3, fp=1, tn=4, fn=0), "confusion.csv")
        lines = path.read_text().splitlines()
        assert lines[0] == "tp,fp,tn,fn,accuracy,precision,recall"
        assert lines[1].startswith("3,1,4,0,0.875,0.75,1.0")

    def test_comparison_csv(self, reports):
        """The comparison table starts with the SD convention"""
        path = reports.comparison_csv([("bc", EvalReport.from_returns([1.0], [0]))], "comparison.csv")
        assert path.read_text().splitlines()[0] == SD_COMMENT

    def test_json_is_deterministic(self, reports):
        """Sorted keys, numpy values converted, trailing newline"""
        payload = {"b": np.float64(1.5), "a": np.arange(3), "c": {3, 1}}
        first = reports.write_json("a.json", payload).read_bytes()
        second = reports.write_json("b.json", payload).read_bytes()
        assert first == second
        assert first.endswith(b"\n")
        assert json.loads(first) == {"a": [0, 1, 2], "b": 1.5, "c": [1, 3]}

    def test_filter_report(self, reports):
        """Selection, seeds, confidences and history are recorded"""
        path = reports.filter_report_json(
            iter([5, 2, 2]), {2: 0.97, 5: 0.99, 7: 0.1}, [{"iteration": 0}], True, "filter.json",
            seed_ids=[5], confusion=ConfusionMatrix(2, 0, 1, 0), extra={"note": "x"},
        )
        payload = json.loads(path.read_text())
        assert payload["selected_ids"] == [2, 5]
        assert payload["n_selected"] == 2
        assert payload["seed_ids"] == [5]
        assert payload["confidence"] == {"2": 0.97, "5": 0.99, "7": 0.1}
        assert payload["confusion"]["accuracy"] == 1.0
        assert payload["converged"] is True

    def test_relative_targets_resolved(self, tmp_path):
        """Relative targets land under the output directory"""
        path = ReportGenerator(tmp_path / "out").write_text("nested/x.txt", "hi\n")
        assert path == tmp_path / "out" / "nested" / "x.txt"
        assert path.read_text() == "hi\n"


class TestCharts:
    """Test Plotly charts"""

    def test_histogram_traces(self, dataset):
        """One stacked bar series per label present"""
        fig = ChartGenerator().create_return_histogram(dataset, n_bins=4)
        assert isinstance(fig, go.Figure)
        assert [trace.name for trace in fig.data] == ["Expert", "Weak"]
        assert fig.layout.barmode == "stack"

    def test_loss_curves_continue(self):
        """Phase 2 starts where phase 1 ended"""
        fig = ChartGenerator().create_loss_curves({"phase1": [(1, 0.5), (40, 0.1)], "phase2": [(1, 0.09), (15, 0.05)]})
        assert list(fig.data[1].x) == [41, 55]
        assert fig.layout.yaxis.type == "log"

    def test_html_deterministic(self, dataset, tmp_path):
        """Saving the same figure twice writes identical files"""
        charts = ChartGenerator()
        a = charts.save_html(charts.create_return_histogram(dataset), tmp_path / "a.html", "returns")
        b = charts.save_html(charts.create_return_histogram(dataset), tmp_path / "b.html", "returns")
        assert a.read_bytes() == b.read_bytes()
