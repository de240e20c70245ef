"""
Report Generation Module - JSON and CSV artifacts for datasets, training, filtering and evaluation

Every writer is deterministic: JSON keys are sorted and no timestamps are
written, so identical runs produce identical files.
"""
import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union
import logging

import numpy as np
import pandas as pd

from src.dataset.episodes import EpisodeDataset, return_histogram, return_histogram_by_label
from src.evaluation.harness import ConfusionMatrix, EvalReport, compare_table

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
LossCurve = List[Tuple[int, float]]


def _plain(value: Any) -> Any:
    """numpy scalars/arrays and sets to JSON-native values"""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, (set, frozenset)):
        return sorted(_plain(v) for v in value)
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


class ReportGenerator:
    """Write pipeline artifacts"""

    def __init__(self, output_dir: Optional[PathLike] = None):
        """
        Initialize report generator

        Args:
            output_dir: Directory that relative targets are resolved against;
                targets are used as given when omitted
        """
        self.output_dir = Path(output_dir) if output_dir is not None else None
        if self.output_dir is not None:
            self.output_dir.mkdir(parents=True, exist_ok=True)

    def resolve(self, target: PathLike) -> Path:
        target = Path(target)
        if self.output_dir is not None and not target.is_absolute():
            target = self.output_dir / target
        target.parent.mkdir(parents=True, exist_ok=True)
        return target

    def write_json(self, target: PathLike, payload: Dict[str, Any]) -> Path:
        path = self.resolve(target)
        path.write_text(json.dumps(_plain(payload), indent=2, sort_keys=True) + "\n")
        logger.info(f"Wrote {path}")
        return path

    def write_frame(self, target: PathLike, frame: pd.DataFrame) -> Path:
        path = self.resolve(target)
        frame.to_csv(path, index=False, lineterminator="\n")
        logger.info(f"Wrote {path} ({len(frame)} rows)")
        return path

    def write_text(self, target: PathLike, text: str) -> Path:
        path = self.resolve(target)
        path.write_text(text)
        logger.info(f"Wrote {path}")
        return path

    def histogram_csv(self, ds: EpisodeDataset, n_bins: int, target: PathLike) -> Path:
        """bin_lo, bin_hi, count of the return histogram"""
        bins = return_histogram(ds, n_bins)
        frame = pd.DataFrame([{"bin_lo": b.bin_lo, "bin_hi": b.bin_hi, "count": b.count} for b in bins])
        return self.write_frame(target, frame)

    def label_histogram_csv(self, ds: EpisodeDataset, n_bins: int, target: PathLike) -> Path:
        """Return histogram with per-label counts (expert, weak, unknown) per bin"""
        rows = return_histogram_by_label(ds, n_bins)
        columns = ["bin_lo", "bin_hi", "count", "expert", "weak", "unknown"]
        return self.write_frame(target, pd.DataFrame(rows, columns=columns))

    def loss_curve_csv(self, curves: Dict[str, LossCurve], target: PathLike) -> Path:
        """phase, step, loss rows for every named curve, in the given order"""
        rows = [
            {"phase": phase, "step": int(step), "loss": float(loss)}
            for phase, curve in curves.items()
            for step, loss in curve
        ]
        return self.write_frame(target, pd.DataFrame(rows, columns=["phase", "step", "loss"]))

    def returns_csv(self, report: EvalReport, target: PathLike) -> Path:
        frame = pd.DataFrame({
            "episode": np.arange(report.n_episodes),
            "return": report.per_episode_returns,
        })
        return self.write_frame(target, frame)

    def confusion_csv(self, matrix: ConfusionMatrix, target: PathLike) -> Path:
        """tp,fp,tn,fn,accuracy,precision,recall"""
        columns = ["tp", "fp", "tn", "fn", "accuracy", "precision", "recall"]
        return self.write_frame(target, pd.DataFrame([matrix.to_dict()], columns=columns))

    def comparison_csv(self, rows: Sequence[Tuple[str, EvalReport]], target: PathLike) -> Path:
        return self.write_text(target, compare_table(rows))

    def eval_report_json(self, report: EvalReport, target: PathLike,
                         extra: Optional[Dict[str, Any]] = None) -> Path:
        payload = report.to_dict()
        if extra:
            payload.update(extra)
        return self.write_json(target, payload)

    def filter_report_json(self, selected: Iterable[int], confidences: Dict[int, float],
                           history: Sequence[Dict[str, Any]], converged: bool, target: PathLike,
                           seed_ids: Iterable[int] = (), confusion: Optional[ConfusionMatrix] = None,
                           extra: Optional[Dict[str, Any]] = None) -> Path:
        """Per-episode confidence, the selection, seed set and per-iteration history"""
        chosen = sorted({int(i) for i in selected})
        payload: Dict[str, Any] = {
            "selected_ids": chosen,
            "seed_ids": sorted(int(i) for i in seed_ids),
            "n_selected": len(chosen),
            "confidence": {str(k): float(v) for k, v in sorted(confidences.items())},
            "history": list(history),
            "converged": bool(converged),
        }
        if confusion is not None:
            payload["confusion"] = confusion.to_dict()
        if extra:
            payload.update(extra)
        return self.write_json(target, payload)
