"""
Repro Module - End-to-end variant pipelines on generated datasets

ours       filter, rotational augmentation, two-phase training
ablation1  filter only
ablation2  filter and rotational augmentation, no fine-tuning
caug       filter and Gaussian state noise
bc         plain BC on the unfiltered dataset
topk10     BC on the 10% most rewarded episodes
topk50     BC on the 50% most rewarded episodes
"""
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Set, Tuple, Union
import logging

import numpy as np

from config import setup_directories
from src.bctrainer.trainer import TrainingResult, equivariance_gap, train_single_phase, train_theory_to_real
from src.dataset import opld_io
from src.dataset.episodes import EpisodeDataset, top_fraction
from src.evaluation.harness import EvalReport, evaluate_policy, score_filter, topk_matched_selection
from src.exceptions import UnknownVariantError
from src.expertfilter.filter import ExpertFilter
from src.pipeline.config import PipelineConfig
from src.reports.generator import ReportGenerator
from src.seeding import make_rng
from src.symaug.augment import augment_dataset, gaussian_augment
from src.synthenv.env import reset
from src.synthenv.generator import DatasetKind, generate_dataset

logger = logging.getLogger(__name__)

VARIANTS = ("ours", "ablation1", "ablation2", "caug", "bc", "topk10", "topk50")
EQUIVARIANCE_PROBES = 256


def expand_variants(names: Sequence[str]) -> List[str]:
    """Validate names, expand "all", drop repeats, keep canonical order"""
    wanted: Set[str] = set()
    for name in names:
        if name == "all":
            wanted.update(VARIANTS)
        elif name in VARIANTS:
            wanted.add(name)
        else:
            raise UnknownVariantError(f"unknown variant '{name}' (choose from {', '.join(VARIANTS)}, all)")
    return [v for v in VARIANTS if v in wanted]


@dataclass
class VariantPlan:
    """Datasets a variant trains on"""

    name: str
    raw: EpisodeDataset
    aug: Optional[EpisodeDataset]
    two_phase: bool

    @property
    def train_set(self) -> EpisodeDataset:
        return self.aug if self.aug is not None else self.raw


class ReproPipeline:
    """Generate, filter, augment, train and evaluate the requested variants"""

    def __init__(self, cfg: PipelineConfig, out_dir: Union[str, Path],
                 dataset_kind: DatasetKind = DatasetKind.MIXED, threads: Optional[int] = None):
        self.cfg = cfg.with_seed()
        self.dataset_kind = DatasetKind(dataset_kind)
        self.threads = threads
        self.out_dir = setup_directories(out_dir, self.cfg.paths.datasets,
                                         self.cfg.paths.checkpoints, self.cfg.paths.reports)
        self.reports = ReportGenerator(self.out_dir)
        self._dataset: Optional[EpisodeDataset] = None
        self._selected: Optional[Set[int]] = None

    @property
    def dataset(self) -> EpisodeDataset:
        if self._dataset is None:
            cfg = self.cfg
            self._dataset = generate_dataset(self.dataset_kind, cfg.n_episodes, cfg.env, cfg.weak, self.threads)
            opld_io.save(self._dataset, self.out_dir / cfg.paths.datasets / f"{self.dataset_kind.value}.opld")
        return self._dataset

    def selected_ids(self) -> Set[int]:
        """Filter selection, computed once per run; the expert dataset is used whole"""
        if self._selected is not None:
            return self._selected
        ds = self.dataset
        if self.dataset_kind == DatasetKind.EXPERT:
            self._selected = set(ds.episode_ids)
            return self._selected

        unlabeled = ds.without_labels()
        expert_filter = ExpertFilter(self.cfg.filter)
        fs, selected = expert_filter.run(unlabeled)
        # labels are consulted only now, after the filter has finished
        confusion = score_filter(selected, ds)
        topk = score_filter(topk_matched_selection(ds, len(selected)), ds)
        self.reports.filter_report_json(
            selected,
            expert_filter.confidences(fs, unlabeled),
            [record.to_dict() for record in fs.history],
            fs.converged,
            "filter.json",
            seed_ids=fs.seed_ids,
            confusion=confusion,
            extra={"topk_matched_confusion": topk.to_dict()},
        )
        logger.info(
            f"Filter accuracy {confusion.accuracy:.3f} vs size-matched top-k {topk.accuracy:.3f} "
            f"({len(selected)} selected)"
        )
        self._selected = selected
        return selected

    def plan(self, variant: str) -> VariantPlan:
        ds = self.dataset
        if variant == "bc":
            return VariantPlan(variant, ds, None, False)
        if variant == "topk10":
            return VariantPlan(variant, ds.subset(top_fraction(ds, 0.10)), None, False)
        if variant == "topk50":
            return VariantPlan(variant, ds.subset(top_fraction(ds, 0.50)), None, False)

        filtered = ds.subset(self.selected_ids())
        if variant == "ablation1":
            return VariantPlan(variant, filtered, None, False)
        if variant == "caug":
            rng = make_rng(self.cfg.seed, "augment", "gaussian")
            return VariantPlan(variant, filtered, gaussian_augment(filtered, rng=rng), False)
        rotated = augment_dataset(filtered, self.cfg.symmetry)
        return VariantPlan(variant, filtered, rotated, variant == "ours")

    def train(self, plan: VariantPlan, train_seed: int) -> TrainingResult:
        train_set = plan.train_set
        bc_cfg = self.cfg.bc.model_copy(update={"rng_seed": train_seed})
        bc_cfg = bc_cfg.for_dataset(train_set.n_episodes * train_set.episode_len)
        if plan.two_phase:
            return train_theory_to_real(plan.raw, plan.aug, bc_cfg)
        return train_single_phase(train_set, bc_cfg)

    def equivariance_probes(self) -> np.ndarray:
        rng = make_rng(self.cfg.seed, "eval", "equivariance")
        return np.stack([reset(self.cfg.env, rng).to_vector() for _ in range(EQUIVARIANCE_PROBES)])

    def run_variant(self, variant: str) -> EvalReport:
        """
        Train one policy per training seed and evaluate each on the same episodes

        Writes <variant>.csv, <variant>.json, per-seed checkpoints and loss curves.
        """
        cfg = self.cfg
        plan = self.plan(variant)
        logger.info(
            f"Variant {variant}: {plan.raw.n_episodes} raw episodes, "
            f"{plan.train_set.n_episodes} training episodes, two_phase={plan.two_phase}"
        )
        probes = self.equivariance_probes()
        reports, runs = [], []
        for train_seed in cfg.train_seeds:
            result = self.train(plan, train_seed)
            stem = f"{variant}_s{train_seed}"
            result.policy.save(self.out_dir / cfg.paths.checkpoints / f"{stem}.ckpt",
                               extra={"variant": variant, "train_seed": train_seed})
            curves = {"phase1": result.phase1_curve, "phase2": result.phase2_curve}
            self.reports.loss_curve_csv(curves, Path(cfg.paths.reports) / f"{stem}_loss.csv")

            report = evaluate_policy(result.policy, cfg.env, cfg.eval_episodes, seed=cfg.seed, threads=self.threads)
            reports.append(report)
            runs.append({
                "train_seed": train_seed,
                "mean": report.mean,
                "sd": report.sd,
                "equivariance_gap": equivariance_gap(result.policy, probes, cfg.symmetry),
                **result.summary(),
            })

        merged = EvalReport.from_returns(
            [r for report in reports for r in report.per_episode_returns], cfg.train_seeds
        )
        self.reports.comparison_csv([(variant, merged)], f"{variant}.csv")
        self.reports.eval_report_json(merged, f"{variant}.json", extra={
            "variant": variant,
            "dataset": self.dataset_kind.value,
            "eval_seed": cfg.seed,
            "raw_episodes": plan.raw.n_episodes,
            "train_episodes": plan.train_set.n_episodes,
            "two_phase": plan.two_phase,
            "runs": runs,
        })
        return merged

    def run(self, variants: Sequence[str]) -> List[Tuple[str, EvalReport]]:
        rows = [(variant, self.run_variant(variant)) for variant in expand_variants(variants)]
        self.reports.comparison_csv(rows, "comparison.csv")
        for name, report in rows:
            logger.info(f"{name}: mean {report.mean:.3f} sd {report.sd:.3f} (n={report.n_episodes})")
        return rows


def run_repro(cfg: PipelineConfig, variants: Sequence[str], out_dir: Union[str, Path],
              dataset_kind: DatasetKind = DatasetKind.MIXED,
              threads: Optional[int] = None) -> Dict[str, EvalReport]:
    """Run the requested variants and return their pooled evaluation reports"""
    pipeline = ReproPipeline(cfg, out_dir, dataset_kind, threads)
    return dict(pipeline.run(variants))
