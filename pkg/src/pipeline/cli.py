"""
Command Line Module - gen, filter, augment, train, eval, score-filter, report and repro

Failures print exactly one line, "error: <code>: <message>", to stderr.
"""
import argparse
import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional
import logging

import pandas as pd
from pydantic import ValidationError

from config import configure_logging, get_settings
from src.bctrainer.policy import PolicyModel
from src.bctrainer.trainer import train_single_phase, train_theory_to_real
from src.dataset import opld_io
from src.evaluation.harness import ScriptedExpert, evaluate_policy, score_filter
from src.exceptions import FormatError, LabelError, OplError
from src.expertfilter.filter import ExpertFilter
from src.pipeline.config import PipelineConfig, load_config, override
from src.pipeline.repro import VARIANTS, expand_variants, run_repro
from src.reports.generator import ReportGenerator
from src.seeding import make_rng
from src.symaug.augment import DEFAULT_NOISE_VARIANCE, augment_dataset, gaussian_augment
from src.symaug.schema import load_schema
from src.synthenv.generator import DatasetKind, generate_dataset
from src.synthenv.policies import WeakKind
from src.visualization.charts import ChartGenerator

logger = logging.getLogger(__name__)


class OplArgumentParser(argparse.ArgumentParser):
    """Usage errors collapse to a single machine-parsable line, exit status 2"""

    def error(self, message: str):
        sys.stderr.write(f"error: usage_error: {' '.join(message.split())}\n")
        sys.exit(2)


def _sibling(path: Path, suffix: str) -> Path:
    """data/run.ckpt + _loss.csv -> data/run_loss.csv"""
    return path.with_name(path.stem + suffix)


def resolve_config(args: argparse.Namespace, updates: Optional[Dict[str, Any]] = None) -> PipelineConfig:
    """Config file (or defaults), then explicit flags, then the seed spread to every stream"""
    cfg = load_config(args.config)
    seed = args.seed
    if seed is None and args.config is None:
        seed = get_settings().default_seed
    cfg = override(cfg, {"seed": seed, **(updates or {})})
    return cfg.with_seed()


def cmd_gen(args: argparse.Namespace) -> None:
    cfg = resolve_config(args, {"weak": args.weak})
    ds = generate_dataset(DatasetKind(args.kind), args.n, cfg.env, cfg.weak)
    out = opld_io.save(ds, args.out)
    ReportGenerator().write_json(out.with_suffix(".json"), {
        "kind": args.kind,
        "n_episodes": args.n,
        "seed": cfg.seed,
        "weak": cfg.weak.value,
        "env": cfg.env.model_dump(mode="json"),
        "schema": cfg.symmetry.model_dump(mode="json"),
    })


def cmd_filter(args: argparse.Namespace) -> None:
    cfg = resolve_config(args, {
        "filter.theta_conf": args.theta,
        "filter.seed_fraction": args.seed_fraction,
        "filter.max_iters": args.max_iters,
    })
    ds = opld_io.load(args.data)
    expert_filter = ExpertFilter(cfg.filter)
    fs, selected = expert_filter.run(ds)

    reports = ReportGenerator()
    opld_io.save(ds.subset(selected), args.out)
    reports.filter_report_json(
        selected,
        expert_filter.confidences(fs, ds.without_labels()),
        [record.to_dict() for record in fs.history],
        fs.converged,
        args.report,
        seed_ids=fs.seed_ids,
        extra={"filter_config": cfg.filter.model_dump(mode="json"), "n_episodes": ds.n_episodes},
    )
    if args.classifier:
        fs.classifier.save(args.classifier)
    if args.confusion:
        if ds.has_labels():
            reports.confusion_csv(score_filter(selected, ds), args.confusion)
        else:
            logger.warning("Dataset carries no ground-truth labels; no confusion matrix written")


def cmd_augment(args: argparse.Namespace) -> None:
    cfg = resolve_config(args)
    ds = opld_io.load(args.data)
    if args.mode == "rot":
        schema = load_schema(args.schema) if args.schema else cfg.symmetry
        out = augment_dataset(ds, schema)
    else:
        rng = make_rng(cfg.seed, "augment", "gaussian")
        out = gaussian_augment(ds, sigma=args.sigma, rng=rng)
    opld_io.save(out, args.out)


def cmd_train(args: argparse.Namespace) -> None:
    explicit_steps = args.phase1_steps is not None or args.phase2_steps is not None
    cfg = resolve_config(args, {
        "bc.phase1.steps": args.phase1_steps,
        "bc.phase2.steps": args.phase2_steps,
        "bc.phase1.lr": args.lr1,
        "bc.phase2.lr": args.lr2,
        "bc.phase1.batch": args.batch,
        "bc.phase2.batch": args.batch,
        "bc.scale_to_data": False if args.fixed_steps or explicit_steps else None,
    })
    raw = opld_io.load(args.raw)
    aug = opld_io.load(args.aug) if args.aug else None
    train_set = aug if aug is not None else raw
    bc_cfg = cfg.bc.model_copy(update={"rng_seed": cfg.seed})
    bc_cfg = bc_cfg.for_dataset(train_set.n_episodes * train_set.episode_len)

    if aug is not None:
        result = train_theory_to_real(raw, aug, bc_cfg)
    else:
        result = train_single_phase(raw, bc_cfg)

    out = Path(args.out)
    result.policy.save(out, extra={"bc_config": bc_cfg.model_dump(mode="json"), **result.summary()})
    ReportGenerator().loss_curve_csv(
        {"phase1": result.phase1_curve, "phase2": result.phase2_curve}, _sibling(out, "_loss.csv")
    )


def cmd_eval(args: argparse.Namespace) -> None:
    cfg = resolve_config(args)
    policy = ScriptedExpert(cfg.env) if args.scripted else PolicyModel.load(args.model)
    report = evaluate_policy(policy, cfg.env, args.episodes, seed=cfg.seed)
    out = Path(args.out)
    reports = ReportGenerator()
    reports.eval_report_json(report, out, extra={"policy": args.scripted or str(args.model)})
    reports.returns_csv(report, _sibling(out, "_returns.csv"))


def _read_selection(path: Path) -> List[int]:
    if not path.exists():
        raise FileNotFoundError(f"filter report not found: {path}")
    try:
        payload = json.loads(path.read_text())
        return [int(i) for i in payload["selected_ids"]]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise FormatError("report", f"{path} is not a filter report: {e}")


def cmd_score_filter(args: argparse.Namespace) -> None:
    ds = opld_io.load(args.data)
    if not ds.has_labels():
        raise LabelError("dataset has no ground-truth labels")
    matrix = score_filter(_read_selection(Path(args.report)), ds)
    ReportGenerator().confusion_csv(matrix, args.out)
    logger.info(f"Filter accuracy {matrix.accuracy:.4f} (precision {matrix.precision:.4f}, recall {matrix.recall:.4f})")


def cmd_report(args: argparse.Namespace) -> None:
    cfg = resolve_config(args)
    bins = args.bins or cfg.histogram_bins
    ds = opld_io.load(args.data)
    reports = ReportGenerator(args.out_dir)
    charts = ChartGenerator()

    reports.histogram_csv(ds, bins, "histogram.csv")
    if any(ep.label >= 0 for ep in ds.episodes):
        reports.label_histogram_csv(ds, bins, "histogram_by_label.csv")
    charts.save_html(charts.create_return_histogram(ds, bins), reports.resolve("returns.html"), "returns")

    if args.loss:
        frame = pd.read_csv(args.loss)
        curves = {
            phase: list(zip(group["step"].astype(int), group["loss"].astype(float)))
            for phase, group in frame.groupby("phase", sort=False)
        }
        charts.save_html(charts.create_loss_curves(curves), reports.resolve("loss.html"), "loss")


def cmd_repro(args: argparse.Namespace) -> None:
    variants = expand_variants(args.variant)
    cfg = resolve_config(args, {"train_seeds": args.train_seeds})
    out_dir = args.out_dir or get_settings().output_dir
    run_repro(cfg, variants, out_dir, DatasetKind(args.dataset))


def build_parser() -> argparse.ArgumentParser:
    parser = OplArgumentParser(
        prog="opl",
        description="Offline policy learning: expert filtering, symmetry augmentation and behavioral cloning",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name: str, handler, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=Path, default=None, help="PipelineConfig JSON file")
        p.add_argument("--seed", type=int, default=None, help="Top-level seed")
        p.set_defaults(handler=handler)
        return p

    p = command("gen", cmd_gen, "Generate a labeled dataset from the push environment")
    p.add_argument("--kind", choices=[k.value for k in DatasetKind], required=True)
    p.add_argument("--n", type=int, required=True, help="Number of episodes")
    p.add_argument("--weak", choices=[k.value for k in WeakKind], default=None)
    p.add_argument("--out", type=Path, required=True)

    p = command("filter", cmd_filter, "Select expert episodes from a mixed dataset")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="Filtered .opld")
    p.add_argument("--report", type=Path, required=True, help="JSON report")
    p.add_argument("--theta", type=float, default=None, help="Confidence threshold")
    p.add_argument("--seed-fraction", type=float, default=None)
    p.add_argument("--max-iters", type=int, default=None)
    p.add_argument("--confusion", type=Path, default=None, help="Confusion CSV when labels exist")
    p.add_argument("--classifier", type=Path, default=None, help="Save the trained classifier")

    p = command("augment", cmd_augment, "Rotational or Gaussian-noise augmentation")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--schema", type=Path, default=None, help="Schema JSON or gen sidecar")
    p.add_argument("--mode", choices=["rot", "gauss"], required=True)
    p.add_argument("--sigma", type=float, default=DEFAULT_NOISE_VARIANCE, help="Noise variance")
    p.add_argument("--out", type=Path, required=True)

    p = command("train", cmd_train, "Behavioral cloning, two-phase when --aug is given")
    p.add_argument("--raw", type=Path, required=True)
    p.add_argument("--aug", type=Path, default=None)
    p.add_argument("--phase1-steps", type=int, default=None)
    p.add_argument("--phase2-steps", type=int, default=None)
    p.add_argument("--lr1", type=float, default=None)
    p.add_argument("--lr2", type=float, default=None)
    p.add_argument("--batch", type=int, default=None)
    p.add_argument("--fixed-steps", action="store_true",
                   help="Keep the configured step counts instead of scaling them to the dataset")
    p.add_argument("--out", type=Path, required=True, help="Checkpoint path")

    p = command("eval", cmd_eval, "Roll out a policy in the push environment")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--model", type=Path)
    source.add_argument("--scripted", choices=["expert"])
    p.add_argument("--episodes", type=int, default=15)
    p.add_argument("--out", type=Path, required=True)

    p = command("score-filter", cmd_score_filter, "Confusion matrix of a filter report")
    p.add_argument("--data", type=Path, required=True, help="Labeled .opld")
    p.add_argument("--report", type=Path, required=True, help="Filter JSON report")
    p.add_argument("--out", type=Path, required=True)

    p = command("report", cmd_report, "Return histograms and charts")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--bins", type=int, default=None)
    p.add_argument("--loss", type=Path, default=None, help="Loss CSV written by train")
    p.add_argument("--out-dir", type=Path, required=True)

    p = command("repro", cmd_repro, "Run pipeline variants end to end")
    p.add_argument("--variant", action="append", required=True, help=f"One of {', '.join(VARIANTS)} or all; repeatable")
    p.add_argument("--dataset", choices=[k.value for k in DatasetKind], default=DatasetKind.MIXED.value)
    p.add_argument("--train-seeds", type=int, nargs="+", default=None)
    p.add_argument("--out-dir", type=Path, default=None)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run one subcommand

    Args:
        argv: Arguments without the program name; sys.argv[1:] when omitted

    Returns:
        Exit status (0 success, 1 library error; usage errors exit with 2)
    """
    try:
        settings = get_settings()
    except ValidationError as e:
        sys.stderr.write(f"error: config_error: invalid OPL_* environment: {e.errors()[0]['msg']}\n")
        return 1
    configure_logging(settings)

    args = build_parser().parse_args(argv)
    try:
        args.handler(args)
    except OplError as e:
        sys.stderr.write(e.one_line() + "\n")
        return 1
    except FileNotFoundError as e:
        sys.stderr.write(f"error: file_not_found: {' '.join(str(e).split())}\n")
        return 1
    return 0
