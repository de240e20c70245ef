#!/usr/bin/env python3
"""
Tests for the pipeline config, variant runs and the command line
"""
import json
import sys
from pathlib import Path

import pandas as pd
import pytest

sys.path.append(str(Path(__file__).parent.parent))

from src.dataset import opld_io
from src.exceptions import ConfigError, DimensionMismatchError, UnknownVariantError
from src.neuralnet.checkpoint import load_checkpoint
from src.pipeline.cli import main
from src.pipeline.config import PipelineConfig, config_from_dict, load_config, override
from src.pipeline.repro import VARIANTS, ReproPipeline, expand_variants, run_repro
from src.symaug.schema import SymmetrySchema
from src.synthenv.generator import DatasetKind

TINY = {
    "seed": 4,
    "n_episodes": 10,
    "env": {"episode_len": 12},
    "filter": {"epochs_per_iter": 2, "min_updates_per_iter": 10, "max_iters": 2, "batch_size": 64,
               "seed_fraction": 0.2},
    "bc": {
        "phase1": {"steps": 20, "batch": 32, "lr": 1e-3},
        "phase2": {"steps": 5, "batch": 32, "lr": 2e-4},
        "policy_hidden": [8],
        "scale_to_data": False,
    },
    "eval_episodes": 3,
    "train_seeds": [0],
    "histogram_bins": 5,
}


@pytest.fixture
def tiny_config_file(tmp_path):
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps(TINY))
    return path


def last_line(text):
    return text.strip().splitlines()[-1]


class TestPipelineConfig:
    """Test config validation and overrides"""

    def test_defaults(self):
        """No file gives the default config"""
        cfg = load_config()
        assert cfg.version == 1
        assert cfg.symmetry.order == 3
        assert cfg.train_seeds == [0, 1, 2]

    def test_unknown_key(self):
        """Unknown keys are configuration errors"""
        with pytest.raises(ConfigError, match="bogus"):
            config_from_dict({"bogus": 1})

    def test_nested_unknown_key(self):
        """Unknown keys inside sections are rejected too"""
        with pytest.raises(ConfigError):
            config_from_dict({"filter": {"theta": 0.9}})

    def test_version(self):
        """Only version 1 is understood"""
        with pytest.raises(ConfigError):
            config_from_dict({"version": 2})

    def test_invalid_json(self, tmp_path):
        """Malformed files are configuration errors"""
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_missing_file(self, tmp_path):
        """Absent config files are reported as missing"""
        with pytest.raises(FileNotFoundError):
            load_config(tmp_path / "absent.json")

    def test_override(self):
        """Dotted paths replace nested values and None is skipped"""
        cfg = override(PipelineConfig(), {"filter.theta_conf": 0.96, "bc.phase1.steps": 300, "seed": None})
        assert cfg.filter.theta_conf == 0.96
        assert cfg.bc.phase1.steps == 300
        assert cfg.seed == 0

    def test_override_validates(self):
        """Overrides go through the same validation"""
        with pytest.raises(ConfigError):
            override(PipelineConfig(), {"bc.phase2.lr": 1.0})

    def test_with_seed(self):
        """The top-level seed reaches every random stream"""
        cfg = PipelineConfig().with_seed(7)
        assert cfg.seed == cfg.env.rng_seed == cfg.filter.rng_seed == 7

    def test_schema_alias(self):
        """The symmetry schema is read from and written to the "schema" key"""
        cfg = config_from_dict(TINY)
        payload = cfg.to_payload()
        assert "schema" in payload
        assert config_from_dict(payload) == cfg

    def test_schema_dimension_mismatch(self):
        """A schema for another vector layout does not fit the push environment"""
        schema = SymmetrySchema(order=1, state_dim=4, action_dim=2,
                                finger_state_blocks=[(0, 4)], finger_action_blocks=[(0, 2)])
        with pytest.raises(DimensionMismatchError):
            config_from_dict({"schema": schema.model_dump(mode="json")})


class TestVariants:
    """Test variant names"""

    def test_all(self):
        """"all" expands to every variant in canonical order"""
        assert expand_variants(["all"]) == list(VARIANTS)

    def test_order_and_repeats(self):
        """Requests are deduplicated and put in canonical order"""
        assert expand_variants(["bc", "ours", "bc"]) == ["ours", "bc"]

    def test_unknown(self):
        """Unknown names are rejected"""
        with pytest.raises(UnknownVariantError, match="nope"):
            expand_variants(["ours", "nope"])


class TestReproPipeline:
    """Test end-to-end runs on a tiny configuration"""

    @pytest.fixture
    def cfg(self):
        return config_from_dict(TINY)

    def test_artifacts(self, cfg, tmp_path):
        """Each variant writes its table, report, checkpoints and loss curves"""
        reports = run_repro(cfg, ["ours", "bc"], tmp_path, threads=1)
        assert set(reports) == {"ours", "bc"}
        assert reports["ours"].n_episodes == 3
        for name in ["comparison.csv", "ours.csv", "ours.json", "bc.csv", "bc.json", "filter.json",
                     "datasets/mixed.opld", "checkpoints/ours_s0.ckpt", "reports/ours_s0_loss.csv"]:
            assert (tmp_path / name).exists(), name

        ours = json.loads((tmp_path / "ours.json").read_text())
        assert ours["two_phase"] is True
        assert ours["train_episodes"] == 3 * ours["raw_episodes"]
        bc = json.loads((tmp_path / "bc.json").read_text())
        assert bc["raw_episodes"] == 10

        loss = pd.read_csv(tmp_path / "reports" / "ours_s0_loss.csv")
        assert set(loss["phase"]) == {"phase1", "phase2"}

    def test_filter_report_scored_after_run(self, cfg, tmp_path):
        """The filter report carries its confusion matrix and the top-k baseline"""
        run_repro(cfg, ["ablation1"], tmp_path, threads=1)
        payload = json.loads((tmp_path / "filter.json").read_text())
        assert payload["confusion"]["tp"] + payload["confusion"]["fn"] == 6
        assert "topk_matched_confusion" in payload
        assert set(payload["seed_ids"]) <= set(payload["selected_ids"])

    def test_byte_identical(self, cfg, tmp_path):
        """Two runs with the same config write identical files"""
        run_repro(cfg, ["ours", "bc"], tmp_path / "a", threads=1)
        run_repro(cfg, ["ours", "bc"], tmp_path / "b", threads=1)
        for name in ["comparison.csv", "ours.json", "bc.json", "filter.json", "checkpoints/ours_s0.ckpt"]:
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name

    def test_expert_dataset_skips_filter(self, cfg, tmp_path):
        """On expert data every episode counts as selected"""
        pipeline = ReproPipeline(cfg, tmp_path, DatasetKind.EXPERT, threads=1)
        assert pipeline.selected_ids() == set(range(10))
        assert not (tmp_path / "filter.json").exists()

    def test_schedule_scaled_to_training_set(self, tmp_path):
        """With scaling on, step counts follow the variant's training set"""
        cfg = config_from_dict({**TINY, "bc": {**TINY["bc"], "scale_to_data": True}})
        run_repro(cfg, ["bc"], tmp_path, threads=1)
        run = json.loads((tmp_path / "bc.json").read_text())["runs"][0]
        # 10 episodes of 12 steps is far below the reference size, so the floor applies
        assert (run["phase1_steps"], run["phase2_steps"]) == (50, 0)

    def test_schedule_fixed(self, cfg, tmp_path):
        """With scaling off, the configured step counts are used as written"""
        run_repro(cfg, ["bc"], tmp_path, threads=1)
        run = json.loads((tmp_path / "bc.json").read_text())["runs"][0]
        assert (run["phase1_steps"], run["phase2_steps"]) == (20, 0)


class TestCommandLine:
    """Test subcommands, exit codes and error lines"""

    def test_gen_deterministic(self, tmp_path):
        """Generating twice with the same seed writes identical bytes"""
        a, b = tmp_path / "a.opld", tmp_path / "b.opld"
        assert main(["gen", "--kind", "mixed", "--n", "5", "--seed", "1", "--out", str(a)]) == 0
        assert main(["gen", "--kind", "mixed", "--n", "5", "--seed", "1", "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()
        sidecar = json.loads((tmp_path / "a.json").read_text())
        assert sidecar["kind"] == "mixed" and sidecar["seed"] == 1
        assert sidecar["schema"]["order"] == 3

    def test_filter_then_score_unlabeled(self, tmp_path, tiny_config_file, capsys):
        """Filtering works without labels, scoring does not"""
        data = tmp_path / "mixed.opld"
        assert main(["gen", "--kind", "mixed", "--n", "10", "--config", str(tiny_config_file),
                     "--out", str(data)]) == 0
        unlabeled = opld_io.save(opld_io.load(data).without_labels(), tmp_path / "unlabeled.opld")

        report = tmp_path / "filter.json"
        confusion = tmp_path / "confusion.csv"
        assert main(["filter", "--data", str(unlabeled), "--out", str(tmp_path / "sel.opld"),
                     "--report", str(report), "--confusion", str(confusion),
                     "--config", str(tiny_config_file)]) == 0
        assert report.exists()
        assert not confusion.exists()

        capsys.readouterr()
        code = main(["score-filter", "--data", str(unlabeled), "--report", str(report),
                     "--out", str(tmp_path / "score.csv")])
        assert code == 1
        assert last_line(capsys.readouterr().err) == "error: label_error: dataset has no ground-truth labels"

    def test_score_labeled(self, tmp_path, tiny_config_file):
        """A labeled dataset gives a confusion CSV"""
        data = tmp_path / "mixed.opld"
        main(["gen", "--kind", "mixed", "--n", "10", "--config", str(tiny_config_file), "--out", str(data)])
        report = tmp_path / "filter.json"
        main(["filter", "--data", str(data), "--out", str(tmp_path / "sel.opld"), "--report", str(report),
              "--config", str(tiny_config_file)])
        out = tmp_path / "score.csv"
        assert main(["score-filter", "--data", str(data), "--report", str(report), "--out", str(out)]) == 0
        frame = pd.read_csv(out)
        assert int(frame["tp"][0] + frame["fp"][0] + frame["tn"][0] + frame["fn"][0]) == 10

    def test_augment_train_eval_report(self, tmp_path, tiny_config_file):
        """The stage commands chain into a trained, evaluated policy"""
        cfg = str(tiny_config_file)
        raw, aug = tmp_path / "expert.opld", tmp_path / "aug.opld"
        model, result = tmp_path / "policy.ckpt", tmp_path / "eval.json"
        assert main(["gen", "--kind", "expert", "--n", "4", "--config", cfg, "--out", str(raw)]) == 0
        assert main(["augment", "--data", str(raw), "--mode", "rot", "--schema", str(tmp_path / "expert.json"),
                     "--out", str(aug)]) == 0
        assert opld_io.load(aug).n_episodes == 12
        assert main(["train", "--raw", str(raw), "--aug", str(aug), "--config", cfg, "--out", str(model)]) == 0
        assert (tmp_path / "policy_loss.csv").exists()
        assert main(["eval", "--model", str(model), "--episodes", "2", "--config", cfg, "--out", str(result)]) == 0
        assert json.loads(result.read_text())["n_episodes"] == 2
        assert len(pd.read_csv(tmp_path / "eval_returns.csv")) == 2

        out_dir = tmp_path / "report"
        assert main(["report", "--data", str(raw), "--loss", str(tmp_path / "policy_loss.csv"),
                     "--out-dir", str(out_dir), "--config", cfg]) == 0
        for name in ["histogram.csv", "histogram_by_label.csv", "returns.html", "loss.html"]:
            assert (out_dir / name).exists(), name

    def test_train_scales_schedule(self, tmp_path):
        """train rescales the schedule to the augmented set unless asked to keep it"""
        cfg = tmp_path / "scaled.json"
        cfg.write_text(json.dumps({**TINY, "bc": {**TINY["bc"], "scale_to_data": True}}))
        raw, aug = tmp_path / "expert.opld", tmp_path / "aug.opld"
        main(["gen", "--kind", "expert", "--n", "4", "--config", str(cfg), "--out", str(raw)])
        main(["augment", "--data", str(raw), "--mode", "rot", "--schema", str(tmp_path / "expert.json"),
              "--out", str(aug)])

        scaled, fixed = tmp_path / "scaled.ckpt", tmp_path / "fixed.ckpt"
        assert main(["train", "--raw", str(raw), "--aug", str(aug), "--config", str(cfg), "--out", str(scaled)]) == 0
        assert main(["train", "--raw", str(raw), "--aug", str(aug), "--config", str(cfg), "--fixed-steps",
                     "--out", str(fixed)]) == 0
        extra = load_checkpoint(scaled)[1]["extra"]
        assert (extra["phase1_steps"], extra["phase2_steps"]) == (50, 20)
        assert extra["bc_config"]["phase1"]["steps"] == 50
        extra = load_checkpoint(fixed)[1]["extra"]
        assert (extra["phase1_steps"], extra["phase2_steps"]) == (20, 5)

    def test_gaussian_augment(self, tmp_path, tiny_config_file):
        """Gaussian mode doubles the episode count"""
        raw, noisy = tmp_path / "expert.opld", tmp_path / "noisy.opld"
        main(["gen", "--kind", "expert", "--n", "3", "--config", str(tiny_config_file), "--out", str(raw)])
        assert main(["augment", "--data", str(raw), "--mode", "gauss", "--out", str(noisy)]) == 0
        assert opld_io.load(noisy).n_episodes == 6

    def test_scripted_eval(self, tmp_path, tiny_config_file):
        """The scripted expert can be evaluated directly"""
        out = tmp_path / "expert_eval.json"
        assert main(["eval", "--scripted", "expert", "--episodes", "2", "--config", str(tiny_config_file),
                     "--out", str(out)]) == 0
        assert json.loads(out.read_text())["policy"] == "expert"

    def test_unknown_variant(self, tmp_path, capsys):
        """Unknown variants exit 1 with their own code"""
        assert main(["repro", "--variant", "nope", "--out-dir", str(tmp_path)]) == 1
        assert last_line(capsys.readouterr().err).startswith("error: unknown_variant:")

    def test_bad_config(self, tmp_path, capsys):
        """Invalid config files exit 1"""
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"bogus": 1}))
        assert main(["gen", "--kind", "expert", "--n", "2", "--config", str(path),
                     "--out", str(tmp_path / "x.opld")]) == 1
        assert last_line(capsys.readouterr().err).startswith("error: config_error:")

    def test_missing_file(self, tmp_path, capsys):
        """Missing inputs exit 1"""
        assert main(["report", "--data", str(tmp_path / "absent.opld"), "--out-dir", str(tmp_path)]) == 1
        assert last_line(capsys.readouterr().err).startswith("error: file_not_found:")

    def test_corrupt_dataset(self, tmp_path, capsys):
        """Corrupt datasets exit 1 with a format error"""
        path = tmp_path / "bad.opld"
        path.write_bytes(b"nope")
        assert main(["report", "--data", str(path), "--out-dir", str(tmp_path)]) == 1
        assert last_line(capsys.readouterr().err).startswith("error: format_error:")

    def test_usage_error(self, capsys):
        """Missing arguments exit 2"""
        with pytest.raises(SystemExit) as exc:
            main(["gen"])
        assert exc.value.code == 2
        assert last_line(capsys.readouterr().err).startswith("error: usage_error:")
