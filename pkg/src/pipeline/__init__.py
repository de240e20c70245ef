"""Pipeline configuration, variant runs and the command line"""
from src.pipeline.config import PipelineConfig, load_config
from src.pipeline.repro import VARIANTS, ReproPipeline, run_repro

__all__ = ["PipelineConfig", "ReproPipeline", "VARIANTS", "load_config", "run_repro"]
