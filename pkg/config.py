"""
Configuration management for the OPL offline policy learning toolkit
"""
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict
from typing import Optional, Union
from pathlib import Path
import logging
import os


class Settings(BaseSettings):
    """Process-level settings loaded from environment variables (prefix OPL_)"""

    # Worker parallelism for per-episode generation and evaluation rollouts
    threads: int = Field(default=1, ge=1)

    # Seed used when neither a flag nor a config file provides one
    default_seed: int = Field(default=0, ge=0)

    # Where subcommands put their artifacts unless told otherwise
    output_dir: str = "results"

    # Logging
    log_level: str = "INFO"
    log_file: Optional[str] = None

    model_config = SettingsConfigDict(
        env_prefix="OPL_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",
    )


def get_settings() -> Settings:
    """Get application settings"""
    return Settings()


def configure_logging(settings: Settings) -> None:
    """Route log records to stderr, and to a file when OPL_LOG_FILE is set"""
    logging.basicConfig(
        level=settings.log_level.upper(),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )
    if settings.log_file:
        Path(settings.log_file).parent.mkdir(parents=True, exist_ok=True)
        handler = logging.FileHandler(settings.log_file)
        handler.setFormatter(logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s'))
        logging.getLogger().addHandler(handler)


def setup_directories(base: Optional[Union[str, Path]] = None, *subdirs: str) -> Path:
    """Create the output directory and its subdirectories if they don't exist"""
    root = Path(base) if base else Path(get_settings().output_dir)
    directories = [root] + [root / name for name in (subdirs or ("datasets", "checkpoints", "reports"))]

    for directory in directories:
        os.makedirs(directory, exist_ok=True)
    return root
