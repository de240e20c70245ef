"""
Main entry point for the OPL offline policy learning toolkit

    python main.py gen --kind mixed --n 500 --seed 1 --out results/mixed.opld
    python main.py repro --variant all --seed 1 --out-dir results/repro
"""
import sys
from pathlib import Path

# Add project root to path
sys.path.append(str(Path(__file__).parent))

from src.pipeline.cli import main

if __name__ == "__main__":
    sys.exit(main())
