"""Deterministic JSON/CSV artifact writers"""
from src.reports.generator import ReportGenerator

__all__ = ["ReportGenerator"]
