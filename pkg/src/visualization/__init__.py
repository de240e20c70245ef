"""Plotly charts of return distributions and loss curves"""
from src.visualization.charts import ChartGenerator

__all__ = ["ChartGenerator"]
