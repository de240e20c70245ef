"""
Visualization Module - Plotly charts of return distributions and training curves
"""
from pathlib import Path
from typing import Dict, List, Tuple, Union
import logging

import plotly.express as px
import plotly.graph_objects as go

from src.dataset.episodes import EpisodeDataset, return_histogram_by_label

logger = logging.getLogger(__name__)

LossCurve = List[Tuple[int, float]]

LABEL_COLUMNS = [("expert", "Expert"), ("weak", "Weak"), ("unknown", "Unlabeled")]


class ChartGenerator:
    """Generate interactive Plotly charts"""

    def __init__(self):
        self.theme = {
            'template': 'plotly_white',
            'color_palette': px.colors.qualitative.Set2
        }

    def create_return_histogram(self, ds: EpisodeDataset, n_bins: int = 30,
                                title: str = "Episodic return distribution") -> go.Figure:
        """
        Stacked histogram of episodic returns, one bar series per label

        Args:
            ds: Dataset
            n_bins: Number of bins
            title: Chart title

        Returns:
            Plotly figure
        """
        logger.info(f"Creating return histogram for {ds.n_episodes} episodes ({n_bins} bins)")
        rows = return_histogram_by_label(ds, n_bins)
        centers = [(r["bin_lo"] + r["bin_hi"]) / 2 for r in rows]
        widths = [max(r["bin_hi"] - r["bin_lo"], 1e-9) for r in rows]

        fig = go.Figure()
        for i, (column, name) in enumerate(LABEL_COLUMNS):
            counts = [r[column] for r in rows]
            if not any(counts):
                continue
            fig.add_trace(go.Bar(
                x=centers,
                y=counts,
                width=widths,
                name=name,
                marker=dict(color=self.theme['color_palette'][i], line=dict(color='black', width=0.5))
            ))

        fig.update_layout(
            title=title,
            xaxis_title='Episodic return',
            yaxis_title='Episodes',
            barmode='stack',
            template=self.theme['template'],
            showlegend=True,
            height=500
        )
        return fig

    def create_loss_curves(self, curves: Dict[str, LossCurve], title: str = "Training loss") -> go.Figure:
        """Loss against cumulative step, later curves continuing where earlier ones end"""
        logger.info(f"Creating loss chart for {len(curves)} curves")
        fig = go.Figure()
        offset = 0
        for i, (name, curve) in enumerate(curves.items()):
            if not curve:
                continue
            fig.add_trace(go.Scatter(
                x=[offset + step for step, _ in curve],
                y=[loss for _, loss in curve],
                mode='lines+markers',
                name=name,
                line=dict(width=2, color=self.theme['color_palette'][i % len(self.theme['color_palette'])]),
                marker=dict(size=6)
            ))
            offset += curve[-1][0]

        fig.update_layout(
            title=title,
            xaxis_title='Step',
            yaxis_title='MSE (normalized actions)',
            yaxis_type='log',
            template=self.theme['template'],
            hovermode='x unified',
            height=500
        )
        return fig

    def save_html(self, fig: go.Figure, path: Union[str, Path], div_id: str = "chart") -> Path:
        """Standalone HTML with a fixed div id so reruns write identical files"""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.write_html(str(path), include_plotlyjs="cdn", full_html=True, div_id=div_id)
        logger.info(f"Wrote chart {path}")
        return path
