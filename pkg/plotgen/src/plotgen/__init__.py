"""Figure renderer for the dynamic-pricing benchmark CSV outputs."""

from .figures import ALGO_COLORS, ALGO_ORDER, render_curves, render_violins

__version__ = "0.1.0"
