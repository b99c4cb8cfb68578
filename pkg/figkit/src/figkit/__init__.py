"""Figure regeneration for hubbard-thermo sweep CSVs."""

__version__ = "0.1.0"

from .io import SchemaError, SweepTable, read_sweep_csv
from .render import (
    FigureSpec,
    QUANTITIES,
    panel_matrix,
    render_free_energy_curves,
    render_heatmap_grid,
)

__all__ = [
    "FigureSpec",
    "QUANTITIES",
    "SchemaError",
    "SweepTable",
    "panel_matrix",
    "read_sweep_csv",
    "render_free_energy_curves",
    "render_heatmap_grid",
]
