"""Figure rendering for fiberqed sweep outputs (CSV in, PNG/SVG out)."""

__version__ = "0.1.0"

from .panels import PANELS, PanelSpec, SchemaError, read_csv, render, render_targets

__all__ = ["PANELS", "PanelSpec", "SchemaError", "read_csv", "render", "render_targets"]
