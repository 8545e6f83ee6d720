"""Figure panels from quenchwork run manifests."""

from .formats import Manifest, read_histogram_csv, read_manifest, read_model_json
from .render import RenderError, build_panel_figure, render

__version__ = "0.1.0"

__all__ = ["Manifest", "RenderError", "build_panel_figure", "read_histogram_csv",
           "read_manifest", "read_model_json", "render"]
