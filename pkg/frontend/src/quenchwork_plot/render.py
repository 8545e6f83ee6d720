"""Panel rendering: histograms as dashed stepped lines, smooth models as
solid curves, fitted-parameter tables as parameter-vs-energy plots.

All arrays are plotted exactly as read from the CSV/JSON sources; the only
transforms are the plotting ones.
"""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .formats import Manifest, Panel, missing_sources, read_histogram_csv, read_model_json

DPI = 300

PRESET_LAYOUT = {
    "fig1": {"panels": 6, "grid": (3, 2)},
    "fig3": {"panels": 4, "grid": (2, 2)},
    "fig4": {"panels": 3, "grid": (3, 1)},
    "fig5": {"panels": 3, "grid": (3, 1)},
    "fig6": {"panels": 2, "grid": (1, 2)},
    "fig7": {"panels": 3, "grid": (3, 1)},
}

HIST_STYLE = {"linestyle": "--", "linewidth": 1.0,
              "colors": ("tab:blue", "tab:red", "tab:green")}
CURVE_STYLE = {"linestyle": "-", "color": "black", "linewidth": 1.2}


class RenderError(RuntimeError):
    pass


def _annotation_text(annotations: dict) -> str:
    parts = []
    if "beta" in annotations:
        parts.append(f"beta = {annotations['beta']:g}")
    if "n_eff_ratio" in annotations:
        parts.append(f"N_eff/N = {annotations['n_eff_ratio']:.3g}")
    if "dim" in annotations:
        parts.append(f"N = {annotations['dim']}")
    if "quench" in annotations:
        parts.append(str(annotations["quench"]))
    return "\n".join(parts)


def build_panel_figure(manifest: Manifest, panel: Panel) -> plt.Figure:
    """One panel as its own figure; artists carry gids naming their source."""
    fig, ax = plt.subplots(figsize=(4.0, 3.0))
    for k, rel in enumerate(panel.histograms):
        hist = read_histogram_csv(manifest.resolve(rel))
        color = HIST_STYLE["colors"][k % len(HIST_STYLE["colors"])]
        line, = ax.plot(hist.edges, np.append(hist.density, hist.density[-1]),
                        drawstyle="steps-post", linestyle=HIST_STYLE["linestyle"],
                        linewidth=HIST_STYLE["linewidth"], color=color)
        line.set_gid(f"hist:{rel}")
    for rel in panel.curves:
        curve = read_histogram_csv(manifest.resolve(rel))
        line, = ax.plot(curve.centers, curve.density, **CURVE_STYLE)
        line.set_gid(f"curve:{rel}")
    for rel in panel.models:
        model = read_model_json(manifest.resolve(rel))
        if model.table is None:
            continue
        width_label = model.extra.get("width_label",
                                      "Gamma" if model.kind == "breit_wigner"
                                      else "sigma")
        line_w, = ax.plot(model.table[:, 0], model.table[:, 2], marker="o",
                          linestyle="-", color="black", label=width_label)
        line_w.set_gid(f"model-width:{rel}")
        line_c, = ax.plot(model.table[:, 0], model.table[:, 1], marker="s",
                          linestyle="--", color="tab:blue", label="centroid")
        line_c.set_gid(f"model-centroid:{rel}")
        ax.legend(fontsize=7, frameon=False)
        ax.set_xlabel("E")
    text = _annotation_text(panel.annotations)
    if text:
        ax.text(0.02, 0.98, text, transform=ax.transAxes, va="top", fontsize=7)
    ax.set_title(f"({panel.name})", loc="left", fontsize=9)
    if panel.histograms or panel.curves:
        ax.set_xlabel("w" if "beta" in panel.annotations else "E")
        ax.set_ylabel("density")
    fig.tight_layout()
    return fig


def render(manifest: Manifest, preset: str, out_dir) -> dict:
    """Render every panel to PNG (300 dpi) and write the layout JSON."""
    if preset not in PRESET_LAYOUT:
        raise RenderError(f"unknown preset {preset!r}; "
                          f"choose from {sorted(PRESET_LAYOUT)}")
    layout_spec = PRESET_LAYOUT[preset]
    missing = missing_sources(manifest)
    if missing:
        raise RenderError("missing sources: " + ", ".join(sorted(missing)))
    if not manifest.panels:
        raise RenderError("manifest carries no figure panels")
    if len(manifest.panels) != layout_spec["panels"]:
        raise RenderError(
            f"{preset} expects {layout_spec['panels']} panels, "
            f"manifest has {len(manifest.panels)}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for panel in manifest.panels:
        fig = build_panel_figure(manifest, panel)
        image = f"{preset}_{panel.name}.png"
        fig.savefig(out_dir / image, dpi=DPI)
        plt.close(fig)
        entries.append({
            "name": panel.name,
            "image": image,
            "histograms": panel.histograms,
            "curves": panel.curves,
            "models": panel.models,
            "annotations": panel.annotations,
        })
    layout = {
        "preset": preset,
        "grid": list(layout_spec["grid"]),
        "dpi": DPI,
        "panels": entries,
    }
    (out_dir / "layout.json").write_text(json.dumps(layout, indent=2,
                                                    sort_keys=True) + "\n")
    return layout
