"""Parsers for the run-manifest, histogram-CSV and model-JSON formats.

This package deliberately reimplements the readers from the documented
file formats; it never imports the computation package.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

HEADER_COLUMNS = ("edges_left", "edges_right", "density")


@dataclass
class HistogramData:
    edges: np.ndarray
    density: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])


def read_histogram_csv(path) -> HistogramData:
    metadata: dict[str, str] = {}
    rows = []
    header_seen = False
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.replace(" ", "") == ",".join(HEADER_COLUMNS):
                header_seen = True
            elif "=" in body:
                key, _, value = body.partition("=")
                metadata[key.strip()] = value.strip()
            continue
        rows.append([float(tok) for tok in line.split(",")])
    if not header_seen or not rows:
        raise ValueError(f"{path} is not a histogram CSV")
    arr = np.array(rows)
    edges = np.concatenate([arr[:, 0], arr[-1:, 1]])
    return HistogramData(edges=edges, density=arr[:, 2], metadata=metadata)


@dataclass
class ModelData:
    kind: str | None
    table: np.ndarray | None
    n_levels: int | None
    e_bar: float | None
    sigma_e: float | None
    extra: dict


def read_model_json(path) -> ModelData:
    payload = json.loads(Path(path).read_text())
    table = np.array(payload["table"]) if "table" in payload else None
    return ModelData(kind=payload.get("kind"), table=table,
                     n_levels=payload.get("N"), e_bar=payload.get("E_bar"),
                     sigma_e=payload.get("sigma_E"), extra=payload)


@dataclass
class Panel:
    name: str
    histograms: list[str]
    curves: list[str]
    models: list[str]
    annotations: dict


@dataclass
class Manifest:
    root: Path
    preset: str | None
    panels: list[Panel]
    raw: dict

    def resolve(self, rel: str) -> Path:
        return self.root / rel


def read_manifest(path) -> Manifest:
    path = Path(path)
    raw = json.loads(path.read_text())
    figure = raw.get("figure") or {}
    panels = [Panel(name=p["name"],
                    histograms=list(p.get("histograms", ())),
                    curves=list(p.get("curves", ())),
                    models=list(p.get("models", ())),
                    annotations=dict(p.get("annotations", {})))
              for p in figure.get("panels", ())]
    return Manifest(root=path.parent, preset=figure.get("preset"),
                    panels=panels, raw=raw)


def missing_sources(manifest: Manifest) -> list[str]:
    missing = []
    for panel in manifest.panels:
        for rel in (*panel.histograms, *panel.curves, *panel.models):
            if not manifest.resolve(rel).is_file():
                missing.append(rel)
    return missing
