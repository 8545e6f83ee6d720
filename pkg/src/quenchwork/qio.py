"""File formats: histogram/curve CSVs, model JSON, run manifests.

CSV floats carry 17 significant digits so every file round-trips losslessly
through the parsers.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .fitkit import Histogram
from .smooth import GaussianDensityModel, SFModel, SmoothedCurve

HEADER = "# edges_left,edges_right,density"


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_histogram_csv(path, hist: Histogram, metadata: dict | None = None) -> None:
    lines = []
    for key, value in (metadata or {}).items():
        lines.append(f"# {key}={value}")
    lines.append(HEADER)
    for left, right, dens in zip(hist.edges[:-1], hist.edges[1:], hist.density):
        lines.append(f"{_fmt(left)},{_fmt(right)},{_fmt(dens)}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_histogram_csv(path) -> tuple[Histogram, dict]:
    metadata: dict[str, str] = {}
    rows = []
    seen_header = False
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.replace(" ", "") == HEADER[1:].strip().replace(" ", ""):
                seen_header = True
            elif "=" in body:
                key, _, value = body.partition("=")
                metadata[key.strip()] = value.strip()
            continue
        rows.append([float(tok) for tok in line.split(",")])
    if not seen_header or not rows:
        raise ValueError(f"{path} is not a histogram CSV")
    arr = np.array(rows)
    edges = np.concatenate([arr[:, 0], arr[-1:, 1]])
    density = arr[:, 2]
    norm = float(np.sum(density * np.diff(edges)))
    return Histogram(edges=edges, density=density, norm=norm), metadata


def curve_to_histogram(curve: SmoothedCurve) -> Histogram:
    """Represent a smooth curve in the histogram format (grid intervals as bins)."""
    masses = 0.5 * (curve.density[1:] + curve.density[:-1]) * np.diff(curve.w)
    widths = np.diff(curve.w)
    return Histogram(edges=curve.w.copy(), density=masses / widths,
                     norm=float(masses.sum()))


def write_curve_csv(path, curve: SmoothedCurve, metadata: dict | None = None) -> None:
    write_histogram_csv(path, curve_to_histogram(curve), metadata)


def write_model_json(path, density: GaussianDensityModel | None,
                     sf: SFModel | None, extra: dict | None = None) -> None:
    """Smooth-model file: level-density parameters plus the SF table."""
    payload: dict = {}
    if sf is not None:
        payload["kind"] = sf.kind
        payload["table"] = [[float(x) for x in row] for row in sf.table]
        if sf.fits:
            payload["fits"] = [f.as_dict() for f in sf.fits]
    if density is not None:
        payload["N"] = density.n_levels
        payload["E_bar"] = density.e_bar
        payload["sigma_E"] = density.sigma_e
        if density.fit is not None:
            payload["density_fit"] = density.fit.as_dict()
    payload.update(extra or {})
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_model_json(path) -> tuple[GaussianDensityModel | None, SFModel | None, dict]:
    payload = json.loads(Path(path).read_text())
    density = None
    if "N" in payload:
        density = GaussianDensityModel(n_levels=payload["N"],
                                       e_bar=payload["E_bar"],
                                       sigma_e=payload["sigma_E"])
    sf = None
    if "kind" in payload:
        sf = SFModel(kind=payload["kind"], table=np.array(payload["table"]))
    rest = {k: v for k, v in payload.items()
            if k not in ("N", "E_bar", "sigma_E", "kind", "table", "fits",
                         "density_fit")}
    return density, sf, rest


def file_sha256(path) -> str:
    h = hashlib.sha256()
    h.update(Path(path).read_bytes())
    return h.hexdigest()


def build_manifest(config: dict, out_dir, outputs: list[dict],
                   notes: list[str] | None = None,
                   created: str | None = None) -> dict:
    """Run manifest: every output file with its hash, plus a content hash
    over the (path, sha256) pairs. ``created`` is informational only and
    excluded from the content hash."""
    out_dir = Path(out_dir)
    entries = []
    for item in outputs:
        p = Path(item["path"])
        rel = str(p.relative_to(out_dir)) if p.is_absolute() else str(p)
        entries.append({"path": rel, "sha256": file_sha256(out_dir / rel),
                        "kind": item.get("kind", "csv")})
    entries.sort(key=lambda e: e["path"])
    hasher = hashlib.sha256()
    for e in entries:
        hasher.update(e["path"].encode())
        hasher.update(e["sha256"].encode())
    manifest = {
        "config": config,
        "outputs": entries,
        "content_hash": hasher.hexdigest(),
        "notes": notes or [],
    }
    if created is not None:
        manifest["created"] = created
    return manifest


def write_manifest(path, manifest: dict) -> None:
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def read_manifest(path) -> dict:
    return json.loads(Path(path).read_text())
