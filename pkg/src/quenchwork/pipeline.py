"""Mid-level experiment drivers shared by the CLI and the test suite.

Everything here is deterministic given its inputs; spectra are cached
per chain parameter set so repeated experiments on the same sector do
not re-diagonalize.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import work_stats
from .fitkit import Histogram, bin_model, compare_models, uniform_edges
from .hamiltonians import ChainParams, SectorOperator, build_h2
from .sectors import build_basis, parity_project
from .smooth import (GaussianDensityModel, SFModel, SmoothedCurve, fit_density,
                     fit_sf, n_eff, pdf_distance, sf_model_from_moments,
                     smoothed_work_pdf)
from .spectral import Spectrum, eigh, level_density

# Convergence studies need a second, larger sector; L=16, K=6, parity=+1
# (dim 4032) is the documented choice, recorded in run manifests.
LARGE_SECTOR_SUBSTITUTE = {"L": 16, "K": 6, "parity": 1}
LARGE_SECTOR_NOTE = (
    "larger system uses the documented sector L=16, K=6, parity=+1 (dim 4032)")

_spectrum_cache: dict[ChainParams, Spectrum] = {}
_CACHE_LIMIT = 16


def chain_sector(params: ChainParams):
    sector = build_basis(params.L, params.K)
    if params.parity is not None:
        sector = parity_project(sector, params.parity)
    return sector


def chain_spectrum(params: ChainParams) -> Spectrum:
    """Eigendecomposition of the chain in its sector, cached per params."""
    if params in _spectrum_cache:
        return _spectrum_cache[params]
    sector = chain_sector(params)
    spec = eigh(build_h2(params, sector), sector=sector)
    if len(_spectrum_cache) >= _CACHE_LIMIT:
        _spectrum_cache.pop(next(iter(_spectrum_cache)))
    _spectrum_cache[params] = spec
    return spec


def clear_spectrum_cache() -> None:
    _spectrum_cache.clear()


@dataclass(frozen=True)
class QuenchSpec:
    """Sudden quench: same sector, initial and final chain couplings."""

    initial: ChainParams
    final: ChainParams

    def __post_init__(self):
        a, b = self.initial, self.final
        if (a.L, a.K, a.parity) != (b.L, b.K, b.parity):
            raise ValueError("initial and final Hamiltonians must share the sector")

    def label(self) -> str:
        a, b = self.initial, self.final
        if a.mu != b.mu:
            move = f"mu {a.mu:g} -> {b.mu:g}"
        else:
            move = f"lambda {a.lam:g} -> {b.lam:g} (mu={a.mu:g})"
        parity = {1: "+1", -1: "-1", None: "none"}[a.parity]
        return f"L={a.L} K={a.K} parity={parity} {move}"


def quench_from_config(chain: dict, final_overrides: dict) -> QuenchSpec:
    initial = ChainParams(L=chain["L"], K=chain["K"],
                          parity=chain.get("parity"),
                          J=chain.get("J", 1.0),
                          mu=chain.get("mu", 0.0),
                          lam=chain.get("lambda", 0.0))
    final = replace(initial,
                    mu=final_overrides.get("mu", initial.mu),
                    lam=final_overrides.get("lambda", initial.lam))
    return QuenchSpec(initial=initial, final=final)


def work_histogram(quench: QuenchSpec, beta: float, edges) -> tuple[Histogram, dict]:
    """Exact work pdf binned, with the metadata block the CSV format wants."""
    si = chain_spectrum(quench.initial)
    sf = chain_spectrum(quench.final)
    if si.dim <= work_stats.ATOM_STORAGE_LIMIT:
        pmd = work_stats.exact_work_pdf(si, sf, beta)
        hist = pmd.histogram(edges)
    else:
        hist = work_stats.exact_work_pdf_histogram(si, sf, beta, edges)
    tw = work_stats.thermal_weights(si, beta)
    jz = work_stats.jarzynski_check(si, sf, beta)
    meta = {
        "beta": format(beta, ".17g"),
        "quench": quench.label(),
        "dim": si.dim,
        "logZ0": format(tw.log_z0, ".17g"),
        "jarzynski_gap": format(jz.gap, ".17g"),
    }
    return hist, meta


def density_histogram(params: ChainParams, bin_width: float = 0.055) -> Histogram:
    spec = chain_spectrum(params)
    return level_density(spec.energies, bin_width=bin_width)


def density_fit(params: ChainParams, bin_width: float = 0.055) -> GaussianDensityModel:
    return fit_density(density_histogram(params, bin_width))


def index_windows(spectrum: Spectrum, n_windows: int,
                  states_per_window: int) -> list[tuple[float, float]]:
    """(center, half_width) energy windows holding a fixed number of states.

    Centers sit at evenly spaced index quantiles, so every window is
    populated no matter how the level density thins out toward the edges.
    """
    e = spectrum.energies
    n = len(e)
    half_states = states_per_window // 2
    centers = []
    for q in np.linspace(0.08, 0.92, n_windows):
        mid = int(round(q * (n - 1)))
        lo = max(mid - half_states, 0)
        hi = min(mid + half_states, n - 1)
        center = 0.5 * (e[lo] + e[hi])
        half_width = 0.5 * (e[hi] - e[lo]) + 1e-12
        centers.append((float(center), float(half_width)))
    return centers


def sf_window_histogram(quench: QuenchSpec, e_center: float, half_width: float,
                        bin_width: float, half_span: float,
                        min_states: int = 20) -> tuple[Histogram, int]:
    """Pooled SF histogram for one window, bins centered on the window's
    own mean shift so narrow strength functions stay resolved."""
    si = chain_spectrum(quench.initial)
    sf = chain_spectrum(quench.final)
    idx = work_stats.window_indices(si, e_center, half_width)
    if len(idx) == 0:
        raise ValueError("empty SF window")
    amps = sf.vectors.T @ si.vectors[:, idx]
    w2 = amps * amps
    vals = sf.energies[:, None] - si.energies[None, idx]
    mean_shift = float((vals * w2).sum() / w2.sum())
    n_bins = max(int(np.ceil(2 * half_span / bin_width)), 4)
    edges = uniform_edges(mean_shift, bin_width, n_bins)
    return work_stats.smoothed_sf_histogram(si, sf, e_center, edges,
                                            half_width=half_width,
                                            min_states=min_states)


@dataclass
class SFScanResult:
    windows: list            # (e_center, Histogram, n_states)
    fits: dict               # kind -> SFModel or None
    residuals: dict          # kind -> summed L2 residual
    winner: str


def sf_scan(quench: QuenchSpec, *, n_windows: int = 9,
            states_per_window: int = 101, bin_width: float, half_span: float,
            kinds=("breit_wigner", "gaussian")) -> SFScanResult:
    """Windowed SF histograms across the spectrum, fitted with both shapes."""
    si = chain_spectrum(quench.initial)
    windows = []
    for center, half_width in index_windows(si, n_windows, states_per_window):
        hist, n_states = sf_window_histogram(quench, center, half_width,
                                             bin_width, half_span)
        windows.append((center, hist, n_states))
    fits: dict[str, SFModel | None] = {}
    residuals: dict[str, float] = {}
    for kind in kinds:
        pairs = [(c, h) for c, h, _ in windows]
        try:
            model = fit_sf(pairs, kind)
            fits[kind] = model
            residuals[kind] = float(sum(f.residual_l2 for f in model.fits))
        except Exception:
            fits[kind] = None
            residuals[kind] = np.inf
    winner = min(residuals, key=residuals.get)
    return SFScanResult(windows=windows, fits=fits, residuals=residuals,
                        winner=winner)


def mid_spectrum_sf(quench: QuenchSpec, *, states: int = 101, bin_width: float,
                    half_span: float) -> dict:
    """Single mid-spectrum window fitted with both shapes (shape-transition probe)."""
    si = chain_spectrum(quench.initial)
    n = si.dim
    lo, hi = (n - states) // 2, (n + states) // 2
    center = 0.5 * (si.energies[lo] + si.energies[hi])
    half_width = 0.5 * (si.energies[hi] - si.energies[lo]) + 1e-12
    hist, n_states = sf_window_histogram(quench, center, half_width,
                                         bin_width, half_span)
    comparison = compare_models(hist, fix_area=1.0)
    return {"e_center": center, "histogram": hist, "n_states": n_states,
            **comparison}


def sf_model_for(quench: QuenchSpec, kind: str, source: str = "fit", *,
                 n_windows: int = 9, states_per_window: int = 101,
                 bin_width: float = 0.05, half_span: float = 3.0) -> SFModel:
    if source == "moments":
        si = chain_spectrum(quench.initial)
        op = SectorOperator(quench.final, chain_sector(quench.final))
        centers = [c for c, _ in index_windows(si, n_windows, states_per_window)]
        half = max(h for _, h in index_windows(si, n_windows, states_per_window))
        return sf_model_from_moments(si, op, centers, half_width=half)
    scan = sf_scan(quench, n_windows=n_windows,
                   states_per_window=states_per_window,
                   bin_width=bin_width, half_span=half_span, kinds=(kind,))
    model = scan.fits[kind]
    if model is None:
        raise RuntimeError(f"SF fit failed for kind {kind}")
    return model


@dataclass
class SmoothCompareResult:
    beta: float
    exact: Histogram
    curve: SmoothedCurve
    distance: float
    n_eff_ratio: float
    regime: str
    meta: dict


def smooth_compare(quench: QuenchSpec, betas, edges, sf_model: SFModel,
                   density: GaussianDensityModel | None = None,
                   curve_points: int = 8001) -> list[SmoothCompareResult]:
    """Exact histogram vs smoothed curve, one result per temperature."""
    if density is None:
        density = density_fit(quench.initial)
    edges = np.asarray(edges, dtype=float)
    w_grid = np.linspace(edges[0], edges[-1], curve_points)
    results = []
    for beta in betas:
        hist, meta = work_histogram(quench, beta, edges)
        curve = smoothed_work_pdf(density, sf_model, beta, w_grid)
        dist = pdf_distance(hist, curve)
        ne = n_eff(density, beta)
        results.append(SmoothCompareResult(
            beta=beta, exact=hist, curve=curve, distance=dist,
            n_eff_ratio=ne.ratio, regime=ne.regime, meta=meta))
    return results


def chain_ergodicity(quench_small: QuenchSpec, quench_large: QuenchSpec, *,
                     density_bin: float = 0.055, sf_bin: float = 0.097,
                     sf_center: float = 3.0, sf_states: int = 101) -> dict:
    """Fixed-bin RMS fluctuations around the fitted smooth curves, both sectors.

    Densities are compared in probability units so the two dimensions are
    on the same scale; the SF histograms are unit-area already.
    """
    out: dict[str, list] = {"density": [], "sf": []}
    for quench in (quench_small, quench_large):
        si = chain_spectrum(quench.initial)
        hist = level_density(si.energies, bin_width=density_bin,
                             normalization="probability")
        model = fit_density(level_density(si.energies, bin_width=density_bin))
        curve = model.evaluate(hist.centers) / model.n_levels
        rms = float(np.sqrt(np.mean((hist.density - curve) ** 2)))
        out["density"].append({"dim": si.dim, "rms": rms})

        idx = np.argsort(np.abs(si.energies - sf_center))[:sf_states]
        e_sel = np.sort(si.energies[idx])
        center = 0.5 * (e_sel[0] + e_sel[-1])
        half_width = 0.5 * (e_sel[-1] - e_sel[0]) + 1e-12
        hist_sf, n_states = sf_window_histogram(quench, center, half_width,
                                                sf_bin, half_span=_sf_span(quench))
        fit = compare_models(hist_sf, fix_area=1.0)
        best = fit["fits"][fit["winner"]]
        curve_sf, _ = bin_model(best.model, best.params, hist_sf.edges)
        rms_sf = float(np.sqrt(np.mean((hist_sf.density - curve_sf) ** 2)))
        out["sf"].append({"dim": si.dim, "rms": rms_sf, "n_states": n_states})
    return out


def _sf_span(quench: QuenchSpec) -> float:
    # generous half-span: a few times the global width of the final spectrum
    sf = chain_spectrum(quench.final)
    return 2.0 * float(np.std(sf.energies))
