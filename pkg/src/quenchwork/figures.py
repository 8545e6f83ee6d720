"""Figure-preset experiments: each preset bundles the quenches, binnings and
temperatures of one publication figure and emits CSV/JSON artifacts plus the
panel structure the renderer consumes."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from . import pipeline as pl
from .fitkit import Histogram, bin_model, compare_models, uniform_edges
from .qio import write_curve_csv, write_histogram_csv, write_model_json
from .smooth import SQRT2PI
from .spectral import level_density


def _edges_from(bins: dict) -> np.ndarray:
    return uniform_edges(bins.get("center", 0.0), bins["width"], bins["count"])


def _quench(cfg: dict, final: dict) -> pl.QuenchSpec:
    return pl.quench_from_config(cfg, final)


def _sf_model(quench, sf_cfg: dict):
    return pl.sf_model_for(
        quench, sf_cfg.get("kind", "breit_wigner"),
        source=sf_cfg.get("source", "fit"),
        n_windows=sf_cfg.get("n_windows", 9),
        states_per_window=sf_cfg.get("states_per_window", 101),
        bin_width=sf_cfg.get("bin_width", 0.05),
        half_span=sf_cfg.get("half_span", 3.0))


class _Collector:
    def __init__(self, out_dir):
        self.out_dir = Path(out_dir)
        self.outputs: list[dict] = []
        self.panels: list[dict] = []
        self.notes: list[str] = []

    def hist(self, name, hist, meta=None):
        path = self.out_dir / name
        write_histogram_csv(path, hist, meta)
        self.outputs.append({"path": str(path), "kind": "histogram"})
        return name

    def curve(self, name, curve, meta=None):
        path = self.out_dir / name
        write_curve_csv(path, curve, meta)
        self.outputs.append({"path": str(path), "kind": "curve"})
        return name

    def fitted_curve_on(self, name, hist, fit_result, meta=None):
        """Bin-averaged fitted curve on the same edges as its histogram."""
        values, _ = bin_model(fit_result.model, fit_result.params, hist.edges)
        h = Histogram(edges=hist.edges.copy(), density=values,
                      norm=float(np.sum(values * hist.widths)))
        path = self.out_dir / name
        write_histogram_csv(path, h, meta)
        self.outputs.append({"path": str(path), "kind": "curve"})
        return name

    def model(self, name, density, sf, extra=None):
        path = self.out_dir / name
        write_model_json(path, density, sf, extra)
        self.outputs.append({"path": str(path), "kind": "model"})
        return name

    def panel(self, name, histograms=(), curves=(), models=(), annotations=None):
        self.panels.append({
            "name": name,
            "histograms": list(histograms),
            "curves": list(curves),
            "models": list(models),
            "annotations": annotations or {},
        })


def _density_panel(col, tag, params, bin_width):
    spec = pl.chain_spectrum(params)
    hist = level_density(spec.energies, bin_width=bin_width)
    model = pl.density_fit(params, bin_width)
    h_name = col.hist(f"density_{tag}.csv", hist,
                      {"dim": spec.dim, "quench": f"lambda={params.lam:g} mu={params.mu:g}"})
    c_name = col.fitted_curve_on(f"density_fit_{tag}.csv", hist, model.fit)
    return h_name, c_name, model


def run_fig1(config: dict, col: _Collector) -> None:
    chain = config["chain"]
    q_small = _quench(chain, config["small"])
    q_large = _quench(chain, config["large"])
    bw = config["density_bin_width"]

    hi, ci, model_i = _density_panel(col, "initial", q_small.initial, bw)
    hs, cs, _ = _density_panel(col, "small_final", q_small.final, bw)
    hl, cl, _ = _density_panel(col, "large_final", q_large.final, bw)
    col.panel("a", histograms=[hi, hs], curves=[ci, cs],
              annotations={"quench": q_small.label()})
    col.panel("c", histograms=[hi, hl], curves=[ci, cl],
              annotations={"quench": q_large.label()})

    for name, quench, sf_cfg, kind in (
            ("b", q_small, config["sf_small"], "lorentzian"),
            ("d", q_large, config["sf_large"], "gaussian")):
        probe = pl.mid_spectrum_sf(quench,
                                   states=sf_cfg.get("states_per_window", 101),
                                   bin_width=sf_cfg["bin_width"],
                                   half_span=sf_cfg["half_span"])
        h = col.hist(f"sf_mid_{name}.csv", probe["histogram"],
                     {"quench": quench.label(),
                      "e_center": format(probe["e_center"], ".17g")})
        c = col.fitted_curve_on(f"sf_fit_{name}.csv", probe["histogram"],
                                probe["fits"][kind])
        col.panel(name, histograms=[h], curves=[c],
                  annotations={"winner": probe["winner"],
                               "e_center": probe["e_center"]})

    sf_small_model = _sf_model(q_small, {**config["sf_small"], "kind": "breit_wigner"})
    m_e = col.model("sf_table_small.json", model_i, sf_small_model,
                    {"quench": q_small.label()})
    col.panel("e", models=[m_e], annotations={"quench": q_small.label(),
                                              "width": "Gamma"})
    sf_large_model = _sf_model(q_large, {"kind": "gaussian", "source": "moments",
                                         **config.get("sf_large_moments", {})})
    m_f = col.model("sf_table_large.json", model_i, sf_large_model,
                    {"quench": q_large.label()})
    col.panel("f", models=[m_f], annotations={"quench": q_large.label(),
                                              "width": "sigma"})


def run_fig3(config: dict, col: _Collector) -> None:
    q_small = _quench(config["small_chain"], config["final"])
    q_large = _quench(config["large_chain"], config["final"])
    col.notes.append(pl.LARGE_SECTOR_NOTE)
    erg = pl.chain_ergodicity(q_small, q_large,
                              density_bin=config["density_bin"],
                              sf_bin=config["sf_bin"],
                              sf_center=config.get("sf_center", 3.0))
    names = {"small": q_small, "large": q_large}
    for (panel_d, panel_s), (tag, quench) in zip((("a", "b"), ("c", "d")),
                                                 names.items()):
        spec = pl.chain_spectrum(quench.initial)
        hist = level_density(spec.energies, bin_width=config["density_bin"],
                             normalization="probability")
        model = pl.density_fit(quench.initial, config["density_bin"])
        h = col.hist(f"density_{tag}.csv", hist, {"dim": spec.dim})
        curve_vals = model.evaluate(hist.centers) / model.n_levels
        ch = Histogram(edges=hist.edges.copy(), density=curve_vals,
                       norm=float(np.sum(curve_vals * hist.widths)))
        c = col.hist(f"density_fit_{tag}.csv", ch)
        col.panel(panel_d, histograms=[h], curves=[c],
                  annotations={"dim": spec.dim})

        idx = np.argsort(np.abs(spec.energies - config.get("sf_center", 3.0)))[:101]
        e_sel = np.sort(spec.energies[idx])
        center = 0.5 * float(e_sel[0] + e_sel[-1])
        half = 0.5 * float(e_sel[-1] - e_sel[0]) + 1e-12
        sf_hist, n_states = pl.sf_window_histogram(
            quench, center, half, config["sf_bin"], pl._sf_span(quench))
        comparison = compare_models(sf_hist, fix_area=1.0)
        hname = col.hist(f"sf_{tag}.csv", sf_hist,
                         {"dim": spec.dim, "e_center": format(center, ".17g")})
        cname = col.fitted_curve_on(f"sf_fit_{tag}.csv", sf_hist,
                                    comparison["fits"][comparison["winner"]])
        col.panel(panel_s, histograms=[hname], curves=[cname],
                  annotations={"dim": spec.dim, "n_states": n_states})
    col.notes.append(f"rms fluctuations: {erg}")


def _smooth_figure(config: dict, col: _Collector, quench, betas, edges,
                   sf_cfg, panel_names) -> None:
    sf_model = _sf_model(quench, sf_cfg)
    density = pl.density_fit(quench.initial,
                             config.get("density_bin_width", 0.055))
    results = pl.smooth_compare(quench, betas, edges, sf_model)
    col.model("sf_model.json", density, sf_model, {"quench": quench.label()})
    for pname, res in zip(panel_names, results):
        h = col.hist(f"work_{pname}.csv", res.exact, res.meta)
        c = col.curve(f"ea_curve_{pname}.csv", res.curve,
                      {"beta": format(res.beta, ".17g")})
        col.panel(pname, histograms=[h], curves=[c],
                  annotations={"beta": res.beta,
                               "n_eff_ratio": res.n_eff_ratio,
                               "regime": res.regime,
                               "l1_distance": res.distance,
                               "quench": quench.label()})


def run_fig4(config: dict, col: _Collector) -> None:
    quench = _quench(config["chain"], config["final"])
    _smooth_figure(config, col, quench, config["betas"],
                   _edges_from(config["bins"]), config["sf"], ("a", "b", "c"))


run_fig5 = run_fig4


def run_fig6(config: dict, col: _Collector) -> None:
    q_small = _quench(config["chain"], config["final"])
    q_large = _quench(config["large_chain"], config["final"])
    col.notes.append(pl.LARGE_SECTOR_NOTE)
    edges = _edges_from(config["bins"])
    density_small = pl.density_fit(q_small.initial)
    # temperature picked so n_eff/N hits the requested ratio for the small sector
    ratio = config["beta_from_ratio"]
    beta = 1.0 / (ratio * SQRT2PI * density_small.sigma_e)
    col.notes.append(f"beta={beta:.6g} chosen for N_eff/N={ratio}")
    for pname, quench in (("a", q_large), ("b", q_small)):
        sf_model = _sf_model(quench, config["sf"])
        density = pl.density_fit(quench.initial)
        res = pl.smooth_compare(quench, [beta], edges, sf_model,
                                density=density)[0]
        h = col.hist(f"work_{pname}.csv", res.exact, res.meta)
        c = col.curve(f"ea_curve_{pname}.csv", res.curve)
        col.panel(pname, histograms=[h], curves=[c],
                  annotations={"beta": beta, "dim": pl.chain_spectrum(quench.initial).dim,
                               "n_eff_ratio": res.n_eff_ratio,
                               "l1_distance": res.distance})


def run_fig7(config: dict, col: _Collector) -> None:
    edges = _edges_from(config["bins"])
    beta = config["beta"]
    for panel in config["panels"]:
        quench = _quench(panel["chain"], panel["final"])
        sf_model = _sf_model(quench, panel["sf"])
        density = pl.density_fit(quench.initial)
        res = pl.smooth_compare(quench, [beta], edges, sf_model,
                                density=density)[0]
        pname = panel["name"]
        h = col.hist(f"work_{pname}.csv", res.exact, res.meta)
        c = col.curve(f"ea_curve_{pname}.csv", res.curve)
        col.panel(pname, histograms=[h], curves=[c],
                  annotations={"beta": beta, "quench": quench.label(),
                               "n_eff_ratio": res.n_eff_ratio,
                               "l1_distance": res.distance,
                               "sf_kind": panel["sf"]["kind"]})


RUNNERS = {"fig1": run_fig1, "fig3": run_fig3, "fig4": run_fig4,
           "fig5": run_fig5, "fig6": run_fig6, "fig7": run_fig7}


def run_figure(config: dict, out_dir) -> tuple[list[dict], list[dict], list[str]]:
    name = config["figure"]
    if name not in RUNNERS:
        raise ValueError(f"unknown figure preset {name!r}")
    col = _Collector(out_dir)
    RUNNERS[name](config, col)
    return col.outputs, col.panels, col.notes
