"""Command-line entry point.

    quenchwork <subcommand> --config <path> [--out <dir>] [--seed <u64>] [--threads <n>]

Subcommands are the experiment kinds (chain-spectrum, quench, sf-scan,
smooth-compare, ensemble, reproduce-figure) plus ``validate``, which checks a
config without computing anything. Numerical modules are imported only after
the thread count is fixed, so --threads / QUENCHWORK_THREADS can still steer
the BLAS pools.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

KINDS = ("chain-spectrum", "quench", "sf-scan", "smooth-compare", "ensemble",
         "reproduce-figure")

LOCK_NAME = ".quenchwork.lock"


def _load_schema() -> dict:
    ref = resources.files("quenchwork").joinpath("schemas/runconfig.schema.json")
    return json.loads(ref.read_text())


def load_preset(name: str) -> dict:
    ref = resources.files("quenchwork").joinpath(f"presets/{name}.json")
    if not ref.is_file():
        raise ValueError(f"no preset named {name!r}")
    return json.loads(ref.read_text())


def validate_config(config: dict) -> list[str]:
    """Schema check plus the owning modules' precondition checks. Returns
    human-readable notes; raises on the first violation."""
    import jsonschema

    schema = _load_schema()
    jsonschema.validate(config, schema)
    notes = [f"kind: {config['kind']}"]

    from .hamiltonians import ChainParams
    from .pipeline import quench_from_config

    def check_chain(chain_cfg, final_cfg=None):
        quench = quench_from_config(chain_cfg, final_cfg or {})
        notes.append(f"quench ok: {quench.label()}")

    kind = config["kind"]
    if kind == "chain-spectrum":
        ChainParams(L=config["chain"]["L"], K=config["chain"]["K"],
                    parity=config["chain"].get("parity"),
                    mu=config["chain"].get("mu", 0.0),
                    lam=config["chain"].get("lambda", 0.0))
        notes.append("chain parameters ok")
    elif kind in ("quench", "sf-scan", "smooth-compare"):
        check_chain(config["chain"], config.get("final"))
    elif kind == "ensemble":
        from .ensembles import EnsembleSpec
        EnsembleSpec(**config["spec"])
        if "final_spec" in config:
            EnsembleSpec(**config["final_spec"])
        notes.append("ensemble spec ok")
    elif kind == "reproduce-figure":
        preset = config if "panels" in config or "figure" in config else None
        if preset is None:
            raise ValueError("reproduce-figure config needs a figure name")
        figure = config["figure"]
        full = load_preset(figure) if len(config) <= 3 else config
        if full.get("figure") != figure:
            raise ValueError("preset figure name mismatch")
        notes.append(f"figure preset {figure} ok")
    return notes


def _experiment_outputs(config: dict, out_dir: Path, seed: int) -> tuple[list, list, list]:
    """Run one experiment; returns (outputs, panels, notes)."""
    import numpy as np

    from . import ensembles as ens
    from . import pipeline as pl
    from .figures import run_figure
    from .fitkit import uniform_edges, weighted_histogram
    from .qio import write_curve_csv, write_histogram_csv, write_model_json
    from .spectral import level_density, spacing_stats

    kind = config["kind"]
    outputs: list[dict] = []
    panels: list[dict] = []
    notes: list[str] = []

    def emit_hist(name, hist, meta=None, kind_label="histogram"):
        path = out_dir / name
        write_histogram_csv(path, hist, meta)
        outputs.append({"path": str(path), "kind": kind_label})

    def emit_json(name, payload, kind_label="report"):
        path = out_dir / name
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        outputs.append({"path": str(path), "kind": kind_label})

    if kind == "chain-spectrum":
        from .hamiltonians import ChainParams
        c = config["chain"]
        params = ChainParams(L=c["L"], K=c["K"], parity=c.get("parity"),
                             J=c.get("J", 1.0), mu=c.get("mu", 0.0),
                             lam=c.get("lambda", 0.0))
        spec = pl.chain_spectrum(params)
        bw = config.get("density_bin_width", 0.055)
        hist = level_density(spec.energies, bin_width=bw)
        emit_hist("density.csv", hist, {"dim": spec.dim})
        model = pl.density_fit(params, bw)
        write_model_json(out_dir / "density_model.json", model, None)
        outputs.append({"path": str(out_dir / "density_model.json"), "kind": "model"})
        if config.get("spacing", True) and spec.dim >= 100:
            st = spacing_stats(spec.energies)
            emit_json("spacing.json", {"ks_poisson": st.ks_poisson,
                                       "ks_wigner": st.ks_wigner,
                                       "dim": spec.dim})
    elif kind == "quench":
        quench = pl.quench_from_config(config["chain"], config.get("final", {}))
        edges = uniform_edges(config["bins"].get("center", 0.0),
                              config["bins"]["width"], config["bins"]["count"])
        for beta in config["betas"]:
            hist, meta = pl.work_histogram(quench, beta, edges)
            emit_hist(f"work_beta_{beta:g}.csv", hist, meta)
    elif kind == "sf-scan":
        quench = pl.quench_from_config(config["chain"], config.get("final", {}))
        sf_cfg = config.get("sf", {})
        scan = pl.sf_scan(quench,
                          n_windows=sf_cfg.get("n_windows", 9),
                          states_per_window=sf_cfg.get("states_per_window", 101),
                          bin_width=sf_cfg.get("bin_width", 0.05),
                          half_span=sf_cfg.get("half_span", 3.0))
        for i, (center, hist, n_states) in enumerate(scan.windows):
            emit_hist(f"sf_window_{i:02d}.csv", hist,
                      {"e_center": format(center, ".17g"), "n_states": n_states})
        density = pl.density_fit(quench.initial)
        for kname, model in scan.fits.items():
            if model is not None:
                write_model_json(out_dir / f"sf_model_{kname}.json", density, model,
                                 {"quench": quench.label(),
                                  "residual_l2": scan.residuals[kname]})
                outputs.append({"path": str(out_dir / f"sf_model_{kname}.json"),
                                "kind": "model"})
        notes.append(f"winner: {scan.winner}")
    elif kind == "smooth-compare":
        quench = pl.quench_from_config(config["chain"], config.get("final", {}))
        edges = uniform_edges(config["bins"].get("center", 0.0),
                              config["bins"]["width"], config["bins"]["count"])
        sf_cfg = config.get("sf", {"kind": "breit_wigner"})
        sf_model = pl.sf_model_for(
            quench, sf_cfg.get("kind", "breit_wigner"),
            source=sf_cfg.get("source", "fit"),
            n_windows=sf_cfg.get("n_windows", 9),
            states_per_window=sf_cfg.get("states_per_window", 101),
            bin_width=sf_cfg.get("bin_width", 0.05),
            half_span=sf_cfg.get("half_span", 3.0))
        density = pl.density_fit(quench.initial,
                                 config.get("density_bin_width", 0.055))
        write_model_json(out_dir / "sf_model.json", density, sf_model,
                         {"quench": quench.label()})
        outputs.append({"path": str(out_dir / "sf_model.json"), "kind": "model"})
        report = []
        for res in pl.smooth_compare(quench, config["betas"], edges, sf_model,
                                     density=density):
            emit_hist(f"work_beta_{res.beta:g}.csv", res.exact, res.meta)
            write_curve_csv(out_dir / f"curve_beta_{res.beta:g}.csv", res.curve)
            outputs.append({"path": str(out_dir / f"curve_beta_{res.beta:g}.csv"),
                            "kind": "curve"})
            report.append({"beta": res.beta, "l1_distance": res.distance,
                           "n_eff_ratio": res.n_eff_ratio, "regime": res.regime})
        emit_json("compare.json", {"quench": quench.label(), "results": report})
    elif kind == "ensemble":
        spec = ens.EnsembleSpec(**{**config["spec"], "seed": seed})
        experiment = config.get("experiment", "density")
        if experiment == "density":
            draws = config.get("draws", 10)
            vals = np.concatenate([ens.sample_eigenvalues(spec, draw=d)
                                   for d in range(draws)])
            s_bar = ens.mean_spacing(spec.levels, spec.sigma, spec.beta_e)
            a = 2 * spec.levels * s_bar / np.pi
            edges = np.linspace(-1.05 * a, 1.05 * a, config.get("bins", 100) + 1)
            hist = weighted_histogram(vals, np.full(vals.shape, 1.0 / len(vals)), edges)
            emit_hist("density.csv", hist, {"draws": draws})
            curve = ens.semicircle(hist.centers, spec.levels, s_bar) / spec.levels
            from .fitkit import Histogram
            emit_hist("semicircle.csv",
                      Histogram(edges=hist.edges.copy(), density=curve,
                                norm=float(np.sum(curve * hist.widths))),
                      kind_label="curve")
        elif experiment == "work-mc":
            final = ens.EnsembleSpec(**{**config.get("final_spec", config["spec"]),
                                        "seed": seed + 1})
            beta = config.get("beta", 0.2)
            draws = config.get("draws", 50)
            s_bar = ens.mean_spacing(spec.levels, spec.sigma, spec.beta_e)
            a = 2 * spec.levels * s_bar / np.pi
            edges = np.linspace(-2.2 * a, 2.2 * a, config.get("bins", 220) + 1)
            mc = ens.monte_carlo_work_pdf(spec, final, beta, draws, edges)
            emit_hist("work_mc.csv", mc, {"beta": beta, "draws": draws})
            grid = np.linspace(edges[0], edges[-1], 4001)
            curve = ens.p_ea_ge(grid, spec, final, beta)
            write_curve_csv(out_dir / "ea_curve.csv", curve)
            outputs.append({"path": str(out_dir / "ea_curve.csv"), "kind": "curve"})
            l1 = float(np.sum(np.abs(mc.masses - curve.bin_masses(edges))))
            emit_json("report.json", {"l1_distance": l1, "beta": beta, "draws": draws})
        elif experiment == "annealing":
            final = ens.EnsembleSpec(**{**config.get("final_spec", config["spec"]),
                                        "seed": seed + 1})
            beta = config.get("beta", 0.5)
            draws = config.get("draws", 50)
            s_bar = ens.mean_spacing(spec.levels, spec.sigma, spec.beta_e)
            a = 2 * spec.levels * s_bar / np.pi
            edges = np.linspace(-2.2 * a, 2.2 * a, config.get("bins", 100) + 1)
            check = ens.annealing_check(spec, final, beta, draws, edges)
            emit_json("annealing.json", {"gap": check.gap, "beta": beta,
                                         "draws": draws})
        elif experiment == "ergodicity":
            res = ens.ergodicity_check(spec, config.get("statistic", "density"),
                                       config["dims"], config["bin_width"])
            emit_json("ergodicity.json", {"results": res})
        elif experiment == "partition":
            beta = config.get("beta", 0.1)
            draws = config.get("draws", 50)
            s_bar = ens.mean_spacing(spec.levels, spec.sigma, spec.beta_e)
            z_mc = ens.boltzmann_average_partition(spec, beta, draws)
            z_cl = ens.ea_partition(spec.levels, s_bar, 0.0, beta, spec.a_beta)
            emit_json("partition.json", {"monte_carlo": z_mc, "closed_form": z_cl,
                                         "relative_gap": abs(z_mc - z_cl) / z_cl})
        else:
            raise ValueError(f"unknown ensemble experiment {experiment!r}")
    elif kind == "reproduce-figure":
        full = config if len(config) > 3 else load_preset(config["figure"])
        outputs, panels, notes = run_figure(full, out_dir)
    else:
        raise ValueError(f"unknown kind {kind!r}")
    return outputs, panels, notes


def run_config(config: dict, out_dir: Path, seed: int) -> dict:
    from .qio import build_manifest, write_manifest

    out_dir.mkdir(parents=True, exist_ok=True)
    lock = out_dir / LOCK_NAME
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise RuntimeError(
            f"output directory {out_dir} is locked by another run "
            f"(remove {LOCK_NAME} if that run is dead)")
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        outputs, panels, notes = _experiment_outputs(config, out_dir, seed)
        manifest = build_manifest(
            config, out_dir, outputs, notes=notes,
            created=datetime.now(timezone.utc).isoformat())
        if panels:
            manifest["figure"] = {"preset": config.get("figure"), "panels": panels}
        manifest["seed"] = seed
        write_manifest(out_dir / "manifest.json", manifest)
        return manifest
    finally:
        lock.unlink(missing_ok=True)


def _set_threads(n: int | None) -> None:
    if n is None:
        env = os.environ.get("QUENCHWORK_THREADS")
        if env is None:
            return
        n = int(env)
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                "NUMEXPR_NUM_THREADS"):
        os.environ[var] = str(n)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quenchwork",
        description="Work statistics for sudden quenches in spin chains and "
                    "random-matrix ensembles")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in KINDS + ("validate",):
        p = sub.add_parser(name)
        p.add_argument("--config", required=name != "reproduce-figure",
                       help="path to a JSON run configuration")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=None)
        if name == "reproduce-figure":
            p.add_argument("--preset", default=None,
                           help="figure preset name (fig1/fig3/fig4/fig5/fig6/fig7)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _set_threads(args.threads)
    try:
        if args.subcommand == "reproduce-figure" and args.config is None:
            if args.preset is None:
                raise ValueError("pass --preset or --config")
            config = {"kind": "reproduce-figure", "figure": args.preset}
        else:
            config = json.loads(Path(args.config).read_text())
        if args.subcommand == "validate":
            notes = validate_config(config)
            print("\n".join(notes))
            print("config ok")
            return 0
        if config.get("kind") != args.subcommand:
            raise ValueError(
                f"config kind {config.get('kind')!r} does not match "
                f"subcommand {args.subcommand!r}")
        if args.subcommand == "reproduce-figure" and len(config) <= 3:
            config = {**load_preset(config["figure"]), **config}
        validate_config(config)
        manifest = run_config(config, Path(args.out), args.seed)
        print(json.dumps({"out": args.out,
                          "outputs": len(manifest["outputs"]),
                          "content_hash": manifest["content_hash"]}))
        return 0
    except Exception as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
