"""Acceptance suite: every release criterion as one test, one printed
pass/fail line each. Heavy spectra are shared through module fixtures and
the pipeline cache, so the whole module stays within its runtime budget."""

import time

import numpy as np
import pytest

from oracle_utils import oracle_spectrum, oracle_work_atoms
from quenchwork import ensembles as ens
from quenchwork import pipeline as pl
from quenchwork.fitkit import uniform_edges, weighted_histogram
from quenchwork.hamiltonians import ChainParams, SectorOperator, build_h2
from quenchwork.pipeline import QuenchSpec, chain_sector, chain_spectrum
from quenchwork.sectors import build_basis, parity_project
from quenchwork.smooth import n_eff
from quenchwork.spectral import eigh, overlap_matrix
from quenchwork.work_stats import (PointMassDistribution, exact_work_pdf,
                                   jarzynski_check, thermal_weights)

BASE = dict(L=15, K=5, parity=1)


def report(name, ok, detail):
    print(f"[ACCEPTANCE] {name}: {'PASS' if ok else 'FAIL'} ({detail})")


def quench(mu_i=0.5, lam_i=0.0, mu_f=0.5, lam_f=0.0):
    return QuenchSpec(ChainParams(mu=mu_i, lam=lam_i, **BASE),
                      ChainParams(mu=mu_f, lam=lam_f, **BASE))


@pytest.fixture(scope="module")
def density_chaotic():
    return pl.density_fit(ChainParams(mu=0.5, lam=0.7, **BASE))


@pytest.fixture(scope="module")
def fig4_results(density_chaotic):
    q = quench(lam_i=0.7, lam_f=0.9)
    sf_model = pl.sf_model_for(q, "breit_wigner", bin_width=0.02, half_span=2.0)
    edges = uniform_edges(0.0, 0.08, 1800)
    return pl.smooth_compare(q, [5, 0.5, 0.05], edges, sf_model,
                             density=density_chaotic)


@pytest.fixture(scope="module")
def fig5_results(density_chaotic):
    q = quench(lam_i=0.7, lam_f=3.2)
    sf_model = pl.sf_model_for(q, "gaussian", source="moments")
    edges = uniform_edges(0.0, 0.14, 250)
    return pl.smooth_compare(q, [20, 2, 0.005], edges, sf_model,
                             density=density_chaotic)


def test_sector_dimension():
    t0 = time.time()
    sector = parity_project(build_basis(15, 5), +1)
    dt = time.time() - t0
    ok = sector.dim == 1512 and dt < 1.0
    report("sector-dimension", ok, f"dim={sector.dim}, {dt:.3f}s")
    assert sector.dim == 1512
    assert dt < 1.0


def test_oracle_equivalence():
    t0 = time.time()
    cases = [
        (4, 2, None, (0.1, 0.0), (0.7, 0.0)),
        (5, 2, 1, (0.3, 0.2), (0.3, 0.8)),
        (6, 3, -1, (0.5, 0.1), (0.5, 0.5)),
        (6, 3, 1, (0.45, 0.3), (0.45, 1.7)),
        (6, 2, None, (0.2, 0.0), (2.4, 0.0)),
    ]
    worst_e, worst_w = 0.0, 0.0
    for L, K, parity, (mu_i, lam_i), (mu_f, lam_f) in cases:
        for mu, lam in ((mu_i, lam_i), (mu_f, lam_f)):
            params = ChainParams(L=L, K=K, parity=parity, mu=mu, lam=lam)
            sector = chain_sector(params)
            ours = eigh(build_h2(params, sector))
            theirs, _ = oracle_spectrum(L, K, parity, mu, lam)
            worst_e = max(worst_e, float(np.max(np.abs(ours.energies - theirs))))
        si = chain_spectrum(ChainParams(L=L, K=K, parity=parity, mu=mu_i, lam=lam_i))
        sf = chain_spectrum(ChainParams(L=L, K=K, parity=parity, mu=mu_f, lam=lam_f))
        ours_atoms = exact_work_pdf(si, sf, 0.7).merged(1e-7, min_weight=1e-12)
        _, _, vals, wts = oracle_work_atoms(L, K, parity, mu_i, lam_i,
                                            mu_f, lam_f, 0.7)
        theirs_atoms = PointMassDistribution(vals, wts).merged(1e-7,
                                                               min_weight=1e-12)
        assert len(ours_atoms.values) == len(theirs_atoms.values)
        worst_w = max(worst_w,
                      float(np.max(np.abs(ours_atoms.values - theirs_atoms.values))),
                      float(np.max(np.abs(ours_atoms.weights - theirs_atoms.weights))))
    dt = time.time() - t0
    ok = worst_e < 1e-9 and worst_w < 1e-9 and dt < 30
    report("oracle-equivalence", ok,
           f"max eigenvalue err {worst_e:.2e}, max atom err {worst_w:.2e}, {dt:.1f}s")
    assert ok


SUM_RULE_QUENCHES = [
    ("model2 0.7->0.9", dict(lam_i=0.7, lam_f=0.9)),
    ("model2 0.7->3.2", dict(lam_i=0.7, lam_f=3.2)),
    ("model2 0.1->0.3", dict(lam_i=0.1, lam_f=0.3)),
    ("model1 0.1->0.5", dict(mu_i=0.1, mu_f=0.5)),
    ("model1 0.1->2.4", dict(mu_i=0.1, mu_f=2.4)),
]


def test_sum_rules_and_jarzynski():
    t0 = time.time()
    betas = (0.05, 0.5, 2, 5, 20)
    worst = {"sf_norm": 0.0, "mass": 0.0, "centroid": 0.0, "variance": 0.0,
             "jarzynski": 0.0}
    for _, kw in SUM_RULE_QUENCHES:
        q = quench(**kw)
        si = chain_spectrum(q.initial)
        sf = chain_spectrum(q.final)
        o = overlap_matrix(si, sf)
        w2 = o * o
        worst["sf_norm"] = max(worst["sf_norm"],
                               float(np.max(np.abs(w2.sum(axis=0) - 1.0))))
        op = SectorOperator(q.final, chain_sector(q.final))
        hv = op.apply(si.vectors)
        first = np.einsum("in,in->n", si.vectors, hv)
        second = np.einsum("in,in->n", hv, hv)
        eps_rule = first - si.energies
        var_rule = second - first ** 2
        # SF moments straight from the atoms
        mean_f = w2.T @ sf.energies
        eps_sf = mean_f - si.energies
        var_sf = w2.T @ (sf.energies ** 2) - mean_f ** 2
        worst["centroid"] = max(worst["centroid"],
                                float(np.max(np.abs(eps_rule - eps_sf))))
        worst["variance"] = max(worst["variance"],
                                float(np.max(np.abs(var_rule - var_sf))))
        for beta in betas:
            tw = thermal_weights(si, beta)
            mass = float((w2 * tw.weights[None, :]).sum())
            worst["mass"] = max(worst["mass"], abs(mass - 1.0))
            worst["jarzynski"] = max(worst["jarzynski"],
                                     jarzynski_check(si, sf, beta).gap)
    dt = time.time() - t0
    ok = (worst["sf_norm"] < 1e-8 and worst["mass"] < 1e-10
          and worst["centroid"] < 1e-8 and worst["variance"] < 1e-8
          and worst["jarzynski"] < 1e-9)
    report("sum-rules", ok,
           ", ".join(f"{k}={v:.2e}" for k, v in worst.items()) + f", {dt:.0f}s")
    assert worst["sf_norm"] < 1e-8
    assert worst["mass"] < 1e-10
    assert worst["centroid"] < 1e-8
    assert worst["variance"] < 1e-8
    assert worst["jarzynski"] < 1e-9


def test_shape_transition():
    t0 = time.time()
    small = pl.mid_spectrum_sf(quench(lam_i=0.7, lam_f=0.9),
                               bin_width=0.02, half_span=2.0)
    large = pl.mid_spectrum_sf(quench(lam_i=0.7, lam_f=3.2),
                               bin_width=0.097, half_span=6.0)
    bw_small = small["fits"]["lorentzian"].residual_l2
    g_small = small["fits"]["gaussian"].residual_l2
    bw_large = large["fits"]["lorentzian"].residual_l2
    g_large = large["fits"]["gaussian"].residual_l2
    dt = time.time() - t0
    ok = bw_small < g_small and g_large < bw_large
    report("shape-transition", ok,
           f"small: BW {bw_small:.3f} vs G {g_small:.3f}; "
           f"large: G {g_large:.3f} vs BW {bw_large:.3f}; {dt:.0f}s")
    assert bw_small < g_small
    assert g_large < bw_large


def test_temperature_ordering(fig4_results, fig5_results):
    d4 = [r.distance for r in fig4_results]
    d5 = [r.distance for r in fig5_results]
    ok = (d4[0] > d4[1] > d4[2] and d5[0] > d5[1] > d5[2]
          and d4[2] < 0.15 and d5[2] < 0.15)
    report("temperature-ordering", ok,
           f"small quench L1 {d4[0]:.3f} > {d4[1]:.3f} > {d4[2]:.3f}; "
           f"large quench L1 {d5[0]:.3f} > {d5[1]:.3f} > {d5[2]:.3f}")
    assert d4[0] > d4[1] > d4[2]
    assert d5[0] > d5[1] > d5[2]
    assert d4[2] < 0.15
    assert d5[2] < 0.15


def test_n_eff_ratios(density_chaotic):
    expected = {5: 0.066, 0.5: 0.66, 0.05: 6.6, 20: 0.0165, 2: 0.165, 0.005: 66}
    rows = []
    ok = True
    for beta, target in expected.items():
        ratio = n_eff(density_chaotic, beta).ratio
        rel = ratio / target - 1.0
        rows.append(f"beta={beta}: {ratio:.4f} vs {target} ({rel:+.1%})")
        ok = ok and abs(rel) <= 0.15
    report("n-eff-ratios", ok, "; ".join(rows))
    assert ok, ("fitted-sigma N_eff/N ratios deviate from the reported "
                "captions beyond 15%: " + "; ".join(rows))


FIG7_CASES = [
    ("model1 0.1->0.5 BW", dict(mu_i=0.1, mu_f=0.5), "breit_wigner", "fit"),
    ("model1 0.1->2.4 G", dict(mu_i=0.1, mu_f=2.4), "gaussian", "moments"),
    ("model2 0.1->0.3 BW", dict(lam_i=0.1, lam_f=0.3), "breit_wigner", "fit"),
]


def test_integrable_model_agreement():
    t0 = time.time()
    edges = uniform_edges(0.0, 0.02, 800)
    rows = []
    ok = True
    for label, kw, kind, source in FIG7_CASES:
        q = quench(**kw)
        sf_model = pl.sf_model_for(q, kind, source=source,
                                   bin_width=0.02, half_span=2.0)
        res = pl.smooth_compare(q, [0.05], edges, sf_model)[0]
        rows.append(f"{label}: L1={res.distance:.3f} (ratio {res.n_eff_ratio:.1f})")
        ok = ok and res.distance < 0.15
    dt = time.time() - t0
    report("integrable-agreement", ok, "; ".join(rows) + f"; {dt:.0f}s")
    assert ok, ("smoothed description misses the 0.15 L1 cap on: "
                + "; ".join(rows))


def test_ergodicity():
    t0 = time.time()
    small = QuenchSpec(ChainParams(mu=0.5, lam=0.7, **BASE),
                       ChainParams(mu=0.5, lam=3.2, **BASE))
    kw16 = dict(L=16, K=6, parity=1)
    large = QuenchSpec(ChainParams(mu=0.5, lam=0.7, **kw16),
                       ChainParams(mu=0.5, lam=3.2, **kw16))
    erg = pl.chain_ergodicity(small, large, density_bin=0.055, sf_bin=0.097,
                              sf_center=3.0)
    dt = time.time() - t0
    d_small, d_large = (erg["density"][0]["rms"], erg["density"][1]["rms"])
    s_small, s_large = (erg["sf"][0]["rms"], erg["sf"][1]["rms"])
    ok = d_large < d_small and s_large < s_small and dt < 1800
    report("ergodicity", ok,
           f"density rms {d_small:.4f} -> {d_large:.4f}; "
           f"sf rms {s_small:.4f} -> {s_large:.4f}; dims 1512 -> 4032; {dt:.0f}s")
    assert d_large < d_small
    assert s_large < s_small


def test_appendix_b():
    t0 = time.time()
    # (i) pooled eigenvalue histogram of 10 GOE draws against the semicircle
    spec1000 = ens.EnsembleSpec(kind="goe", dim=1000, sigma=1.0, seed=42)
    s_bar = ens.mean_spacing(1000, 1.0, 1)
    a = 2 * 1000 * s_bar / np.pi
    vals = np.concatenate([ens.sample_eigenvalues(spec1000, draw=d)
                           for d in range(10)])
    edges = np.linspace(-1.05 * a, 1.05 * a, 101)
    hist = weighted_histogram(vals, np.full(vals.shape, 1.0 / len(vals)), edges)
    curve = ens.semicircle(hist.centers, 1000, s_bar) / 1000
    l1_density = float(np.sum(np.abs(hist.masses - curve * hist.widths)))

    # (ii) closed-form partition function against direct quadrature
    from scipy.integrate import quad
    rel_partition = 0.0
    for beta in (0.05, 0.2, 1.0):
        z = ens.ea_partition(1000, s_bar, 0.0, beta, 1)
        zq, _ = quad(lambda e: np.exp(-beta * e)
                     * float(ens.semicircle(np.array([e]), 1000, s_bar)[0]),
                     -a, a, limit=400)
        rel_partition = max(rel_partition, abs(z - zq) / zq)

    # (iii) EA work pdf against the Monte-Carlo running average
    spec300 = ens.EnsembleSpec(kind="goe", dim=300, sigma=1.0, seed=11)
    a300 = 2 * 300 * ens.mean_spacing(300, 1.0, 1) / np.pi
    edges_w = np.linspace(-2.2 * a300, 2.2 * a300, 221)
    mc = ens.monte_carlo_work_pdf(spec300, spec300, 0.2, 50, edges_w)
    grid = np.linspace(edges_w[0], edges_w[-1], 4001)
    curve6 = ens.p_ea_ge(grid, spec300, spec300, 0.2)
    l1_work = float(np.sum(np.abs(mc.masses - curve6.bin_masses(edges_w))))

    # (iv) annealing gap shrinks with dimension
    gaps = []
    for n in (50, 100, 300):
        sp = ens.EnsembleSpec(kind="goe", dim=n, sigma=1.0, seed=3)
        an = 2 * n * ens.mean_spacing(n, 1.0, 1) / np.pi
        e = np.linspace(-2.2 * an, 2.2 * an, 101)
        gaps.append(ens.annealing_check(sp, sp, 0.5, 50, e).gap)

    dt = time.time() - t0
    ok = (l1_density < 0.05 and rel_partition < 1e-8 and l1_work < 0.08
          and gaps[0] > gaps[1] > gaps[2] and dt < 1200)
    report("appendix-b", ok,
           f"semicircle L1={l1_density:.4f}, partition rel={rel_partition:.1e}, "
           f"work L1={l1_work:.4f}, annealing gaps={[f'{g:.4f}' for g in gaps]}, "
           f"{dt:.0f}s")
    assert l1_density < 0.05
    assert rel_partition < 1e-8
    assert l1_work < 0.08
    assert gaps[0] > gaps[1] > gaps[2]


def test_low_temperature_failure(fig4_results):
    cold = fig4_results[0].distance
    hot = fig4_results[2].distance
    ok = cold >= 2.0 * hot
    report("low-temperature-failure", ok,
           f"L1(beta=5)={cold:.3f} vs 2*L1(beta=0.05)={2 * hot:.3f}")
    assert cold >= 2.0 * hot
