"""Gaussian random-matrix ensembles, the embedded two-body ensemble, and
their large-N work-statistics formulas.

Entry scaling follows the convention H = (A + A^T)/2 with iid N(0, sigma^2)
entries of A (diagonal variance sigma^2, off-diagonal sigma^2/2), which is
the unique choice consistent with the mean-spacing formula
s = pi sigma sqrt(beta_e / 2N) and the semicircle radius a = 2 N s / pi
used throughout. A ``textbook`` flag switches to the diag 2 sigma^2 /
off-diag sigma^2 convention for cross-checks.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from itertools import combinations
from math import comb

import numpy as np
from scipy.special import i1e

from .fitkit import Histogram, weighted_histogram
from .smooth import SmoothedCurve
from .spectral import eigh
from .work_stats import exact_work_pdf, smoothed_sf_histogram

GAUSSIAN_KINDS = ("goe", "gue", "gse")
BETA_E = {"goe": 1, "gue": 2, "gse": 4}
A_BETA = {"goe": 1, "gue": 1, "gse": 2}


@dataclass(frozen=True)
class EnsembleSpec:
    """Which ensemble to draw from, at what size and scale, and its seed."""

    kind: str
    dim: int | None = None
    m: int | None = None
    n: int | None = None
    lam: float = 1.0
    sigma: float = 1.0
    seed: int = 0
    convention: str = "paper"
    randomize_sp: bool = False

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.convention not in ("paper", "textbook"):
            raise ValueError("convention must be 'paper' or 'textbook'")
        if self.kind in GAUSSIAN_KINDS:
            if self.dim is None or self.dim < 2:
                raise ValueError(f"{self.kind} needs dim >= 2")
        elif self.kind == "egoe12":
            if self.m is None or self.n is None or not (2 <= self.n <= self.m):
                raise ValueError("egoe12 needs orbitals m and particles n with 2 <= n <= m")
        else:
            raise ValueError(f"unknown ensemble kind {self.kind!r}")

    @property
    def levels(self) -> int:
        """Number of distinct physical levels per draw."""
        if self.kind == "egoe12":
            return comb(self.m, self.n)
        return self.dim

    @property
    def beta_e(self) -> int:
        return BETA_E.get(self.kind, 1)

    @property
    def a_beta(self) -> int:
        return A_BETA.get(self.kind, 1)

    def rng(self, draw: int = 0) -> np.random.Generator:
        # substream per (seed, draw): draws are order-independent
        return np.random.default_rng([self.seed, draw])

    def as_dict(self) -> dict:
        out = {"kind": self.kind, "sigma": self.sigma, "seed": self.seed,
               "convention": self.convention}
        if self.kind == "egoe12":
            out.update(m=self.m, n=self.n, lam=self.lam,
                       randomize_sp=self.randomize_sp)
        else:
            out["dim"] = self.dim
        return out


def _goe_matrix(rng, dim, sigma, convention):
    a = rng.normal(0.0, sigma, (dim, dim))
    if convention == "textbook":
        return (a + a.T) / np.sqrt(2.0)
    return 0.5 * (a + a.T)


def _gue_matrix(rng, dim, sigma):
    a = rng.normal(0.0, sigma, (dim, dim)) + 1j * rng.normal(0.0, sigma, (dim, dim))
    return 0.5 * (a + a.conj().T)


def _gse_complex(rng, dim, sigma):
    c = _gue_matrix(rng, dim, sigma)
    b = rng.normal(0.0, sigma, (dim, dim)) + 1j * rng.normal(0.0, sigma, (dim, dim))
    d = 0.5 * (b - b.T)
    top = np.concatenate([c, d], axis=1)
    bottom = np.concatenate([-d.conj(), c.conj()], axis=1)
    return np.concatenate([top, bottom], axis=0)


def _real_embedding(h: np.ndarray) -> np.ndarray:
    x, y = h.real, h.imag
    top = np.concatenate([x, -y], axis=1)
    bottom = np.concatenate([y, x], axis=1)
    return np.concatenate([top, bottom], axis=0)


def _fermion_phase(state: int, site: int) -> int:
    below = bin(state & ((1 << site) - 1)).count("1")
    return -1 if below & 1 else 1


def single_particle_energies(m: int) -> np.ndarray:
    """Weakly nonuniform deterministic ladder for the one-body part."""
    i = np.arange(1, m + 1, dtype=float)
    return i + i * i / m


def egoe12_matrix(spec: EnsembleSpec, draw: int = 0) -> np.ndarray:
    """One-body ladder plus lambda times a two-body GOE embedded by
    second quantization from the pair space into the n-particle space."""
    rng = spec.rng(draw)
    m = spec.m
    eps = single_particle_energies(m)
    if spec.randomize_sp:
        eps = eps + rng.normal(0.0, spec.sigma, m)
    v2 = _goe_matrix(rng, comb(m, 2), spec.sigma, spec.convention)
    return embed_two_body(m, spec.n, eps, v2, spec.lam)


def embed_two_body(m: int, n: int, eps: np.ndarray, v2: np.ndarray,
                   lam: float) -> np.ndarray:
    """Assemble H' + lam*V on the n-particle sector from pair amplitudes.

    ``v2`` is indexed by ordered pairs (i < j) in lexicographic order; the
    fermionic phases follow the convention that orbital 0 is the least
    significant bit.
    """
    pairs = list(combinations(range(m), 2))
    pair_index = {p: k for k, p in enumerate(pairs)}
    if v2.shape != (len(pairs), len(pairs)):
        raise ValueError("pair amplitude matrix has the wrong shape")

    states = sorted(sum(1 << i for i in occ) for occ in combinations(range(m), n))
    index = {s: k for k, s in enumerate(states)}
    dim = len(states)
    h = np.zeros((dim, dim))
    for col, s in enumerate(states):
        occ = [i for i in range(m) if s >> i & 1]
        h[col, col] += eps[occ].sum()
        for (k, l) in combinations(occ, 2):
            s1 = s & ~(1 << k)
            sign = _fermion_phase(s, k)
            sign *= _fermion_phase(s1, l)
            s1 &= ~(1 << l)
            row_v = pair_index[(k, l)]
            free = [i for i in range(m) if not (s1 >> i & 1)]
            for (i, j) in combinations(free, 2):
                s2 = s1 | (1 << j)
                sign2 = _fermion_phase(s1, j)
                sign2 *= _fermion_phase(s2, i)
                t = s2 | (1 << i)
                h[index[t], col] += lam * sign * sign2 * v2[pair_index[(i, j)], row_v]
    # the embedding is symmetric up to rounding; make it exact
    return 0.5 * (h + h.T)


def sample(spec: EnsembleSpec, draw: int = 0) -> np.ndarray:
    """Draw one real symmetric matrix.

    GUE and GSE come back as their real-symmetric embeddings (dimension 2N
    and 4N), whose spectra repeat each physical level 2 and 4 times; use
    :func:`sample_eigenvalues` for the physical levels.
    """
    rng = spec.rng(draw)
    if spec.kind == "goe":
        return _goe_matrix(rng, spec.dim, spec.sigma, spec.convention)
    if spec.kind == "gue":
        return _real_embedding(_gue_matrix(rng, spec.dim, spec.sigma))
    if spec.kind == "gse":
        return _real_embedding(_gse_complex(rng, spec.dim, spec.sigma))
    return egoe12_matrix(spec, draw)


def sample_eigenvalues(spec: EnsembleSpec, draw: int = 0) -> np.ndarray:
    """Physical eigenvalues of one draw (GSE Kramers pairs reported once)."""
    rng = spec.rng(draw)
    if spec.kind == "goe":
        return np.linalg.eigvalsh(_goe_matrix(rng, spec.dim, spec.sigma, spec.convention))
    if spec.kind == "gue":
        return np.linalg.eigvalsh(_gue_matrix(rng, spec.dim, spec.sigma))
    if spec.kind == "gse":
        w = np.linalg.eigvalsh(_gse_complex(rng, spec.dim, spec.sigma))
        return w[::2]
    return np.linalg.eigvalsh(egoe12_matrix(spec, draw))


@dataclass
class EnsembleStats:
    """Running (draw-averaged) histograms for one ensemble.

    Densities are merged in draw order, so parallel producers that feed
    results back sorted by draw index reproduce the serial accumulation
    bit for bit. The beta_e/a_beta pairing is fixed by the spec kind:
    a=1 for the orthogonal and unitary ensembles, a=2 for the symplectic
    one (Kramers degeneracy).
    """

    spec: EnsembleSpec
    draws: int = 0
    histograms: dict = None

    def __post_init__(self):
        if self.histograms is None:
            self.histograms = {}

    @property
    def beta_e(self) -> int:
        return self.spec.beta_e

    @property
    def a_beta(self) -> int:
        return self.spec.a_beta

    def add(self, name: str, hist: Histogram) -> None:
        """Fold one draw's histogram into the running average for ``name``."""
        prev = self.histograms.get(name)
        if prev is None:
            self.histograms[name] = Histogram(
                edges=hist.edges.copy(), density=hist.density.copy(),
                norm=hist.norm, out_of_range=hist.out_of_range)
            return
        if not np.array_equal(prev.edges, hist.edges):
            raise ValueError(f"histogram {name!r} changed binning between draws")
        n = self.draws
        prev.density = (prev.density * n + hist.density) / (n + 1)
        prev.norm = (prev.norm * n + hist.norm) / (n + 1)
        prev.out_of_range = (prev.out_of_range * n + hist.out_of_range) / (n + 1)

    def advance(self) -> None:
        self.draws += 1


def mean_spacing(n: int, sigma: float, beta_e: int) -> float:
    """Central level spacing of an N-level Gaussian ensemble."""
    if sigma <= 0 or n < 1:
        raise ValueError("need sigma > 0 and n >= 1")
    return float(np.pi * sigma * np.sqrt(beta_e / (2.0 * n)))


def semicircle(e, n_levels: int, s_bar: float, e_bar: float = 0.0) -> np.ndarray:
    """Semicircle level density with radius a = 2 N s / pi, area N."""
    if s_bar <= 0:
        raise ValueError("s_bar must be positive")
    e = np.asarray(e, dtype=float)
    a = 2.0 * n_levels * s_bar / np.pi
    x = (e - e_bar) / a
    out = np.zeros_like(x)
    inside = np.abs(x) <= 1.0
    out[inside] = (2.0 * n_levels / (np.pi * a)) * np.sqrt(1.0 - x[inside] ** 2)
    return out


def ea_partition(n_levels: int, s_bar: float, e_bar: float, beta: float,
                 a_beta: int) -> float:
    """Large-N partition function of a Gaussian ensemble.

    2 a e^{-beta E_bar} I_1(2 N s beta / pi) / (2 s beta / pi), evaluated
    through the scaled Bessel function so large arguments stay finite.
    """
    if beta < 0:
        raise ValueError("beta must be >= 0")
    if beta == 0.0:
        return float(a_beta * n_levels)
    x = 2.0 * n_levels * s_bar * beta / np.pi
    log_z = (np.log(2.0 * a_beta * n_levels) - beta * e_bar + x
             + np.log(i1e(x) / x))
    return float(np.exp(log_z))


def p_ea_ge(w_grid, spec_initial: EnsembleSpec, spec_final: EnsembleSpec,
            beta: float, e_bar_initial: float = 0.0, e_bar_final: float = 0.0,
            n_nodes: int = 20001, chunk: int = 256) -> SmoothedCurve:
    """Ensemble-average work pdf of a Gaussian-ensemble quench.

    Thermal average of the cross-correlation of the two semicircle
    densities, normalized by the large-N partition function.
    """
    for s in (spec_initial, spec_final):
        if s.kind not in GAUSSIAN_KINDS:
            raise ValueError("p_ea_ge needs Gaussian-ensemble specs")
    w_grid = np.asarray(w_grid, dtype=float)
    n = spec_initial.levels
    s_i = mean_spacing(n, spec_initial.sigma, spec_initial.beta_e)
    s_f = mean_spacing(spec_final.levels, spec_final.sigma, spec_final.beta_e)
    a_i = 2.0 * n * s_i / np.pi
    z0 = ea_partition(n, s_i, e_bar_initial, beta, spec_initial.a_beta)
    e_nodes = np.linspace(e_bar_initial - a_i, e_bar_initial + a_i, n_nodes)
    rho_i = semicircle(e_nodes, n, s_i, e_bar_initial)
    boltz = rho_i * np.exp(-beta * e_nodes)
    trap = np.full(n_nodes, (e_nodes[-1] - e_nodes[0]) / (n_nodes - 1))
    trap[0] *= 0.5
    trap[-1] *= 0.5
    wq = boltz * trap
    density = np.empty_like(w_grid)
    pref = spec_initial.a_beta / (n * z0)
    for k0 in range(0, len(w_grid), chunk):
        k1 = min(k0 + chunk, len(w_grid))
        rho_f = semicircle(w_grid[k0:k1, None] + e_nodes[None, :],
                           spec_final.levels, s_f, e_bar_final)
        density[k0:k1] = pref * (rho_f @ wq)
    if not np.any(density > 0):
        import warnings
        warnings.warn("ensemble supports do not overlap; curve is zero", stacklevel=2)
    return SmoothedCurve(w=w_grid, density=density, beta=beta,
                         quadrature_nodes=n_nodes)


def monte_carlo_work_pdf(spec_initial: EnsembleSpec, spec_final: EnsembleSpec,
                         beta: float, draws: int, edges) -> Histogram:
    """Running average over draw-pairs of the exact per-draw work pdf."""
    edges = np.asarray(edges, dtype=float)
    stats = EnsembleStats(spec=spec_initial)
    for d in range(draws):
        hi = sample(spec_initial, draw=2 * d)
        hf = sample(spec_final, draw=2 * d + 1)
        si = eigh(hi, check=False)
        sf = eigh(hf, check=False)
        stats.add("work_pdf", exact_work_pdf(si, sf, beta).histogram(edges))
        stats.advance()
    return stats.histograms["work_pdf"]


@dataclass
class AnnealingCheck:
    edges: np.ndarray
    ratio_of_averages: np.ndarray
    average_of_ratios: np.ndarray
    gap: float


def annealing_check(spec_initial: EnsembleSpec, spec_final: EnsembleSpec,
                    beta: float, draws: int, edges) -> AnnealingCheck:
    """Ratio of ensemble averages vs ensemble average of ratios.

    The annealing step replaces <numerator/Z0> by <numerator>/<Z0>; the L1
    gap between the two binned curves measures how good that is at this
    dimension.
    """
    if draws < 10:
        raise ValueError("need at least 10 draws")
    edges = np.asarray(edges, dtype=float)
    widths = np.diff(edges)
    num_sum = np.zeros(len(widths))
    ratio_sum = np.zeros(len(widths))
    z0_sum = 0.0
    for d in range(draws):
        hi = sample(spec_initial, draw=2 * d)
        hf = sample(spec_final, draw=2 * d + 1)
        si = eigh(hi, check=False)
        sf = eigh(hf, check=False)
        o = sf.vectors.T @ si.vectors
        boltz = np.exp(-beta * si.energies)
        w2 = (o * o) * boltz[None, :]
        vals = sf.energies[:, None] - si.energies[None, :]
        counts, _ = np.histogram(vals.ravel(), bins=edges, weights=w2.ravel())
        z0 = float(boltz.sum())
        num_sum += counts
        ratio_sum += counts / z0
        z0_sum += z0
    ratio_of_averages = (num_sum / z0_sum) / widths
    average_of_ratios = (ratio_sum / draws) / widths
    gap = float(np.sum(np.abs(ratio_of_averages - average_of_ratios) * widths))
    return AnnealingCheck(edges=edges, ratio_of_averages=ratio_of_averages,
                          average_of_ratios=average_of_ratios, gap=gap)


def ergodicity_check(spec: EnsembleSpec, statistic: str, dims,
                     bin_width: float, window_spacings: float = 25.0) -> list[dict]:
    """Per-dimension RMS of a single-draw histogram around the EA curve.

    Histograms are probability-normalized and the bin width is held fixed
    across dimensions, so shrinking RMS is the ergodicity signature.
    """
    if statistic not in ("density", "sf"):
        raise ValueError("statistic must be 'density' or 'sf'")
    if len(dims) < 1:
        raise ValueError("need at least one dimension")
    if spec.kind not in GAUSSIAN_KINDS:
        raise ValueError("ergodicity_check here covers the Gaussian kinds; "
                         "chain sectors are handled by the pipeline layer")
    results = []
    for d in dims:
        spec_d = replace(spec, dim=int(d))
        n = spec_d.levels
        s_bar = mean_spacing(n, spec_d.sigma, spec_d.beta_e)
        a = 2.0 * n * s_bar / np.pi
        if statistic == "density":
            e = sample_eigenvalues(spec_d, draw=0)
            n_bins = int(np.ceil(2.0 * a / bin_width))
            edges = -a + bin_width * np.arange(n_bins + 1)
            hist = weighted_histogram(e, np.full(e.shape, 1.0 / len(e)), edges)
            curve = semicircle(hist.centers, n, s_bar) / n
        else:
            hi = sample(spec_d, draw=0)
            hf = sample(spec_d, draw=1)
            si = eigh(hi, check=False)
            sf_spec = eigh(hf, check=False)
            half = window_spacings * s_bar
            n_bins = int(np.ceil(2.2 * a / bin_width))
            edges = -1.1 * a + bin_width * np.arange(n_bins + 1)
            hist, _ = smoothed_sf_histogram(si, sf_spec, e_center=0.0,
                                            edges=edges, half_width=half)
            curve = semicircle(hist.centers, n, s_bar) / n
        diff = hist.density - curve
        results.append({"dim": int(d), "rms": float(np.sqrt(np.mean(diff * diff)))})
    return results


def boltzmann_average_partition(spec: EnsembleSpec, beta: float,
                                draws: int) -> float:
    """Monte-Carlo <Z0> for checking the closed-form EA partition function."""
    total = 0.0
    for d in range(draws):
        e = sample_eigenvalues(spec, draw=d)
        tw = np.exp(-beta * e).sum()
        total += spec.a_beta * tw
    return total / draws
