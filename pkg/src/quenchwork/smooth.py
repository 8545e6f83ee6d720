"""Smooth (fitted) descriptors of the spectrum and the smoothed work pdf.

The level density is modeled as a Gaussian with the exact level count;
strength functions as Breit-Wigner or Gaussian shapes whose centroid and
width vary with the initial energy through a piecewise-linear table. The
smoothed work pdf is the Boltzmann-weighted energy integral of
density * SF, evaluated by trapezoid quadrature with step-doubling until
the curve stops moving.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import FitFailure, NumericalFailure
from .fitkit import SQRT2PI, FitResult, Histogram, fit_curve
from .spectral import Spectrum
from .work_stats import sf_centroid, sf_variance, window_indices, mean_level_spacing


@dataclass
class GaussianDensityModel:
    """rho(E) = N/(sqrt(2 pi) sigma) exp(-(E - E_bar)^2 / 2 sigma^2)."""

    n_levels: int
    e_bar: float
    sigma_e: float
    fit: FitResult | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.sigma_e <= 0:
            raise ValueError("sigma_e must be positive")

    def evaluate(self, e) -> np.ndarray:
        e = np.asarray(e, dtype=float)
        z = (e - self.e_bar) / self.sigma_e
        return self.n_levels * np.exp(-0.5 * z * z) / (SQRT2PI * self.sigma_e)

    def as_dict(self) -> dict:
        out = {"N": self.n_levels, "E_bar": self.e_bar, "sigma_E": self.sigma_e}
        if self.fit is not None:
            out["fit"] = self.fit.as_dict()
        return out


def fit_density(hist: Histogram, n_levels: int | None = None) -> GaussianDensityModel:
    """Weighted least squares of the Gaussian density over a level histogram.

    The level count is pinned to the exact number of levels (the histogram
    mass), never fitted.
    """
    if int(np.count_nonzero(hist.density)) < 10:
        raise FitFailure("need at least 10 occupied bins to fit the level density")
    if n_levels is None:
        n_levels = int(round(hist.norm + hist.out_of_range))
    result = fit_curve("gaussian", hist, fix_area=float(n_levels))
    if not result.converged:
        raise FitFailure(
            f"density fit did not converge in {result.iterations} iterations "
            f"(L2 residual {result.residual_l2:.3e})")
    return GaussianDensityModel(n_levels=n_levels, e_bar=float(result.params[1]),
                                sigma_e=float(result.params[2]), fit=result)


SF_KINDS = ("breit_wigner", "gaussian")


@dataclass
class SFModel:
    """Unit-area SF shape with energy-dependent centroid and width.

    ``table`` rows are (E, centroid, width); between grid points the
    parameters interpolate linearly and clamp at the edges. The centroid is
    the first moment of the SF in the work variable (<n|H~|n> - E_n), and
    the width is Gamma for ``breit_wigner`` or the standard deviation for
    ``gaussian``.
    """

    kind: str
    table: np.ndarray
    fits: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        if self.kind not in SF_KINDS:
            raise ValueError(f"kind must be one of {SF_KINDS}")
        self.table = np.atleast_2d(np.asarray(self.table, dtype=float))
        if self.table.shape[1] != 3:
            raise ValueError("table rows must be (E, centroid, width)")
        if len(self.table) > 1 and np.any(np.diff(self.table[:, 0]) <= 0):
            raise ValueError("table energies must be strictly increasing")
        if np.any(self.table[:, 2] <= 0):
            raise ValueError("table widths must be positive")

    def centroid(self, e) -> np.ndarray:
        return np.interp(e, self.table[:, 0], self.table[:, 1])

    def width(self, e) -> np.ndarray:
        return np.interp(e, self.table[:, 0], self.table[:, 2])

    def density(self, w, e) -> np.ndarray:
        """SF(w, E) on the outer product of a w grid and an E grid."""
        w = np.atleast_1d(np.asarray(w, dtype=float))
        e = np.atleast_1d(np.asarray(e, dtype=float))
        eps = self.centroid(e)[None, :]
        wid = self.width(e)[None, :]
        x = w[:, None] - eps
        if self.kind == "gaussian":
            return np.exp(-0.5 * (x / wid) ** 2) / (SQRT2PI * wid)
        return (wid / (2.0 * np.pi)) / (x * x + 0.25 * wid * wid)

    def as_dict(self) -> dict:
        out = {"kind": self.kind, "table": self.table.tolist()}
        if self.fits:
            out["fits"] = [f.as_dict() for f in self.fits]
        return out


def fit_sf(windows, kind: str) -> SFModel:
    """Per-window least squares of the unit-area SF shape.

    ``windows`` is a list of (E_center, Histogram). Windows whose fit fails
    are skipped with a warning; at least one must survive.
    """
    if kind not in SF_KINDS:
        raise ValueError(f"kind must be one of {SF_KINDS}")
    model = "gaussian" if kind == "gaussian" else "lorentzian"
    rows, fits = [], []
    for e_center, hist in windows:
        try:
            result = fit_curve(model, hist, fix_area=1.0)
        except FitFailure as exc:
            warnings.warn(f"SF fit at E={e_center:g} failed: {exc}", stacklevel=2)
            continue
        rows.append((float(e_center), float(result.params[1]), float(result.params[2])))
        fits.append(result)
    if not rows:
        raise FitFailure("every SF window fit failed")
    rows.sort(key=lambda r: r[0])
    return SFModel(kind=kind, table=np.array(rows), fits=fits)


def sf_model_from_moments(initial: Spectrum, final_op, centers,
                          half_width: float | None = None,
                          min_states: int = 20) -> SFModel:
    """Gaussian SF table straight from the centroid/width sum rules.

    No fitting and no diagonalization of the final Hamiltonian: each window
    pools the per-state first moments and variances (mixture moments).
    """
    if half_width is None:
        half_width = 25.0 * mean_level_spacing(initial)
    rows = []
    for e_center in centers:
        idx = window_indices(initial, e_center, half_width)
        if len(idx) < min_states:
            warnings.warn(
                f"moment window at E={e_center:g} holds {len(idx)} states; skipped",
                stacklevel=2)
            continue
        eps = np.array([sf_centroid(int(n), initial, final_op) for n in idx])
        var = np.array([sf_variance(int(n), initial, final_op) for n in idx])
        mix_var = var.mean() + eps.var()
        rows.append((float(e_center), float(eps.mean()), float(np.sqrt(mix_var))))
    if not rows:
        raise FitFailure("no moment window held enough states")
    rows.sort(key=lambda r: r[0])
    return SFModel(kind="gaussian", table=np.array(rows))


@dataclass
class SmoothedCurve:
    """Smoothed work pdf sampled on a w grid."""

    w: np.ndarray
    density: np.ndarray
    beta: float
    quadrature_nodes: int

    def integral(self) -> float:
        return float(np.trapezoid(self.density, self.w))

    def cumulative(self):
        seg = 0.5 * (self.density[1:] + self.density[:-1]) * np.diff(self.w)
        return np.concatenate(([0.0], np.cumsum(seg)))

    def bin_masses(self, edges) -> np.ndarray:
        """Integrals of the curve over the given bins (zero outside the grid)."""
        cum = self.cumulative()
        c = np.interp(edges, self.w, cum, left=0.0, right=cum[-1])
        return np.diff(c)


def _tilted_weights(density: GaussianDensityModel, beta: float, e_nodes):
    # Boltzmann factor relative to the tilted-Gaussian peak, for stability
    e_peak = density.e_bar - beta * density.sigma_e ** 2
    return density.evaluate(e_nodes) * np.exp(-beta * (e_nodes - e_peak))


def smoothed_work_pdf(density: GaussianDensityModel, sf: SFModel, beta: float,
                      w_grid, *, tol: float = 1e-7, initial_nodes: int = 2001,
                      max_doublings: int = 6, chunk: int = 2048) -> SmoothedCurve:
    """P(w) = Z0^-1 integral rho(E) exp(-beta E) SF(w, E) dE on the w grid.

    The E integral runs over the support of the Boltzmann-tilted Gaussian
    (peak shifted by -beta sigma^2, +-8 sigma) and the node count doubles
    until the curve changes by less than ``tol`` in sup norm. Z0 uses the
    same quadrature, so the discretized curve is exactly normalized.
    """
    if beta < 0:
        raise ValueError("beta must be >= 0")
    w_grid = np.asarray(w_grid, dtype=float)
    e_peak = density.e_bar - beta * density.sigma_e ** 2
    lo = e_peak - 8.0 * density.sigma_e
    hi = e_peak + 8.0 * density.sigma_e

    def curve(n_nodes: int) -> np.ndarray:
        e_nodes = np.linspace(lo, hi, n_nodes)
        wts = _tilted_weights(density, beta, e_nodes)
        trap = np.full(n_nodes, (hi - lo) / (n_nodes - 1))
        trap[0] *= 0.5
        trap[-1] *= 0.5
        wq = wts * trap
        z0 = wq.sum()
        out = np.zeros_like(w_grid)
        for k0 in range(0, n_nodes, chunk):
            k1 = min(k0 + chunk, n_nodes)
            out += sf.density(w_grid, e_nodes[k0:k1]) @ wq[k0:k1]
        return out / z0

    n = initial_nodes
    prev = curve(n)
    for _ in range(max_doublings):
        n = 2 * n - 1
        nxt = curve(n)
        if np.max(np.abs(nxt - prev)) < tol:
            return SmoothedCurve(w=w_grid, density=nxt, beta=beta,
                                 quadrature_nodes=n)
        prev = nxt
    raise NumericalFailure(
        f"smoothed work pdf quadrature did not settle below {tol} "
        f"after {n} nodes")


@dataclass
class NEffResult:
    n_eff: float
    ratio: float
    regime: str


def n_eff(density: GaussianDensityModel, beta: float) -> NEffResult:
    """Effective number of thermally occupied levels, 1/(beta * mean spacing).

    The mean spacing is the inverse peak height of the Gaussian density,
    sqrt(2 pi) sigma / N. Ratio thresholds: < 0.1 low temperature, > 1 high,
    otherwise intermediate.
    """
    if beta < 0:
        raise ValueError("beta must be >= 0")
    if beta == 0:
        return NEffResult(n_eff=np.inf, ratio=np.inf, regime="high")
    s_bar = SQRT2PI * density.sigma_e / density.n_levels
    value = 1.0 / (beta * s_bar)
    ratio = value / density.n_levels
    regime = "low" if ratio < 0.1 else ("high" if ratio > 1.0 else "intermediate")
    return NEffResult(n_eff=value, ratio=ratio, regime=regime)


def pdf_distance(exact: Histogram, curve: SmoothedCurve) -> float:
    """L1 distance between an exact histogram and a smooth curve, in [0, 2].

    The curve is integrated over the exact bins and compared mass against
    mass; curve mass outside the binned range counts fully toward the
    distance (two unit-mass objects on disjoint supports are 2 apart).
    """
    p_exact = exact.masses
    p_curve = curve.bin_masses(exact.edges)
    outside = max(curve.integral() - float(p_curve.sum()), 0.0)
    return float(np.sum(np.abs(p_exact - p_curve)) + outside)
