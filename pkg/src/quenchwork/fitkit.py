"""Histograms and damped Gauss-Newton fits of Gaussian / Breit-Wigner shapes.

Both model curves are parameterized by their area and evaluated
bin-integrated (the model averaged over each bin, via the analytic
antiderivative), which removes the bin-width bias that midpoint
evaluation picks up on coarse bins.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from .errors import FitFailure

SQRT2 = np.sqrt(2.0)
SQRT2PI = np.sqrt(2.0 * np.pi)


@dataclass
class Histogram:
    """Binned density: edges (n+1), per-bin density (n), norm = sum(density*width)."""

    edges: np.ndarray
    density: np.ndarray
    norm: float
    out_of_range: float = 0.0

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=float)
        self.density = np.asarray(self.density, dtype=float)
        if self.edges.ndim != 1 or len(self.edges) != len(self.density) + 1:
            raise ValueError("edges must have one more entry than density")
        if np.any(np.diff(self.edges) <= 0):
            raise ValueError("edges must be strictly increasing")

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def masses(self) -> np.ndarray:
        return self.density * self.widths

    def scaled(self, factor: float) -> "Histogram":
        return Histogram(self.edges.copy(), self.density * factor,
                         self.norm * factor, self.out_of_range * factor)


def weighted_histogram(values, weights, edges) -> Histogram:
    """Bin weighted atoms into a density histogram.

    Mass falling outside the edges is counted into ``out_of_range`` rather
    than silently dropped.
    """
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    edges = np.asarray(edges, dtype=float)
    if values.shape != weights.shape:
        raise ValueError("values and weights must have the same length")
    if edges.ndim != 1 or len(edges) < 2 or np.any(np.diff(edges) <= 0):
        raise ValueError("edges must be strictly increasing with >= 2 entries")
    counts, _ = np.histogram(values, bins=edges, weights=weights)
    total = float(weights.sum())
    inside = float(counts.sum())
    density = counts / np.diff(edges)
    return Histogram(edges=edges, density=density, norm=inside,
                     out_of_range=total - inside)


def uniform_edges(center: float, bin_width: float, n_bins: int) -> np.ndarray:
    if bin_width <= 0:
        raise ValueError("bin width must be positive")
    half = 0.5 * bin_width * n_bins
    return center - half + bin_width * np.arange(n_bins + 1)


# ---------------------------------------------------------------------------
# model curves, bin-integrated, with analytic Jacobians

def gaussian_cdf_terms(params, x):
    a, mu, s = params
    z = (x - mu) / (SQRT2 * s)
    prim = 0.5 * a * erf(z)
    pdf = np.exp(-z * z) / (SQRT2PI * s)
    d_a = 0.5 * erf(z)
    d_mu = -a * pdf
    d_s = -a * pdf * (x - mu) / s
    return prim, np.stack([d_a, d_mu, d_s], axis=-1)


def lorentzian_cdf_terms(params, x):
    a, eps, gamma = params
    u = 2.0 * (x - eps) / gamma
    prim = (a / np.pi) * np.arctan(u)
    denom = np.pi * gamma * (1.0 + u * u)
    d_a = np.arctan(u) / np.pi
    d_eps = -2.0 * a / denom
    d_gamma = -a * u / denom
    return prim, np.stack([d_a, d_eps, d_gamma], axis=-1)


_MODELS = {"gaussian": gaussian_cdf_terms, "lorentzian": lorentzian_cdf_terms}


def bin_model(model: str, params, edges):
    """Bin-averaged model values and Jacobian for the given bin edges."""
    terms = _MODELS[model]
    prim_l, jac_l = terms(params, edges[:-1])
    prim_r, jac_r = terms(params, edges[1:])
    w = np.diff(edges)
    values = (prim_r - prim_l) / w
    jac = (jac_r - jac_l) / w[:, None]
    return values, jac


def model_density(model: str, params, x):
    """Pointwise density of the fitted curve (for plotting / overlays)."""
    a = params[0]
    if model == "gaussian":
        _, mu, s = params
        return a * np.exp(-((x - mu) ** 2) / (2 * s * s)) / (SQRT2PI * s)
    if model == "lorentzian":
        _, eps, gamma = params
        return (a / (2 * np.pi)) * gamma / ((x - eps) ** 2 + 0.25 * gamma * gamma)
    raise ValueError(f"unknown model {model!r}")


@dataclass
class FitResult:
    model: str
    params: np.ndarray
    covariance: np.ndarray | None
    residual_l1: float
    residual_l2: float
    converged: bool
    iterations: int
    fixed: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "model": self.model,
            "params": [float(p) for p in self.params],
            "residual_l1": self.residual_l1,
            "residual_l2": self.residual_l2,
            "converged": self.converged,
            "iterations": self.iterations,
            "fixed": dict(self.fixed),
        }


def lm_least_squares(fun, p0, *, positive=(), max_iter=200, rtol=1e-9):
    """Damped Gauss-Newton (Levenberg-Marquardt) on fun(p) -> (residuals, jac).

    Converges when the relative parameter change drops below ``rtol``.
    Indices in ``positive`` are folded back to |value| after each step,
    which keeps width-like parameters meaningful.
    """
    p = np.array(p0, dtype=float)
    r, jac = fun(p)
    cost = float(r @ r)
    lam = 1e-3
    iterations = 0
    converged = False
    for iterations in range(1, max_iter + 1):
        jtj = jac.T @ jac
        jtr = jac.T @ r
        step_ok = False
        for _ in range(50):
            damped = jtj + lam * np.diag(np.clip(np.diag(jtj), 1e-30, None))
            try:
                delta = np.linalg.solve(damped, -jtr)
            except np.linalg.LinAlgError as exc:
                raise FitFailure(f"singular normal equations: {exc}") from exc
            trial = p + delta
            for idx in positive:
                trial[idx] = abs(trial[idx])
            r_new, jac_new = fun(trial)
            cost_new = float(r_new @ r_new)
            if np.isfinite(cost_new) and cost_new <= cost:
                step_ok = True
                break
            lam *= 5.0
        if not step_ok:
            break
        rel_change = np.max(np.abs(delta) / (np.abs(p) + 1e-300))
        p, r, jac, cost = trial, r_new, jac_new, cost_new
        lam = max(lam / 3.0, 1e-12)
        if rel_change < rtol:
            converged = True
            break
    jtj = jac.T @ jac
    ndata, npar = jac.shape
    cov = None
    if ndata > npar:
        try:
            cov = np.linalg.inv(jtj) * cost / (ndata - npar)
        except np.linalg.LinAlgError:
            cov = None
    return p, r, cov, converged, iterations


def _initial_guess(model: str, hist: Histogram) -> np.ndarray:
    area = hist.norm if hist.norm > 0 else 1.0
    masses = hist.masses
    centers = hist.centers
    if masses.sum() <= 0:
        raise FitFailure("empty histogram")
    mean = float(np.average(centers, weights=masses))
    if model == "gaussian":
        var = float(np.average((centers - mean) ** 2, weights=masses))
        return np.array([area, mean, max(np.sqrt(var), 1e-12)])
    # Lorentzian: the second moment diverges, so seed from the mode and the
    # half-width at half maximum instead.
    k = int(np.argmax(hist.density))
    mode = centers[k]
    half = 0.5 * hist.density[k]
    above = np.nonzero(hist.density >= half)[0]
    hwhm = 0.5 * max(centers[above[-1]] - centers[above[0]],
                     float(hist.widths[k]))
    return np.array([area, mode, 2.0 * hwhm])


def fit_curve(model: str, hist: Histogram, *, p0=None, fix_area: float | None = None,
              weights=None, max_iter: int = 200) -> FitResult:
    """Least-squares fit of ``gaussian`` or ``lorentzian`` to a histogram.

    ``fix_area`` pins the area parameter (e.g. to 1 for a normalized
    strength function, or to the level count for a level density) and fits
    only location and width.
    """
    if model not in _MODELS:
        raise ValueError(f"unknown model {model!r}")
    n_par = 3 if fix_area is None else 2
    occupied = int(np.count_nonzero(hist.density))
    if occupied < n_par + 2:
        raise FitFailure(
            f"{occupied} occupied bins; need at least {n_par + 2} to fit {n_par} parameters")
    y = hist.density
    w = np.ones_like(y) if weights is None else np.asarray(weights, dtype=float)
    sw = np.sqrt(w)
    full0 = _initial_guess(model, hist)
    if fix_area is not None:
        full0[0] = fix_area
    if p0 is not None:
        full0[3 - len(p0):] = p0

    if fix_area is None:
        def fun(p):
            vals, jac = bin_model(model, p, hist.edges)
            return sw * (vals - y), sw[:, None] * jac
        p_start, positive = full0, (2,)
    else:
        def fun(p):
            vals, jac = bin_model(model, np.concatenate(([fix_area], p)), hist.edges)
            return sw * (vals - y), sw[:, None] * jac[:, 1:]
        p_start, positive = full0[1:], (1,)

    p, r, cov, converged, iterations = lm_least_squares(
        fun, p_start, positive=positive, max_iter=max_iter)
    params = p if fix_area is None else np.concatenate(([fix_area], p))
    fixed = {} if fix_area is None else {"area": float(fix_area)}
    return FitResult(model=model, params=params, covariance=cov,
                     residual_l1=float(np.sum(np.abs(r) * hist.widths)),
                     residual_l2=float(np.sqrt(r @ r)),
                     converged=converged, iterations=iterations, fixed=fixed)


def compare_models(hist: Histogram, *, fix_area: float | None = None) -> dict:
    """Fit both shapes to one histogram and report the lower-L2 winner."""
    results = {}
    for model in ("gaussian", "lorentzian"):
        try:
            results[model] = fit_curve(model, hist, fix_area=fix_area)
        except FitFailure:
            results[model] = None
    usable = {m: r for m, r in results.items() if r is not None}
    if not usable:
        raise FitFailure("both model fits failed")
    winner = min(usable, key=lambda m: usable[m].residual_l2)
    return {"fits": results, "winner": winner}


def rms_deviation(hist: Histogram, curve_values) -> float:
    """RMS of (histogram density - reference curve) over the bins."""
    curve_values = np.asarray(curve_values, dtype=float)
    if curve_values.shape != hist.density.shape:
        raise ValueError("curve values must align with histogram bins")
    diff = hist.density - curve_values
    return float(np.sqrt(np.mean(diff * diff)))
