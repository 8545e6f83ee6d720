"""Exact two-point-measurement work statistics for a sudden quench.

The work variable is w = E_final(m) - E_initial(n), weighted by the
thermal occupation of n and the squared overlap between the two
eigenbases. Everything Boltzmann-weighted is evaluated with a
ground-energy shift plus log-sum-exp so that large inverse temperatures
stay finite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import NumericalFailure
from .fitkit import Histogram, weighted_histogram
from .spectral import Spectrum, overlap_matrix

ATOM_STORAGE_LIMIT = 2000  # above this dim, work pdfs stream into bins


@dataclass
class ThermalWeights:
    """Normalized Boltzmann weights over the initial eigenstates.

    ``log_z0`` is log sum(exp(-beta*(E - e_ref))) with ``e_ref`` the ground
    energy, so the unshifted log partition function is
    ``log_z0 - beta * e_ref``.
    """

    beta: float
    weights: np.ndarray
    log_z0: float
    e_ref: float

    @property
    def log_z0_unshifted(self) -> float:
        return self.log_z0 - self.beta * self.e_ref


def thermal_weights(spectrum: Spectrum, beta: float) -> ThermalWeights:
    if not (beta >= 0 and np.isfinite(beta)):
        raise ValueError("beta must be finite and >= 0")
    e = spectrum.energies
    e_ref = float(e[0])
    logits = -beta * (e - e_ref)
    log_z0 = float(logsumexp(logits))
    w = np.exp(logits - log_z0)
    return ThermalWeights(beta=beta, weights=w, log_z0=log_z0, e_ref=e_ref)


@dataclass
class PointMassDistribution:
    """Discrete distribution as parallel (value, weight) arrays."""

    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.values.shape != self.weights.shape:
            raise ValueError("values and weights must match in length")
        if np.any(self.weights < -1e-12):
            raise ValueError("negative weight")

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    def mean(self) -> float:
        return float(self.values @ self.weights / self.total)

    def variance(self) -> float:
        m = self.mean()
        return float(((self.values - m) ** 2) @ self.weights / self.total)

    def histogram(self, edges) -> Histogram:
        return weighted_histogram(self.values, self.weights, edges)

    def sorted(self) -> "PointMassDistribution":
        order = np.argsort(self.values, kind="stable")
        return PointMassDistribution(self.values[order], self.weights[order])

    def merged(self, tol: float = 1e-7,
               min_weight: float = 1e-14) -> "PointMassDistribution":
        """Aggregate atoms whose values coincide within ``tol``.

        Degenerate transitions carry basis-dependent individual weights;
        only the merged masses are comparable across implementations.
        Clusters lighter than ``min_weight`` of the total (numerically
        forbidden transitions) are dropped.
        """
        s = self.sorted()
        if len(s.values) == 0:
            return s
        breaks = np.nonzero(np.diff(s.values) > tol)[0] + 1
        groups = np.split(np.arange(len(s.values)), breaks)
        vals = np.empty(len(groups))
        wts = np.empty(len(groups))
        for g, idx in enumerate(groups):
            wsum = s.weights[idx].sum()
            vals[g] = (s.values[idx] @ s.weights[idx] / wsum
                       if wsum > 0 else s.values[idx].mean())
            wts[g] = wsum
        keep = wts >= min_weight * max(wts.sum(), 1e-300)
        return PointMassDistribution(vals[keep], wts[keep])


def exact_work_pdf(initial: Spectrum, final: Spectrum,
                   beta: float) -> PointMassDistribution:
    """All dim^2 work atoms w_nm = E~_m - E_n with weights p_n |O_mn|^2."""
    if initial.dim != final.dim:
        raise ValueError("spectra live in different sector dimensions")
    if initial.dim > ATOM_STORAGE_LIMIT:
        raise ValueError(
            f"dim {initial.dim} > {ATOM_STORAGE_LIMIT}: use exact_work_pdf_histogram")
    tw = thermal_weights(initial, beta)
    o = overlap_matrix(initial, final)
    weights = (o * o) * tw.weights[None, :]
    values = final.energies[:, None] - initial.energies[None, :]
    return PointMassDistribution(values.ravel(), weights.ravel())


def exact_work_pdf_histogram(initial: Spectrum, final: Spectrum, beta: float,
                             edges, block: int = 256) -> Histogram:
    """Work pdf accumulated straight into bins, never storing the atom list.

    Streams over columns of the overlap matrix so memory stays
    O(dim * block); the result is identical to histogramming the atoms.
    """
    if initial.dim != final.dim:
        raise ValueError("spectra live in different sector dimensions")
    edges = np.asarray(edges, dtype=float)
    tw = thermal_weights(initial, beta)
    counts = np.zeros(len(edges) - 1)
    out_of_range = 0.0
    widths = np.diff(edges)
    vt = final.vectors.T
    for j0 in range(0, initial.dim, block):
        j1 = min(j0 + block, initial.dim)
        o = vt @ initial.vectors[:, j0:j1]
        w2 = (o * o) * tw.weights[None, j0:j1]
        vals = final.energies[:, None] - initial.energies[None, j0:j1]
        c, _ = np.histogram(vals.ravel(), bins=edges, weights=w2.ravel())
        counts += c
        out_of_range += float(w2.sum() - c.sum())
    return Histogram(edges=edges, density=counts / widths,
                     norm=float(counts.sum()), out_of_range=out_of_range)


def strength_function(n: int, initial: Spectrum,
                      final: Spectrum) -> PointMassDistribution:
    """Distribution of |<final m|initial n>|^2 over w = E~_m - E_n."""
    if not (0 <= n < initial.dim):
        raise ValueError(f"state index {n} out of range [0, {initial.dim})")
    if initial.dim != final.dim:
        raise ValueError("spectra live in different sector dimensions")
    amps = final.vectors.T @ initial.vector(n)
    return PointMassDistribution(final.energies - initial.energies[n], amps * amps)


def sf_centroid(n: int, initial: Spectrum, final_op) -> float:
    """First moment of the strength function: <n|H~|n> - E_n.

    ``final_op`` only needs ``apply``; the final Hamiltonian is never
    diagonalized.
    """
    psi = initial.vector(n)
    return float(psi @ final_op.apply(psi) - initial.energies[n])


def sf_variance(n: int, initial: Spectrum, final_op) -> float:
    """Second central moment of the strength function, from two applications."""
    psi = initial.vector(n)
    hpsi = final_op.apply(psi)
    first = float(psi @ hpsi)
    second = float(hpsi @ hpsi)
    var = second - first * first
    if var < -1e-10:
        raise NumericalFailure(f"negative SF variance {var}")
    return max(var, 0.0)


def mean_level_spacing(spectrum: Spectrum) -> float:
    e = spectrum.energies
    return float((e[-1] - e[0]) / max(len(e) - 1, 1))


def window_indices(spectrum: Spectrum, e_center: float,
                   half_width: float) -> np.ndarray:
    e = spectrum.energies
    return np.nonzero((e >= e_center - half_width) & (e <= e_center + half_width))[0]


def smoothed_sf_histogram(initial: Spectrum, final: Spectrum, e_center: float,
                          edges, half_width: float | None = None,
                          min_states: int = 20) -> tuple[Histogram, int]:
    """Energy-smoothed strength function around one initial energy.

    Pools the SF atoms of every eigenstate with E_n in the window and bins
    them, normalized to unit integral. Returns the histogram and the number
    of participating states.
    """
    if half_width is None:
        half_width = 25.0 * mean_level_spacing(initial)
    idx = window_indices(initial, e_center, half_width)
    if len(idx) == 0:
        raise ValueError(f"no eigenstates within {half_width} of E={e_center}")
    if len(idx) < min_states:
        raise ValueError(
            f"window holds {len(idx)} states; need >= {min_states} "
            "(widen the window or lower min_states)")
    amps = final.vectors.T @ initial.vectors[:, idx]
    weights = amps * amps
    values = final.energies[:, None] - initial.energies[None, idx]
    hist = weighted_histogram(values.ravel(), weights.ravel(), edges)
    if hist.norm <= 0:
        raise ValueError("window SF mass fell entirely outside the bins")
    return hist.scaled(1.0 / hist.norm), len(idx)


@dataclass
class JarzynskiCheck:
    beta: float
    log_lhs: float
    log_rhs: float
    gap: float

    @property
    def lhs(self) -> float:
        return float(np.exp(self.log_lhs))

    @property
    def rhs(self) -> float:
        return float(np.exp(self.log_rhs))


def jarzynski_check(initial: Spectrum, final: Spectrum,
                    beta: float) -> JarzynskiCheck:
    """Compare <exp(-beta w)> against Z~/Z0, both in log space.

    The left side sums the actual atoms; the right side uses the two
    partition functions. For a sudden two-point-measurement quench the
    identity is exact, so the gap is a numerical health check.
    """
    tw = thermal_weights(initial, beta)
    tw_f = thermal_weights(final, beta)
    o = overlap_matrix(initial, final)
    w2 = o * o
    # exponent of each atom: log p_n + log|O|^2 - beta (E~_m - E_n)
    log_p = np.where(tw.weights > 0, np.log(np.clip(tw.weights, 1e-320, None)), -np.inf)
    exponents = (log_p[None, :]
                 - beta * (final.energies[:, None] - initial.energies[None, :]))
    with np.errstate(divide="ignore"):
        log_w2 = np.where(w2 > 0, np.log(np.clip(w2, 1e-320, None)), -np.inf)
    log_lhs = float(logsumexp(exponents + log_w2))
    log_rhs = float(tw_f.log_z0_unshifted - tw.log_z0_unshifted)
    gap = abs(np.expm1(log_lhs - log_rhs))
    return JarzynskiCheck(beta=beta, log_lhs=log_lhs, log_rhs=log_rhs, gap=gap)
