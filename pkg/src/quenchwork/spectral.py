"""Dense symmetric eigendecomposition, eigenbasis overlaps, level diagnostics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalFailure
from .fitkit import Histogram, uniform_edges, weighted_histogram
from .sectors import SymmetrySector

ORTHO_TOL = 1e-9
RESIDUAL_TOL = 1e-8


@dataclass
class Spectrum:
    """Ascending eigenvalues with the column-orthonormal eigenvector matrix."""

    energies: np.ndarray
    vectors: np.ndarray
    sector: SymmetrySector | None = None

    @property
    def dim(self) -> int:
        return len(self.energies)

    def vector(self, n: int) -> np.ndarray:
        return self.vectors[:, n]


def _canonical_signs(vectors: np.ndarray) -> np.ndarray:
    # fix the sign gauge: largest-magnitude component of each column positive
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def eigh(matrix: np.ndarray, sector: SymmetrySector | None = None,
         check: bool = True) -> Spectrum:
    """Full eigendecomposition of a real symmetric matrix.

    Eigenvector signs are canonicalized (largest component positive) so
    repeated runs and downstream overlap matrices are reproducible.
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    scale = np.max(np.abs(a)) or 1.0
    if np.max(np.abs(a - a.T)) > 1e-14 * scale:
        raise ValueError("matrix is not symmetric to 1e-14 relative")
    try:
        energies, vectors = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(
            f"eigensolver did not converge on dim {a.shape[0]}: {exc}") from exc
    vectors = _canonical_signs(vectors)
    spec = Spectrum(energies=energies, vectors=vectors, sector=sector)
    if check:
        dim = spec.dim
        gram = vectors.T @ vectors - np.eye(dim)
        if np.max(np.abs(gram)) > ORTHO_TOL:
            raise NumericalFailure("eigenvectors are not orthonormal to 1e-9")
        residual = a @ vectors - vectors * energies
        if np.max(np.abs(residual)) > RESIDUAL_TOL * scale:
            raise NumericalFailure("eigen residual exceeds 1e-8 * max|H|")
    return spec


def overlap_matrix(initial: Spectrum, final: Spectrum) -> np.ndarray:
    """O[m, n] = <final m | initial n>; |O|^2 is doubly stochastic."""
    if initial.dim != final.dim:
        raise ValueError(f"dimension mismatch {initial.dim} vs {final.dim}")
    return final.vectors.T @ initial.vectors


def level_density(energies, *, bin_width: float | None = None,
                  bin_count: int | None = None,
                  normalization: str = "levels",
                  bounds: tuple[float, float] | None = None) -> Histogram:
    """Histogram of an energy list, normalized to level count or to unit mass."""
    energies = np.asarray(energies, dtype=float)
    if energies.size == 0:
        raise ValueError("empty energy list")
    if normalization not in ("levels", "probability"):
        raise ValueError("normalization must be 'levels' or 'probability'")
    lo, hi = bounds if bounds is not None else (energies.min(), energies.max())
    if bin_width is not None:
        if bin_width <= 0:
            raise ValueError("bin width must be positive")
        n = max(int(np.ceil((hi - lo) / bin_width)), 1)
        edges = lo + bin_width * np.arange(n + 1)
    elif bin_count is not None:
        if bin_count < 1:
            raise ValueError("bin count must be >= 1")
        span = hi - lo if hi > lo else 1.0
        edges = np.linspace(lo, lo + span, bin_count + 1)
    else:
        raise ValueError("pass bin_width or bin_count")
    hist = weighted_histogram(energies, np.ones_like(energies), edges)
    if normalization == "probability":
        hist = hist.scaled(1.0 / energies.size)
    return hist


@dataclass
class SpacingStats:
    spacings: np.ndarray
    histogram: Histogram
    ks_poisson: float
    ks_wigner: float


def unfolded_spacings(energies, degree: int = 9, trim: float = 0.1) -> np.ndarray:
    """Nearest-neighbor spacings after polynomial unfolding.

    The cumulative level count over the middle (1 - 2*trim) of the spectrum
    is fitted with a polynomial; spacings of the mapped levels are rescaled
    to unit mean.
    """
    e = np.sort(np.asarray(energies, dtype=float))
    n = len(e)
    if n < 100:
        raise ValueError("need at least 100 levels for spacing statistics")
    lo = int(np.floor(trim * n))
    hi = n - lo
    kept = e[lo:hi]
    counts = np.arange(lo, hi) + 0.5
    poly = np.polynomial.Polynomial.fit(kept, counts, deg=degree)
    x = poly(kept)
    s = np.diff(x)
    s = s[s > 0]
    return s / s.mean()


def spacing_stats(energies, degree: int = 9, bin_width: float = 0.1) -> SpacingStats:
    """Unfolded spacing histogram plus KS distances to Poisson and Wigner."""
    s = unfolded_spacings(energies, degree=degree)
    edges = uniform_edges(center=2.5, bin_width=bin_width,
                          n_bins=int(np.ceil(5.0 / bin_width)))
    hist = weighted_histogram(s, np.full(s.shape, 1.0 / len(s)), edges)
    sorted_s = np.sort(s)
    ecdf_hi = np.arange(1, len(s) + 1) / len(s)
    ecdf_lo = np.arange(0, len(s)) / len(s)

    def ks(cdf):
        c = cdf(sorted_s)
        return float(max(np.max(np.abs(ecdf_hi - c)), np.max(np.abs(ecdf_lo - c))))

    ks_poisson = ks(lambda t: 1.0 - np.exp(-t))
    ks_wigner = ks(lambda t: 1.0 - np.exp(-np.pi * t * t / 4.0))
    return SpacingStats(spacings=s, histogram=hist,
                        ks_poisson=ks_poisson, ks_wigner=ks_wigner)
