"""Spin-1/2 configuration bases with fixed magnetization and optional parity.

Configurations are L-bit integers, bit i = spin at site i (counting sites
from 0 at the left end of the open chain), 1 = up. A plain sector collects
every configuration with exactly K up spins, sorted ascending. Parity
sectors hold normalized symmetric/antisymmetric combinations of mirror
pairs; configurations that are their own mirror image live only in the
+1 sector.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
import scipy.sparse as sp

L_MIN = 2
L_MAX = 24


def reflect_config(bits: int, L: int) -> int:
    """Mirror a configuration: site i -> L-1-i (bit-string reversal)."""
    r = 0
    for i in range(L):
        if bits >> i & 1:
            r |= 1 << (L - 1 - i)
    return r


@dataclass(frozen=True)
class SymmetrySector:
    """Ordered basis of an Sz (and optionally parity) symmetry sector.

    For ``parity is None`` the basis elements are the raw configurations in
    ``states``. For ``parity = +-1`` each basis element is
    ``(|rep> + parity*|mirror>)/sqrt(2)`` for a mirror pair, or ``|rep>``
    itself when the configuration is mirror-symmetric (allowed only at +1);
    ``states`` then holds the orbit representatives (the smaller bit
    pattern), ``partners`` the mirrored configurations.
    """

    L: int
    K: int
    parity: int | None
    states: tuple[int, ...]
    partners: tuple[int, ...] | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return len(self.states)

    def descriptor(self) -> dict:
        """JSON-serializable summary; the basis itself is regenerated, never stored."""
        return {"L": self.L, "K": self.K, "parity": self.parity, "dim": self.dim}

    def raw_index(self) -> dict[int, int]:
        """Map configuration -> position in the parity-None basis of (L, K)."""
        if self.parity is None:
            return {s: i for i, s in enumerate(self.states)}
        raise ValueError("raw_index is defined on parity-None sectors")


def build_basis(L: int, K: int) -> SymmetrySector:
    """All C(L, K) configurations with K up spins, ascending bit pattern."""
    if not (L_MIN <= L <= L_MAX):
        raise ValueError(f"L={L} outside supported range [{L_MIN}, {L_MAX}]")
    if not (0 <= K <= L):
        raise ValueError(f"K={K} must satisfy 0 <= K <= L={L}")
    states = sorted(sum(1 << i for i in sites) for sites in combinations(range(L), K))
    return SymmetrySector(L=L, K=K, parity=None, states=tuple(states))


def parity_project(sector: SymmetrySector, parity: int) -> SymmetrySector:
    """Mirror-adapted basis of one parity sector.

    Orbit representatives are the smaller bit pattern of each mirror pair,
    kept in ascending order so the matrix layout is reproducible.
    """
    if sector.parity is not None:
        raise ValueError("parity_project expects a parity-None sector")
    if parity not in (+1, -1):
        raise ValueError(f"parity must be +1 or -1, got {parity}")
    L = sector.L
    reps: list[int] = []
    partners: list[int] = []
    for s in sector.states:
        r = reflect_config(s, L)
        if s < r:
            reps.append(s)
            partners.append(r)
        elif s == r and parity == +1:
            reps.append(s)
            partners.append(s)
        # s > r: orbit already captured at its representative
    return SymmetrySector(L=L, K=sector.K, parity=parity,
                          states=tuple(reps), partners=tuple(partners))


def projection_matrix(sector: SymmetrySector) -> sp.csr_matrix:
    """Change of basis P (raw configs x parity states), orthonormal columns.

    Column j of P expresses parity state j in the parity-None basis of the
    same (L, K); H_parity = P.T @ H_raw @ P.
    """
    if sector.parity is None:
        raise ValueError("projection_matrix needs a parity sector")
    raw = build_basis(sector.L, sector.K)
    index = raw.raw_index()
    rows, cols, vals = [], [], []
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    for j, (rep, partner) in enumerate(zip(sector.states, sector.partners)):
        if rep == partner:
            rows.append(index[rep])
            cols.append(j)
            vals.append(1.0)
        else:
            rows.append(index[rep])
            cols.append(j)
            vals.append(inv_sqrt2)
            rows.append(index[partner])
            cols.append(j)
            vals.append(sector.parity * inv_sqrt2)
    return sp.csr_matrix((vals, (rows, cols)), shape=(raw.dim, sector.dim))


def reflection_matrix(sector: SymmetrySector) -> sp.csr_matrix:
    """Mirror-reflection operator in the parity-None basis (a permutation)."""
    if sector.parity is not None:
        raise ValueError("reflection_matrix is defined on parity-None sectors")
    index = sector.raw_index()
    perm = [index[reflect_config(s, sector.L)] for s in sector.states]
    data = np.ones(sector.dim)
    return sp.csr_matrix((data, (perm, range(sector.dim))),
                         shape=(sector.dim, sector.dim))
