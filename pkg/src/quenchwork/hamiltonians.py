"""Dense XXZ / next-nearest-neighbor chain Hamiltonians in a symmetry sector.

Model 1 couples nearest neighbors: J(SxSx + SySy) hopping plus an Ising
part mu*J*SzSz. Model 2 adds lambda*J[(SxSx + SySy) + mu*SzSz] between
second neighbors. Matrix-element rules in the configuration basis:
an exchange of anti-aligned spins at the coupled pair contributes the
off-diagonal xy/2; the Ising part contributes zz/4 with sign + for aligned
and - for anti-aligned pairs.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .sectors import SymmetrySector, build_basis, projection_matrix

DENSE_DIM_LIMIT = 8192

MATRIX_MAGIC = b"QWRK"


@dataclass(frozen=True)
class ChainParams:
    """Chain couplings plus the sector they act on."""

    L: int
    K: int
    parity: int | None = None
    J: float = 1.0
    mu: float = 0.0
    lam: float = 0.0

    def __post_init__(self):
        if self.J <= 0:
            raise ValueError("J must be positive")
        if self.mu == 1.0:
            raise ValueError(
                "mu = 1 is rejected: the chain gains total-spin S^2 symmetry "
                "at the isotropic point and the sector bases here do not "
                "resolve it")
        if self.lam != 0.0 and self.L < 3:
            raise ValueError("second-neighbor coupling needs L >= 3")
        if not (0 <= self.K <= self.L):
            raise ValueError("K must satisfy 0 <= K <= L")

    def couplings(self) -> list[tuple[int, int, float, float]]:
        """(site_a, site_b, xy, zz) for every coupled pair."""
        out = [(i, i + 1, self.J, self.mu * self.J) for i in range(self.L - 1)]
        if self.lam != 0.0:
            out += [(i, i + 2, self.lam * self.J, self.lam * self.mu * self.J)
                    for i in range(self.L - 2)]
        return out


def _check_sector(params: ChainParams, sector: SymmetrySector) -> None:
    if (sector.L, sector.K, sector.parity) != (params.L, params.K, params.parity):
        raise ValueError(
            f"sector {sector.descriptor()} does not match params "
            f"(L={params.L}, K={params.K}, parity={params.parity})")


def _raw_sparse(params: ChainParams, raw: SymmetrySector) -> sp.csr_matrix:
    """Hamiltonian on the parity-None basis as a sparse matrix."""
    index = raw.raw_index()
    cps = params.couplings()
    rows, cols, vals = [], [], []
    for k, s in enumerate(raw.states):
        diag = 0.0
        for (i, j, xy, zz) in cps:
            if (s >> i & 1) == (s >> j & 1):
                diag += 0.25 * zz
            else:
                diag -= 0.25 * zz
                t = s ^ ((1 << i) | (1 << j))
                rows.append(index[t])
                cols.append(k)
                vals.append(0.5 * xy)
        rows.append(k)
        cols.append(k)
        vals.append(diag)
    return sp.csr_matrix((vals, (rows, cols)), shape=(raw.dim, raw.dim))


def _symmetrize_exact(a: np.ndarray) -> np.ndarray:
    # mirror the upper triangle so max|A - A^T| is exactly zero
    out = np.triu(a)
    out = out + np.triu(a, 1).T
    return out


def build_h1(params: ChainParams, sector: SymmetrySector) -> np.ndarray:
    """Nearest-neighbor chain matrix restricted to the sector."""
    if params.lam != 0.0:
        params = ChainParams(L=params.L, K=params.K, parity=params.parity,
                             J=params.J, mu=params.mu, lam=0.0)
    return build_h2(params, sector)


def build_h2(params: ChainParams, sector: SymmetrySector) -> np.ndarray:
    """Full chain matrix (second-neighbor part included when lam != 0)."""
    _check_sector(params, sector)
    raw = sector if sector.parity is None else build_basis(sector.L, sector.K)
    h = _raw_sparse(params, raw)
    if sector.parity is None:
        if sector.dim > DENSE_DIM_LIMIT:
            raise ValueError(
                f"dim {sector.dim} exceeds dense limit {DENSE_DIM_LIMIT}; "
                "use SectorOperator for matrix-free application")
        dense = h.toarray()
    else:
        p = projection_matrix(sector)
        if sector.dim > DENSE_DIM_LIMIT:
            raise ValueError(
                f"dim {sector.dim} exceeds dense limit {DENSE_DIM_LIMIT}; "
                "use SectorOperator for matrix-free application")
        dense = np.asarray((p.T @ h @ p).todense())
    return _symmetrize_exact(dense)


class SectorOperator:
    """Matrix-free H applied to vectors in the sector basis.

    Precomputes, per coupled pair, the exchange-partner index of every
    basis configuration, so one application is a handful of vectorized
    gather/scatter passes. Exists so centroid/width sum rules can be
    evaluated without diagonalizing (or even materializing) the final
    Hamiltonian.
    """

    def __init__(self, params: ChainParams, sector: SymmetrySector):
        _check_sector(params, sector)
        self.params = params
        self.sector = sector
        raw = sector if sector.parity is None else build_basis(sector.L, sector.K)
        index = raw.raw_index()
        states = np.array(raw.states, dtype=np.int64)
        diag = np.zeros(raw.dim)
        self._pairs: list[tuple[np.ndarray, np.ndarray, float]] = []
        for (i, j, xy, zz) in params.couplings():
            bi = (states >> i) & 1
            bj = (states >> j) & 1
            aligned = bi == bj
            diag += np.where(aligned, 0.25 * zz, -0.25 * zz)
            src = np.nonzero(~aligned)[0]
            flipped = states[src] ^ ((1 << i) | (1 << j))
            dst = np.fromiter((index[int(t)] for t in flipped),
                              count=len(flipped), dtype=np.int64)
            self._pairs.append((src, dst, 0.5 * xy))
        self._diag = diag
        self._proj = None if sector.parity is None else projection_matrix(sector)

    @property
    def dim(self) -> int:
        return self.sector.dim

    def _apply_raw(self, v: np.ndarray) -> np.ndarray:
        out = (self._diag * v.T).T
        for src, dst, amp in self._pairs:
            np.add.at(out, dst, amp * v[src])
        return out

    def apply(self, v: np.ndarray) -> np.ndarray:
        """H @ v for a vector, or column-wise for a (dim, k) matrix."""
        v = np.asarray(v, dtype=float)
        if v.shape[0] != self.dim or v.ndim > 2:
            raise ValueError(f"operand shape {v.shape} != sector dim {self.dim}")
        if self._proj is None:
            return self._apply_raw(v)
        return self._proj.T @ self._apply_raw(self._proj @ v)

    def __matmul__(self, v: np.ndarray) -> np.ndarray:
        return self.apply(v)


def write_matrix(path, matrix: np.ndarray) -> None:
    """Debug dump: 16-byte header (magic, u32 dim, padding), then row-major f64."""
    m = np.ascontiguousarray(matrix, dtype="<f8")
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("expected a square matrix")
    with open(path, "wb") as fh:
        fh.write(MATRIX_MAGIC)
        fh.write(struct.pack("<I", m.shape[0]))
        fh.write(b"\x00" * 8)
        fh.write(m.tobytes())


def read_matrix(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MATRIX_MAGIC:
            raise ValueError(f"bad magic {magic!r}, expected {MATRIX_MAGIC!r}")
        (dim,) = struct.unpack("<I", fh.read(4))
        fh.read(8)
        data = np.frombuffer(fh.read(dim * dim * 8), dtype="<f8")
    return data.reshape(dim, dim).copy()
