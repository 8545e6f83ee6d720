from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quenchwork.sectors import (build_basis, parity_project, projection_matrix,
                                reflect_config, reflection_matrix)


@pytest.mark.parametrize("L,K,dim", [(4, 2, 6), (15, 5, 3003), (3, 0, 1)])
def test_basis_dimensions(L, K, dim):
    sector = build_basis(L, K)
    assert sector.dim == dim == comb(L, K)


def test_basis_ordering_and_popcount():
    sector = build_basis(6, 3)
    states = list(sector.states)
    assert states == sorted(states)
    assert all(bin(s).count("1") == 3 for s in states)


def test_empty_sector_single_state():
    sector = build_basis(3, 0)
    assert sector.states == (0,)


@pytest.mark.parametrize("L,K", [(0, 0), (30, 2)])
def test_bad_length_rejected(L, K):
    with pytest.raises(ValueError):
        build_basis(L, K)


def test_k_above_l_rejected():
    with pytest.raises(ValueError):
        build_basis(5, 6)


def test_paper_sector_dimension():
    plus = parity_project(build_basis(15, 5), +1)
    assert plus.dim == 1512


def test_l16_k5_dimension():
    # brute-force mirror-orbit count: odd K and even L leave no self-mirror configs
    raw = build_basis(16, 5)
    orbits = set()
    self_mirror = 0
    for s in raw.states:
        r = reflect_config(s, 16)
        orbits.add(min(s, r))
        self_mirror += s == r
    assert self_mirror == 0
    plus = parity_project(raw, +1)
    assert plus.dim == len(orbits) == 2184


def test_l2_antisymmetric_pair():
    minus = parity_project(build_basis(2, 1), -1)
    assert minus.dim == 1
    assert minus.states == (1,)
    assert minus.partners == (2,)


def test_parity_requires_raw_sector():
    plus = parity_project(build_basis(4, 2), +1)
    with pytest.raises(ValueError):
        parity_project(plus, +1)
    with pytest.raises(ValueError):
        parity_project(build_basis(4, 2), 0)


def test_parity_dimension_counting_exhaustive():
    for L in range(2, 15):
        for K in range(L + 1):
            raw = build_basis(L, K)
            plus = parity_project(raw, +1)
            minus = parity_project(raw, -1)
            assert plus.dim + minus.dim == comb(L, K)
            n_self = sum(1 for s in raw.states if reflect_config(s, L) == s)
            assert plus.dim - minus.dim == n_self


@given(st.integers(2, 10), st.data())
@settings(max_examples=30, deadline=None)
def test_projection_is_orthonormal(L, data):
    K = data.draw(st.integers(0, L))
    raw = build_basis(L, K)
    for parity in (+1, -1):
        p = projection_matrix(parity_project(raw, parity))
        if p.shape[1] == 0:
            continue
        gram = (p.T @ p).toarray()
        assert np.max(np.abs(gram - np.eye(p.shape[1]))) < 1e-12


@pytest.mark.parametrize("L,K", [(6, 3), (9, 4), (10, 5)])
def test_reflection_diagonal_in_parity_basis(L, K):
    raw = build_basis(L, K)
    r = reflection_matrix(raw).toarray()
    for parity in (+1, -1):
        p = projection_matrix(parity_project(raw, parity)).toarray()
        if p.shape[1] == 0:
            continue
        block = p.T @ r @ p
        assert np.max(np.abs(block - parity * np.eye(p.shape[1]))) < 1e-12


def test_descriptor_roundtrip():
    sector = parity_project(build_basis(15, 5), +1)
    assert sector.descriptor() == {"L": 15, "K": 5, "parity": 1, "dim": 1512}


def test_representatives_are_orbit_minima():
    sector = parity_project(build_basis(7, 3), +1)
    for rep, partner in zip(sector.states, sector.partners):
        assert rep <= partner
        assert reflect_config(rep, 7) == partner
