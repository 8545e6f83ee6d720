import mpmath
import numpy as np
import pytest

from quenchwork.fitkit import uniform_edges
from quenchwork.hamiltonians import SectorOperator
from quenchwork.pipeline import chain_sector, chain_spectrum
from quenchwork.work_stats import (exact_work_pdf, exact_work_pdf_histogram,
                                   jarzynski_check, sf_centroid, sf_variance,
                                   smoothed_sf_histogram, strength_function,
                                   thermal_weights)


def test_thermal_weights_uniform_at_beta_zero(small_quench):
    spec = chain_spectrum(small_quench.initial)
    tw = thermal_weights(spec, 0.0)
    assert np.allclose(tw.weights, 1.0 / spec.dim, atol=1e-15)
    assert tw.weights.sum() == pytest.approx(1.0, abs=1e-12)


def test_thermal_weights_ground_state_limit(small_quench):
    spec = chain_spectrum(small_quench.initial)
    tw = thermal_weights(spec, 5000.0)
    assert tw.weights[0] == pytest.approx(1.0, abs=1e-10)


def test_thermal_weights_high_precision_oracle(small_quench):
    spec = chain_spectrum(small_quench.initial)
    beta = 0.5
    tw = thermal_weights(spec, beta)
    mpmath.mp.dps = 50
    z = mpmath.fsum(mpmath.e ** (-beta * mpmath.mpf(float(e)))
                    for e in spec.energies)
    expected = np.array([float(mpmath.e ** (-beta * mpmath.mpf(float(e))) / z)
                         for e in spec.energies])
    assert np.max(np.abs(tw.weights - expected)) < 1e-12
    log_z_unshifted = float(mpmath.log(z))
    assert tw.log_z0_unshifted == pytest.approx(log_z_unshifted, abs=1e-12)


def test_thermal_weights_validation(small_quench):
    spec = chain_spectrum(small_quench.initial)
    with pytest.raises(ValueError):
        thermal_weights(spec, -1.0)
    with pytest.raises(ValueError):
        thermal_weights(spec, np.inf)


def test_identity_quench_single_atom(small_quench):
    spec = chain_spectrum(small_quench.initial)
    pmd = exact_work_pdf(spec, spec, 0.7).merged()
    assert len(pmd.values) == 1
    assert pmd.values[0] == pytest.approx(0.0, abs=1e-12)
    assert pmd.total == pytest.approx(1.0, abs=1e-12)


def test_work_first_moment_trace_oracle(small_quench):
    # <w> equals Tr[rho0 (H~ - H)]
    beta = 0.8
    si = chain_spectrum(small_quench.initial)
    sf = chain_spectrum(small_quench.final)
    pmd = exact_work_pdf(si, sf, beta)
    tw = thermal_weights(si, beta)
    sector = chain_sector(small_quench.final)
    op_f = SectorOperator(small_quench.final, sector)
    op_i = SectorOperator(small_quench.initial, sector)
    diff = op_f.apply(si.vectors) - op_i.apply(si.vectors)
    trace = float(np.einsum("in,in,n->", si.vectors, diff, tw.weights))
    assert pmd.mean() == pytest.approx(trace, abs=1e-10)


@pytest.mark.parametrize("beta", [0.0, 0.05, 0.5, 5.0, 20.0])
def test_work_mass_is_one(small_quench, beta):
    si = chain_spectrum(small_quench.initial)
    sf = chain_spectrum(small_quench.final)
    assert exact_work_pdf(si, sf, beta).total == pytest.approx(1.0, abs=1e-10)


def test_streaming_histogram_matches_atoms(small_quench):
    si = chain_spectrum(small_quench.initial)
    sf = chain_spectrum(small_quench.final)
    edges = uniform_edges(0.0, 0.05, 200)
    atoms = exact_work_pdf(si, sf, 0.5).histogram(edges)
    streamed = exact_work_pdf_histogram(si, sf, 0.5, edges, block=7)
    assert np.allclose(atoms.density, streamed.density, atol=1e-13)
    assert streamed.out_of_range == pytest.approx(atoms.out_of_range, abs=1e-12)


def test_strength_function_normalized_and_consistent(small_quench):
    si = chain_spectrum(small_quench.initial)
    sf = chain_spectrum(small_quench.final)
    op = SectorOperator(small_quench.final, chain_sector(small_quench.final))
    for n in (0, 3, si.dim - 1):
        dist = strength_function(n, si, sf)
        assert dist.total == pytest.approx(1.0, abs=1e-9)
        assert dist.mean() == pytest.approx(sf_centroid(n, si, op), abs=1e-10)
        assert dist.variance() == pytest.approx(sf_variance(n, si, op), abs=1e-8)
    with pytest.raises(ValueError):
        strength_function(si.dim, si, sf)


def test_centroid_shift_rules(small_quench):
    si = chain_spectrum(small_quench.initial)
    op_same = SectorOperator(small_quench.initial,
                             chain_sector(small_quench.initial))
    for n in (0, 5):
        assert sf_centroid(n, si, op_same) == pytest.approx(0.0, abs=1e-10)
        assert sf_variance(n, si, op_same) == pytest.approx(0.0, abs=1e-10)

    class Shifted:
        def __init__(self, op, c):
            self.op, self.c = op, c

        def apply(self, v):
            return self.op.apply(v) + self.c * v

    shifted = Shifted(op_same, 2.5)
    assert sf_centroid(1, si, shifted) == pytest.approx(2.5, abs=1e-10)
    assert sf_variance(1, si, shifted) == pytest.approx(0.0, abs=1e-9)


def test_smoothed_sf_identity_quench(small_quench):
    spec = chain_spectrum(small_quench.initial)
    edges = uniform_edges(0.0, 0.1, 20)
    hist, n_states = smoothed_sf_histogram(spec, spec, e_center=0.0,
                                           edges=edges, half_width=2.0)
    assert n_states >= 20
    k = int(np.argmax(hist.density))
    assert abs(hist.centers[k]) <= hist.widths[k]
    assert hist.masses[k] == pytest.approx(1.0, abs=1e-12)


def test_smoothed_sf_window_errors(small_quench):
    spec = chain_spectrum(small_quench.initial)
    edges = uniform_edges(0.0, 0.1, 20)
    with pytest.raises(ValueError, match="no eigenstates"):
        smoothed_sf_histogram(spec, spec, e_center=99.0, edges=edges,
                              half_width=0.1)
    with pytest.raises(ValueError, match="window holds"):
        smoothed_sf_histogram(spec, spec, e_center=0.0, edges=edges,
                              half_width=0.05, min_states=30)


def test_jarzynski_identity_quench(small_quench):
    spec = chain_spectrum(small_quench.initial)
    check = jarzynski_check(spec, spec, 1.3)
    assert check.lhs == pytest.approx(1.0, abs=1e-12)
    assert check.rhs == pytest.approx(1.0, abs=1e-12)
    assert check.gap < 1e-12


def test_jarzynski_beta_zero(small_quench):
    si = chain_spectrum(small_quench.initial)
    sf = chain_spectrum(small_quench.final)
    check = jarzynski_check(si, sf, 0.0)
    assert check.lhs == pytest.approx(1.0, abs=1e-12)
    assert check.gap < 1e-12


@pytest.mark.parametrize("beta", [0.05, 2.0, 20.0])
def test_jarzynski_small_chain(small_quench, beta):
    si = chain_spectrum(small_quench.initial)
    sf = chain_spectrum(small_quench.final)
    assert jarzynski_check(si, sf, beta).gap < 1e-10


def test_work_second_moment_identities(small_quench):
    beta = 0.5
    si = chain_spectrum(small_quench.initial)
    sf = chain_spectrum(small_quench.final)
    pmd = exact_work_pdf(si, sf, beta)
    tw = thermal_weights(si, beta)
    op = SectorOperator(small_quench.final, chain_sector(small_quench.final))
    eps = np.array([sf_centroid(n, si, op) for n in range(si.dim)])
    var = np.array([sf_variance(n, si, op) for n in range(si.dim)])
    mean_pred = float(tw.weights @ eps)
    var_pred = float(tw.weights @ (var + eps ** 2)) - mean_pred ** 2
    assert pmd.mean() == pytest.approx(mean_pred, abs=1e-8)
    assert pmd.variance() == pytest.approx(var_pred, abs=1e-8)
