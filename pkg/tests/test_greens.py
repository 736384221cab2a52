import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from thermal_wavepackets.greens import (
    SpectralLines,
    compare_spectra,
    greens_eigen,
    greens_wavepacket,
    merge_lines,
    r_integral_error,
    sum_rule,
)
from thermal_wavepackets.lattice import MOMENTUM, POSITION, OperatorMatrix, build_lattice
from thermal_wavepackets.suites import random_hermitian
from thermal_wavepackets.thermal import TemperatureSplit, partition_function, split_aliasing_bound

LAT_B = build_lattice(1, 8.0, 6)
LAT_BIG = build_lattice(1, 20.0, 128)  # converged box for the split identity


def projector(lat, n):
    P = np.zeros((lat.size, lat.size))
    i = n + lat.M // 2
    P[i, i] = 1.0
    return OperatorMatrix(P, MOMENTUM)


def identity(lat):
    return OperatorMatrix(np.eye(lat.size), MOMENTUM)


def test_projector_single_line(lat_a):
    P = projector(lat_a, 3)
    g = greens_eigen(lat_a, 1.0, P, P)
    assert len(g) == 1 and g.omega[0] == 0.0
    eps = (3 * lat_a.dk) ** 2 / 2
    assert g.weight[0] == pytest.approx(2 * np.pi * np.exp(-eps) / partition_function(lat_a, 1.0), rel=1e-14)


def test_identity_total_weight(lat_a):
    g = greens_eigen(lat_a, 1.0, identity(lat_a), identity(lat_a))
    assert np.all(g.omega == 0.0) and len(g) == 1
    assert g.total_weight == pytest.approx(2 * np.pi, rel=1e-14)


@given(st.integers(0, 2**32 - 1))
def test_sum_rule(seed):
    A = random_hermitian(LAT_B, np.random.default_rng(seed))
    B = random_hermitian(LAT_B, np.random.default_rng(seed + 1))
    g = greens_eigen(LAT_B, 1.0, A, B)
    assert g.total_weight == pytest.approx(sum_rule(LAT_B, 1.0, A, B), rel=1e-10)


@given(st.integers(0, 2**32 - 1))
def test_positive_weights_for_adjoint_pair(seed):
    r = np.random.default_rng(seed)
    X = r.normal(size=(6, 6)) + 1j * r.normal(size=(6, 6))
    A, Ad = OperatorMatrix(X, MOMENTUM), OperatorMatrix(X.conj().T, MOMENTUM)
    g = greens_eigen(LAT_B, 1.0, A, Ad)
    assert np.all(g.weight.real >= -1e-14) and np.max(np.abs(g.weight.imag)) < 1e-12


@given(st.integers(0, 2**32 - 1))
def test_hermiticity_relation(seed):
    """Lines of G_{AB} map to conjugate weights of G_{B+A+} at the same omega."""
    r = np.random.default_rng(seed)
    X, Y = (r.normal(size=(6, 6)) + 1j * r.normal(size=(6, 6)) for _ in range(2))
    A, B = OperatorMatrix(X, MOMENTUM), OperatorMatrix(Y, MOMENTUM)
    Bd, Ad = OperatorMatrix(Y.conj().T, MOMENTUM), OperatorMatrix(X.conj().T, MOMENTUM)
    g1, g2 = greens_eigen(LAT_B, 1.0, A, B), greens_eigen(LAT_B, 1.0, Bd, Ad)
    assert np.array_equal(g1.omega, g2.omega)
    assert np.allclose(g1.weight, np.conj(g2.weight), atol=1e-14)


def test_basis_mismatch(lat_a):
    A = OperatorMatrix(np.eye(64), POSITION)
    with pytest.raises(ValueError):
        greens_eigen(lat_a, 1.0, A, A)
    with pytest.raises(ValueError):
        greens_eigen(lat_a, 1.0, identity(LAT_B), identity(LAT_B))


def test_merge_lines():
    g = merge_lines([0.0, 1.0, 1.0 + 1e-12, 2.0], [1, 2, 3, 4])
    assert np.allclose(g.omega, [0, 1, 2])
    assert np.allclose(g.weight, [1, 5, 4])


def test_r_integral_identity(lat_a):
    assert r_integral_error(lat_a, TemperatureSplit(1.0, 0.5)) < 1e-12


def test_wavepacket_same_frequencies(lat_a, rng):
    A = random_hermitian(lat_a, rng)
    split = TemperatureSplit(1.0, 0.5)
    e, w = greens_eigen(lat_a, 1.0, A, A), greens_wavepacket(lat_a, split, A, A)
    assert np.array_equal(e.omega, w.omega)
    assert np.all(w.weight.real >= -1e-14)


def test_wavepacket_reference_box_error_is_aliasing(lat_a, rng):
    A = random_hermitian(lat_a, rng)
    split = TemperatureSplit(1.0, 0.5)
    cmp = compare_spectra(greens_eigen(lat_a, 1.0, A, A), greens_wavepacket(lat_a, split, A, A))
    assert not cmp.unmatched_a and not cmp.unmatched_b
    assert cmp.max_rel_error == pytest.approx(split_aliasing_bound(lat_a, split), rel=1e-3)
    assert not greens_wavepacket(lat_a, split, A, A).flags["regime"]["ok"]


def test_wavepacket_projector_converged_box():
    P = projector(LAT_BIG, 0)
    e = greens_eigen(LAT_BIG, 1.0, P, P)
    w = greens_wavepacket(LAT_BIG, TemperatureSplit(1.0, 0.5), P, P)
    assert w.weight[0] == pytest.approx(e.weight[0], rel=1e-6)


def test_wavepacket_identity_total_weight(lat_a):
    split = TemperatureSplit(1.0, 0.5)
    I = identity(lat_a)
    assert greens_wavepacket(lat_a, split, I, I).total_weight == pytest.approx(2 * np.pi, rel=1e-6)


def test_split_invariance_of_weights():
    P = projector(LAT_BIG, 3)
    a = greens_wavepacket(LAT_BIG, TemperatureSplit(1.0, 0.25), P, P)
    b = greens_wavepacket(LAT_BIG, TemperatureSplit(1.0, 0.75), P, P)
    assert a.weight[0] == pytest.approx(b.weight[0], rel=2e-6)


def test_random_equivalence_converged_box(rng):
    split = TemperatureSplit(1.0, 0.5)
    for _ in range(2):
        A = random_hermitian(LAT_BIG, rng)
        cmp = compare_spectra(greens_eigen(LAT_BIG, 1.0, A, A), greens_wavepacket(LAT_BIG, split, A, A))
        assert cmp.ok and cmp.max_rel_error < 1e-6


def test_compare_identical_and_perturbed(lat_a, rng):
    A = random_hermitian(lat_a, rng)
    g = greens_eigen(lat_a, 1.0, A, A)
    same = compare_spectra(g, g)
    assert same.max_rel_error == 0 and same.ok and same.matched == len(g)
    w = g.weight.copy()
    i = int(np.argmax(np.abs(w)))
    w[i] *= 1.01
    cmp = compare_spectra(g, SpectralLines(g.omega, w, g.tol))
    assert cmp.flagged == (float(g.omega[i]),)


def test_compare_unmatched():
    a = SpectralLines(np.array([0.0, 1.0]), np.array([1.0, 1.0]), 1e-9)
    b = SpectralLines(np.array([0.0, 2.0]), np.array([1.0, 1.0]), 1e-9)
    cmp = compare_spectra(a, b)
    assert cmp.unmatched_a == (1.0,) and cmp.unmatched_b == (2.0,) and not cmp.ok
