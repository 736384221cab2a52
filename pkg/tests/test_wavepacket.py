import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from thermal_wavepackets.envelope import Envelope, delta_envelope, thermal_envelope
from thermal_wavepackets.lattice import build_lattice, plane_wave_sum
from thermal_wavepackets.wavepacket import (
    PacketTooWideError,
    RegimeWarning,
    WavePacketParams,
    canonical_alpha,
    coherent_alpha,
    coherent_wavefunction,
    delta_phi,
    energy_mean,
    energy_stats,
    energy_variance,
    evolve,
    fidelity,
    inner,
    make_state,
    match_frequency,
    momentum_mean,
    overlap,
    position_mean,
    position_moments,
    rkt_energy_variance_formula,
    rkt_params,
    rt_params,
    uncertainty,
    wavefunction_table,
)

K3 = 3 * 2 * np.pi / 10  # 1.88496


@pytest.fixture(scope="module")
def env_a():
    from thermal_wavepackets import build_lattice

    return thermal_envelope(build_lattice(1, 10.0, 64), 1.0)


def labels(lat):
    return st.tuples(st.integers(0, lat.M - 1), st.integers(-lat.M // 2, lat.M // 2 - 1))


LAT = build_lattice(1, 10.0, 64)


def params(env, label):
    j, n = label
    return WavePacketParams([j * env.lattice.dx], [n * env.lattice.dk], env)


# -- construction ------------------------------------------------------------------


def test_delta_envelope_gives_plane_wave(lat_a):
    env = delta_envelope(lat_a)
    st_ = make_state(WavePacketParams([2.5], [K3], env))
    expected = np.zeros(lat_a.shape, dtype=complex)
    expected[35] = np.exp(-1j * K3 * 2.5)
    assert np.allclose(st_.amplitudes, expected, atol=1e-15)


def test_thermal_origin_state_is_real_positive(lat_a):
    a = make_state(rt_params(lat_a, [0.0], 1.0)).amplitudes
    assert np.all(a.imag == 0) and np.all(a.real > 0)


def test_rkt_norm(lat_a):
    s = make_state(rkt_params(lat_a, [2.5], [K3], 1.0))
    assert s.norm2 == pytest.approx(0.0398942, rel=1e-6)


def test_off_grid_momentum_rejected(env_a):
    with pytest.raises(ValueError):
        WavePacketParams([0.0], [0.3], env_a)


@given(labels(LAT))
def test_position_wavefunction_formula(label):
    """<r|R,K> = exp(iK(r-R)) <r-R|phi> for grid-aligned R."""
    env = thermal_envelope(LAT, 1.0)
    p = params(env, label)
    psi = make_state(p).position_field().values
    j, n = label
    phi_r = env.position_profile().values
    expected = np.exp(1j * p.K[0] * (LAT.r_axis - p.R[0])) * np.roll(phi_r, j)
    assert np.allclose(psi, expected, atol=1e-13)


def test_off_grid_R_allowed(lat_a, env_a):
    s = make_state(WavePacketParams([5.03], [0.0], env_a))
    assert position_moments(s)[0][0] == pytest.approx(5.03, abs=1e-12)


# -- overlaps -------------------------------------------------------------------------


def test_self_overlap(env_a):
    p = WavePacketParams([5.0], [K3], env_a)
    assert overlap(p, p) == pytest.approx(env_a.norm2, rel=1e-14)


def test_delta_envelope_overlap(lat_a):
    env = delta_envelope(lat_a)
    a = WavePacketParams([1.25], [K3], env)
    b = WavePacketParams([4.375], [K3], env)
    c = WavePacketParams([4.375], [2 * K3], env)
    assert overlap(a, b) == pytest.approx(np.exp(1j * K3 * (1.25 - 4.375)), abs=1e-14)
    assert abs(overlap(a, c)) < 1e-15


def test_gaussian_overlap(env_a):
    a = WavePacketParams([5.0], [K3], env_a)
    b = WavePacketParams([6.0], [K3], env_a)
    assert abs(delta_phi(env_a, [1.0], [0.0])) == pytest.approx(np.exp(-0.5), rel=1e-4)
    assert abs(overlap(a, b)) / env_a.norm2 == pytest.approx(np.exp(-0.5), rel=1e-4)


def test_delta_phi_normalisation_and_decay(lat_a, env_a):
    assert delta_phi(env_a, [0.0], [0.0]) == pytest.approx(1.0, abs=1e-15)
    assert abs(delta_phi(env_a, [0.0], [20 * lat_a.dk])) < 1e-6
    # |delta| ~ exp(-dR^2 / lambda^2) needs dR > L/2 at lambda = sqrt(2); use T = 4
    hot = thermal_envelope(lat_a, 1 / 4)
    assert abs(delta_phi(hot, [3.0], [0.0])) < 1e-6


def test_delta_phi_against_analytic_p_sum(lat_a, env_a):
    """Oracle: the p-sum with the envelope evaluated as the closed-form function
    exp(-beta p^2 / 4m) / sqrt(L), no array shifts."""
    dK = 4 * lat_a.dk
    p = lat_a.k[0] - dK / 2  # p - dK/2 and p + dK/2 both on the grid
    phi = lambda q: np.exp(-q**2 / 4) / np.sqrt(lat_a.L)  # noqa: E731
    direct = np.sum(phi(p - dK / 2) * phi(p + dK / 2)) / env_a.norm2
    assert delta_phi(env_a, [0.0], [dK]) == pytest.approx(direct, abs=1e-12)


@given(labels(LAT), labels(LAT))
def test_overlap_matches_inner_product(la, lb):
    env = thermal_envelope(LAT, 1.0)
    a, b = params(env, la), params(env, lb)
    direct = inner(make_state(a), make_state(b))
    assert abs(overlap(a, b) - direct) < 1e-13
    assert overlap(a, b) == pytest.approx(np.conj(overlap(b, a)), abs=1e-15)
    assert abs(delta_phi(env, a.R - b.R, a.K - b.K)) <= 1 + 1e-12


@given(st.integers(0, 2**32 - 1))
def test_gram_matrix_psd(seed):
    r = np.random.default_rng(seed)
    env = thermal_envelope(LAT, 1.0)
    ps = [WavePacketParams([r.uniform(0, 10)], [r.integers(-8, 8) * LAT.dk], env) for _ in range(8)]
    G = np.array([[overlap(a, b) for b in ps] for a in ps])
    ev = np.linalg.eigvalsh(G)
    assert ev.min() >= -1e-10 * ev.max()


def test_overlap_rejects_mixed_envelopes(lat_a, env_a):
    a = WavePacketParams([0.0], [0.0], env_a)
    b = WavePacketParams([0.0], [0.0], thermal_envelope(lat_a, 2.0))
    with pytest.raises(ValueError):
        overlap(a, b)


# -- moments --------------------------------------------------------------------------


def test_momentum_means(lat_a):
    assert momentum_mean(make_state(rt_params(lat_a, [5.0], 1.0)))[0] == 0.0
    assert momentum_mean(make_state(rkt_params(lat_a, [5.0], [K3], 1.0)))[0] == pytest.approx(K3, abs=1e-12)


def test_position_mean(lat_a):
    assert position_mean(make_state(rkt_params(lat_a, [5.0], [K3], 1.0)))[0] == pytest.approx(5.0, abs=1e-6)


def test_position_moments_against_quadrature(lat_a, env_a):
    """Oracle: fine-grid quadrature of the trigonometric interpolant on the
    minimum-image window about the centre."""
    s = evolve(make_state(WavePacketParams([3.0], [K3], env_a)), 0.7)
    c = s.center[0]
    x = c - 5.0 + (np.arange(4000) + 0.5) * (10.0 / 4000)
    rho = np.array([abs(plane_wave_sum(lat_a, s.amplitudes, [xi])) ** 2 for xi in x])
    norm = rho.sum()
    mean = (rho * x).sum() / norm
    var = (rho * (x - mean) ** 2).sum() / norm
    m, v = position_moments(s)
    assert m[0] == pytest.approx(mean, abs=1e-8)
    assert v[0] == pytest.approx(var, rel=1e-8)


def test_too_wide_packet_raises(lat_a):
    s = make_state(rt_params(lat_a, [5.0], 1 / 64))  # lambda ~ 11 > L
    with pytest.raises(PacketTooWideError):
        position_mean(s)
    with pytest.raises(PacketTooWideError):
        uncertainty(s)


def test_energy_observables(lat_a):
    rt = make_state(rt_params(lat_a, [5.0], 1.0))
    assert energy_mean(rt) == pytest.approx(0.5, rel=1e-6)
    assert energy_variance(rt) == pytest.approx(0.5, rel=1e-6)
    rkt = make_state(rkt_params(lat_a, [5.0], [K3], 1.0))
    assert energy_mean(rkt) == pytest.approx(0.5 + K3**2 / 2, rel=1e-6)
    assert energy_mean(rkt) == pytest.approx(2.27653, rel=1e-5)
    assert energy_variance(rkt) == pytest.approx(rkt_energy_variance_formula(lat_a, [K3], 1.0), rel=1e-12)
    # continuum: D/2 T^2 + 2 T eps_K
    assert energy_variance(rkt) == pytest.approx(0.5 + 2 * K3**2 / 2, rel=1e-6)


def test_energy_warns_outside_uv_regime():
    lat = build_lattice(1, 10.0, 4)
    s = make_state(rt_params(lat, [5.0], 1.0))
    assert not energy_stats(s).uv_converged
    with pytest.warns(RegimeWarning):
        energy_mean(s)


def test_energy_no_warning_in_regime(lat_a):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        energy_mean(make_state(rt_params(lat_a, [5.0], 1.0)))


def test_uncertainty_values(lat_a):
    u = uncertainty(make_state(rkt_params(lat_a, [5.0], [K3], 1.0)))
    assert u.dk[0] ** 2 == pytest.approx(1.0, rel=1e-4)
    assert u.dx[0] ** 2 == pytest.approx(0.25, rel=1e-4)
    assert u.product[0] == pytest.approx(0.5, rel=1e-4)


@pytest.mark.parametrize("T", [0.25, 1.0, 4.0])
def test_uncertainty_product_independent_of_T(lat_a, T):
    assert uncertainty(make_state(rt_params(lat_a, [5.0], T))).product[0] == pytest.approx(0.5, rel=1e-4)


def test_uncertainty_2d():
    lat = build_lattice(2, 10.0, 32)
    u = uncertainty(make_state(rt_params(lat, [5.0, 5.0], 1.0)))
    assert np.allclose(u.product, 0.5, rtol=1e-4)


# -- dynamics -------------------------------------------------------------------------


def test_evolve_zero_is_identity(lat_a):
    s = make_state(rkt_params(lat_a, [5.0], [K3], 1.0))
    assert np.array_equal(evolve(s, 0.0).amplitudes, s.amplitudes)


def test_evolution_moves_with_velocity_K(lat_a):
    s = make_state(rkt_params(lat_a, [5.0], [K3], 1.0))
    st1 = evolve(s, 1.0)
    assert position_moments(st1)[0][0] == pytest.approx(5.0 + K3, abs=1e-3)
    # dispersion: lambda^2/8 + (t/m)^2 Delta k^2, up to tails beyond the box window
    assert position_moments(st1)[1][0] == pytest.approx(0.25 + 1.0, rel=1e-4)


@given(st.floats(0, 3))
def test_evolution_conserves_norm_and_momentum(t):
    s = make_state(rkt_params(LAT, [5.0], [K3], 1.0))
    e = evolve(s, t)
    assert e.norm2 == pytest.approx(s.norm2, rel=1e-12)
    assert momentum_mean(e)[0] == pytest.approx(momentum_mean(s)[0], abs=1e-12)


def test_fidelity_decreases(lat_a):
    p = rkt_params(lat_a, [5.0], [K3], 1.0)
    s = make_state(p)
    fids = []
    for t in np.linspace(0, 2, 21):
        moved = make_state(WavePacketParams(p.R + K3 * t, p.K, p.envelope))
        fids.append(fidelity(moved, evolve(s, t)))
    assert fids[0] == pytest.approx(1.0, abs=1e-14)
    assert np.all(np.diff(fids) <= 1e-12)


def test_temperature_limits(lat_a):
    cold = make_state(rkt_params(lat_a, [5.0], [K3], 1 / 64))
    plane = make_state(WavePacketParams([5.0], [K3], delta_envelope(lat_a)))
    assert fidelity(plane, cold) > 0.99
    hot = make_state(rt_params(lat_a, [5.0], 64.0))
    assert position_moments(hot)[1][0] < 4 * lat_a.dx**2


# -- coherent states ---------------------------------------------------------------


def test_coherent_alpha():
    assert coherent_alpha([0.0], [0.0], 1.0)[0] == 0
    a = coherent_alpha([5.0], [K3], 1.0)[0]
    assert a.real == pytest.approx(3.53553, rel=1e-5)
    assert a.imag == pytest.approx(1.88496, rel=1e-5)
    with pytest.raises(ValueError):
        coherent_alpha([0.0], [0.0], 0.0)


def test_canonical_alpha_round_trip(lat_a):
    omega = 2.0
    alpha = canonical_alpha([5.0], [K3], omega)
    g = coherent_wavefunction(lat_a, alpha, omega).values
    w = np.abs(g) ** 2
    assert np.sum(lat_a.r_axis * w) / np.sum(w) == pytest.approx(5.0, abs=1e-12)
    # at omega = T the written alpha agrees in its real part, its imaginary part is sqrt(2) larger
    written = coherent_alpha([5.0], [K3], 1.0)[0]
    canonical = canonical_alpha([5.0], [K3], 1.0)[0]
    assert written.real == pytest.approx(canonical.real, rel=1e-12)
    assert written.imag == pytest.approx(np.sqrt(2) * canonical.imag, rel=1e-12)


def test_match_frequency(lat_a):
    m = match_frequency(make_state(rkt_params(lat_a, [5.0], [K3], 1.0)), T=1.0)
    assert m.omega_star == pytest.approx(2.0, rel=1e-4)
    assert m.omega_width_matched == 2.0 and m.omega_thermal == 1.0
    assert m.distance < 1e-4


def test_wavefunction_table(lat_a):
    pos, vals = wavefunction_table(make_state(rt_params(lat_a, [5.0], 1.0)))
    assert pos.shape == (64, 1) and vals.shape == (64,)
    assert np.argmax(np.abs(vals)) == 32
