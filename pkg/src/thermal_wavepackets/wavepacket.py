"""Single-particle wave-packets |R,K>, |R,T>, |R,K,T> and their observables.

Position moments on the periodic box are minimum-image moments about the packet's
nominal centre, evaluated as exact continuum integrals: the density of a state
band-limited to the M-point grid is a trigonometric polynomial, so its first and
second moments over the window ``[c - L/2, c + L/2)`` have closed forms in its
Fourier coefficients.  No sampling error enters, which matters once the centre
drifts off the grid during free evolution.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize_scalar

from .envelope import Envelope, thermal_envelope, thermal_length
from .lattice import MOMENTUM, AmplitudeField, Lattice, _frozen, to_position

UV_THRESHOLD = 1e-14


class PacketTooWideError(ValueError):
    """Minimum-image position moments are meaningless for this packet."""


class RegimeWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class WavePacketParams:
    R: np.ndarray
    K: np.ndarray
    envelope: Envelope

    def __post_init__(self):
        lat = self.envelope.lattice
        object.__setattr__(self, "R", _frozen(lat._vector(self.R, "R")))
        object.__setattr__(self, "K", _frozen(lat._vector(self.K, "K")))
        object.__setattr__(self, "n_K", lat.k_index(self.K))

    @property
    def lattice(self) -> Lattice:
        return self.envelope.lattice


@dataclass(frozen=True, eq=False)
class WavePacketState:
    """Momentum-basis amplitudes plus the nominal centre used for position moments."""

    field: AmplitudeField = field(repr=False)
    center: np.ndarray
    K: np.ndarray
    time: float = 0.0

    @property
    def lattice(self) -> Lattice:
        return self.field.lattice

    @property
    def amplitudes(self) -> np.ndarray:
        return self.field.values

    @property
    def norm2(self) -> float:
        return self.field.norm2()

    def position_field(self) -> AmplitudeField:
        return to_position(self.field)


def packet_amplitudes(envelope: Envelope, R, n_K) -> np.ndarray:
    """<k|R,K> = exp(-i k.R) <k-K|phi> on the whole momentum grid."""
    lat = envelope.lattice
    phase = np.tensordot(np.asarray(R, dtype=float), lat.k, axes=(0, 0))
    return np.exp(-1j * phase) * envelope.shifted(n_K)


def make_state(params: WavePacketParams) -> WavePacketState:
    amps = packet_amplitudes(params.envelope, params.R, params.n_K)
    return WavePacketState(
        AmplitudeField(params.lattice, MOMENTUM, amps), params.R.copy(), params.K.copy()
    )


def rt_params(lattice: Lattice, R, T: float) -> WavePacketParams:
    """|R,T> = a+_{R,T}|v>: thermal envelope, zero mean momentum."""
    return WavePacketParams(R, np.zeros(lattice.D), thermal_envelope(lattice, 1 / T))


def rkt_params(lattice: Lattice, R, K, T: float) -> WavePacketParams:
    """|R,K,T>: the |R,K> construction with |phi> -> L^(-D/2)|phi_T>."""
    env = thermal_envelope(lattice, 1 / T).scaled(lattice.L ** (-lattice.D / 2))
    return WavePacketParams(R, K, env)


# -- overlaps -----------------------------------------------------------------


def inner(a: WavePacketState, b: WavePacketState) -> complex:
    """<a|b> as a direct momentum-basis sum."""
    if a.lattice != b.lattice:
        raise ValueError("states live on different lattices")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def delta_phi(envelope: Envelope, dR, dK) -> complex:
    """Normalised overlap kernel of two packets sharing ``envelope``.

    ``sum_p exp(i p.dR) <phi|p - dK/2><p + dK/2|phi> / <phi|phi>``.  For an odd
    grid multiple of ``dK`` along an axis, ``p`` runs over the half-shifted grid
    so that both envelope arguments stay on the lattice.
    """
    lat = envelope.lattice
    dR = lat._vector(dR, "dR")
    dK = lat._vector(dK, "dK")
    lat.k_index(dK)  # on-grid check
    d = np.rint(dK / lat.dk).astype(int)
    lo, hi = np.floor_divide(d, 2), -np.floor_divide(-d, 2)
    offset = (d % 2) / 2.0
    axes = tuple(range(lat.D))
    phi_lo = np.roll(envelope.amplitudes, tuple(lo), axis=axes)  # <p - dK/2|phi>
    phi_hi = np.roll(envelope.amplitudes, tuple(-hi), axis=axes)  # <p + dK/2|phi>
    p = lat.k + (lat.dk * offset).reshape((lat.D,) + (1,) * lat.D)
    phase = np.exp(1j * np.tensordot(dR, p, axes=(0, 0)))
    return complex(np.sum(phase * np.conj(phi_lo) * phi_hi) / envelope.norm2)


def _check_same_family(a: WavePacketParams, b: WavePacketParams):
    if a.lattice != b.lattice:
        raise ValueError("wave-packets live on different lattices")
    if a.envelope is not b.envelope and not np.array_equal(
        a.envelope.amplitudes, b.envelope.amplitudes
    ):
        raise ValueError("wave-packets use different envelopes")


def overlap(a: WavePacketParams, b: WavePacketParams) -> complex:
    """<a|b> = <phi|phi> exp(i (K_a+K_b)/2 . (R_a-R_b)) delta_phi(R_a-R_b, K_a-K_b)."""
    _check_same_family(a, b)
    dR = a.R - b.R
    Kbar = (a.K + b.K) / 2
    return a.envelope.norm2 * np.exp(1j * Kbar @ dR) * delta_phi(a.envelope, dR, a.K - b.K)


def fidelity(a: WavePacketState, b: WavePacketState) -> float:
    return abs(inner(a, b)) ** 2 / (a.norm2 * b.norm2)


# -- moments --------------------------------------------------------------------


def momentum_mean(state: WavePacketState) -> np.ndarray:
    w = np.abs(state.amplitudes) ** 2
    lat = state.lattice
    return np.array([np.sum(lat.k[a] * w) for a in range(lat.D)]) / np.sum(w)


def _density_coefficients(lattice: Lattice, psi_k: np.ndarray, axis: int) -> np.ndarray:
    """Fourier coefficients c_s (s = -(M-1)..M-1) of the marginal density on ``axis``:
    rho(x) = sum_s c_s exp(2 pi i s x / L)."""
    M = lattice.M
    v = np.moveaxis(psi_k, axis, -1).reshape(-1, M)
    V = np.fft.fft(v, 2 * M, axis=-1)
    corr = np.fft.ifft(np.conj(V) * V, axis=-1).sum(axis=0)
    s = np.arange(-(M - 1), M)
    return corr[s % (2 * M)] / lattice.L


def position_moments(state: WavePacketState, center=None) -> tuple[np.ndarray, np.ndarray]:
    """Per-axis minimum-image mean and variance about ``center`` (default: the
    state's tracked centre)."""
    lat = state.lattice
    c = state.center if center is None else lat._vector(center, "center")
    L, M = lat.L, lat.M
    s = np.arange(-(M - 1), M)
    nz = s != 0
    q = 2 * np.pi * s[nz] / L
    sign = np.where(s[nz] % 2, -1.0, 1.0)
    means, variances = np.empty(lat.D), np.empty(lat.D)
    for a in range(lat.D):
        coef = _density_coefficients(lat, state.amplitudes, a)
        norm = L * coef[M - 1].real
        rot = coef[nz] * np.exp(1j * q * c[a])
        first = np.sum(rot * L * sign / (1j * q)).real / norm
        second = (coef[M - 1].real * L**3 / 12 + np.sum(rot * 2 * L * sign / q**2).real) / norm
        means[a] = c[a] + first
        variances[a] = second - first**2
    return means, variances


def _checked_moments(state: WavePacketState):
    mean, var = position_moments(state)
    width = np.sqrt(np.maximum(var, 0))
    if np.any(width > state.lattice.L / 4):
        raise PacketTooWideError(
            f"packet rms width {width} exceeds L/4 = {state.lattice.L / 4}; "
            "minimum-image moments are not meaningful"
        )
    return mean, var


def position_mean(state: WavePacketState) -> np.ndarray:
    return _checked_moments(state)[0]


def dispersion_tolerance(lattice: Lattice, T: float, t: float) -> float:
    """Bound on the drift of the minimum-image mean of a thermal packet at time t.

    The continuum packet spreads as sigma^2(t) = lambda^2/4 + (t / (m lambda))^2;
    the window can misplace at most the probability mass beyond L/2, each unit of
    it by at most L.
    """
    lam = thermal_length(1 / T, lattice.m)
    sigma = math.sqrt(lam**2 / 4 + (t / (lattice.m * lam)) ** 2)
    return lattice.D * lattice.L * math.erfc(lattice.L / (2 * math.sqrt(2) * sigma))


@dataclass(frozen=True)
class EnergyStats:
    mean: float
    variance: float
    uv_converged: bool
    edge_weight: float


def energy_stats(state: WavePacketState) -> EnergyStats:
    lat = state.lattice
    w = np.abs(state.amplitudes) ** 2
    norm = np.sum(w)
    mean = np.sum(lat.eps * w) / norm
    var = np.sum((lat.eps - mean) ** 2 * w) / norm
    faces = np.zeros(lat.shape, dtype=bool)
    for a in range(lat.D):
        idx = [slice(None)] * lat.D
        idx[a] = [0, lat.M - 1]
        faces[tuple(idx)] = True
    edge = float(w[faces].max() / w.max())
    return EnergyStats(float(mean), float(var), edge < UV_THRESHOLD, edge)


def _warn_uv(stats: EnergyStats):
    if not stats.uv_converged:
        warnings.warn(
            f"momentum grid truncates the state (edge weight {stats.edge_weight:.2e})",
            RegimeWarning,
            stacklevel=3,
        )


def energy_mean(state: WavePacketState) -> float:
    stats = energy_stats(state)
    _warn_uv(stats)
    return stats.mean


def energy_variance(state: WavePacketState) -> float:
    stats = energy_stats(state)
    _warn_uv(stats)
    return stats.variance


def rkt_energy_variance_formula(lattice: Lattice, K, T: float) -> float:
    """(1/Z_T) sum_k eps_{k+K}^2 exp(-beta eps_k) - (D T / 2 + eps_K)^2, as lattice sums."""
    K = lattice._vector(K, "K")
    w = np.exp(-lattice.eps / T)
    eps_shift = np.sum((lattice.k + K.reshape((-1,) + (1,) * lattice.D)) ** 2, axis=0) / (
        2 * lattice.m
    )
    eps_K = K @ K / (2 * lattice.m)
    return float(np.sum(eps_shift**2 * w) / np.sum(w) - (lattice.D * T / 2 + eps_K) ** 2)


@dataclass(frozen=True)
class Uncertainty:
    dk: np.ndarray
    dx: np.ndarray
    product: np.ndarray


def uncertainty(state: WavePacketState) -> Uncertainty:
    lat = state.lattice
    w = np.abs(state.amplitudes) ** 2
    w = w / w.sum()
    kmean = np.array([np.sum(lat.k[a] * w) for a in range(lat.D)])
    dk2 = np.array([np.sum((lat.k[a] - kmean[a]) ** 2 * w) for a in range(lat.D)])
    _, dx2 = _checked_moments(state)
    dk, dx = np.sqrt(dk2), np.sqrt(dx2)
    return Uncertainty(dk, dx, dk * dx)


# -- dynamics ---------------------------------------------------------------------


def evolve(state: WavePacketState, t: float) -> WavePacketState:
    """Free evolution exp(-i H0 t); the nominal centre is advanced by K t / m."""
    lat = state.lattice
    amps = state.amplitudes * np.exp(-1j * lat.eps * t)
    return replace(
        state,
        field=AmplitudeField(lat, MOMENTUM, amps),
        center=state.center + state.K * t / lat.m,
        time=state.time + t,
    )


# -- coherent-state identification ------------------------------------------------


def coherent_alpha(R, K, T: float, m: float = 1.0) -> np.ndarray:
    """alpha = R / lambda_T + i lambda_T K / sqrt(2), the identification as written."""
    if not T > 0:
        raise ValueError(f"T must be positive, got {T!r}")
    lam = thermal_length(1 / T, m)
    return np.asarray(R, dtype=float) / lam + 1j * lam * np.asarray(K, dtype=float) / np.sqrt(2)


def canonical_alpha(x, k, omega: float, m: float = 1.0) -> np.ndarray:
    """Oscillator eigenvalue alpha = (m omega x + i k) / sqrt(2 m omega) for centre (x, k)."""
    return (m * omega * np.asarray(x, dtype=float) + 1j * np.asarray(k, dtype=float)) / np.sqrt(
        2 * m * omega
    )


def coherent_wavefunction(lattice: Lattice, alpha, omega: float) -> AmplitudeField:
    """exp(-m omega |r - r_a|^2 / 2) exp(i k_a.(r - r_a)) on the grid (unnormalised),
    with minimum-image displacements."""
    alpha = np.atleast_1d(np.asarray(alpha, dtype=complex))
    m = lattice.m
    x_a = alpha.real * np.sqrt(2 / (m * omega))
    k_a = alpha.imag * np.sqrt(2 * m * omega)
    shape = (lattice.D,) + (1,) * lattice.D
    d = lattice.min_image(lattice.r - x_a.reshape(shape))
    values = np.exp(-m * omega * np.sum(d**2, axis=0) / 2) * np.exp(
        1j * np.tensordot(k_a, d, axes=(0, 0))
    )
    return AmplitudeField(lattice, "position", values)


@dataclass(frozen=True)
class CoherentMatch:
    omega_star: float
    distance: float
    omega_thermal: float | None
    omega_width_matched: float | None


def match_frequency(state: WavePacketState, T: float | None = None) -> CoherentMatch:
    """Oscillator frequency whose coherent state is closest (L2, both normalised) to
    the packet's position wave function.  Reports the T-based candidates alongside."""
    lat = state.lattice
    psi = state.position_field().values
    psi = psi / np.sqrt(np.sum(np.abs(psi) ** 2))

    def distance(log_omega):
        omega = np.exp(log_omega)
        g = coherent_wavefunction(lat, canonical_alpha(state.center, state.K, omega, lat.m), omega)
        g = g.values / np.sqrt(np.sum(np.abs(g.values) ** 2))
        return float(np.sqrt(np.sum(np.abs(psi - g) ** 2)))

    # widths between a grid spacing and the box
    lo = np.log(1 / (lat.m * lat.L**2))
    hi = np.log(1 / (lat.m * lat.dx**2))
    res = minimize_scalar(distance, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
    return CoherentMatch(
        float(np.exp(res.x)),
        float(res.fun),
        None if T is None else float(T),
        None if T is None else 2.0 * float(T),
    )


def wavefunction_table(state: WavePacketState) -> tuple[np.ndarray, np.ndarray]:
    """(positions with shape (M^D, D), complex values) for CSV dumps."""
    lat = state.lattice
    return lat.r.reshape(lat.D, -1).T, state.position_field().values.reshape(-1)
