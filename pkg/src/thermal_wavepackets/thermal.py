"""The Boltzmann operator exp(-beta H0) and its three diagonal representations.

Representations assembled here, all in the one-particle momentum basis:

* eigenstates: diag(exp(-beta eps_k));
* |R,T> packets: (L/M)^D sum_R |R,T><R,T|, an exact identity on the lattice;
* |R,K,T_R> packets weighted by exp(-beta_K eps_K), exact only up to the
  lattice/continuum gap of a Gaussian convolution.

The gap of the last one is pure Poisson aliasing of the K-sum and is predicted by
:func:`split_aliasing_bound`.
"""
from __future__ import annotations

import math

from dataclasses import dataclass

import numpy as np

from .envelope import thermal_envelope, thermal_length
from .lattice import MOMENTUM, POSITION, Lattice, OperatorMatrix, dft_matrix
from .wavepacket import packet_amplitudes

REGIME_THRESHOLD = 1e-14
SPLIT_MIN, SPLIT_MAX = 0.05, 0.95


@dataclass(frozen=True)
class Regime:
    """Validated-regime predicate for one inverse temperature."""

    beta: float
    uv: float  # exp(-beta eps_max)
    ir: float  # exp(-(L / lambda)^2)

    @property
    def ok(self) -> bool:
        return self.uv < REGIME_THRESHOLD and self.ir < REGIME_THRESHOLD

    def as_dict(self) -> dict:
        return {"beta": self.beta, "uv": self.uv, "ir": self.ir, "ok": self.ok}


def regime(lattice: Lattice, beta: float) -> Regime:
    lam = thermal_length(beta, lattice.m)
    return Regime(
        float(beta),
        float(np.exp(-beta * lattice.eps_max)),
        float(np.exp(-((lattice.L / lam) ** 2))),
    )


@dataclass(frozen=True)
class ThermalParams:
    lattice: Lattice
    beta: float
    lam: float
    Z_lattice: float
    Z_continuum: float

    @property
    def T(self) -> float:
        return 1 / self.beta

    @property
    def regime(self) -> Regime:
        return regime(self.lattice, self.beta)


def partition_function(lattice: Lattice, beta: float) -> float:
    return float(np.sum(np.exp(-beta * lattice.eps)))


def thermal_params(lattice: Lattice, T: float) -> ThermalParams:
    if not T > 0:
        raise ValueError(f"temperature must be positive, got {T!r}")
    beta = 1 / T
    lam = thermal_length(beta, lattice.m)
    return ThermalParams(
        lattice,
        beta,
        lam,
        partition_function(lattice, beta),
        float((lattice.L / (lam * np.sqrt(np.pi))) ** lattice.D),
    )


@dataclass(frozen=True)
class TemperatureSplit:
    """k_B T = k_B T_R + k_B T_K with T_K = x T; packet spread gets T_R."""

    T: float
    x: float

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"temperature must be positive, got {self.T!r}")
        if not SPLIT_MIN <= self.x <= SPLIT_MAX:
            raise ValueError(f"split fraction x must lie in [{SPLIT_MIN}, {SPLIT_MAX}], got {self.x!r}")

    @property
    def T_K(self) -> float:
        return self.x * self.T

    @property
    def T_R(self) -> float:
        return self.T - self.T_K

    @property
    def beta(self) -> float:
        return 1 / self.T

    @property
    def beta_R(self) -> float:
        return 1 / self.T_R

    @property
    def beta_K(self) -> float:
        return 1 / self.T_K


def split_prefactor(split: TemperatureSplit, m: float, D: int) -> float:
    """(sqrt(pi) lambda_{T_R} lambda_{T_K} / lambda_T)^D."""
    lam = thermal_length(split.beta, m)
    lam_R = thermal_length(split.beta_R, m)
    lam_K = thermal_length(split.beta_K, m)
    return float((np.sqrt(np.pi) * lam_R * lam_K / lam) ** D)


def split_regime(lattice: Lattice, split: TemperatureSplit) -> dict:
    regs = {name: regime(lattice, b) for name, b in
            (("beta", split.beta), ("beta_R", split.beta_R), ("beta_K", split.beta_K))}
    out = {name: r.as_dict() for name, r in regs.items()}
    out["ok"] = all(r.ok for r in regs.values())
    out["aliasing_bound"] = split_aliasing_bound(lattice, split)
    return out


def split_aliasing_bound(lattice: Lattice, split: TemperatureSplit) -> float:
    """Leading relative error of the lattice K-sum in the split identity.

    Poisson summation of the Gaussian in K gives image terms of relative size
    exp(-L^2 / (lambda_R^2 + lambda_K^2)) per axis, two per axis at first order.
    """
    lam_R = thermal_length(split.beta_R, lattice.m)
    lam_K = thermal_length(split.beta_K, lattice.m)
    per_axis = 2 * np.exp(-lattice.L**2 / (lam_R**2 + lam_K**2))
    return float((1 + per_axis) ** lattice.D - 1)


# -- kernels ---------------------------------------------------------------------


def lattice_kernel(lattice: Lattice, beta: float, r_prime, r) -> complex:
    d = lattice._vector(r_prime, "r'") - lattice._vector(r, "r")
    phase = np.tensordot(d, lattice.k, axes=(0, 0))
    return complex(np.sum(np.exp(1j * phase - beta * lattice.eps)) / lattice.L**lattice.D)


def boltzmann_kernel_r(params: ThermalParams, r_prime, r) -> complex:
    """<r'|exp(-beta H0)|r> as the exact lattice sum over k."""
    return lattice_kernel(params.lattice, params.beta, r_prime, r)


def gaussian_kernel_r(params: ThermalParams, r_prime, r) -> float:
    """Closed form (Z_T / L^D) exp(-|r'-r|^2 / lambda_T^2), minimum-image distance,
    continuum Z_T."""
    lat = params.lattice
    d = lat.min_image(lat._vector(r_prime, "r'") - lat._vector(r, "r"))
    return float(params.Z_continuum / lat.L**lat.D * np.exp(-(d @ d) / params.lam**2))


def kernel_table(params: ThermalParams) -> list[tuple[float, float, float, float]]:
    """Rows (separation, exact, gaussian, rel_error) for separations 0 .. L/2 along
    the first axis."""
    lat = params.lattice
    rows = []
    origin = np.zeros(lat.D)
    for j in range(lat.M // 2 + 1):
        r = origin.copy()
        r[0] = j * lat.dx
        exact = boltzmann_kernel_r(params, r, origin).real
        gauss = gaussian_kernel_r(params, r, origin)
        rel = abs(gauss - exact) / abs(exact) if exact != 0 else math.inf  # exact kernel underflowed
        rows.append((float(r[0]), exact, gauss, rel))
    return rows


@dataclass(frozen=True)
class SplitCheck:
    lhs: float
    rhs: float
    rel_error: float


def kernel_split(lattice: Lattice, split: TemperatureSplit, r_prime, r) -> SplitCheck:
    """Compare (sqrt(pi) lambda_R lambda_K / lambda)^D K_R K_K with K_beta, all as
    lattice kernels.  Returned as (product_form, direct, rel_error)."""
    kern = {
        b: lattice_kernel(lattice, b, r_prime, r).real
        for b in (split.beta, split.beta_R, split.beta_K)
    }
    product = split_prefactor(split, lattice.m, lattice.D) * kern[split.beta_R] * kern[split.beta_K]
    direct = kern[split.beta]
    return SplitCheck(product, direct, abs(product - direct) / abs(direct))


# -- operator representations ---------------------------------------------------


def boltzmann_matrix(lattice: Lattice, beta: float, basis: str = MOMENTUM) -> OperatorMatrix:
    if basis not in (MOMENTUM, POSITION):
        raise ValueError(f"basis must be 'momentum' or 'position', got {basis!r}")
    diag = np.exp(-beta * lattice.eps).reshape(-1)
    if basis == MOMENTUM:
        return OperatorMatrix(np.diag(diag), MOMENTUM)
    U = dft_matrix(lattice)
    return OperatorMatrix((U * diag) @ U.conj().T, POSITION)


def _packet_columns(envelope, n_K, positions: np.ndarray) -> np.ndarray:
    """Columns <k|R,K> for every R in ``positions`` (shape (D, n_R))."""
    return np.stack(
        [packet_amplitudes(envelope, R, n_K).reshape(-1) for R in positions.T], axis=1
    )


def reconstruct_from_RT(lattice: Lattice, beta: float) -> OperatorMatrix:
    """(L/M)^D sum_R |R,T><R,T| by direct summation over the position grid."""
    env = thermal_envelope(lattice, beta)
    S = _packet_columns(env, (0,) * lattice.D, lattice.r.reshape(lattice.D, -1))
    return OperatorMatrix(
        lattice.dx**lattice.D * (S @ S.conj().T), MOMENTUM, {"regime": regime(lattice, beta).as_dict()}
    )


def rkt_envelope(lattice: Lattice, beta_R: float):
    return thermal_envelope(lattice, beta_R).scaled(lattice.L ** (-lattice.D / 2))


def reconstruct_from_RKT(lattice: Lattice, split: TemperatureSplit) -> OperatorMatrix:
    """prefactor * sum_K exp(-beta_K eps_K) (L/M)^D sum_R |R,K,T_R><R,K,T_R|."""
    env = rkt_envelope(lattice, split.beta_R)
    positions = lattice.r.reshape(lattice.D, -1)
    weight_K = np.exp(-split.beta_K * lattice.eps)
    pref = split_prefactor(split, lattice.m, lattice.D) * lattice.dx**lattice.D
    out = np.zeros((lattice.size, lattice.size), dtype=complex)
    for idx in np.ndindex(lattice.shape):
        n_K = tuple(int(i) - lattice.M // 2 for i in idx)
        S = _packet_columns(env, n_K, positions)
        out += (pref * weight_K[idx]) * (S @ S.conj().T)
    return OperatorMatrix(out, MOMENTUM, {"regime": split_regime(lattice, split)})


def split_rhs(lattice: Lattice, split: TemperatureSplit) -> np.ndarray:
    """(sqrt(pi) lambda_K lambda_R / (lambda L))^D sum_K exp(-beta_K eps_K - beta_R eps_{k-K})
    for every grid k (k - K wrapped), shape ``lattice.shape``."""
    pref = split_prefactor(split, lattice.m, lattice.D) / lattice.L**lattice.D
    wK = np.exp(-split.beta_K * lattice.eps)
    wR = np.exp(-split.beta_R * lattice.eps)
    out = np.zeros(lattice.shape)
    for idx in np.ndindex(lattice.shape):
        shift = tuple(int(i) - lattice.M // 2 for i in idx)
        out += wK[idx] * np.roll(wR, shift, axis=tuple(range(lattice.D)))
    return pref * out


def verify_split(lattice: Lattice, split: TemperatureSplit, k) -> SplitCheck:
    n = lattice.k_index(k)
    idx = tuple(i + lattice.M // 2 for i in n)
    lhs = float(np.exp(-split.beta * lattice.eps[idx]))
    rhs = float(split_rhs(lattice, split)[idx])
    return SplitCheck(lhs, rhs, abs(rhs - lhs) / lhs)


def split_errors(lattice: Lattice, split: TemperatureSplit, kmax: float | None = None) -> np.ndarray:
    """Relative split-identity error on every grid k with |k| <= kmax (default pi M / 2L)."""
    kmax = np.pi * lattice.M / (2 * lattice.L) if kmax is None else kmax
    lhs = np.exp(-split.beta * lattice.eps)
    with np.errstate(invalid="ignore", divide="ignore"):  # masked below if lhs underflowed
        err = np.abs(split_rhs(lattice, split) - lhs) / lhs
    mask = np.sqrt(np.sum(lattice.k**2, axis=0)) <= kmax + 1e-12
    return err[mask]
