"""Periodic simulation box, its position/momentum grids and the FFT basis change.

Conventions (hbar = k_B = 1):

* position grid ``r_j = j L / M`` for ``j = 0 .. M-1`` on every axis, stored in
  natural order;
* momentum grid ``k_n = 2 pi n / L`` for ``n = -M/2 .. M/2-1``, stored in
  fftshift order so that array index ``i`` holds ``n = i - M/2``;
* ``<r|k> = exp(i k.r) / L^(D/2)``. A position array holds continuum-normalised
  wave-function values, so ``sum_j |psi(r_j)|^2 (L/M)^D = sum_n |psi~(k_n)|^2``.

The discrete, orthonormal position states used for operator matrices are
``|j> = (L/M)^(D/2) |r_j>``; see :func:`dft_matrix`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

POSITION = "position"
MOMENTUM = "momentum"
_BASES = (POSITION, MOMENTUM)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Lattice:
    D: int
    L: float
    M: int
    m: float = 1.0

    def __post_init__(self):
        if not (isinstance(self.D, (int, np.integer)) and 1 <= self.D <= 3):
            raise ValueError(f"dimension D must be 1, 2 or 3, got {self.D!r}")
        if not isinstance(self.M, (int, np.integer)) or self.M < 4 or self.M % 2:
            raise ValueError(f"M must be an even integer >= 4, got {self.M!r}")
        if not self.L > 0:
            raise ValueError(f"box length L must be positive, got {self.L!r}")
        if not self.m > 0:
            raise ValueError(f"mass m must be positive, got {self.m!r}")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.M,) * self.D

    @property
    def size(self) -> int:
        return self.M**self.D

    @property
    def dx(self) -> float:
        return self.L / self.M

    @property
    def dk(self) -> float:
        return 2 * np.pi / self.L

    @cached_property
    def n_axis(self) -> np.ndarray:
        return _frozen(np.arange(-self.M // 2, self.M // 2))

    @cached_property
    def k_axis(self) -> np.ndarray:
        return _frozen(self.dk * self.n_axis)

    @cached_property
    def r_axis(self) -> np.ndarray:
        return _frozen(self.dx * np.arange(self.M))

    @cached_property
    def k(self) -> np.ndarray:
        """Momentum grid, shape ``(D,) + shape``."""
        return _frozen(np.stack(np.meshgrid(*[self.k_axis] * self.D, indexing="ij")))

    @cached_property
    def r(self) -> np.ndarray:
        """Position grid, shape ``(D,) + shape``."""
        return _frozen(np.stack(np.meshgrid(*[self.r_axis] * self.D, indexing="ij")))

    @cached_property
    def eps(self) -> np.ndarray:
        """Free dispersion |k|^2 / 2m on the momentum grid."""
        return _frozen(np.sum(self.k**2, axis=0) / (2 * self.m))

    @property
    def eps_max(self) -> float:
        return float(self.eps.max())

    def wrap(self, n):
        """Fold integer momentum indices back into ``[-M/2, M/2)``."""
        half = self.M // 2
        return (np.asarray(n) + half) % self.M - half

    def k_index(self, K) -> tuple[int, ...]:
        """Integer grid index of a momentum vector; raises if it is off the grid."""
        K = self._vector(K, "K")
        n = K / self.dk
        nr = np.rint(n)
        if np.any(np.abs(n - nr) > 1e-9 * np.maximum(1.0, np.abs(n))):
            raise ValueError(f"K={K} is not on the momentum grid (spacing {self.dk})")
        return tuple(int(v) for v in self.wrap(nr.astype(int)))

    def momentum(self, n) -> np.ndarray:
        return self.dk * np.asarray(n, dtype=float)

    def is_grid_position(self, R, tol: float = 1e-9) -> bool:
        j = self._vector(R, "R") / self.dx
        return bool(np.all(np.abs(j - np.rint(j)) <= tol * np.maximum(1.0, np.abs(j))))

    def min_image(self, d):
        """Minimum-image displacement, mapped into ``[-L/2, L/2)``."""
        d = np.asarray(d, dtype=float)
        return d - self.L * np.floor(d / self.L + 0.5)

    def _vector(self, v, name: str) -> np.ndarray:
        v = np.atleast_1d(np.asarray(v, dtype=float))
        if v.shape != (self.D,):
            raise ValueError(f"{name} must have {self.D} components, got shape {v.shape}")
        return v


def build_lattice(D: int, L: float, M: int, m: float = 1.0) -> Lattice:
    return Lattice(D=D, L=float(L), M=M, m=float(m))


@dataclass(frozen=True, eq=False)
class AmplitudeField:
    """Complex amplitudes on one of the two grids, tagged with that basis."""

    lattice: Lattice
    basis: str
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.basis not in _BASES:
            raise ValueError(f"basis must be one of {_BASES}, got {self.basis!r}")
        values = np.asarray(self.values, dtype=complex)
        if values.shape != self.lattice.shape:
            raise ValueError(f"expected shape {self.lattice.shape}, got {values.shape}")
        object.__setattr__(self, "values", _frozen(values))

    def norm2(self) -> float:
        w = self.lattice.dx**self.lattice.D if self.basis == POSITION else 1.0
        return float(np.sum(np.abs(self.values) ** 2) * w)


def momentum_to_position_array(lattice: Lattice, psi_k: np.ndarray) -> np.ndarray:
    axes = tuple(range(lattice.D))
    scale = lattice.size / lattice.L ** (lattice.D / 2)
    return scale * np.fft.ifftn(np.fft.ifftshift(psi_k, axes=axes), axes=axes)


def position_to_momentum_array(lattice: Lattice, psi_r: np.ndarray) -> np.ndarray:
    axes = tuple(range(lattice.D))
    scale = lattice.L ** (lattice.D / 2) / lattice.size
    return scale * np.fft.fftshift(np.fft.fftn(psi_r, axes=axes), axes=axes)


def to_position(f: AmplitudeField) -> AmplitudeField:
    if f.basis != MOMENTUM:
        raise ValueError(f"to_position needs a momentum-basis field, got {f.basis!r}")
    return AmplitudeField(f.lattice, POSITION, momentum_to_position_array(f.lattice, f.values))


def to_momentum(f: AmplitudeField) -> AmplitudeField:
    if f.basis != POSITION:
        raise ValueError(f"to_momentum needs a position-basis field, got {f.basis!r}")
    return AmplitudeField(f.lattice, MOMENTUM, position_to_momentum_array(f.lattice, f.values))


def plane_wave_sum(lattice: Lattice, psi_k: np.ndarray, r) -> complex:
    """``sum_k psi~(k) <r|k>`` at an arbitrary point; O(M^D), no FFT."""
    r = lattice._vector(r, "r")
    phase = np.tensordot(r, lattice.k, axes=(0, 0))
    return complex(np.sum(psi_k * np.exp(1j * phase)) / lattice.L ** (lattice.D / 2))


def dft_matrix(lattice: Lattice) -> np.ndarray:
    """Unitary ``U[j, k] = <j|k>`` between orthonormal discrete position states and
    momentum states, rows/columns flattened in C order of the respective grids."""
    r = lattice.r.reshape(lattice.D, -1)
    k = lattice.k.reshape(lattice.D, -1)
    return np.exp(1j * (r.T @ k)) / np.sqrt(lattice.size)


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Dense operator matrix in a declared basis.

    ``basis`` is ``"momentum"``/``"position"`` for one-particle operators (flattened
    grid order) or ``"fock"`` for symmetrised N-particle operators.  ``flags`` carries
    regime diagnostics for representations that are only asymptotically exact.
    """

    data: np.ndarray = field(repr=False)
    basis: str
    flags: dict = field(default_factory=dict)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        if data.ndim != 2 or data.shape[0] != data.shape[1]:
            raise ValueError(f"operator matrix must be square, got shape {data.shape}")
        object.__setattr__(self, "data", _frozen(data))

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.data - self.data.conj().T)))

    def to_position(self, lattice: Lattice) -> "OperatorMatrix":
        if self.basis != MOMENTUM:
            raise ValueError(f"expected a momentum-basis operator, got {self.basis!r}")
        U = dft_matrix(lattice)
        return OperatorMatrix(U @ self.data @ U.conj().T, POSITION, dict(self.flags))
