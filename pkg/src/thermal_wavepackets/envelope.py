"""Envelope states |phi> fixing a wave-packet's momentum distribution.

Envelopes live in the momentum basis; position profiles are always derived with
the FFT, since on a periodic box the thermal profile is a theta function rather
than a pure Gaussian.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lattice import MOMENTUM, AmplitudeField, Lattice, _frozen, to_position

GENERIC = "generic"
DELTA = "delta_peaked"
THERMAL = "thermal"

SYMMETRY_RTOL = 1e-12


def symmetry_error(amplitudes: np.ndarray) -> float:
    """max |phi(k) - phi(-k)| over modes whose negation is on the grid.

    Index ``i`` holds ``n = i - M/2`` so the partner of ``i >= 1`` is ``M - i``;
    the edge mode ``n = -M/2`` (index 0) has no partner and is skipped.
    """
    inner = amplitudes[(slice(1, None),) * amplitudes.ndim]
    flipped = inner[(slice(None, None, -1),) * amplitudes.ndim]
    return float(np.max(np.abs(inner - flipped)))


@dataclass(frozen=True, eq=False)
class Envelope:
    lattice: Lattice
    amplitudes: np.ndarray = field(repr=False)
    kind: str = GENERIC
    beta: float | None = None

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex)
        if a.shape != self.lattice.shape:
            raise ValueError(f"expected shape {self.lattice.shape}, got {a.shape}")
        scale = np.max(np.abs(a))
        if scale == 0:
            raise ValueError("envelope must have nonzero norm")
        if symmetry_error(a) > SYMMETRY_RTOL * scale:
            raise ValueError("envelope must satisfy <k|phi> = <-k|phi>")
        object.__setattr__(self, "amplitudes", _frozen(a))

    @property
    def norm2(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def scaled(self, factor: complex) -> "Envelope":
        return Envelope(self.lattice, factor * self.amplitudes, self.kind, self.beta)

    def normalized(self) -> "Envelope":
        return self.scaled(1 / np.sqrt(self.norm2))

    def shifted(self, n_K) -> np.ndarray:
        """Array of ``<k - K|phi>`` with ``k - K`` wrapped onto the grid."""
        return np.roll(self.amplitudes, tuple(n_K), axis=tuple(range(self.lattice.D)))

    def as_field(self) -> AmplitudeField:
        return AmplitudeField(self.lattice, MOMENTUM, self.amplitudes)

    def position_profile(self) -> AmplitudeField:
        return to_position(self.as_field())


def thermal_length(beta: float, m: float = 1.0) -> float:
    """lambda_T from k_B T = 4 hbar^2 / (2 m lambda_T^2), i.e. sqrt(2 beta / m)."""
    return float(np.sqrt(2 * beta / m))


def delta_envelope(lattice: Lattice) -> Envelope:
    a = np.zeros(lattice.shape, dtype=complex)
    a[(lattice.M // 2,) * lattice.D] = 1.0
    return Envelope(lattice, a, DELTA)


def thermal_envelope(lattice: Lattice, beta: float) -> Envelope:
    """<k|phi_T> = exp(-beta eps_k / 2) / L^(D/2), i.e. exp(-beta H0/2)|r=0>."""
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta!r}")
    a = np.exp(-beta * lattice.eps / 2) / lattice.L ** (lattice.D / 2)
    return Envelope(lattice, a, THERMAL, float(beta))
