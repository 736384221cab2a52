"""One-particle greater Green's function as exact discrete spectral lines.

Lines sit at ``omega = eps_k' - eps_k`` with weight
``(2 pi / Z) w_k <k|A|k'><k'|B|k>``, where ``w_k`` is ``exp(-beta eps_k)`` in the
eigenstate representation and the K-summed packet weight in the wave-packet one.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .envelope import thermal_envelope
from .lattice import MOMENTUM, Lattice, OperatorMatrix
from .thermal import (
    TemperatureSplit,
    partition_function,
    reconstruct_from_RKT,
    regime,
    rkt_envelope,
    split_regime,
)
from .wavepacket import packet_amplitudes

GROUPING_RTOL = 1e-9
R_INTEGRAL_TOL = 1e-12
WEIGHT_FLOOR_RTOL = 1e-14


@dataclass(frozen=True, eq=False)
class SpectralLines:
    omega: np.ndarray
    weight: np.ndarray
    tol: float
    flags: dict = field(default_factory=dict)

    @property
    def total_weight(self) -> complex:
        return complex(np.sum(self.weight))

    def __len__(self) -> int:
        return len(self.omega)


def grouping_tolerance(omega: np.ndarray) -> float:
    return GROUPING_RTOL * (float(np.max(np.abs(omega), initial=0.0)) + 1)


def merge_lines(omega: np.ndarray, weight: np.ndarray, tol: float | None = None, flags=None) -> SpectralLines:
    """Sort by frequency and add the weights of lines closer than ``tol``."""
    omega = np.asarray(omega, dtype=float).ravel()
    weight = np.asarray(weight, dtype=complex).ravel()
    tol = grouping_tolerance(omega) if tol is None else tol
    order = np.argsort(omega, kind="stable")
    omega, weight = omega[order], weight[order]
    starts = np.concatenate(([True], np.diff(omega) > tol)) if len(omega) else np.array([], bool)
    group = np.cumsum(starts) - 1
    n = int(group[-1]) + 1 if len(group) else 0
    w = np.zeros(n, dtype=complex)
    np.add.at(w, group, weight)
    om = omega[starts]
    return SpectralLines(om, w, tol, dict(flags or {}))


def _check_operator(lattice: Lattice, op: OperatorMatrix, name: str):
    if op.basis != MOMENTUM:
        raise ValueError(f"{name} must be given in the momentum basis, got {op.basis!r}")
    if op.dim != lattice.size:
        raise ValueError(f"{name} has dimension {op.dim}, lattice has {lattice.size} modes")


def _lines(lattice: Lattice, boltzmann: np.ndarray, Z: float, A, B, flags) -> SpectralLines:
    _check_operator(lattice, A, "A")
    _check_operator(lattice, B, "B")
    eps = lattice.eps.reshape(-1)
    omega = eps[None, :] - eps[:, None]  # [k, k'] -> eps_k' - eps_k
    weight = (2 * np.pi / Z) * boltzmann[:, None] * A.data * B.data.T
    keep = weight != 0  # pairs with A_kk' B_k'k = 0 carry no line
    return merge_lines(omega[keep], weight[keep], tol=grouping_tolerance(omega), flags=flags)


def greens_eigen(lattice: Lattice, beta: float, A: OperatorMatrix, B: OperatorMatrix) -> SpectralLines:
    w = np.exp(-beta * lattice.eps.reshape(-1))
    flags = {"representation": "eigen", "regime": regime(lattice, beta).as_dict()}
    return _lines(lattice, w, partition_function(lattice, beta), A, B, flags)


def r_integral_error(lattice: Lattice, split: TemperatureSplit) -> float:
    """max over K of | (L/M)^D sum_R <k''|R,K,T_R><R,K,T_R|k> - delta |<k-K|phi_T_R>|^2 |.

    The packets carry the envelope L^(-D/2) phi_T_R; the R-sum restores L^D.
    """
    phi = thermal_envelope(lattice, split.beta_R)
    env = rkt_envelope(lattice, split.beta_R)
    positions = lattice.r.reshape(lattice.D, -1)
    err = 0.0
    for idx in np.ndindex(lattice.shape):
        n_K = tuple(int(i) - lattice.M // 2 for i in idx)
        S = np.stack([packet_amplitudes(env, R, n_K).reshape(-1) for R in positions.T], axis=1)
        G = lattice.dx**lattice.D * (S @ S.conj().T)
        expected = np.diag(np.abs(phi.shifted(n_K).reshape(-1)) ** 2)
        err = max(err, float(np.max(np.abs(G - expected))))
    return err


def greens_wavepacket(
    lattice: Lattice, split: TemperatureSplit, A: OperatorMatrix, B: OperatorMatrix
) -> SpectralLines:
    """Lines from the |R,K,T_R> representation of exp(-beta H0).

    The R-integral must collapse to the diagonal exactly; the assembled operator's
    off-diagonal part must vanish; both are asserted.
    """
    err = r_integral_error(lattice, split)
    if err > R_INTEGRAL_TOL:
        raise AssertionError(f"R-integral identity violated: {err:.3e}")
    rep = reconstruct_from_RKT(lattice, split).data
    w = np.real(np.diag(rep))
    scale = float(np.max(np.abs(w)))
    off = float(np.max(np.abs(rep - np.diag(np.diag(rep)))))
    if off > R_INTEGRAL_TOL * max(scale, 1.0):
        raise AssertionError(f"wave-packet Boltzmann operator not diagonal: {off:.3e}")
    flags = {
        "representation": "wavepacket",
        "x": split.x,
        "regime": split_regime(lattice, split),
        "r_integral_error": err,
    }
    # Z from the exact partition function, so line weights compare one to one
    return _lines(lattice, w, partition_function(lattice, split.beta), A, B, flags)


@dataclass(frozen=True)
class SpectrumComparison:
    matched: int
    rel_errors: tuple[float, ...]
    max_rel_error: float
    unmatched_a: tuple[float, ...]
    unmatched_b: tuple[float, ...]
    flagged: tuple[float, ...]  # frequencies whose weight error exceeds ``tol``
    tol: float

    @property
    def ok(self) -> bool:
        return not (self.unmatched_a or self.unmatched_b or self.flagged)


def compare_spectra(
    a: SpectralLines, b: SpectralLines, tol: float = 1e-6, floor_rtol: float = WEIGHT_FLOOR_RTOL
) -> SpectrumComparison:
    """Match lines by frequency within the larger grouping tolerance and compare
    weights relatively.

    Relative errors are taken against ``max(|w_a|, |w_b|, floor)`` with
    ``floor = floor_rtol * sum |w|``: lines below the validated-regime threshold
    carry no resolvable weight.
    """
    gtol = max(a.tol, b.tol)
    floor = floor_rtol * max(float(np.sum(np.abs(a.weight))), float(np.sum(np.abs(b.weight))))
    j = np.searchsorted(b.omega, a.omega)
    used = np.zeros(len(b), dtype=bool)
    rel, flagged, unmatched_a = [], [], []
    for i, om in enumerate(a.omega):
        cands = [c for c in (j[i] - 1, j[i]) if 0 <= c < len(b) and not used[c]]
        c = min(cands, key=lambda c: abs(b.omega[c] - om), default=None)
        if c is None or abs(b.omega[c] - om) > gtol:
            unmatched_a.append(float(om))
            continue
        used[c] = True
        wa, wb = a.weight[i], b.weight[c]
        denom = max(abs(wa), abs(wb), floor)
        r = 0.0 if denom == 0 else float(abs(wa - wb) / denom)
        rel.append(r)
        if r > tol:
            flagged.append(float(om))
    return SpectrumComparison(
        matched=len(rel),
        rel_errors=tuple(rel),
        max_rel_error=max(rel, default=0.0),
        unmatched_a=tuple(unmatched_a),
        unmatched_b=tuple(float(o) for o in b.omega[~used]),
        flagged=tuple(flagged),
        tol=tol,
    )


def sum_rule(lattice: Lattice, beta: float, A: OperatorMatrix, B: OperatorMatrix) -> complex:
    """2 pi Tr(A B rho) with rho = exp(-beta H0) / Z."""
    w = np.exp(-beta * lattice.eps.reshape(-1))
    return complex(2 * np.pi * np.sum(np.diag(A.data @ B.data) * w) / np.sum(w))
