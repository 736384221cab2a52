"""Symmetrised N-particle algebra in the wave-packet basis.

Fock basis states are ``a+_{c_1} ... a+_{c_N}|v> / sqrt(prod n_k!)`` with the mode
indices ``c_1 <= ... <= c_N`` ascending in flattened grid order; for fermions this
ordering fixes the sign convention.  The amplitude of a product state
``a+_{l_1} ... a+_{l_N}|v>`` on such a configuration is the permanent (bosons) or
determinant (fermions) of ``[<c_i|l_j>]``, divided by ``sqrt(prod n_k!)``.

Two independent routes are kept on purpose: :func:`fock_amplitudes` goes through
permanents/determinants, while :func:`direct_two_body_matrix` applies ladder
operators to occupation tuples.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .envelope import Envelope, thermal_envelope
from .lattice import Lattice, OperatorMatrix
from .thermal import (
    TemperatureSplit,
    regime,
    rkt_envelope,
    split_prefactor,
    split_regime,
)
from .wavepacket import WavePacketParams, make_state, packet_amplitudes

BOSON = "boson"
FERMION = "fermion"
N_MAX = 6
CLOSURE_N_MAX = 3
CLOSURE_MODES_MAX = 16


def _check_statistics(statistics: str):
    if statistics not in (BOSON, FERMION):
        raise ValueError(f"statistics must be 'boson' or 'fermion', got {statistics!r}")


# -- permanents ------------------------------------------------------------------


def _permanent_direct(a: np.ndarray) -> complex:
    n = a.shape[0]
    rows = np.arange(n)
    return complex(sum(np.prod(a[rows, list(p)]) for p in itertools.permutations(range(n))))


def _permanent_ryser(a: np.ndarray) -> complex:
    """Ryser's formula, visiting column subsets in Gray-code order."""
    n = a.shape[0]
    row_sums = np.zeros(n, dtype=complex)
    total = 0j
    gray_prev = 0
    for i in range(1, 2**n):
        gray = i ^ (i >> 1)
        col = (gray ^ gray_prev).bit_length() - 1
        if gray & (1 << col):
            row_sums += a[:, col]
        else:
            row_sums -= a[:, col]
        gray_prev = gray
        size = bin(gray).count("1")
        total += (-1) ** size * np.prod(row_sums)
    return complex((-1) ** n * total)


def permanent(a) -> complex:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"permanent needs a square matrix, got shape {a.shape}")
    n = a.shape[0]
    if n == 0:
        return 1.0 + 0j
    if n > N_MAX:
        raise ValueError(f"permanents are capped at N = {N_MAX}, got {n}")
    return _permanent_ryser(a) if n >= 4 else _permanent_direct(a)


def _batched_permanent(a: np.ndarray) -> np.ndarray:
    """Permanents of a stack ``(..., n, n)`` by direct expansion (n <= 3 in practice)."""
    n = a.shape[-1]
    rows = np.arange(n)
    out = np.zeros(a.shape[:-2], dtype=complex)
    for p in itertools.permutations(range(n)):
        out += np.prod(a[..., rows, list(p)], axis=-1)
    return out


# -- bases and product states --------------------------------------------------------


@dataclass(frozen=True)
class FockBasis:
    n_modes: int
    N: int
    statistics: str

    def __post_init__(self):
        _check_statistics(self.statistics)
        if self.N < 1:
            raise ValueError(f"particle number must be >= 1, got {self.N}")
        if self.statistics == FERMION and self.N > self.n_modes:
            raise ValueError("more fermions than modes")

    @cached_property
    def configurations(self) -> list[tuple[int, ...]]:
        modes = range(self.n_modes)
        if self.statistics == BOSON:
            return list(itertools.combinations_with_replacement(modes, self.N))
        return list(itertools.combinations(modes, self.N))

    @cached_property
    def index(self) -> dict[tuple[int, ...], int]:
        return {c: i for i, c in enumerate(self.configurations)}

    @cached_property
    def norms(self) -> np.ndarray:
        """sqrt(prod n_k!) per configuration (all ones for fermions)."""
        return np.array(
            [
                math.sqrt(math.prod(math.factorial(c.count(k)) for k in set(c)))
                for c in self.configurations
            ]
        )

    @property
    def dim(self) -> int:
        return len(self.configurations)

    @staticmethod
    def expected_dim(n_modes: int, N: int, statistics: str) -> int:
        if statistics == BOSON:
            return math.comb(n_modes + N - 1, N)
        return math.comb(n_modes, N)


@dataclass(frozen=True, eq=False)
class ProductState:
    """a+_{f_1} ... a+_{f_N}|v> for single-particle momentum amplitudes ``factors``
    (shape (N, n_modes)); no normalisation is applied."""

    factors: np.ndarray = field(repr=False)
    statistics: str

    def __post_init__(self):
        _check_statistics(self.statistics)
        f = np.atleast_2d(np.asarray(self.factors, dtype=complex))
        if np.any(np.all(f == 0, axis=1)):
            raise ValueError("product-state factors must be nonzero")
        object.__setattr__(self, "factors", f)

    @property
    def N(self) -> int:
        return self.factors.shape[0]


def product_overlap(a: ProductState, b: ProductState) -> complex:
    """<v| a_{a_N} ... a_{a_1} a+_{b_1} ... a+_{b_N} |v>."""
    if a.N != b.N:
        raise ValueError(f"particle numbers differ: {a.N} vs {b.N}")
    if a.statistics != b.statistics:
        raise ValueError("statistics differ")
    gram = a.factors.conj() @ b.factors.T
    if a.statistics == FERMION:
        return complex(np.linalg.det(gram))
    return permanent(gram)


def fock_amplitudes(basis: FockBasis, single: np.ndarray, tuples: np.ndarray) -> np.ndarray:
    """<c|a+_{l_1}...a+_{l_N}|v> for every configuration c and label tuple.

    ``single`` has shape (n_labels, n_modes) holding <k|l>; ``tuples`` has shape
    (n_tuples, N) of label indices.  Returns shape (dim, n_tuples).
    """
    out = np.empty((basis.dim, len(tuples)), dtype=complex)
    for i, c in enumerate(basis.configurations):
        # mats[t, i, j] = <c_i | l_{t, j}>
        mats = single[:, list(c)].T[:, tuples].transpose(1, 0, 2)
        if basis.statistics == FERMION:
            out[i] = np.linalg.det(mats)
        else:
            out[i] = _batched_permanent(mats)
    return out / basis.norms[:, None]


def _all_tuples(n_labels: int, N: int) -> np.ndarray:
    return np.array(list(itertools.product(range(n_labels), repeat=N)), dtype=int).reshape(-1, N)


def _symmetrized_sum(basis: FockBasis, single: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """(1/N!) sum over ordered label tuples of prod_i w_{l_i} |P_l><P_l| on ``basis``."""
    tuples = _all_tuples(single.shape[0], basis.N)
    A = fock_amplitudes(basis, single, tuples)
    w = np.prod(weights[tuples], axis=1)
    return (A * w) @ A.conj().T / math.factorial(basis.N)


def _guard(lattice: Lattice, N: int):
    if N > CLOSURE_N_MAX or lattice.size > CLOSURE_MODES_MAX:
        raise ValueError(
            f"N-particle sums limited to N <= {CLOSURE_N_MAX} and M^D <= {CLOSURE_MODES_MAX}"
            f" (got N={N}, M^D={lattice.size})"
        )


def _grid_positions(lattice: Lattice, stride: int = 1) -> np.ndarray:
    pos = lattice.r.reshape(lattice.D, -1)
    if stride == 1:
        return pos
    keep = np.all(np.round(pos / lattice.dx).astype(int) % stride == 0, axis=0)
    return pos[:, keep]


def _packet_labels(envelope: Envelope, stride: int = 1, momenta=None):
    """<k|R,K> for every (K, R) label, K outer; returns (single, K-index of each label).

    ``momenta`` restricts K to the given grid index tuples (default: the full grid).
    """
    lat = envelope.lattice
    positions = _grid_positions(lat, stride)
    if momenta is None:
        momenta = [tuple(int(i) - lat.M // 2 for i in idx) for idx in np.ndindex(lat.shape)]
    rows, k_of_label = [], []
    for n_K in momenta:
        flat = int(np.ravel_multi_index(tuple(np.array(n_K) + lat.M // 2), lat.shape))
        for R in positions.T:
            rows.append(packet_amplitudes(envelope, R, n_K).reshape(-1))
            k_of_label.append(flat)
    return np.array(rows), np.array(k_of_label)


# -- closure and Boltzmann operator ------------------------------------------------------


def number_operator_check(lattice: Lattice, envelope: Envelope) -> float:
    """max |sum_K (1/M^D) sum_R |R,K><R,K| - 1| for a normalised envelope."""
    if not np.isclose(envelope.norm2, 1.0, rtol=1e-12):
        raise ValueError(f"envelope must be normalised, <phi|phi> = {envelope.norm2}")
    single, _ = _packet_labels(envelope)
    S = single.T
    resolved = (S @ S.conj().T) / lattice.size
    return float(np.max(np.abs(resolved - np.eye(lattice.size))))


def closure_N(lattice: Lattice, envelope: Envelope, N: int, statistics: str) -> float:
    """max |(1/N!) sum_{K_i} sum_{R_i} M^(-DN) |P><P| - 1_N| on the Fock basis."""
    _guard(lattice, N)
    if not np.isclose(envelope.norm2, 1.0, rtol=1e-12):
        raise ValueError(f"envelope must be normalised, <phi|phi> = {envelope.norm2}")
    basis = FockBasis(lattice.size, N, statistics)
    single, _ = _packet_labels(envelope)
    weights = np.full(single.shape[0], 1.0 / lattice.size)
    resolved = _symmetrized_sum(basis, single, weights)
    return float(np.max(np.abs(resolved - np.eye(basis.dim))))


EIGEN, RT, RKT = "eigen", "RT", "RKT"


def boltzmann_N(
    lattice: Lattice,
    beta: float,
    N: int,
    statistics: str,
    representation: str = EIGEN,
    split: TemperatureSplit | None = None,
    stride: int = 1,
) -> OperatorMatrix:
    """{exp(-beta H0)}_N on the Fock basis in one of three representations.

    ``stride`` thins the R-grid of the packet representations; any stride other
    than 1 breaks the exact lattice identities and is labelled approximate.
    """
    _guard(lattice, N)
    basis = FockBasis(lattice.size, N, statistics)
    flags: dict = {"representation": representation, "approximate": stride != 1}
    if representation == EIGEN:
        eps = lattice.eps.reshape(-1)
        diag = [np.exp(-beta * sum(eps[k] for k in c)) for c in basis.configurations]
        flags["regime"] = regime(lattice, beta).as_dict()
        return OperatorMatrix(np.diag(diag), "fock", flags)
    if representation == RT:
        env = thermal_envelope(lattice, beta)
        single, _ = _packet_labels(env, stride, momenta=[(0,) * lattice.D])
        weights = np.full(single.shape[0], (stride * lattice.dx) ** lattice.D)
        flags["regime"] = regime(lattice, beta).as_dict()
    elif representation == RKT:
        if split is None:
            raise ValueError("the RKT representation needs a TemperatureSplit")
        if not np.isclose(split.beta, beta, rtol=1e-12):
            raise ValueError("split temperature does not match beta")
        single, k_of_label = _packet_labels(rkt_envelope(lattice, split.beta_R), stride)
        wK = np.exp(-split.beta_K * lattice.eps.reshape(-1))
        pref = split_prefactor(split, lattice.m, lattice.D)
        weights = pref * wK[k_of_label] * (stride * lattice.dx) ** lattice.D
        flags["regime"] = split_regime(lattice, split)
    else:
        raise ValueError(f"unknown representation {representation!r}")
    return OperatorMatrix(_symmetrized_sum(basis, single, weights), "fock", flags)


# -- free Hamiltonian and two-body potential ----------------------------------------------


def h0_wavepacket_element(envelope: Envelope, R_prime, K_prime, R, K) -> complex:
    """<R',K'|H0|R,K> as the p-sum with eps_{p + (K'+K)/2}.

    ``p`` runs over ``k - (K'+K)/2`` for k on the grid, so the dispersion is
    evaluated at grid momenta; K' - K must be an even grid multiple.
    """
    lat = envelope.lattice
    Rp, R = lat._vector(R_prime, "R'"), lat._vector(R, "R")
    nKp, nK = np.array(lat.k_index(K_prime)), np.array(lat.k_index(K))
    d = lat.wrap(nKp - nK)
    if np.any(d % 2):
        raise ValueError("K' - K must be an even multiple of the grid spacing")
    nbar = lat.wrap(nK + d // 2)  # (K' + K)/2 on the grid
    Kbar = lat.momentum(nbar)
    dR = Rp - R
    p = lat.k - Kbar.reshape((lat.D,) + (1,) * lat.D)
    axes = tuple(range(lat.D))
    # with k = p + Kbar: p - dK/2 = k - K' (bra factor), p + dK/2 = k - K (ket factor)
    phi_ket = np.roll(envelope.amplitudes, tuple(nbar - d // 2), axis=axes)
    phi_bra = np.roll(envelope.amplitudes, tuple(nbar + d // 2), axis=axes)
    terms = lat.eps * np.exp(1j * np.tensordot(dR, p, axes=(0, 0))) * np.conj(phi_bra) * phi_ket
    return complex(np.exp(1j * Kbar @ dR) * np.sum(terms))


def h0_bruteforce(envelope: Envelope, R_prime, K_prime, R, K) -> complex:
    """sum_k eps_k <R',K'|k><k|R,K>."""
    a = make_state(WavePacketParams(R_prime, K_prime, envelope)).amplitudes
    b = make_state(WavePacketParams(R, K, envelope)).amplitudes
    return complex(np.sum(envelope.lattice.eps * np.conj(a) * b))


def u_q_amplitude(envelope: Envelope, q, R_prime, K_prime, R, K) -> complex:
    """u_q(R',K';R,K) = exp(i q.R') <R',K'-q|R,K> (grid-aligned R')."""
    from .wavepacket import overlap

    lat = envelope.lattice
    q = lat._vector(q, "q")
    nKq = lat.wrap(np.array(lat.k_index(K_prime)) - np.array(lat.k_index(q)))
    bra = WavePacketParams(R_prime, lat.momentum(nKq), envelope)
    ket = WavePacketParams(R, K, envelope)
    return complex(np.exp(1j * q @ bra.R) * overlap(bra, ket))


def u_q_direct(envelope: Envelope, q, R_prime, K_prime, R, K) -> complex:
    """sum_k <R',K'|k+q><k|R,K> with k+q wrapped."""
    lat = envelope.lattice
    nq = lat.k_index(q)
    a = make_state(WavePacketParams(R_prime, K_prime, envelope)).amplitudes
    b = make_state(WavePacketParams(R, K, envelope)).amplitudes
    a_shift = np.roll(a, tuple(-n for n in nq), axis=tuple(range(lat.D)))  # <R',K'|k+q>*
    return complex(np.sum(np.conj(a_shift) * b))


def _u_matrices(envelope: Envelope, single: np.ndarray) -> np.ndarray:
    """U[q, l', l] = sum_k <l'|k+q><k|l> for every grid q (flattened)."""
    lat = envelope.lattice
    out = np.empty((lat.size, single.shape[0], single.shape[0]), dtype=complex)
    grid = single.reshape((-1,) + lat.shape)
    axes = tuple(range(1, lat.D + 1))
    for flat, idx in enumerate(np.ndindex(lat.shape)):
        nq = tuple(int(i) - lat.M // 2 for i in idx)
        shifted = np.roll(grid, tuple(-n for n in nq), axis=axes).reshape(single.shape)
        out[flat] = shifted.conj() @ single.T
    return out


def _neg_q_index(lattice: Lattice) -> np.ndarray:
    idx = np.array(list(np.ndindex(lattice.shape))) - lattice.M // 2
    neg = lattice.wrap(-idx) + lattice.M // 2
    return np.ravel_multi_index(tuple(neg.T), lattice.shape)


@dataclass(frozen=True, eq=False)
class WavePacketTensor:
    """V(l1', l2'; l2, l1) = sum_q V_q u_q(l1'; l1) u_{-q}(l2'; l2) over all labels."""

    tensor: np.ndarray = field(repr=False)  # [l1', l2', l2, l1]
    single: np.ndarray = field(repr=False)  # <k|l>
    measure: float  # weight of one label in the closure sum


def v_wavepacket_tensor(lattice: Lattice, envelope: Envelope, V_q) -> WavePacketTensor:
    """Scattering amplitudes between all (R, K) packet labels for a potential V_q.

    ``V_q`` is an array on the momentum grid (``lattice.shape``) or a callable of
    the momentum vector.  Intended for tiny lattices: the tensor has (M^{2D})^4
    entries.
    """
    if lattice.size > CLOSURE_MODES_MAX:
        raise ValueError(f"two-body tensor limited to M^D <= {CLOSURE_MODES_MAX}")
    Vq = _potential_array(lattice, V_q).reshape(-1)
    single, _ = _packet_labels(envelope)
    U = _u_matrices(envelope, single)
    U_neg = U[_neg_q_index(lattice)]
    tensor = np.einsum("q,qac,qbd->abdc", Vq, U, U_neg)
    return WavePacketTensor(tensor, single, 1.0 / lattice.size)


def _potential_array(lattice: Lattice, V_q) -> np.ndarray:
    if callable(V_q):
        return np.array(
            [V_q(lattice.momentum(np.array(idx) - lattice.M // 2)) for idx in np.ndindex(lattice.shape)],
            dtype=complex,
        ).reshape(lattice.shape)
    Vq = np.asarray(V_q, dtype=complex)
    if Vq.shape != lattice.shape:
        raise ValueError(f"V_q must have shape {lattice.shape}, got {Vq.shape}")
    return Vq


def reassemble_two_body(t: WavePacketTensor, statistics: str) -> OperatorMatrix:
    """(1/2) sum_{labels} mu^4 V(l1',l2';l2,l1) a+_{l1'} a+_{l2'} a_{l2} a_{l1} on the
    two-particle Fock basis (closure measure mu per label, normalised envelope)."""
    n_labels, n_modes = t.single.shape
    basis = FockBasis(n_modes, 2, statistics)
    tuples = _all_tuples(n_labels, 2)
    A = fock_amplitudes(basis, t.single, tuples)  # <c|a+_{l1} a+_{l2}|v>
    Vmat = t.tensor.reshape(n_labels**2, n_labels**2)
    # column (l2, l1) of the tensor pairs with <v|a_{l2} a_{l1}|c'> = conj <c'|a+_{l1} a+_{l2}|v>
    swap = (tuples[:, 1] * n_labels + tuples[:, 0])
    Vmat = Vmat[:, swap]
    return OperatorMatrix(0.5 * t.measure**4 * (A @ Vmat @ A.conj().T), "fock")


# -- ladder-operator route ---------------------------------------------------------------


def _annihilate(config: tuple[int, ...], k: int, statistics: str):
    if k not in config:
        return None, 0.0
    pos = config.index(k)
    if statistics == FERMION:
        amp = (-1) ** pos
    else:
        amp = math.sqrt(config.count(k))
    return config[:pos] + config[pos + 1 :], amp


def _create(config: tuple[int, ...], k: int, statistics: str):
    below = sum(1 for c in config if c < k)
    if statistics == FERMION:
        if k in config:
            return None, 0.0
        amp = (-1) ** below
    else:
        amp = math.sqrt(config.count(k) + 1)
    return tuple(sorted(config + (k,))), amp


def direct_two_body_matrix(lattice: Lattice, V_q, statistics: str) -> OperatorMatrix:
    """(1/2) sum_q V_q sum_{k1 k2} a+_{k1+q} a+_{k2-q} a_{k2} a_{k1} on the
    two-particle momentum Fock basis (umklapp-wrapped momenta)."""
    basis = FockBasis(lattice.size, 2, statistics)
    Vq = _potential_array(lattice, V_q).reshape(-1)
    idx = np.array(list(np.ndindex(lattice.shape))) - lattice.M // 2

    def add(i, j):
        return int(np.ravel_multi_index(tuple(lattice.wrap(idx[i] + idx[j]) + lattice.M // 2), lattice.shape))

    def sub(i, j):
        return int(np.ravel_multi_index(tuple(lattice.wrap(idx[i] - idx[j]) + lattice.M // 2), lattice.shape))

    out = np.zeros((basis.dim, basis.dim), dtype=complex)
    for col, c in enumerate(basis.configurations):
        for q in range(lattice.size):
            if Vq[q] == 0:
                continue
            for k1 in range(lattice.size):
                s1, a1 = _annihilate(c, k1, statistics)
                if s1 is None:
                    continue
                for k2 in range(lattice.size):
                    s2, a2 = _annihilate(s1, k2, statistics)
                    if s2 is None:
                        continue
                    s3, a3 = _create(s2, sub(k2, q), statistics)
                    if s3 is None:
                        continue
                    s4, a4 = _create(s3, add(k1, q), statistics)
                    if s4 is None:
                        continue
                    out[basis.index[s4], col] += 0.5 * Vq[q] * a1 * a2 * a3 * a4
    return OperatorMatrix(out, "fock")
