"""Verification suites driven by a :class:`RunConfig`.

Each suite returns a list of :class:`Check` records.  A check fails with reason
``"regime"`` when it depends on the validated regime and the regime predicate is
violated, and with reason ``"tolerance"`` when its error exceeds its tolerance.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import RunConfig
from .envelope import delta_envelope, thermal_envelope, thermal_length
from .greens import compare_spectra, greens_eigen, greens_wavepacket, sum_rule
from .lattice import MOMENTUM, Lattice, OperatorMatrix
from .manybody import (
    EIGEN,
    FERMION,
    RT,
    FockBasis,
    ProductState,
    boltzmann_N,
    closure_N,
    direct_two_body_matrix,
    h0_bruteforce,
    h0_wavepacket_element,
    number_operator_check,
    product_overlap,
    reassemble_two_body,
    v_wavepacket_tensor,
)
from .thermal import (
    TemperatureSplit,
    boltzmann_matrix,
    kernel_split,
    kernel_table,
    reconstruct_from_RKT,
    reconstruct_from_RT,
    regime,
    split_errors,
    split_regime,
    thermal_params,
)
from .wavepacket import (
    WavePacketParams,
    coherent_alpha,
    delta_phi,
    dispersion_tolerance,
    energy_stats,
    evolve,
    fidelity,
    inner,
    make_state,
    match_frequency,
    momentum_mean,
    overlap,
    position_moments,
    rkt_energy_variance_formula,
    rkt_params,
    rt_params,
    uncertainty,
)

REGIME = "regime"
TOLERANCE = "tolerance"


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    error: float
    tolerance: float
    regime: dict | None = None
    requires_regime: bool = False
    info: dict = field(default_factory=dict)

    @property
    def reason(self) -> str | None:
        if self.requires_regime and self.regime is not None and not self.regime["ok"]:
            return REGIME
        if not self.error <= self.tolerance:
            return TOLERANCE
        return None

    @property
    def passed(self) -> bool:
        return self.reason is None

    def as_dict(self) -> dict:
        return {
            "suite": self.suite,
            "name": self.name,
            "error": float(self.error),
            "tolerance": float(self.tolerance),
            "regime": self.regime,
            "requires_regime": self.requires_regime,
            "status": "pass" if self.passed else "fail",
            "reason": self.reason,
            "info": self.info,
        }


def in_band(lattice: Lattice) -> np.ndarray:
    """Modes with |k| <= pi M / (2 L), flattened."""
    kmax = np.pi * lattice.M / (2 * lattice.L)
    return (np.sqrt(np.sum(lattice.k**2, axis=0)) <= kmax + 1e-12).reshape(-1)


def rkt_errors(lattice: Lattice, split: TemperatureSplit) -> tuple[float, float]:
    """(max relative diagonal error in band, max absolute off-diagonal entry)."""
    rep = reconstruct_from_RKT(lattice, split).data
    exact = np.exp(-split.beta * lattice.eps.reshape(-1))
    diag = np.diag(rep)
    with np.errstate(invalid="ignore", divide="ignore"):  # out-of-band modes may underflow
        rel = np.abs(diag - exact) / exact
    off = np.max(np.abs(rep - np.diag(diag)))
    return float(rel[in_band(lattice)].max()), float(off)


def random_hermitian(lattice: Lattice, rng: np.random.Generator) -> OperatorMatrix:
    n = lattice.size
    X = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return OperatorMatrix((X + X.conj().T) / 2, MOMENTUM)


# -- suites -------------------------------------------------------------------------


def suite_closure(cfg: RunConfig) -> list[Check]:
    lat, tol = cfg.lattice, cfg.tol["exact"]
    env = thermal_envelope(lat, 1 / cfg.T).normalized()
    return [
        Check("closure", "one_particle.thermal", number_operator_check(lat, env), tol),
        Check("closure", "one_particle.delta", number_operator_check(lat, delta_envelope(lat)), tol),
    ]


def suite_boltzmann_rt(cfg: RunConfig) -> list[Check]:
    lat, out = cfg.lattice, []
    for T in sorted(cfg.T_list):
        rep = reconstruct_from_RT(lat, 1 / T)
        err = np.max(np.abs(rep.data - boltzmann_matrix(lat, 1 / T).data))
        out.append(Check("boltzmann_rt", f"T={T:g}", float(err), cfg.tol["exact"], rep.flags["regime"]))
    return out


def suite_boltzmann_rkt(cfg: RunConfig) -> list[Check]:
    lat, out = cfg.lattice, []
    for x in sorted(cfg.x_list):
        split = TemperatureSplit(cfg.T, x)
        reg = split_regime(lat, split)
        diag, off = rkt_errors(lat, split)
        info = {"aliasing_bound": reg["aliasing_bound"]}
        out.append(Check("boltzmann_rkt", f"x={x:g}.diagonal", diag, cfg.tol["continuum"], reg, True, info))
        out.append(Check("boltzmann_rkt", f"x={x:g}.offdiagonal", off, cfg.tol["exact"], reg, True))
    return out


def suite_split(cfg: RunConfig) -> list[Check]:
    lat, out = cfg.lattice, []
    for x in sorted(cfg.x_list):
        split = TemperatureSplit(cfg.T, x)
        reg = split_regime(lat, split)
        err = float(split_errors(lat, split).max())
        info = {"aliasing_bound": reg["aliasing_bound"]}
        out.append(Check("split", f"x={x:g}", err, cfg.tol["continuum"], reg, True, info))
    return out


def suite_kernel(cfg: RunConfig) -> list[Check]:
    lat = cfg.lattice
    params = thermal_params(lat, cfg.T)
    reg = regime(lat, params.beta).as_dict()
    tol = cfg.tol["continuum"]
    rows = [r for r in kernel_table(params) if r[0] <= lat.L / 4 + 1e-12]
    out = [
        Check("kernel", "gaussian_form", max(r[3] for r in rows), tol, reg, True),
        Check(
            "kernel",
            "partition_function",
            abs(params.Z_lattice - params.Z_continuum) / params.Z_continuum,
            tol,
            reg,
            True,
            {"Z_lattice": params.Z_lattice, "Z_continuum": params.Z_continuum},
        ),
    ]
    split = TemperatureSplit(cfg.T, cfg.x)
    sreg = split_regime(lat, split)
    origin = np.zeros(lat.D)
    for d in (0.0, 1.0):
        r = origin.copy()
        r[0] = d
        chk = kernel_split(lat, split, r, origin)
        out.append(Check("kernel", f"split.separation={d:g}", chk.rel_error, tol, sreg, True))
    return out


def suite_observables(cfg: RunConfig) -> list[Check]:
    lat, T = cfg.lattice, cfg.T
    reg = regime(lat, 1 / T).as_dict()
    tol, tol_c = cfg.tol["continuum"], cfg.tol["energy_continuum"]
    w = np.exp(-lat.eps / T)
    e_lat = float(np.sum(lat.eps * w) / np.sum(w))
    v_lat = float(np.sum((lat.eps - e_lat) ** 2 * w) / np.sum(w))
    K = np.asarray(cfg.momentum)
    eps_K = float(K @ K / (2 * lat.m))

    rt = make_state(rt_params(lat, cfg.center, T))
    rkt = make_state(rkt_params(lat, cfg.center, K, T))
    s_rt, s_rkt = energy_stats(rt), energy_stats(rkt)
    rel = lambda a, b: abs(a - b) / abs(b)  # noqa: E731
    out = [
        Check("observables", "rt.energy_mean.lattice", rel(s_rt.mean, e_lat), tol, reg, True),
        Check("observables", "rt.energy_mean.continuum", rel(s_rt.mean, lat.D * T / 2), tol_c, reg, True),
        Check("observables", "rt.energy_variance.lattice", rel(s_rt.variance, v_lat), tol, reg, True),
        Check(
            "observables", "rt.energy_variance.continuum", rel(s_rt.variance, lat.D * T**2 / 2), tol_c, reg, True
        ),
        Check("observables", "rkt.energy_mean.lattice", rel(s_rkt.mean, e_lat + eps_K), tol, reg, True),
        Check(
            "observables",
            "rkt.energy_mean.continuum",
            rel(s_rkt.mean, lat.D * T / 2 + eps_K),
            tol_c,
            reg,
            True,
        ),
        Check(
            "observables",
            "rkt.energy_variance.formula",
            rel(s_rkt.variance, rkt_energy_variance_formula(lat, K, T)),
            tol,
            reg,
            True,
        ),
        Check("observables", "rkt.momentum_mean", float(np.max(np.abs(momentum_mean(rkt) - K))), cfg.tol["exact"]),
        Check("observables", "rt.momentum_mean", float(np.max(np.abs(momentum_mean(rt)))), cfg.tol["exact"]),
        Check(
            "observables",
            "rkt.position_mean",
            float(np.max(np.abs(position_moments(rkt)[0] - np.asarray(cfg.center)))),
            tol,
            reg,
            True,
        ),
    ]
    # overlap against the direct inner product, and the Gaussian overlap scale
    env = thermal_envelope(lat, 1 / T)
    a = WavePacketParams(cfg.center, K, env)
    shift = np.zeros(lat.D)
    shift[0] = 1.0
    b = WavePacketParams(np.asarray(cfg.center) + shift, K, env)
    direct = inner(make_state(a), make_state(b))
    out.append(
        Check("observables", "overlap.direct", abs(overlap(a, b) - direct) / abs(direct), cfg.tol["exact"])
    )
    lam = thermal_length(1 / T, lat.m)
    gauss = np.exp(-1.0 / lam**2)
    out.append(
        Check(
            "observables",
            "overlap.gaussian",
            abs(abs(delta_phi(env, shift, np.zeros(lat.D))) - gauss) / gauss,
            cfg.tol["overlap"],
            reg,
            True,
        )
    )
    return out


def suite_uncertainty(cfg: RunConfig) -> list[Check]:
    lat, out = cfg.lattice, []
    for T in sorted(cfg.T_list):
        u = uncertainty(make_state(rt_params(lat, cfg.center, T)))
        err = float(np.max(np.abs(u.product - 0.5)) / 0.5)
        info = {"dk": u.dk.tolist(), "dx": u.dx.tolist(), "product": u.product.tolist()}
        out.append(Check("uncertainty", f"T={T:g}", err, cfg.tol["uncertainty"], info=info))
    return out


def suite_evolution(cfg: RunConfig) -> list[Check]:
    lat = cfg.lattice
    K = np.asarray(cfg.momentum)
    params = rkt_params(lat, cfg.center, K, cfg.T)
    s0 = make_state(params)
    times = np.linspace(0.0, cfg.t_max, cfg.n_times)
    norm_drift = mom_drift = pos_err = 0.0
    fids = []
    for t in times:
        st = evolve(s0, t)
        norm_drift = max(norm_drift, abs(st.norm2 - s0.norm2) / s0.norm2)
        mom_drift = max(mom_drift, float(np.max(np.abs(momentum_mean(st) - momentum_mean(s0)))))
        mean, _ = position_moments(st)
        pos_err = max(pos_err, float(np.max(np.abs(mean - (params.R + K * t / lat.m)))))
        moved = make_state(WavePacketParams(params.R + K * t / lat.m, K, params.envelope))
        fids.append(fidelity(moved, st))
    rises = float(max(np.max(np.diff(fids)), 0.0))
    oracle = dispersion_tolerance(lat, cfg.T, cfg.t_max)
    tol = cfg.tol["exact"]
    return [
        Check("evolution", "norm_drift", norm_drift, tol),
        Check("evolution", "momentum_drift", mom_drift, tol),
        Check("evolution", "position_mean", pos_err, min(cfg.tol["evolution"], oracle),
              info={"dispersion_oracle": oracle}),
        Check("evolution", "fidelity_t0", abs(fids[0] - 1), tol),
        Check("evolution", "fidelity_monotone", rises, tol, info={"fidelity_t_max": fids[-1]}),
    ]


def suite_coherent(cfg: RunConfig) -> list[Check]:
    lat = cfg.lattice
    K = np.asarray(cfg.momentum)
    st = make_state(rkt_params(lat, cfg.center, K, cfg.T))
    match = match_frequency(st, cfg.T)
    alpha = coherent_alpha(cfg.center, K, cfg.T, lat.m)
    info = {
        "omega_star": match.omega_star,
        "omega_thermal": match.omega_thermal,
        "omega_width_matched": match.omega_width_matched,
        "distance": match.distance,
        "alpha_re": alpha.real.tolist(),
        "alpha_im": alpha.imag.tolist(),
    }
    err = abs(match.omega_star - match.omega_width_matched) / match.omega_width_matched
    return [Check("coherent", "omega_width_matched", err, cfg.tol["coherent"], info=info)]


def suite_manybody(cfg: RunConfig) -> list[Check]:
    mb = cfg.mb_lattice
    beta = 1 / cfg.T
    env = thermal_envelope(mb, beta).normalized()
    fock, exact = cfg.tol["fock"], cfg.tol["exact"]
    out = []
    g = 1.0
    contact = np.full(mb.shape, g / mb.L)
    for stats in sorted(cfg.statistics):
        basis = FockBasis(mb.size, cfg.N, stats)
        dim_err = abs(basis.dim - FockBasis.expected_dim(mb.size, cfg.N, stats))
        out.append(Check("manybody", f"{stats}.basis_dim", float(dim_err), 0.0))
        out.append(Check("manybody", f"{stats}.closure", closure_N(mb, env, cfg.N, stats), fock))
        eig = boltzmann_N(mb, beta, cfg.N, stats, EIGEN)
        rt = boltzmann_N(mb, beta, cfg.N, stats, RT)
        out.append(Check("manybody", f"{stats}.boltzmann_rt", float(np.max(np.abs(rt.data - eig.data))), fock))
        out.append(Check("manybody", f"{stats}.boltzmann_rt.hermitian", rt.hermiticity_error(), exact))
        for name, e in (("delta", delta_envelope(mb)), ("thermal", env)):
            V = reassemble_two_body(v_wavepacket_tensor(mb, e, contact), stats)
            Vd = direct_two_body_matrix(mb, contact, stats)
            out.append(
                Check("manybody", f"{stats}.v_reassembly.{name}", float(np.max(np.abs(V.data - Vd.data))), fock)
            )
    f = make_state(WavePacketParams([mb.L / 2], [0.0], env)).amplitudes.reshape(1, -1)
    pair = ProductState(np.vstack([f, f]), FERMION)
    out.append(Check("manybody", "fermion.pauli", abs(product_overlap(pair, pair)), exact))
    out.append(_h0_check(cfg))
    return out


def _h0_check(cfg: RunConfig) -> Check:
    """Random label pairs on the main lattice; error relative to the absolute sum
    scale sum_k |eps_k <R',K'|k><k|R,K>|."""
    lat = cfg.lattice
    env = thermal_envelope(lat, 1 / cfg.T)
    rng = np.random.default_rng(cfg.seed)
    half = lat.M // 2
    worst = 0.0
    for _ in range(cfg.n_pairs):
        jp, j = rng.integers(0, lat.M, size=(2, lat.D))
        nKp = rng.integers(-half, half, size=lat.D)
        nK = lat.wrap(nKp - 2 * rng.integers(-half // 2, half // 2, size=lat.D))
        Rp, R = jp * lat.dx, j * lat.dx
        Kp, K = lat.momentum(nKp), lat.momentum(nK)
        a = h0_wavepacket_element(env, Rp, Kp, R, K)
        b = h0_bruteforce(env, Rp, Kp, R, K)
        ap = make_state(WavePacketParams(Rp, Kp, env)).amplitudes
        bp = make_state(WavePacketParams(R, K, env)).amplitudes
        scale = float(np.sum(lat.eps * np.abs(ap) * np.abs(bp)))
        worst = max(worst, abs(a - b) / scale)
    return Check("manybody", "h0_element", worst, cfg.tol["exact"], info={"pairs": cfg.n_pairs})


def suite_greens(cfg: RunConfig) -> list[Check]:
    lat = cfg.lattice
    split = TemperatureSplit(cfg.T, cfg.x)
    reg = split_regime(lat, split)
    rng = np.random.default_rng(cfg.seed)
    out = []
    for i in range(cfg.n_random):
        A = random_hermitian(lat, rng)
        eig = greens_eigen(lat, split.beta, A, A)
        wp = greens_wavepacket(lat, split, A, A)
        cmp = compare_spectra(eig, wp, cfg.tol["continuum"])
        out.append(
            Check("greens", f"random_{i}.weights", cmp.max_rel_error, cfg.tol["continuum"], reg, True,
                  {"matched": cmp.matched, "flagged": len(cmp.flagged)})
        )
        unmatched = len(cmp.unmatched_a) + len(cmp.unmatched_b)
        out.append(Check("greens", f"random_{i}.unmatched", float(unmatched), 0.0))
        expected = sum_rule(lat, split.beta, A, A)
        out.append(
            Check("greens", f"random_{i}.sum_rule", abs(eig.total_weight - expected) / abs(expected),
                  cfg.tol["sum_rule"])
        )
    I = OperatorMatrix(np.eye(lat.size), MOMENTUM)
    total = greens_wavepacket(lat, split, I, I).total_weight
    out.append(
        Check("greens", "identity.total_weight", abs(total - 2 * np.pi) / (2 * np.pi), cfg.tol["continuum"], reg, True)
    )
    return out


SUITE_FUNCTIONS = {
    "boltzmann_rkt": suite_boltzmann_rkt,
    "boltzmann_rt": suite_boltzmann_rt,
    "closure": suite_closure,
    "coherent": suite_coherent,
    "evolution": suite_evolution,
    "greens": suite_greens,
    "kernel": suite_kernel,
    "manybody": suite_manybody,
    "observables": suite_observables,
    "split": suite_split,
    "uncertainty": suite_uncertainty,
}
