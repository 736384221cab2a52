"""Command-line runner: ``verify``, ``wavefunction``, ``kernel``, ``spectrum``, ``sweep``.

Exit codes: 0 when every check passes, 1 when a check fails, 2 on configuration
errors.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .envelope import thermal_length
from .greens import compare_spectra, greens_eigen, greens_wavepacket
from .lattice import MOMENTUM, Lattice, OperatorMatrix
from .suites import SUITE_FUNCTIONS, Check, random_hermitian, rkt_errors
from .thermal import (
    SPLIT_MAX,
    SPLIT_MIN,
    TemperatureSplit,
    boltzmann_matrix,
    kernel_table,
    reconstruct_from_RT,
    regime,
    split_errors,
    split_regime,
    thermal_params,
)
from .wavepacket import (
    PacketTooWideError,
    make_state,
    position_moments,
    rkt_params,
    rt_params,
    uncertainty,
    wavefunction_table,
)

SCHEMA = 1
EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


# -- report plumbing ---------------------------------------------------------------


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else repr(v)
    return obj


def build_report(cfg: RunConfig, checks: list[dict], command: str) -> dict:
    checks = sorted(checks, key=lambda c: (c["suite"], c["name"]))
    failed = [c for c in checks if c["status"] != "pass"]
    return _jsonable(
        {
            "schema": SCHEMA,
            "command": command,
            "config": cfg.as_dict(),
            "checks": checks,
            "summary": {
                "total": len(checks),
                "passed": len(checks) - len(failed),
                "failed": len(failed),
                "status": "fail" if failed else "pass",
                "reasons": sorted({c["reason"] for c in failed}),
            },
        }
    )


def write_report(report: dict, path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n", encoding="utf-8")


def write_csv(path: Path, header: list[str], rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows([[_cell(v) for v in row] for row in rows])


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _print_checks(checks: list[dict]):
    for c in checks:
        flag = "PASS" if c["status"] == "pass" else f"FAIL ({c['reason']})"
        print(f"{flag:18s} {c['suite']}.{c['name']}: error={c['error']!r} tol={c['tolerance']!r}")


def _exit_code(report: dict) -> int:
    return EXIT_OK if report["summary"]["status"] == "pass" else EXIT_FAIL


# -- verbs ----------------------------------------------------------------------------


def _run_suite(cfg: RunConfig, name: str) -> list[dict]:
    try:
        return [c.as_dict() for c in SUITE_FUNCTIONS[name](cfg)]
    except (ValueError, ArithmeticError) as exc:
        return [
            {
                "suite": name,
                "name": "precondition",
                "error": None,
                "tolerance": None,
                "regime": None,
                "requires_regime": False,
                "status": "fail",
                "reason": "precondition",
                "info": {"message": str(exc)},
            }
        ]


def cmd_verify(cfg: RunConfig, parallel: bool = False) -> tuple[int, dict]:
    names = sorted(set(cfg.suites))
    if parallel:
        with ThreadPoolExecutor() as pool:
            results = list(pool.map(lambda n: _run_suite(cfg, n), names))
    else:
        results = [_run_suite(cfg, n) for n in names]
    checks = [c for r in results for c in r]
    report = build_report(cfg, checks, "verify")
    out = Path(cfg.out)
    write_report(report, out / "verify_report.json")
    return _exit_code(report), report


def _position_header(lat: Lattice) -> list[str]:
    return ["r"] if lat.D == 1 else [f"r{a}" for a in range(lat.D)]


def _oscillates(values: np.ndarray, modulus: np.ndarray) -> int:
    """Sign changes of ``values`` where the modulus exceeds 1e-3 of its peak."""
    keep = modulus > 1e-3 * modulus.max()
    v = values[keep]
    return int(np.sum(np.signbit(v[1:]) != np.signbit(v[:-1])))


def cmd_wavefunction(cfg: RunConfig) -> tuple[int, dict]:
    lat = cfg.lattice
    K = np.asarray(cfg.momentum)
    out = Path(cfg.out)
    checks: list[Check] = []
    variances = []
    temps = sorted(cfg.T_list)
    for T in temps:
        rt = make_state(rt_params(lat, cfg.center, T))
        rkt = make_state(rkt_params(lat, cfg.center, K, T))
        rows = []
        for label, st in (("RT", rt), ("RKT", rkt)):
            pos, vals = wavefunction_table(st)
            for p, v in zip(pos, vals):
                rows.append([label, *p, v.real, v.imag, abs(v)])
        write_csv(out / f"wavefunction_T{T:g}.csv", ["state", *_position_header(lat), "re_psi", "im_psi", "abs_psi"], rows)

        _, var = position_moments(rt)
        variances.append(float(np.sum(var)))
        psi_rt = rt.position_field().values.reshape(-1)
        psi_rkt = rkt.position_field().values.reshape(-1)
        # |<r|R,K,T>| = L^(-D/2) |<r|R,T>| exactly
        mod_err = np.max(np.abs(np.abs(psi_rkt) - np.abs(psi_rt) / lat.L ** (lat.D / 2)))
        checks.append(
            Check("wavefunction", f"T={T:g}.modulus", float(mod_err / np.abs(psi_rkt).max()), cfg.tol["exact"])
        )
        # Gaussian modulus exp(-2 d^2 / lambda^2) within L/4 of the centre
        lam = thermal_length(1 / T, lat.m)
        d = lat.min_image(lat.r.reshape(lat.D, -1).T - np.asarray(cfg.center))
        d2 = np.sum(d**2, axis=1)
        near = np.sqrt(d2) <= lat.L / 4
        peak = np.abs(psi_rt).max()
        gauss = peak * np.exp(-2 * d2 / lam**2)
        g_err = float(np.max(np.abs(np.abs(psi_rt) - gauss)[near]) / peak)
        checks.append(
            Check("wavefunction", f"T={T:g}.gaussian_modulus", g_err, cfg.tol["shape"],
                  regime(lat, 1 / T).as_dict())
        )
        if np.any(K != 0):
            changes = _oscillates(psi_rkt.real, np.abs(psi_rkt))
            checks.append(
                Check("wavefunction", f"T={T:g}.oscillating_real_part", 0.0 if changes >= 2 else 1.0, 0.0,
                      info={"sign_changes": changes})
            )
    violations = sum(1 for a, b in zip(variances, variances[1:]) if not b < a)
    checks.append(
        Check("wavefunction", "localization_monotone", float(violations), 0.0,
              info={"T": temps, "variance": variances})
    )
    report = build_report(cfg, [c.as_dict() for c in checks], "wavefunction")
    write_report(report, out / "wavefunction_report.json")
    return _exit_code(report), report


def cmd_kernel(cfg: RunConfig) -> tuple[int, dict]:
    params = thermal_params(cfg.lattice, cfg.T)
    rows = kernel_table(params)
    write_csv(Path(cfg.out) / "kernel.csv", ["separation", "exact", "gaussian", "rel_error"], rows)
    return EXIT_OK, {"rows": len(rows)}


def _operator(cfg: RunConfig) -> OperatorMatrix:
    lat = cfg.lattice
    if cfg.operator == "identity":
        return OperatorMatrix(np.eye(lat.size), MOMENTUM)
    if cfg.operator == "projector":
        idx = (np.array(lat.wrap([cfg.projector] * lat.D)) + lat.M // 2)
        flat = int(np.ravel_multi_index(tuple(idx), lat.shape))
        P = np.zeros((lat.size, lat.size))
        P[flat, flat] = 1.0
        return OperatorMatrix(P, MOMENTUM)
    return random_hermitian(lat, np.random.default_rng(cfg.seed))


def cmd_spectrum(cfg: RunConfig) -> tuple[int, dict]:
    lat = cfg.lattice
    split = TemperatureSplit(cfg.T, cfg.x)
    A = _operator(cfg)
    eig = greens_eigen(lat, split.beta, A, A)
    wp = greens_wavepacket(lat, split, A, A)
    rows = [[o, w.real, w.imag, "eigen"] for o, w in zip(eig.omega, eig.weight)]
    rows += [[o, w.real, w.imag, "wavepacket"] for o, w in zip(wp.omega, wp.weight)]
    write_csv(Path(cfg.out) / "spectrum.csv", ["omega", "weight_re", "weight_im", "representation"], rows)
    cmp = compare_spectra(eig, wp, cfg.tol["continuum"])
    return EXIT_OK, {
        "lines": len(eig),
        "max_rel_error": cmp.max_rel_error,
        "unmatched": len(cmp.unmatched_a) + len(cmp.unmatched_b),
    }


def _sweep_point(cfg: RunConfig, value: float) -> list:
    p = cfg.sweep_param
    if p == "T":
        cfg = replace(cfg, T=value)
    elif p == "x":
        cfg = replace(cfg, x=value)
    else:
        cfg = replace(cfg, M=int(value))
    lat = cfg.lattice
    split = TemperatureSplit(cfg.T, cfg.x)
    beta = split.beta
    rt_err = float(np.max(np.abs(reconstruct_from_RT(lat, beta).data - boltzmann_matrix(lat, beta).data)))
    diag_err, off_err = rkt_errors(lat, split)
    try:
        product = float(np.max(uncertainty(make_state(rt_params(lat, cfg.center, cfg.T))).product))
    except PacketTooWideError:
        product = float("nan")
    reg = split_regime(lat, split)
    return [
        value,
        float(split_errors(lat, split).max()),
        diag_err,
        off_err,
        rt_err,
        product,
        reg["aliasing_bound"],
        reg["ok"],
    ]


def _check_sweep(cfg: RunConfig):
    for v in cfg.sweep_values:
        if cfg.sweep_param == "T" and not v > 0:
            raise ConfigError(f"sweep temperature {v} must be positive")
        if cfg.sweep_param == "x" and not SPLIT_MIN <= v <= SPLIT_MAX:
            raise ConfigError(f"sweep split fraction {v} outside [{SPLIT_MIN}, {SPLIT_MAX}]")
        if cfg.sweep_param == "M":
            if v != int(v):
                raise ConfigError(f"sweep M value {v} is not an integer")
            try:
                Lattice(cfg.D, cfg.L, int(v), cfg.m)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
    if not cfg.sweep_values:
        raise ConfigError("sweep.values must not be empty")


def cmd_sweep(cfg: RunConfig, parallel: bool = False) -> tuple[int, dict]:
    _check_sweep(cfg)
    if parallel:
        with ThreadPoolExecutor() as pool:
            rows = list(pool.map(lambda v: _sweep_point(cfg, v), cfg.sweep_values))
    else:
        rows = [_sweep_point(cfg, v) for v in cfg.sweep_values]
    header = [
        cfg.sweep_param,
        "split_error",
        "rkt_diagonal_error",
        "rkt_offdiagonal_error",
        "rt_error",
        "uncertainty_product",
        "aliasing_bound",
        "regime_ok",
    ]
    write_csv(Path(cfg.out) / f"sweep_{cfg.sweep_param}.csv", header, rows)
    return EXIT_OK, {"points": len(rows)}


# -- entry point --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="thermal-wavepackets", description=__doc__.splitlines()[0])
    parser.add_argument("verb", choices=("verify", "wavefunction", "kernel", "spectrum", "sweep"))
    parser.add_argument("--config", help="flat key = value configuration file")
    parser.add_argument("--out", help="output directory (overrides the config key)")
    parser.add_argument("--suite", action="append", help="suite to run (repeatable; overrides config)")
    parser.add_argument("--seed", type=int, help="RNG seed (overrides config)")
    parser.add_argument("--parallel", action="store_true", help="run suites / sweep points concurrently")
    return parser


def resolve_config(args) -> RunConfig:
    cfg = load_config(args.config)
    overrides = {}
    if args.out is not None:
        overrides["out"] = args.out
    if args.suite:
        overrides["suites"] = tuple(args.suite)
    if args.seed is not None:
        overrides["seed"] = args.seed
    return replace(cfg, **overrides).validate()


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.verb == "sweep":
            _check_sweep(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.verb == "verify":
        code, report = cmd_verify(cfg, args.parallel)
        _print_checks(report["checks"])
        print(f"{report['summary']['passed']}/{report['summary']['total']} checks passed")
    elif args.verb == "wavefunction":
        code, report = cmd_wavefunction(cfg)
        _print_checks(report["checks"])
    elif args.verb == "kernel":
        code, info = cmd_kernel(cfg)
        print(f"wrote {info['rows']} kernel rows to {Path(cfg.out) / 'kernel.csv'}")
    elif args.verb == "spectrum":
        code, info = cmd_spectrum(cfg)
        print(
            f"{info['lines']} lines; eigen vs wave-packet max rel. weight error "
            f"{info['max_rel_error']:.3e}, unmatched {info['unmatched']}"
        )
    else:
        code, info = cmd_sweep(cfg, args.parallel)
        print(f"wrote {info['points']} sweep points to {Path(cfg.out) / f'sweep_{cfg.sweep_param}.csv'}")
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
