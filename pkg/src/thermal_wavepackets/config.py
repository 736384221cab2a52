"""Flat ``key = value`` run configuration.

Blank lines and ``#`` comments are ignored.  Lists are comma separated.  Keys not
listed in :data:`KEYS` are errors.  Every default reproduces the reference box
``D=1, L=10, M=64, m=1, T=1`` used throughout the test-suite.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .lattice import Lattice
from .manybody import BOSON, CLOSURE_MODES_MAX, CLOSURE_N_MAX, FERMION
from .thermal import SPLIT_MAX, SPLIT_MIN

SUITES = (
    "boltzmann_rkt",
    "boltzmann_rt",
    "closure",
    "coherent",
    "evolution",
    "greens",
    "kernel",
    "manybody",
    "observables",
    "split",
    "uncertainty",
)

TOLERANCES = {
    "exact": 1e-12,  # lattice identities
    "fock": 1e-10,  # N-particle identities
    "sum_rule": 1e-10,
    "continuum": 1e-6,  # Gaussian/continuum limits
    "energy_continuum": 1e-5,
    "uncertainty": 1e-4,
    "overlap": 1e-4,
    "shape": 1e-4,  # figure-shape checks
    "coherent": 1e-4,
    "evolution": 1e-3,  # cap on the dispersion oracle
}

SWEEP_PARAMS = ("T", "x", "M")
OPERATORS = ("random", "identity", "projector")


class ConfigError(ValueError):
    pass


def _floats(v: str) -> tuple[float, ...]:
    return tuple(float(s) for s in v.split(",") if s.strip())


def _strs(v: str) -> tuple[str, ...]:
    return tuple(s.strip() for s in v.split(",") if s.strip())


@dataclass(frozen=True)
class RunConfig:
    D: int = 1
    L: float = 10.0
    M: int = 64
    m: float = 1.0
    T: float = 1.0
    x: float = 0.5
    x_list: tuple[float, ...] = (0.25, 0.5, 0.75)
    T_list: tuple[float, ...] = (0.25, 1.0, 4.0)
    R: tuple[float, ...] | None = None  # default: box centre
    K: tuple[float, ...] | None = None  # default: 3 grid steps along the first axis
    t_max: float = 2.0
    n_times: int = 21
    N: int = 2
    statistics: tuple[str, ...] = (BOSON, FERMION)
    mb_L: float = 8.0
    mb_M: int = 6
    n_random: int = 5
    n_pairs: int = 100
    operator: str = "random"
    projector: int = 0  # momentum index n of the projector operator
    seed: int = 0
    suites: tuple[str, ...] = SUITES
    out: str = "out"
    sweep_param: str = "x"
    sweep_values: tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    tol: dict = field(default_factory=lambda: dict(TOLERANCES))

    @property
    def lattice(self) -> Lattice:
        return Lattice(self.D, self.L, self.M, self.m)

    @property
    def mb_lattice(self) -> Lattice:
        return Lattice(1, self.mb_L, self.mb_M, self.m)

    @property
    def center(self) -> tuple[float, ...]:
        return self.R if self.R is not None else (self.L / 2,) * self.D

    @property
    def momentum(self) -> tuple[float, ...]:
        if self.K is not None:
            return self.K
        return (3 * 2 * math.pi / self.L,) + (0.0,) * (self.D - 1)

    def validate(self) -> "RunConfig":
        try:
            lat = self.lattice
            self.mb_lattice
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not self.T > 0 or any(not t > 0 for t in self.T_list):
            raise ConfigError("temperatures must be positive")
        if not self.T_list:
            raise ConfigError("T_list must not be empty")
        for x in (self.x, *self.x_list):
            if not SPLIT_MIN <= x <= SPLIT_MAX:
                raise ConfigError(f"split fraction {x} outside [{SPLIT_MIN}, {SPLIT_MAX}]")
        if not 1 <= self.N <= CLOSURE_N_MAX:
            raise ConfigError(f"N must lie in 1..{CLOSURE_N_MAX}")
        if self.mb_M > CLOSURE_MODES_MAX:
            raise ConfigError(f"mb.M must be <= {CLOSURE_MODES_MAX}")
        bad = [s for s in self.statistics if s not in (BOSON, FERMION)]
        if bad or not self.statistics:
            raise ConfigError(f"unknown statistics {bad}")
        unknown = [s for s in self.suites if s not in SUITES]
        if unknown:
            raise ConfigError(f"unknown suite(s) {unknown}; known: {', '.join(SUITES)}")
        for name, v in (("R", self.R), ("K", self.K)):
            if v is not None and len(v) != self.D:
                raise ConfigError(f"{name} needs {self.D} components")
        if self.K is not None:
            try:
                lat.k_index(self.K)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        if self.operator not in OPERATORS:
            raise ConfigError(f"operator must be one of {OPERATORS}")
        if self.sweep_param not in SWEEP_PARAMS:
            raise ConfigError(f"sweep.param must be one of {SWEEP_PARAMS}")
        if self.n_times < 2 or self.t_max < 0:
            raise ConfigError("need n_times >= 2 and t_max >= 0")
        for k, v in self.tol.items():
            if not v > 0:
                raise ConfigError(f"tolerance tol.{k} must be positive")
        return self

    def as_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out["R"], out["K"] = self.center, self.momentum
        return {k: list(v) if isinstance(v, tuple) else v for k, v in out.items()}


def _parse_statistics(v: str) -> tuple[str, ...]:
    v = v.strip()
    return (BOSON, FERMION) if v == "both" else _strs(v)


# key -> (field name, parser)
KEYS = {
    "D": ("D", int),
    "L": ("L", float),
    "M": ("M", int),
    "m": ("m", float),
    "T": ("T", float),
    "x": ("x", float),
    "x_list": ("x_list", _floats),
    "T_list": ("T_list", _floats),
    "R": ("R", _floats),
    "K": ("K", _floats),
    "t_max": ("t_max", float),
    "n_times": ("n_times", int),
    "N": ("N", int),
    "statistics": ("statistics", _parse_statistics),
    "mb.L": ("mb_L", float),
    "mb.M": ("mb_M", int),
    "n_random": ("n_random", int),
    "n_pairs": ("n_pairs", int),
    "operator": ("operator", str.strip),
    "projector": ("projector", int),
    "seed": ("seed", int),
    "suites": ("suites", _strs),
    "out": ("out", str.strip),
    "sweep.param": ("sweep_param", str.strip),
    "sweep.values": ("sweep_values", _floats),
}


def parse_config(text: str) -> RunConfig:
    values: dict = {}
    tol = dict(TOLERANCES)
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        try:
            if key.startswith("tol."):
                name = key[4:]
                if name not in TOLERANCES:
                    raise ConfigError(f"line {lineno}: unknown tolerance {key!r}")
                tol[name] = float(value)
            elif key in KEYS:
                attr, parse = KEYS[key]
                values[attr] = parse(value)
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {value!r}") from None
    return replace(RunConfig(), tol=tol, **values)


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(text)
