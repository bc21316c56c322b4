"""Flat ``key = value`` experiment configuration with ``[section]`` headers.

Example::

    experiment = euler2d
    seed = 7
    out = runs/euler

    [euler2d]
    n = 128
    dt = 0.005
    t_end = 10.0

Top-level keys are ``experiment`` (mandatory), ``seed`` and ``out``. The only
allowed section is the one named after the experiment. ``#`` starts a comment.
List values are comma separated. Parsing reports every error it finds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

SEED_MAX = 2**64 - 1


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class Key:
    kind: str  # int, float, bool, str, ints, floats
    default: Any = None
    choices: tuple | None = None
    doc: str = ""


def _k(kind, default=None, doc="", choices=None):
    return Key(kind, default, tuple(choices) if choices else None, doc)


TWO_PI = 2 * math.pi

SCHEMAS: dict[str, dict[str, Key]] = {
    "euler2d": {
        "n": _k("int", 128, "grid points per side (power of two)"),
        "dt": _k("float", 0.005, "time step"),
        "t_end": _k("float", 1.0, "final time"),
        "init": _k("str", "random", "initial vorticity", ("random", "shear", "perturbed_shear")),
        "k0": _k("float", 6.0, "spectral peak of random initial data"),
        "shear_k": _k("int", 1, "wavenumber of the shear flow"),
        "perturbation": _k("float", 0.05, "relative perturbation of the shear flow"),
        "nu_h": _k("float", 0.0, "hyperviscosity coefficient"),
        "hv_order": _k("int", 4, "hyperviscosity order"),
        "output_every": _k("int", 10, "steps between diagnostics rows"),
        "snapshot_every": _k("int", 0, "steps between GFL1 snapshots (0 = none)"),
        "cfl_max": _k("float", 0.5, "CFL limit"),
        "blob_threshold": _k("float", 0.2, "blob threshold relative to max |omega|"),
    },
    "zeitlin": {
        "n": _k("int", 33, "matrix size N (odd)"),
        "dt": _k("float", 0.01, "time step"),
        "steps": _k("int", 1000, "number of steps"),
        "output_every": _k("int", 10, "steps between rows"),
        "method": _k("str", "isospectral", "integrator", ("isospectral", "rk4")),
        "decay": _k("float", 2.0, "coefficient decay exponent of random data"),
        "dump_every": _k("int", 0, "steps between GFL1 matrix dumps (0 = final only)"),
    },
    "pv": {
        "geometry": _k("str", "plane", "domain", ("plane", "half_plane", "sphere", "torus")),
        "vortices": _k("int", 3, "number of vortices"),
        "t_end": _k("float", 10.0, "final time"),
        "tol": _k("float", 1e-10, "integrator tolerance"),
        "n_out": _k("int", 200, "output samples"),
        "period": _k("float", TWO_PI, "torus period"),
        "section_vortex": _k("int", -1, "vortex index for a Poincare section (-1 = none)"),
        "section_coord": _k("int", 0, "coordinate for the Poincare section"),
        "section_value": _k("float", 0.0, "section level"),
    },
    "sticky": {
        "particles": _k("int", 4, "number of particles"),
        "t_end": _k("float", 1.0, "final time (run, continuum)"),
        "samples_per_unit_mass": _k("int", 16, "continuum samples per unit mass"),
        "integer_masses": _k("bool", True, "round masses to integers (continuum)"),
        "output_every": _k("float", 0.1, "time between continuum profile rows"),
    },
    "madelung": {
        "n": _k("int", 128, "grid points"),
        "length": _k("float", TWO_PI, "period"),
        "amplitude": _k("float", 0.2, "density perturbation amplitude"),
        "phase_amplitude": _k("float", 0.3, "phase perturbation amplitude"),
        "potential": _k("float", 0.5, "amplitude of V = a cos(2 pi x / L)"),
        "f_poly": _k("floats", (0.0, 1.0), "polynomial coefficients of f(rho), increasing degree"),
        "t": _k("float", 0.1, "evaluation time"),
        "dts": _k("floats", (1.6e-4, 8e-5, 4e-5, 2e-5), "refinement levels"),
    },
    "filament": {
        "shape": _k("str", "circle", "initial curve", ("circle", "helix", "knot", "file")),
        "m": _k("int", 256, "vertices"),
        "radius": _k("float", 1.0, "circle radius"),
        "helix_a": _k("float", 1.0, "helix radius"),
        "helix_b": _k("float", 0.5, "helix pitch / 2 pi"),
        "turns": _k("int", 1, "helix turns per period"),
        "modes": _k("int", 3, "knot perturbation modes"),
        "knot_amplitude": _k("float", 0.15, "knot perturbation amplitude"),
        "file": _k("str", "", "CSV of vertices x,y,z (shape = file)"),
        "dt": _k("float", 0.0, "time step (0 = 0.9 of the stability limit)"),
        "steps": _k("int", 100, "number of steps"),
        "output_every": _k("int", 10, "steps between rows"),
    },
    "topo3d": {
        "source": _k("str", "abc", "input field", ("abc", "random", "file")),
        "n": _k("int", 32, "grid points per side"),
        "A": _k("float", 1.0, "ABC coefficient"),
        "B": _k("float", 1.0, "ABC coefficient"),
        "C": _k("float", 1.0, "ABC coefficient"),
        "kmax": _k("int", 4, "band limit of random fields"),
        "slope": _k("float", 0.0, "spectral slope of random fields"),
        "lam": _k("float", 1.0, "eigenvalue for the Beltrami residual"),
        "input": _k("str", "", "GFL1 file with a (n, n, n, 3) field"),
    },
    "entropy": {
        "n_grid": _k("int", 64, "Euler grid points per side"),
        "members": _k("int", 32, "ensemble size"),
        "ns": _k("ints", (8,), "embedding dimensions"),
        "eps": _k("float", 0.0, "cube side (0 = coordinate range / cells_per_axis)"),
        "cells_per_axis": _k("int", 8, "cells per axis for the automatic eps"),
        "dt": _k("float", 0.01, "time step"),
        "t_end": _k("float", 2.0, "final time"),
        "output_every": _k("int", 20, "steps between rows"),
        "k0": _k("float", 6.0, "spectral peak of initial data"),
        "nu_h": _k("float", 0.0, "hyperviscosity"),
        "frozen": _k("bool", False, "skip time steps (identity dynamics)"),
        "translates": _k("bool", False, "ensemble of translates of one field"),
    },
}

COMMANDS: dict[str, tuple[str, ...]] = {
    "euler2d": ("run", "fit"),
    "zeitlin": ("run",),
    "pv": ("run",),
    "sticky": ("run", "minimize", "continuum"),
    "madelung": ("verify",),
    "filament": ("run",),
    "topo3d": ("helicity", "beltrami"),
    "entropy": ("run",),
}


def _stochastic(name: str, p: dict) -> bool:
    if name == "euler2d":
        return p["init"] != "shear"
    if name == "filament":
        return p["shape"] == "knot"
    if name == "topo3d":
        return p["source"] == "random"
    if name == "entropy":
        return True
    return name in ("zeitlin", "pv", "sticky", "madelung")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    params: dict = field(default_factory=dict)
    seed: int | None = None
    out: str | None = None

    @property
    def stochastic(self) -> bool:
        return _stochastic(self.experiment, self.params)

    def with_overrides(self, seed: int | None = None, out: str | None = None, **params) -> "ExperimentConfig":
        merged = dict(self.params)
        for k, v in params.items():
            if k not in SCHEMAS[self.experiment]:
                raise ConfigError([f"unknown key {k!r} for {self.experiment}"])
            merged[k] = v
        return ExperimentConfig(
            self.experiment, merged, self.seed if seed is None else seed, self.out if out is None else out
        )


def _convert(kind: str, raw: str):
    if kind == "int":
        return int(raw, 0)
    if kind == "float":
        v = float(raw)
        if not math.isfinite(v):
            raise ValueError("non-finite")
        return v
    if kind == "bool":
        low = raw.lower()
        if low in ("true", "yes", "on", "1"):
            return True
        if low in ("false", "no", "off", "0"):
            return False
        raise ValueError("not a boolean")
    if kind == "str":
        return raw
    if kind in ("ints", "floats"):
        parts = [s.strip() for s in raw.split(",") if s.strip()]
        if not parts:
            raise ValueError("empty list")
        return tuple(_convert(kind[:-1], s) for s in parts)
    raise AssertionError(kind)


def _format(kind: str, v) -> str:
    if kind == "float":
        return repr(float(v))
    if kind == "bool":
        return "true" if v else "false"
    if kind in ("ints", "floats"):
        return ", ".join(_format(kind[:-1], x) for x in v)
    return str(v)


_TOP = {"experiment": "str", "seed": "int", "out": "str"}


def parse_config(text: str, require_seed: bool = True) -> ExperimentConfig:
    """Parse and validate. Raises :class:`ConfigError` listing every problem found."""
    errors: list[str] = []
    top: dict[str, tuple[int, str]] = {}
    sections: dict[str, dict[str, tuple[int, str]]] = {}
    current = None
    seen_sections: dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.split("#", 1)[0].strip()
        if not s:
            continue
        if s.startswith("["):
            if not s.endswith("]") or len(s) < 3:
                errors.append(f"line {lineno}: malformed section header {s!r}")
                current = None
                continue
            current = s[1:-1].strip()
            if current in seen_sections:
                errors.append(f"line {lineno}: duplicate section [{current}] (first on line {seen_sections[current]})")
            seen_sections.setdefault(current, lineno)
            sections.setdefault(current, {})
            continue
        if "=" not in s:
            errors.append(f"line {lineno}: expected 'key = value', got {s!r}")
            continue
        key, raw = (p.strip() for p in s.split("=", 1))
        if not key:
            errors.append(f"line {lineno}: empty key")
            continue
        target = top if current is None else sections[current]
        if key in target:
            errors.append(f"line {lineno}: duplicate key {key!r} (first on line {target[key][0]})")
            continue
        target[key] = (lineno, raw)

    for key, (lineno, _) in top.items():
        if key not in _TOP:
            errors.append(f"line {lineno}: unknown top-level key {key!r}")
    values: dict[str, Any] = {}
    for key, kind in _TOP.items():
        if key in top:
            lineno, raw = top[key]
            try:
                values[key] = _convert(kind, raw)
            except ValueError:
                errors.append(f"line {lineno}: {key} expects {kind}, got {raw!r}")
    name = values.get("experiment")
    if "experiment" not in top:
        errors.append("missing mandatory key 'experiment'")
    elif name is not None and name not in SCHEMAS:
        errors.append(f"line {top['experiment'][0]}: unknown experiment {name!r}; choose from {sorted(SCHEMAS)}")
        name = None
    seed = values.get("seed")
    if seed is not None and not 0 <= seed <= SEED_MAX:
        errors.append(f"line {top['seed'][0]}: seed must be a 64-bit unsigned integer")

    params: dict[str, Any] = {}
    for sec, entries in sections.items():
        if name is not None and sec != name:
            errors.append(f"line {seen_sections[sec]}: unknown section [{sec}] for experiment {name!r}")
            continue
        if name is None:
            continue
        schema = SCHEMAS[name]
        for key, (lineno, raw) in entries.items():
            if key not in schema:
                errors.append(f"line {lineno}: unknown key {key!r} in [{sec}]")
                continue
            entry = schema[key]
            try:
                v = _convert(entry.kind, raw)
            except ValueError:
                errors.append(f"line {lineno}: {key} expects {entry.kind}, got {raw!r}")
                continue
            if entry.choices and v not in entry.choices:
                errors.append(f"line {lineno}: {key} must be one of {list(entry.choices)}, got {v!r}")
                continue
            params[key] = v

    if name is not None:
        full = {k: entry.default for k, entry in SCHEMAS[name].items()}
        full.update(params)
        params = full
        if require_seed and seed is None and _stochastic(name, params):
            errors.append(f"missing mandatory key 'seed' (experiment {name!r} is stochastic)")
    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(name, params, seed, values.get("out"))


def format_config(cfg: ExperimentConfig) -> str:
    """Canonical text; ``parse_config(format_config(c)) == c``."""
    lines = [f"experiment = {cfg.experiment}"]
    if cfg.seed is not None:
        lines.append(f"seed = {cfg.seed}")
    if cfg.out is not None:
        lines.append(f"out = {cfg.out}")
    lines += ["", f"[{cfg.experiment}]"]
    for key, entry in SCHEMAS[cfg.experiment].items():
        lines.append(f"{key} = {_format(entry.kind, cfg.params[key])}")
    return "\n".join(lines) + "\n"


def describe(name: str) -> str:
    """Documented keys of one experiment, one per line."""
    return "\n".join(
        f"{k} ({s.kind}, default {_format(s.kind, s.default)!s}): {s.doc}" for k, s in SCHEMAS[name].items()
    )

