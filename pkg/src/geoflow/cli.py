"""Command-line front end.

``geoflow <module> <subcommand> --config <file> [--seed N] [--out DIR]``, and
the per-module shortcuts ``euler2d``, ``zeitlin``, ``pv``, ``sticky``,
``madelung``, ``filament``, ``topo3d``, ``entropy``.

Exit codes: 0 success, 1 numeric failure, 2 usage or configuration error.
``GEOFLOW_THREADS`` caps the number of worker processes of a seed sweep.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import platform
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy

from . import __version__, _kernels, euler2d, filament, madelung, point_vortex, topo3d, zeitlin
from .config import COMMANDS, SCHEMAS, ConfigError, ExperimentConfig, describe, format_config, parse_config
from .runners import RUNNERS

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2

NUMERIC_ERRORS = (
    euler2d.CFLViolation,
    point_vortex.CollapseError,
    zeitlin.ConvergenceError,
    filament.ResolutionError,
    filament.VanishingCurvatureError,
    filament.DegenerateEdgeError,
    madelung.ZeroCrossingError,
    topo3d.MeanFlowError,
    ArithmeticError,
    np.linalg.LinAlgError,
)

# subcommand-level flags that override config keys
MODULE_FLAGS = {
    "zeitlin": [("--n", "n", int)],
    "pv": [("--geometry", "geometry", str)],
    "filament": [("--shape", "shape", str)],
    "topo3d": [("--input", "input", str)],
}


@dataclass
class RunOutcome:
    exit_code: int
    manifest: dict
    manifest_path: Path


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    return v


def versions() -> dict:
    return {
        "geoflow": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "backend": _kernels.BACKEND,
    }


def default_out(cfg: ExperimentConfig, command: str) -> Path:
    if cfg.out:
        return Path(cfg.out)
    tag = f"seed{cfg.seed}" if cfg.seed is not None else "noseed"
    return Path("runs") / f"{cfg.experiment}-{command}-{tag}"


def run_experiment(cfg: ExperimentConfig, command: str, out: Path | None = None) -> RunOutcome:
    """Run one experiment, then write ``manifest.json`` listing every produced file with its sha256."""
    if command not in COMMANDS[cfg.experiment]:
        raise ConfigError([f"{cfg.experiment} has no subcommand {command!r}; choose from {list(COMMANDS[cfg.experiment])}"])
    out = Path(out) if out is not None else default_out(cfg, command)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "experiment": cfg.experiment,
        "command": command,
        "seed": cfg.seed,
        "config": format_config(cfg),
        "versions": versions(),
    }
    code = EXIT_OK
    try:
        summary = RUNNERS[cfg.experiment](cfg, command, out)
        manifest["status"] = "ok"
        manifest["summary"] = summary
    except NUMERIC_ERRORS as exc:
        code = EXIT_NUMERIC
        manifest["status"] = "numeric_failure"
        manifest["error"] = f"{type(exc).__name__}: {exc}"
    manifest["exit_code"] = code
    files = sorted(p for p in out.rglob("*") if p.is_file() and p.name != "manifest.json")
    manifest["files"] = [
        {"path": p.relative_to(out).as_posix(), "bytes": p.stat().st_size, "sha256": sha256_file(p)} for p in files
    ]
    path = out / "manifest.json"
    path.write_text(json.dumps(_jsonable(manifest), indent=2, sort_keys=True) + "\n")
    return RunOutcome(code, manifest, path)


def verify_manifest(path) -> list[str]:
    """Files whose hash or size no longer matches the manifest."""
    path = Path(path)
    man = json.loads(path.read_text())
    bad = []
    for entry in man["files"]:
        f = path.parent / entry["path"]
        if not f.is_file() or f.stat().st_size != entry["bytes"] or sha256_file(f) != entry["sha256"]:
            bad.append(entry["path"])
    return bad


def thread_cap() -> int:
    raw = os.environ.get("GEOFLOW_THREADS", "")
    try:
        cap = int(raw) if raw else (os.cpu_count() or 1)
    except ValueError:
        cap = 1
    return max(1, cap)


def _sweep_one(args):
    cfg, command, out = args
    return run_experiment(cfg, command, out).exit_code


def run_sweep(cfg: ExperimentConfig, command: str, count: int, out: Path) -> list[int]:
    """Seeds ``seed, seed + 1, ...``; each run in ``out/seed_<s>`` with its own manifest."""
    base = 0 if cfg.seed is None else cfg.seed
    jobs = [(cfg.with_overrides(seed=base + i), command, out / f"seed_{base + i}") for i in range(count)]
    workers = min(count, thread_cap())
    if workers <= 1:
        return [_sweep_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_sweep_one, jobs))


def _module_parser(module: str, prog: str) -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog=prog, description=f"{module} experiments")
    ap.add_argument("command", choices=COMMANDS[module])
    ap.add_argument("--config", type=Path, help="flat key = value config file")
    ap.add_argument("--seed", type=int, help="override the config seed")
    ap.add_argument("--out", type=Path, help="output directory")
    ap.add_argument("--sweep", type=int, default=0, metavar="K", help="run K consecutive seeds")
    ap.add_argument("--keys", action="store_true", help="print the documented config keys and exit")
    for flag, _, typ in MODULE_FLAGS.get(module, []):
        ap.add_argument(flag, type=typ)
    return ap


def _load(module: str, ns) -> ExperimentConfig:
    if ns.config is None:
        if module != "topo3d":
            raise ConfigError(["--config is required"])
        text = f"experiment = {module}\n"
    else:
        try:
            text = ns.config.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError([f"cannot read config: {exc}"]) from exc
    cfg = parse_config(text, require_seed=ns.seed is None)
    if cfg.experiment != module:
        raise ConfigError([f"config is for experiment {cfg.experiment!r}, not {module!r}"])
    overrides = {key: getattr(ns, flag[2:]) for flag, key, _ in MODULE_FLAGS.get(module, [])
                 if getattr(ns, flag[2:]) is not None}
    if module == "topo3d" and overrides.get("input"):
        overrides["source"] = "file"
    cfg = cfg.with_overrides(seed=ns.seed, out=str(ns.out) if ns.out else None, **overrides)
    # re-validate choices after flag overrides
    return parse_config(format_config(cfg), require_seed=False)


def module_main(module: str, argv=None, prog: str | None = None) -> int:
    ap = _module_parser(module, prog or module)
    try:
        ns = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    if ns.keys:
        print(describe(module))
        return EXIT_OK
    try:
        cfg = _load(module, ns)
        out = ns.out if ns.out is not None else default_out(cfg, ns.command)
        if ns.sweep:
            if ns.sweep < 1:
                raise ConfigError(["--sweep must be positive"])
            codes = run_sweep(cfg, ns.command, ns.sweep, out)
            print(f"{module} {ns.command}: {len(codes)} runs in {out}")
            return max(codes)
        outcome = run_experiment(cfg, ns.command, out)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"{prog or module}: config error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as exc:
        print(f"{prog or module} {ns.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if outcome.exit_code == EXIT_NUMERIC:
        print(f"{prog or module} {ns.command}: numeric failure: {outcome.manifest['error']}", file=sys.stderr)
    else:
        print(f"{prog or module} {ns.command}: ok -> {outcome.manifest_path}")
    return outcome.exit_code


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    modules = sorted(SCHEMAS)
    if not argv or argv[0] in ("-h", "--help"):
        print(f"usage: geoflow <module> <subcommand> --config FILE [--seed N] [--out DIR]\nmodules: {', '.join(modules)}")
        return EXIT_OK if argv else EXIT_USAGE
    if argv[0] == "--version":
        print(f"geoflow {__version__} ({_kernels.BACKEND} kernels)")
        return EXIT_OK
    if argv[0] not in SCHEMAS:
        print(f"geoflow: unknown module {argv[0]!r}; choose from {', '.join(modules)}", file=sys.stderr)
        return EXIT_USAGE
    return module_main(argv[0], argv[1:], prog=f"geoflow {argv[0]}")


def _entry(module):
    def run(argv=None) -> int:
        return module_main(module, argv)

    run.__name__ = f"{module}_main"
    return run


euler2d_main = _entry("euler2d")
zeitlin_main = _entry("zeitlin")
pv_main = _entry("pv")
sticky_main = _entry("sticky")
madelung_main = _entry("madelung")
filament_main = _entry("filament")
topo3d_main = _entry("topo3d")
entropy_main = _entry("entropy")


if __name__ == "__main__":
    sys.exit(main())
