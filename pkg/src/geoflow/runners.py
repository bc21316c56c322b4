"""Experiment runners: one function per (experiment, command).

Each runner writes its artifacts into ``out`` and returns a summary dict of
scalars. Runners never read the clock or global RNG state, so identical
inputs give bit-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import entropy, euler2d, filament, madelung, point_vortex, sticky, topo3d, zeitlin
from .config import ExperimentConfig
from .io import read_csv, read_gfl1, write_csv, write_gfl1
from .spectral import Grid2, VelocityField3D, inner3

# units of common columns; code units are nondimensional lengths L and times T
UNITS = {
    "t": "T",
    "E": "L^4/T^2",
    "Omega": "L^2/T^2",
    "C3": "L^2/T^3",
    "C4": "L^2/T^4",
    "maxgrad": "1/(L T)",
    "nblobs": "1",
    "energy": "1",
    "length": "L",
    "Ix": "L^2",
    "Iy": "L^2",
    "Iz": "L^2",
    "dt": "T",
    "continuity": "1",
    "momentum": "1",
    "velocity": "L/T",
}


def header(names, units=None) -> list[str]:
    units = {**UNITS, **(units or {})}
    return [f"{n} [{units.get(n, '1')}]" for n in names]


def _seed(cfg: ExperimentConfig) -> int:
    return 0 if cfg.seed is None else int(cfg.seed)


def _trend(t, y) -> float:
    """Least-squares slope over the second half of the series (post-transient)."""
    t, y = np.asarray(t, float), np.asarray(y, float)
    h = t.size // 2
    if t.size - h < 2:
        return 0.0
    return float(np.polyfit(t[h:], y[h:], 1)[0])


# --------------------------------------------------------------------------
# euler2d


def _euler_initial(p, grid, seed):
    if p["init"] == "shear":
        return euler2d.shear_flow(grid, p["shear_k"])
    if p["init"] == "perturbed_shear":
        return euler2d.perturbed_shear(grid, seed, p["shear_k"], p["perturbation"])
    return euler2d.random_vorticity(grid, seed, p["k0"])


def run_euler2d(cfg: ExperimentConfig, command: str, out: Path) -> dict:
    p = cfg.params
    grid = Grid2(p["n"], p["n"])
    w0 = _euler_initial(p, grid, _seed(cfg))
    ec = euler2d.EulerConfig(
        grid, p["dt"], p["t_end"], p["nu_h"], p["hv_order"], p["output_every"], p["snapshot_every"],
        _seed(cfg), p["cfl_max"], p["blob_threshold"],
    )
    res = euler2d.run(ec, w0)
    s = res.series
    write_csv(out / "diagnostics.csv", header(s.COLUMNS), s.rows())
    for k, (t, w) in enumerate(res.snapshots):
        write_gfl1(out / f"snapshot_{k:05d}.gfl", w.physical())
    write_gfl1(out / "final.gfl", res.final.physical())
    E, Om = s.array("E"), s.array("Omega")
    summary = {
        "t_final": float(s.t[-1]),
        "energy_drift": float(np.max(np.abs(E - E[0])) / E[0]),
        "enstrophy_drift": float(np.max(np.abs(Om - Om[0])) / Om[0]),
        "nblobs_initial": int(s.nblobs[0]),
        "nblobs_final": int(s.nblobs[-1]),
        "nblobs_trend": _trend(s.t, s.nblobs),
    }
    if command == "fit":
        fit = euler2d.steady_functional_fit(res.final)
        write_csv(out / "steady_fit.csv", header(["psi", "F"], {"psi": "L^2/T", "F": "1/T"}),
                  zip(fit.psi_nodes, fit.F_nodes))
        slope = float(np.polyfit(fit.psi_nodes, fit.F_nodes, 1)[0]) if fit.psi_nodes.size > 1 else 0.0
        summary.update(fit_residual=fit.residual, fit_slope=slope)
    return summary


# --------------------------------------------------------------------------
# zeitlin


def run_zeitlin(cfg: ExperimentConfig, command: str, out: Path) -> dict:
    p = cfg.params
    state = zeitlin.ZeitlinState.random(p["n"], _seed(cfg), p["decay"])
    if p["method"] not in zeitlin.STEPPERS:
        raise ValueError(f"unknown method {p['method']!r}")
    step = zeitlin.STEPPERS[p["method"]]
    rows, dumps = [], 0

    def record(t, s):
        c = zeitlin.casimirs(s.W)
        rows.append((t, zeitlin.energy(s.W), c[2], c[3], c[4], c[5]))

    def dump(i, s):
        nonlocal dumps
        write_gfl1(out / f"matrix_{i:06d}.gfl", s.W)
        dumps += 1

    record(0.0, state)
    if p["dump_every"]:
        dump(0, state)
    n = p["steps"]
    for i in range(1, n + 1):
        state = step(state, p["dt"])
        if i % p["output_every"] == 0 or i == n:
            record(i * p["dt"], state)
        if p["dump_every"] and i % p["dump_every"] == 0:
            dump(i, state)
    if not p["dump_every"] or n % p["dump_every"]:
        dump(n, state)
    names = ["t", "energy", "tr2", "tr3", "tr4", "tr5"]
    write_csv(out / "diagnostics.csv", header(names), rows)
    arr = np.array(rows)
    drift = np.max(np.abs(arr[:, 2:] - arr[0, 2:]) / np.maximum(np.abs(arr[0, 2:]), 1e-300), axis=0)
    return {f"tr{k}_drift": float(d) for k, d in zip(range(2, 6), drift)} | {
        "energy_drift": float(np.max(np.abs(arr[:, 1] - arr[0, 1])) / abs(arr[0, 1])),
        "matrix_dumps": dumps,
    }


# --------------------------------------------------------------------------
# point vortices


def run_pv(cfg: ExperimentConfig, command: str, out: Path) -> dict:
    p = cfg.params
    sys = point_vortex.random_system(p["geometry"], p["vortices"], _seed(cfg), p["period"])
    traj = point_vortex.integrate(sys, p["t_end"], p["tol"], p["n_out"])
    dim = sys.positions.shape[1]
    coords = [f"{'xyz'[c]}{i}" for i in range(sys.n) for c in range(dim)]
    integrals = traj.integrals()
    keys = list(integrals[0])
    rows = [
        [t, *traj.positions[k].ravel(), *(integrals[k][q] for q in keys)] for k, t in enumerate(traj.t)
    ]
    units = {c: "L" for c in coords} | {q: "L^2/T" for q in keys}
    write_csv(out / "trajectory.csv", header(["t", *coords, *keys], units), rows)
    summary = {f"drift_{k}": v for k, v in traj.max_drift().items()}
    summary |= {"accepted_steps": traj.n_accepted, "rejected_steps": traj.n_rejected}
    if p["section_vortex"] >= 0:
        if not 0 <= p["section_vortex"] < sys.n or not 0 <= p["section_coord"] < dim:
            raise ValueError("Poincare section index out of range")
        sec = point_vortex.Section(p["section_vortex"], p["section_coord"], p["section_value"])
        times, states = point_vortex.poincare_section(traj, sec, p["tol"])
        write_csv(out / "poincare.csv", header(["t", *coords], units),
                  [[t, *s.ravel()] for t, s in zip(times, states)])
        summary["section_crossings"] = int(len(times))
    return summary


# --------------------------------------------------------------------------
# sticky particles


def _parts_label(parts) -> str:
    return "|".join("+".join(str(i) for i in part) for part in parts)


def _sticky_system(p, seed, integer=False):
    base = sticky.StickySystem.random(p["particles"], seed)
    if not integer:
        return base
    m = np.maximum(1.0, np.round(base.masses))
    return sticky.StickySystem(m, base.positions, base.velocities)


def run_sticky(cfg: ExperimentConfig, command: str, out: Path) -> dict:
    p = cfg.params
    seed = _seed(cfg)
    if command == "run":
        sys = _sticky_system(p, seed)
        r = sticky.event_driven_run(sys, p["t_end"])
        write_csv(
            out / "events.csv",
            header(["t", "event", "cluster", "parts", "velocity", "momentum_before", "momentum_after"],
                   {"cluster": "index", "parts": "index", "event": "index",
                    "momentum_before": "M L/T", "momentum_after": "M L/T"}),
            [[e.time, k, "+".join(map(str, e.members)), _parts_label(e.parts), e.velocity,
              e.momentum_before, e.momentum_after] for k, e in enumerate(r.events)],
        )
        x, y = r.endpoint(p["t_end"])
        write_csv(out / "endpoint.csv", header(["particle", "mass", "x", "y"], {"particle": "index", "mass": "M",
                                                                                 "x": "L", "y": "L"}),
                  [[i, sys.masses[i], x[i], y[i]] for i in range(sys.n)])
        jumps = [abs(e.momentum_after - e.momentum_before) for e in r.events]
        return {"events": len(r.events), "final_partition": "+".join(map(str, r.final_partition())),
                "max_momentum_jump": float(max(jumps, default=0.0))}
    if command == "minimize":
        sys = _sticky_system(p, seed)
        oracle = sticky.event_driven_run(sys, 1.0)
        x1, y1 = oracle.endpoint(1.0)
        z0 = np.concatenate([sys.positions, np.zeros(sys.n)])
        res = sticky.variational_minimize(z0, np.concatenate([x1, y1]), sys.masses, seed=seed)
        write_csv(out / "history.csv", header(["t", "partition"], {"partition": "sizes"}),
                  [[t, "+".join(map(str, part))] for t, part in zip(res.history.times, res.history.partitions)])
        ts = np.linspace(0.0, 1.0, 101)
        err = max(float(np.max(np.abs(res.path.x(t) - oracle.positions(t)))) for t in ts)
        write_csv(out / "path.csv", header(["t", *[f"x{i}" for i in range(sys.n)]], {f"x{i}": "L" for i in range(sys.n)}),
                  [[t, *res.path.x(t)] for t in ts])
        return {"action": res.action, "events": res.history.n_events, "candidates": len(res.candidates),
                "max_error_vs_event_driven": err}
    # continuum
    sys = _sticky_system(p, seed, integer=p["integer_masses"])
    f0, v0, counts = sticky.embed_particles(sys, p["samples_per_unit_mass"])
    oracle = sticky.event_driven_run(sys, p["t_end"])
    n_rows = max(1, int(round(p["t_end"] / p["output_every"])))
    times = np.linspace(0.0, p["t_end"], n_rows + 1)
    profiles, err = [], 0.0
    for t in times:
        f = sticky.continuum_evolve(f0, v0, t).values
        profiles.append(f)
        err = max(err, float(np.max(np.abs(f - np.repeat(oracle.positions(t), counts)))))
    prof = np.array(profiles)
    write_gfl1(out / "profiles.gfl", prof[..., None])
    write_csv(out / "profile_times.csv", header(["index", "t"], {"index": "1"}), enumerate(times))
    return {"samples": int(prof.shape[1]), "rows": int(prof.shape[0]), "max_error_vs_particles": err}


# --------------------------------------------------------------------------
# Madelung


def run_madelung(cfg: ExperimentConfig, command: str, out: Path) -> dict:
    p = cfg.params
    wf = madelung.smooth_test_state(p["n"], p["length"], p["amplitude"], p["phase_amplitude"], _seed(cfg))
    model = madelung.NlsModel(p["potential"] * np.cos(2 * np.pi * wf.x / wf.L), p["f_poly"])
    study = madelung.residual_convergence(wf, model, p["t"], p["dts"])
    rows = study.rows()
    names = ["dt", "continuity", "momentum", "order_continuity", "order_momentum"]
    write_csv(out / "residuals.csv", header(names), [[r[k] for k in names] for r in rows])
    oc, om = study.orders()
    back = madelung.madelung_forward(madelung.madelung_inverse(wf))
    return {
        "min_order_continuity": float(oc.min()) if oc.size else float("nan"),
        "min_order_momentum": float(om.min()) if om.size else float("nan"),
        "round_trip_error": float(np.max(np.abs(back.psi - wf.psi))),
    }


# --------------------------------------------------------------------------
# filaments


def _read_vertices(path) -> np.ndarray:
    head, rows = read_csv(path)
    pts = np.array([[float(v) for v in r[:3]] for r in rows if r])
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError(f"{path}: expected columns x, y, z")
    return pts


def _filament_shape(p, seed):
    shape = p["shape"]
    if shape == "circle":
        return filament.circle(p["radius"], p["m"])
    if shape == "helix":
        return filament.helix(p["helix_a"], p["helix_b"], p["turns"], p["m"])
    if shape == "knot":
        return filament.random_knot(seed, p["m"], p["modes"], p["knot_amplitude"])
    if not p["file"]:
        raise ValueError("shape = file needs the 'file' key")
    return filament.Filament(_read_vertices(p["file"]))


def run_filament(cfg: ExperimentConfig, command: str, out: Path) -> dict:
    p = cfg.params
    fil = _filament_shape(p, _seed(cfg))
    dt = p["dt"] if p["dt"] > 0 else 0.9 * filament.stable_dt(fil)
    r = filament.run(fil, dt, p["steps"], p["output_every"], keep_frames=True)
    geo = [[t, i, *fr.points[i]] for t, fr in zip(r.times, r.frames) for i in range(fr.m)]
    write_csv(out / "geometry.csv", header(["t", "vertex", "x", "y", "z"], {"vertex": "index", "x": "L", "y": "L", "z": "L"}), geo)
    rows = r.rows()
    names = list(rows[0])
    write_csv(out / "diagnostics.csv", header(names), [[row[k] for k in names] for row in rows])
    L = r.lengths
    return {"dt": float(dt), "steps": p["steps"], "length_drift": float(np.max(np.abs(L - L[0])) / L[0])}


# --------------------------------------------------------------------------
# topology


def load_field3d(path) -> VelocityField3D:
    a = read_gfl1(path)
    if a.ndim != 4 or a.shape[-1] != 3 or not (a.shape[0] == a.shape[1] == a.shape[2]):
        raise ValueError(f"{path}: expected a cubic (n, n, n, 3) GFL1 field")
    return VelocityField3D(np.moveaxis(a, -1, 0))


def save_field3d(path, u: VelocityField3D) -> Path:
    return write_gfl1(path, np.moveaxis(u.u, 0, -1))


def run_topo3d(cfg: ExperimentConfig, command: str, out: Path) -> dict:
    p = cfg.params
    if p["source"] == "file" or p["input"]:
        if not p["input"]:
            raise ValueError("source = file needs the 'input' key")
        u = load_field3d(p["input"])
    elif p["source"] == "abc":
        u = topo3d.abc_field(p["A"], p["B"], p["C"], p["n"])
    else:
        u = topo3d.random_divfree(p["n"], p["kmax"], _seed(cfg), p["slope"])
    E = topo3d.energy3d(u)
    result = {"n": u.n, "energy": E, "divergence": topo3d.divergence_norm(u)}
    if command == "helicity":
        H = topo3d.helicity(u)
        result |= {"helicity": H, "ratio_abs_H_over_2E": abs(H) / (2 * E) if E > 0 else 0.0}
    else:
        cu = topo3d.curl(u)
        uu = inner3(u, u)
        result |= {
            "lam": p["lam"],
            "beltrami_residual": topo3d.beltrami_residual(u, p["lam"]),
            "rayleigh_lam": inner3(cu, u) / uu if uu > 0 else 0.0,
        }
    (out / "result.json").write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
    return result


# --------------------------------------------------------------------------
# entropy


def run_entropy(cfg: ExperimentConfig, command: str, out: Path) -> dict:
    p = cfg.params
    ec = entropy.EntropyExperimentConfig(
        n_grid=p["n_grid"], members=p["members"], ns=tuple(p["ns"]), eps=p["eps"] or None,
        cells_per_axis=p["cells_per_axis"], dt=p["dt"], t_end=p["t_end"], output_every=p["output_every"],
        seed=_seed(cfg), k0=p["k0"], nu_h=p["nu_h"], frozen=p["frozen"], translates=p["translates"],
    )
    res = entropy.entropy_decrease_experiment(ec)
    cols = res.columns
    write_csv(out / "entropy.csv", header(cols, {c: "bit" for c in cols if c != "t"}),
              [[r[c] for c in cols] for r in res.rows])
    first, last = res.rows[0], res.rows[-1]
    return {"eps": res.eps} | {f"{c}_initial": first[c] for c in cols[1:]} | {f"{c}_final": last[c] for c in cols[1:]}


RUNNERS = {
    "euler2d": run_euler2d,
    "zeitlin": run_zeitlin,
    "pv": run_pv,
    "sticky": run_sticky,
    "madelung": run_madelung,
    "filament": run_filament,
    "topo3d": run_topo3d,
    "entropy": run_entropy,
}
