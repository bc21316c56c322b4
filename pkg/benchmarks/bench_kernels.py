"""Compare the compiled kernels with the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json out.json]
"""

from __future__ import annotations

import argparse
import json
import timeit

import numpy as np

from geoflow import _kernels


def cases(rng):
    y = np.cumsum(rng.normal(size=20_000))
    w = rng.uniform(0.5, 2.0, y.size)
    mask = rng.uniform(size=(256, 256)) < 0.45
    p2 = rng.uniform(-1, 1, (200, 2))
    g = rng.uniform(-1, 1, 200)
    hp = np.column_stack([rng.uniform(-1, 1, 200), rng.uniform(0.2, 2, 200)])
    s3 = rng.normal(size=(200, 3))
    s3 /= np.linalg.norm(s3, axis=1)[:, None]
    t2 = rng.uniform(0, 2 * np.pi, (40, 2))
    gt = rng.uniform(-1, 1, 40)
    gt[-1] = -gt[:-1].sum()
    dx, dy = rng.uniform(-3, 3, 5000), rng.uniform(-3, 3, 5000)
    return {
        "pav n=20000": ("pav", (y, w)),
        "label_periodic 256^2": ("label_periodic", (mask,)),
        "plane_velocity N=200": ("plane_velocity", (p2, g)),
        "halfplane_velocity N=200": ("halfplane_velocity", (hp, g)),
        "sphere_velocity N=200": ("sphere_velocity", (s3, g)),
        "torus_velocity N=40": ("torus_velocity", (t2, gt, 2 * np.pi, 8)),
        "torus_pair_potential 5000": ("torus_pair_potential", (dx, dy, 2 * np.pi, 8)),
    }


def best_time(fn, args, repeat):
    number = 1
    while timeit.timeit(lambda: fn(*args), number=number) < 0.05 and number < 10_000:
        number *= 4
    return min(timeit.repeat(lambda: fn(*args), number=number, repeat=repeat)) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", help="write results to this file")
    args = ap.parse_args(argv)
    impls = {"python": _kernels.python}
    if _kernels.compiled is not None:
        impls["cython"] = _kernels.compiled
    rows = []
    print(f"{'kernel':<28}" + "".join(f"{k:>14}" for k in impls) + f"{'speedup':>10}")
    for label, (name, a) in cases(np.random.default_rng(0)).items():
        times = {k: best_time(getattr(m, name), a, args.repeat) for k, m in impls.items()}
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        rows.append({"kernel": label, **{f"{k}_s": v for k, v in times.items()}, "speedup": speed})
        print(f"{label:<28}" + "".join(f"{times[k] * 1e3:>12.3f}ms" for k in impls) + f"{speed:>9.1f}x")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
