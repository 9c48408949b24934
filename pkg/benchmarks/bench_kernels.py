"""Time the compiled kernels against the NumPy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Each row reports the best of ``--repeat`` runs for both backends and the
speed-up. Inputs are the ones the library actually feeds the kernels.
"""
import argparse
import json
import math
import timeit

import numpy as np

from cdsphere import _kernels
from cdsphere.measures import _GL_NODES, _GL_WEIGHTS, SphereParams, marginal
from cdsphere.spectral import BISECT_TOL, sector_matrix


def _cases():
    diag, off = sector_matrix(SphereParams(3, 1.0, 0.7), 0, 2048)
    off2 = off * off
    lo, hi = -1.0, float(np.max(diag) + 2 * np.max(np.abs(off)) + 1)

    rng = np.random.default_rng(0)
    z0 = np.tile([0.5, 0.0, 0.0, 0.0], (100_000, 1))
    g = rng.standard_normal(z0.shape)

    params = SphereParams(3, 2.0, 0.6)
    m = marginal(params)
    u = rng.random(20_000)
    target = u * m.cum[-1]
    k = np.clip(np.searchsorted(m.cum, target, side="right") - 1, 0, len(m.breaks) - 2)
    qargs = (target - m.cum[k], m.breaks[k], m.breaks[k + 1], _GL_NODES, _GL_WEIGHTS,
             float(params.n), params.alpha, params.s, m.log_scale, 200)
    theta = np.linspace(0, math.pi, 200_000)

    return {
        "sturm bisection, M=2048 (1 eigenvalue)":
            lambda mod: mod.tridiag_eig_bisect(diag, off2, 1, lo, hi, BISECT_TOL),
        "walk-on-spheres step, 1e5 walkers in R^4":
            lambda mod: mod.wos_advance(z0.copy(), g),
        "quantile solve, 2e4 draws":
            lambda mod: mod.quantile_bisect(*qargs),
        "panel integral, 2e5 points":
            lambda mod: mod.partial_panel_integral(np.zeros_like(theta), theta, _GL_NODES, _GL_WEIGHTS,
                                                   3.0, 2.0, 0.6, m.log_scale),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", default=None, help="also write the timings here")
    args = ap.parse_args(argv)

    if _kernels.compiled is None:
        raise SystemExit("compiled extension not built; run `pip install -e . --no-build-isolation`")
    rows = []
    for name, fn in _cases().items():
        t_c = min(timeit.repeat(lambda: fn(_kernels.compiled), number=1, repeat=args.repeat))
        t_p = min(timeit.repeat(lambda: fn(_kernels.python), number=1, repeat=args.repeat))
        rows.append({"kernel": name, "cython_s": t_c, "python_s": t_p, "speedup": t_p / t_c})

    width = max(len(r["kernel"]) for r in rows)
    print(f"{'kernel':<{width}}  {'cython':>10}  {'numpy':>10}  {'speed-up':>8}")
    for r in rows:
        print(f"{r['kernel']:<{width}}  {r['cython_s'] * 1e3:8.2f}ms  {r['python_s'] * 1e3:8.2f}ms  {r['speedup']:7.1f}x")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
