"""``cdsphere`` command-line front end.

Exit status: 0 on success, 1 on invalid input or a numerical failure, 2 when
a proven inequality fails numerically (so CI can tell math regressions apart
from bad flags).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import curvature, measures, profiles, sampling, spectral
from .errors import CdSphereError, TheoremViolation
from .measures import SphereParams

EXIT_OK, EXIT_INVALID, EXIT_VIOLATION = 0, 1, 2
TOLERANCE_KEYS = {"quantile", "slack", "bound", "concentration"}

SUBCOMMANDS = {
    "density": "angular marginal: theta, pdf, cdf on a grid (+ normalisation constant)",
    "cd-check": "curvature-dimension certificate; JSON {rho_analytic, N, rho_numeric, argmin, search_radius}",
    "min-f": "minimum of F_p over the disk of --radius",
    "spectrum": "spectral gap with extrapolation and the applicable lower bounds",
    "alpha-scan": "spectral gap across alpha; CSV alpha,s,lambda,sector,rho,lower_bound_cor14,bmz_low,bmz_high",
    "profile": "model profile constants; CSV t,phi,Phi",
    "tail": "model tail int_r^inf phi; CSV r,tail",
    "isop-check": "cap isoperimetry check; CSV theta0,v,boundary_measure,lower_bound,slack",
    "sample": "inverse-CDF draws of theta; CSV theta or binary (CDSP header)",
    "bm-sample": "walk-on-spheres Brownian exit angles from x = (s, 0, ..., 0)",
    "ks": "two-sample KS: walk on spheres vs inverse-CDF sampling of the harmonic measure",
    "concentration": "exact vs empirical vs model tail of the half-mass cap; CSV r,exact,empirical,model_tail,stderr",
    "norm-check": "epsilon of a general norm and the implied certificate",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    subcommand: str
    params: SphereParams | None
    output_path: str | None
    format: str
    seed: int
    tolerances: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def validate(self):
        if self.subcommand not in SUBCOMMANDS:
            raise measures.ParameterError(f"unknown subcommand {self.subcommand!r}")
        if self.format not in ("json", "csv", "binary"):
            raise measures.ParameterError(f"unknown format {self.format!r}")
        if self.format == "binary" and self.subcommand not in ("sample", "bm-sample"):
            raise measures.ParameterError("binary output is only available for sample and bm-sample")
        unknown = set(self.tolerances) - TOLERANCE_KEYS
        if unknown:
            raise measures.ParameterError(f"unknown tolerance keys: {sorted(unknown)}")

    def to_dict(self) -> dict:
        return {
            "subcommand": self.subcommand,
            "params": self.params.to_dict() if self.params else None,
            "output_path": self.output_path,
            "format": self.format,
            "seed": self.seed,
            "tolerances": dict(self.tolerances),
            **self.extra,
        }


def _tolerance(text):
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError("expected NAME=VALUE")
    return key, float(value)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cdsphere", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    parser.subparsers = sub.choices

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, default=2, help="sphere dimension (>= 2)")
    common.add_argument("--alpha", type=float, default=1.0)
    common.add_argument("--s", type=float, default=0.0, help="|x| in [0, 1)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=None, help="output path (default stdout)")
    common.add_argument("--format", choices=["json", "csv", "binary"], default="json")
    common.add_argument("--tol", type=_tolerance, action="append", default=[], metavar="NAME=VALUE",
                        help=f"override a tolerance ({', '.join(sorted(TOLERANCE_KEYS))})")

    for name, help_text in SUBCOMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text, description=help_text)
        if name in ("density", "profile", "tail", "isop-check"):
            p.add_argument("--grid", type=int, default=200, help="number of grid points")
        if name == "spectrum":
            p.add_argument("--grid", type=int, default=None, help="single grid size instead of 512/1024/2048")
            p.add_argument("--ell", type=int, default=None, help="report only this harmonic sector")
        if name == "alpha-scan":
            p.add_argument("--alphas", default=None, help="comma-separated alphas, e.g. --alphas=-2,0,1 (default: 9 values in [-n, 3n])")
        if name == "cd-check":
            p.add_argument("--uniform", choices=["yes", "no"], default="yes",
                           help="search the unit disk (yes) or the disk of radius s (no)")
        if name == "min-f":
            p.add_argument("--radius", type=float, default=1.0)
            p.add_argument("--p", type=float, default=1.0)
        if name in ("sample", "bm-sample", "ks", "concentration"):
            p.add_argument("--count", type=int, default=10_000)
        if name in ("bm-sample", "ks"):
            p.add_argument("--eps", type=float, default=1e-6)
        if name == "concentration":
            p.add_argument("--grid", type=int, default=20, help="number of r values in [0, 2]")
        if name == "norm-check":
            p.add_argument("--norm", default="euclidean",
                           help="'euclidean', 'scaled:LAMBDA' or 'diag:a0,a1,...' for <Ay,y>^(1/2)")
            p.add_argument("--count", type=int, default=10_000, help="random (y, theta) pairs")
    return parser


def _config(args) -> RunConfig:
    params = SphereParams(args.n, args.alpha, args.s)
    extra = {k: v for k, v in vars(args).items()
             if k not in {"subcommand", "n", "alpha", "s", "seed", "out", "format", "tol"}}
    cfg = RunConfig(args.subcommand, params, args.out, args.format, args.seed, dict(args.tol), extra)
    cfg.validate()
    return cfg


def _table_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


class Output:
    """What a subcommand produced: a JSON payload, an optional table, an optional blob."""

    def __init__(self, payload, table=None, blob=None, violation=None):
        self.payload = payload
        self.table = table
        self.blob = blob
        self.violation = violation


def _cmd_density(cfg, args):
    m = measures.marginal(cfg.params)
    theta = np.linspace(0.0, math.pi, args.grid)
    pdf, cdf = m.pdf(theta), m.cdf(theta)
    payload = {"normalization": m.normalization, "Z": m.Z, "Z_sphere": m.Z_sphere,
               "median": measures.median_angle(cfg.params)}
    return Output(payload, (["theta", "pdf", "cdf"], list(zip(theta, pdf, cdf))))


def _cmd_cd_check(cfg, args):
    cert = curvature.certify(cfg.params, uniform_in_x=args.uniform == "yes")
    return Output(cert.to_dict())


def _cmd_min_f(cfg, args):
    value, arg = curvature.min_F_disk(args.radius, args.p)
    return Output({"radius": args.radius, "p": args.p, "min": value, "argmin": list(arg)})


def _cmd_spectrum(cfg, args):
    grids = spectral.GRIDS if args.grid is None else (args.grid // 2, args.grid)
    if args.ell is not None:
        values = spectral.sector_series(cfg.params, args.ell, grids)
        return Output({"ell": args.ell, "grids": list(grids), "values": values,
                       "extrapolated": spectral._richardson(values)})
    res = spectral.spectral_gap(cfg.params, grids=grids, audit=True)
    report = spectral.verify_bounds(cfg.params, res, tol=cfg.tolerances.get("bound", spectral.BOUND_TOL))
    payload = res.to_dict()
    payload["bounds"] = report.to_dict()["checks"]
    violation = None if report.passed else "spectral lower bound violated"
    return Output(payload, violation=violation)


def _cmd_alpha_scan(cfg, args):
    n = cfg.params.n
    if args.alphas:
        alphas = [float(a) for a in args.alphas.split(",")]
    else:
        alphas = list(np.linspace(-n, 3 * n, 9))
    rows = spectral.alpha_scan(n, cfg.params.s, alphas)
    payload = {"rows": [dict(zip(spectral.SCAN_COLUMNS, r.as_list()), ratio=r.ratio, error=r.error) for r in rows]}
    return Output(payload, (spectral.SCAN_COLUMNS, [["" if x is None else x for x in r.as_list()] for r in rows]))


def _cmd_profile(cfg, args):
    prof = profiles.model_profile(cfg.params)
    T = 5.0 / prof.sqrt_delta
    t = np.linspace(-T, T, args.grid)
    payload = {"rho": prof.rho, "delta": prof.delta, "c_norm": prof.c_norm,
               "cheeger_lower": profiles.cheeger_lower(prof)}
    return Output(payload, (["t", "phi", "Phi"], list(zip(t, profiles.phi(prof, t), profiles.Phi(prof, t)))))


def _cmd_tail(cfg, args):
    prof = profiles.model_profile(cfg.params)
    r = np.linspace(0.0, math.pi, args.grid)
    tail = profiles.tail_bound(prof, r)
    return Output({"r": r, "tail": tail}, (["r", "tail"], list(zip(r, tail))))


def _cmd_isop_check(cfg, args):
    report = profiles.isop_check_caps(cfg.params, args.grid)
    report.tol = cfg.tolerances.get("slack", profiles.SLACK_TOL)
    violation = None if report.passed else "cap isoperimetry violated"
    return Output(report.summary(), (["theta0", "v", "boundary_measure", "lower_bound", "slack"],
                                     list(report.rows())), violation=violation)


def _batch_output(batch):
    payload = {"method": batch.method, "count": len(batch), "seed": batch.seed,
               "rejected": batch.rejected, "theta": batch.thetas}
    return Output(payload, (["theta"], [[repr(float(t))] for t in batch.thetas]), blob=batch.to_bytes())


def _cmd_sample(cfg, args):
    return _batch_output(sampling.sample_direct(cfg.params, args.count, cfg.seed))


def _pole(cfg):
    x = np.zeros(cfg.params.n + 1)
    x[0] = cfg.params.s
    return x


def _cmd_bm_sample(cfg, args):
    return _batch_output(sampling.walk_on_spheres(cfg.params.n, _pole(cfg), args.eps, cfg.seed, args.count))


def _cmd_ks(cfg, args):
    harmonic = SphereParams(cfg.params.n, 1.0, cfg.params.s)
    wos = sampling.walk_on_spheres(harmonic.n, _pole(cfg), args.eps, cfg.seed, args.count)
    direct = sampling.sample_direct(harmonic, args.count, cfg.seed + 1)
    stat, p = sampling.ks_two_sample(wos, direct)
    return Output({"statistic": stat, "p_value": p, "count": args.count, "rejected": wos.rejected})


def _cmd_concentration(cfg, args):
    r = np.linspace(0.0, 2.0, args.grid)
    res = sampling.concentration_experiment(cfg.params, r, args.count, cfg.seed,
                                            tol=cfg.tolerances.get("concentration", 1e-9))
    violation = None if res.dominated else "exact tail exceeds model tail"
    return Output(res.to_dict(), (sampling.CONCENTRATION_COLUMNS, res.rows), violation=violation)


def _parse_norm(text: str):
    if text == "euclidean":
        return curvature.euclidean_norm()
    kind, _, rest = text.partition(":")
    if kind == "scaled":
        return curvature.euclidean_norm(float(rest))
    if kind == "diag":
        return curvature.quadratic_norm(np.diag([float(a) for a in rest.split(",")]))
    raise measures.ParameterError(f"unknown norm {text!r}")


def _cmd_norm_check(cfg, args):
    norm = _parse_norm(args.norm)
    res = curvature.norm_epsilon(norm, cfg.params.n, samples=args.count, seed=cfg.seed)
    payload = res.to_dict()
    rho_, N = res.implied_certificate(cfg.params.alpha)
    payload["implied_certificate"] = {"rho": rho_, "N": N}
    return Output(payload)


_HANDLERS = {
    "density": _cmd_density,
    "cd-check": _cmd_cd_check,
    "min-f": _cmd_min_f,
    "spectrum": _cmd_spectrum,
    "alpha-scan": _cmd_alpha_scan,
    "profile": _cmd_profile,
    "tail": _cmd_tail,
    "isop-check": _cmd_isop_check,
    "sample": _cmd_sample,
    "bm-sample": _cmd_bm_sample,
    "ks": _cmd_ks,
    "concentration": _cmd_concentration,
    "norm-check": _cmd_norm_check,
}


def _render(cfg: RunConfig, out: Output):
    if cfg.format == "binary":
        return out.blob
    if cfg.format == "csv":
        if out.table is not None:
            return _table_csv(*out.table)
        flat = {k: v for k, v in _jsonable(out.payload).items() if not isinstance(v, (dict, list))}
        return _table_csv(list(flat), [list(flat.values())])
    doc = {"version": __version__, "config": _jsonable(cfg.to_dict()), "result": _jsonable(out.payload)}
    if out.violation:
        doc["violation"] = out.violation
    return json.dumps(doc, indent=2) + "\n"


def _write(cfg: RunConfig, data):
    if cfg.output_path is None:
        if isinstance(data, bytes):
            sys.stdout.buffer.write(data)
            sys.stdout.buffer.flush()
        else:
            sys.stdout.write(data)
        return
    mode = "wb" if isinstance(data, bytes) else "w"
    with open(cfg.output_path, mode) as fh:
        fh.write(data)


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args, unknown = parser.parse_known_args(argv)
        if unknown:
            parser.subparsers[args.subcommand].error(f"unrecognized arguments: {' '.join(unknown)}")
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _config(args)
        out = _HANDLERS[cfg.subcommand](cfg, args)
        _write(cfg, _render(cfg, out))
    except TheoremViolation as exc:
        print(f"cdsphere: theorem check failed: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    except (CdSphereError, ValueError, OSError) as exc:
        print(f"cdsphere {args.subcommand}: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if out.violation:
        print(f"cdsphere: theorem check failed: {out.violation}", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
