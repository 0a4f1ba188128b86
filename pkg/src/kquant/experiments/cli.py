"""The ``kq`` command line.

::

    kq run CONFIG
    kq study KIND [--k 8,16,32] [--u0 C1,C2,...] [--u1 ...] [--u2 ...] [--out DIR]
    kq density --k K --u C1,C2,...
    kq dist --u0 ... --u1 ... [--k 8,16,32]

Potentials are comma-separated correction coefficients ``c_1,c_2,...``
of ``f(p) = sum_m c_m p^m``; an empty string or ``fs`` is Fubini-Study.
Write negative leading values as ``--u0=-0.5,0.5``.
"""
from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .. import symspace as ss
from ..quantize import bergman_density, hilb
from ..toric import h_distance, legendre, scalar_curvature
from .config import ConfigError, parse_kgrid, parse_potential
from .report import format_table, write_report
from .runner import EXIT_FAIL, EXIT_INVALID, EXIT_OK, run_config
from .studies import StudyFailure, StudyKind, default_inputs, run_study


def _coeff_list(text: str, where: str) -> list:
    text = text.strip()
    if text.lower() in ("", "fs"):
        return []
    out = []
    for i, tok in enumerate(text.split(",")):
        try:
            out.append(float(tok))
        except ValueError:
            raise ConfigError(f"{where}[{i}]", f"not a number: {tok!r}") from None
    return out


def _potential(text, where):
    return parse_potential({"coeffs": _coeff_list(text, where)}, where)


def _kgrid(text, where):
    try:
        ks = [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(where, f"expected comma-separated integers, got {text!r}") from None
    return parse_kgrid(ks, where)


def _cmd_run(args) -> int:
    result = run_config(args.config)
    for report in result.reports:
        print(format_table(report))
    for msg in result.messages:
        print(msg, file=sys.stderr)
    for path in result.files:
        print(f"wrote {path}")
    return result.status


def _cmd_study(args) -> int:
    kind = StudyKind(args.kind)
    overrides = {}
    for name in ("u0", "u1", "u2"):
        text = getattr(args, name)
        if text is not None:
            overrides[name] = _potential(text, f"--{name}")
    if args.k is not None:
        overrides["kgrid"] = _kgrid(args.k, "--k")
    for name in ("tol", "t", "eps", "samples"):
        v = getattr(args, name)
        if v is not None:
            overrides[name] = v
    inputs = default_inputs(kind, seed=args.seed, **overrides)
    try:
        report = run_study(inputs)
    except StudyFailure as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_FAIL
    print(format_table(report))
    if args.out:
        for path in write_report(report, args.out, kind.value):
            print(f"wrote {path}")
    return EXIT_OK if report.passed else EXIT_FAIL


def _cmd_density(args) -> int:
    u = _potential(args.u, "--u")
    k = _kgrid(str(args.k), "--k")[0]
    p = (np.arange(1, args.points + 1)) / (args.points + 1)
    rho = bergman_density(legendre(u), k).on_chart(p)
    S = scalar_curvature(u)(p)
    print(f"{'p':>10} {'x':>12} {'rho_k':>22} {'k + S/2':>22}")
    for pi, xi, r, s in zip(p, u.du(p), rho, k + 0.5 * S):
        print(f"{pi:>10.6f} {xi:>12.6f} {r:>22.15g} {s:>22.15g}")
    return EXIT_OK


def _cmd_dist(args) -> int:
    u0, u1 = _potential(args.u0, "--u0"), _potential(args.u1, "--u1")
    print(f"d_H = {h_distance(u0, u1):.17g}")
    if args.k:
        P0, P1 = legendre(u0), legendre(u1)
        print(f"{'k':>5} {'d_Bk':>24} {'k^-3/2 d_Bk':>24}")
        for k in _kgrid(args.k, "--k"):
            d = ss.distance(hilb(P0, k), hilb(P1, k))
            print(f"{k:>5} {d:>24.17g} {d * k**-1.5:>24.17g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kq", description="Quantization convergence studies on CP^1.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run every study in a JSON config")
    p.add_argument("config")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("study", help="run a single study")
    p.add_argument("kind", choices=[k.value for k in StudyKind])
    p.add_argument("--k", help="comma-separated k values")
    for name in ("u0", "u1", "u2"):
        p.add_argument(f"--{name}", help="correction coefficients c1,c2,...")
    p.add_argument("--tol", type=float)
    p.add_argument("--t", type=float, help="time on the path (speed, accel, dzdt)")
    p.add_argument("--eps", type=float, help="perturbation size (lemmas)")
    p.add_argument("--samples", type=int, help="random pairs (ineq1, ineq2)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="directory for the CSV and JSON report")
    p.set_defaults(func=_cmd_study)

    p = sub.add_parser("density", help="print the Bergman density against k + S/2")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--u", default="", help="correction coefficients c1,c2,...")
    p.add_argument("--points", type=int, default=9)
    p.set_defaults(func=_cmd_density)

    p = sub.add_parser("dist", help="geodesic distance between two potentials")
    p.add_argument("--u0", default="")
    p.add_argument("--u1", required=True)
    p.add_argument("--k", help="also print quantized distances at these k")
    p.set_defaults(func=_cmd_dist)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
