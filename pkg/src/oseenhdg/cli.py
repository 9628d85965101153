"""Command-line entry point for the convergence study and parameter sweeps.

A flat json config file (--config) provides defaults; explicit flags
override it. Exit code 0 on full success, 1 if any grid cell failed.
"""

import argparse
import json
import sys

from .study import (
    StudyConfig,
    run_alpha_sweep,
    run_convergence_study,
    run_eta_alpha_grid,
)


def _float_list(text):
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _add_common(parser):
    parser.add_argument("--config", help="json file with StudyConfig fields")
    parser.add_argument("--method", choices=["hdg", "ehdg", "edg"])
    parser.add_argument("--degree", type=int, choices=[1, 2])
    parser.add_argument("--nu", type=float)
    parser.add_argument("--sigma", type=float)
    parser.add_argument("--eta", type=float)
    parser.add_argument("--alpha", type=float)
    parser.add_argument("--gamma", type=float)
    parser.add_argument("--nmin", type=int, dest="n_min")
    parser.add_argument("--nmax", type=int, dest="n_max")
    parser.add_argument("--solver", choices=["direct", "condensed"])
    parser.add_argument("--out")
    parser.add_argument("--format", choices=["csv", "json"], dest="fmt")


def _study_from_args(args):
    fields = {}
    if args.config:
        with open(args.config) as fh:
            fields.update(json.load(fh))
    for key in (
        "method", "degree", "nu", "sigma", "eta", "alpha", "gamma",
        "n_min", "n_max", "solver", "out", "fmt",
    ):
        value = getattr(args, key, None)
        if value is not None:
            fields[key] = value
    return StudyConfig(**fields).validate()


def _print_record(record):
    print(f"{'h':>12} {'e_u':>12} {'r_u':>6} {'e_p':>12} {'r_p':>6} "
          f"{'e_DG':>12} {'r_DG':>6}")
    for i, rep in enumerate(record.reports):
        def rate(r):
            return "---" if r is None else f"{r:.2f}"

        print(
            f"{rep.h:12.4e} {rep.e_u:12.4e} {rate(record.r_u[i]):>6} "
            f"{rep.e_p:12.4e} {rate(record.r_p[i]):>6} "
            f"{rep.e_energy:12.4e} {rate(record.r_dg[i]):>6}"
        )


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="oseen-hdg",
        description="Equal-order hybridized DG solver for the Oseen problem",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_study = sub.add_parser("study", help="manufactured-solution convergence study")
    _add_common(p_study)

    p_sweep = sub.add_parser("alpha-sweep", help="pressure-penalty sweep")
    _add_common(p_sweep)
    p_sweep.add_argument("--alphas", type=_float_list, required=True,
                         help="comma-separated pressure penalties")

    p_grid = sub.add_parser("eta-alpha-grid", help="joint penalty grid")
    _add_common(p_grid)
    p_grid.add_argument("--etas", type=_float_list, required=True)
    p_grid.add_argument("--alphas", type=_float_list, required=True)

    args = parser.parse_args(argv)
    study = _study_from_args(args)

    if args.command == "study":
        record = run_convergence_study(study)
        _print_record(record)
        return 0
    if args.command == "alpha-sweep":
        rows = run_alpha_sweep(study, args.alphas)
        for row in rows:
            rep = row["report"]
            print(f"alpha={row['alpha']:g} h={rep.h:.4e} e_u={rep.e_u:.4e} "
                  f"e_p={rep.e_p:.4e} e_DG={rep.e_energy:.4e}")
        return 0
    rows = run_eta_alpha_grid(study, args.etas, args.alphas)
    failed = 0
    for row in rows:
        rep = row["report"]
        if rep is None:
            failed += 1
            print(f"eta={row['eta']:g} alpha={row['alpha']:g} n={row['n']} "
                  f"{row['status']}")
        else:
            print(f"eta={row['eta']:g} alpha={row['alpha']:g} h={rep.h:.4e} "
                  f"e_u={rep.e_u:.4e} e_p={rep.e_p:.4e} e_DG={rep.e_energy:.4e}")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
