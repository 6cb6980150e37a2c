"""Command-line driver: convergence sweeps, single solves, kernel orders.

Subcommands::

    converge --case {hemisphere2|hemisphere3} --t 5,10,20,40 --seeds 3
             --mode {full|reduced}
             --variant {none|lambda|nonhomogeneous|nonlinear}
             [--lambda X --p X --g-case NAME] [--allow-partial]
             [--config PATH] --out DIR
    solve    --case ... --t N --seed N --mode ... [--variant ...]
             [--export-matrix PATH] --out DIR
    lemmas   --case hemisphere2 --deltas 0.4,0.2,0.1,0.05 --out DIR

Exit codes: 0 success, 2 configuration error, 3 solver non-convergence,
4 I/O error.  An optional config file holds flat ``key = value`` lines
mirroring the long flags; explicit flags override file values.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .assembly import assemble, export_matrix
from .geometry import build_cloud, get_case, save_cloud_csv
from .harness import (
    ConfigurationError,
    G_CASES,
    HarnessOptions,
    convergence_study,
    e2_error,
    emit_lemma_report,
    emit_report,
    lemma_diagnostics,
    run_single,
)

DEFAULTS = {
    "seeds": 3,
    "seed": 1,
    "mode": "full",
    "variant": "none",
    "lam": 1.0,
    "p": 1.5,
    "theta": 1.0,
    "g_case": "hemisphere2_zsq",
    "out": ".",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nlpoisson",
        description="Meshless nonlocal solver for the manifold Poisson "
                    "problem with Neumann boundary")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--case", required=True,
                       choices=["hemisphere2", "hemisphere3"])
        p.add_argument("--mode", choices=["full", "reduced"], default=None)
        p.add_argument("--variant", default=None,
                       choices=["none", "lambda", "nonhomogeneous", "nonlinear"])
        p.add_argument("--lambda", dest="lam", type=float, default=None)
        p.add_argument("--p", type=float, default=None)
        p.add_argument("--theta", type=float, default=None)
        p.add_argument("--g-case", dest="g_case", default=None)
        p.add_argument("--config", default=None,
                       help="flat key = value file mirroring the flags")
        p.add_argument("--out", default=None, help="output directory")

    conv = sub.add_parser("converge", help="run a convergence sweep")
    common(conv)
    conv.add_argument("--t", required=True,
                      help="comma-separated resolution list, e.g. 5,10,20,40")
    conv.add_argument("--seeds", type=int, default=None,
                      help="number of seeds per resolution (seeds 1..n)")
    conv.add_argument("--allow-partial", action="store_true", default=None)

    solve = sub.add_parser("solve", help="solve one configuration")
    common(solve)
    solve.add_argument("--t", type=int, required=True)
    solve.add_argument("--seed", type=int, default=None)
    solve.add_argument("--export-matrix", dest="export_matrix", default=None)

    lem = sub.add_parser("lemmas", help="kernel-order diagnostics")
    lem.add_argument("--case", required=True, choices=["hemisphere2"])
    lem.add_argument("--deltas", required=True,
                     help="comma-separated horizons, e.g. 0.4,0.2,0.1,0.05")
    lem.add_argument("--config", default=None)
    lem.add_argument("--out", default=None)

    return parser


def _read_config(path: str) -> dict:
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        values[key.replace("-", "_")] = val
    return values


_CONFIG_TYPES = {
    "seeds": int, "seed": int, "t": str, "lam": float, "p": float,
    "theta": float, "allow_partial": lambda v: v.lower() in ("1", "true", "yes"),
}


def _merge(args: argparse.Namespace) -> dict:
    """Layer defaults, then config file, then explicit flags."""
    merged = dict(DEFAULTS)
    if getattr(args, "config", None):
        raw = _read_config(args.config)
        if "lambda" in raw:
            raw["lam"] = raw.pop("lambda")
        for key, val in raw.items():
            merged[key] = _CONFIG_TYPES.get(key, str)(val)
    for key, val in vars(args).items():
        if key not in ("command", "config") and val is not None:
            merged[key] = val
    return merged


def _parse_int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise ConfigurationError(f"bad integer list {text!r}") from None


def _options(merged: dict) -> HarnessOptions:
    return HarnessOptions(mode=merged["mode"], variant=merged["variant"],
                          lam=merged["lam"], p=merged["p"],
                          theta=merged["theta"], g_case=merged["g_case"])


def _cmd_converge(merged: dict) -> int:
    options = _options(merged)
    t_list = _parse_int_list(merged["t"])
    report = convergence_study(merged["case"], t_list, int(merged["seeds"]),
                               options)
    csv_path, svg_path = emit_report(report, merged["out"])
    print(f"slope = {report.slope:.4f}")
    print(f"wrote {csv_path} and {svg_path}")
    if report.partial and not merged.get("allow_partial"):
        print("some solves did not converge", file=sys.stderr)
        return 3
    return 0


def _cmd_solve(merged: dict) -> int:
    options = _options(merged)
    row, result = run_single(merged["case"], int(merged["t"]),
                             int(merged["seed"]), options)
    out = Path(merged["out"])
    out.mkdir(parents=True, exist_ok=True)
    case = get_case(merged["case"])
    cloud = build_cloud(case, int(merged["t"]), int(merged["seed"]))
    exact = case.exact_u(cloud.points)
    path = out / "solution.csv"
    with open(path, "w") as fh:
        fh.write("kind," + ",".join(f"x{i}" for i in range(cloud.d))
                 + ",u,exact\n")
        nb = cloud.n0 - cloud.m0
        for i in range(cloud.n0):
            kind = "interior" if i < nb else "boundary"
            xs = ",".join(repr(float(v)) for v in cloud.points[i])
            fh.write(f"{kind},{xs},{float(result.U[i])!r},{float(exact[i])!r}\n")
    save_cloud_csv(cloud, out / "cloud.csv")
    if merged.get("export_matrix"):
        system = assemble(cloud, mode=options.mode)
        export_matrix(system, merged["export_matrix"])
    print(f"t={row.t} seed={row.seed} n0={row.n0} m0={row.m0} "
          f"e2={row.e2:.6f} iters={row.iters} converged={row.converged}")
    print(f"wrote {path}")
    return 0 if row.converged else 3


def _cmd_lemmas(merged: dict) -> int:
    deltas = [float(v) for v in str(merged["deltas"]).split(",") if v.strip()]
    report = lemma_diagnostics(merged["case"], deltas)
    csv_path, svg_path = emit_lemma_report(report, merged["out"])
    print(f"C_R = {report.CR:.12g}")
    print(f"boundary-sum deviation order = {report.boundary_order:.3f}")
    print(f"omega deviation order = {report.omega_order:.3f}")
    print(f"wrote {csv_path} and {svg_path}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        merged = _merge(args)
        if args.command == "converge":
            return _cmd_converge(merged)
        if args.command == "solve":
            return _cmd_solve(merged)
        if args.command == "lemmas":
            return _cmd_lemmas(merged)
        raise ConfigurationError(f"unknown command {args.command!r}")
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
