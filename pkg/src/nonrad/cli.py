"""Command-line interface.

Subcommands wire the library to JSON/CSV files:

    build-orbit   sewing-chain spec JSON -> two-body system JSON
    flux          Poynting flux report (+ per-node CSV)
    check-gah     far-field vanishing statistics
    ndde          delay-equation demo: solution samples + breaking ledger
    action        evaluate the mixed-boundary action for a path
    extremize     quasi-Newton extremization of a discretized path
    momentum      momentum currents / jump mismatch at a time
    field-map     per-direction far-field CSV at one observer label

Outputs are deterministic for a fixed config and seed (canonical JSON key
order, canonical node ordering).  Exit codes: 0 success, 2 unusable input
(missing file, malformed JSON, invalid spec), otherwise the distinct code
of the module error that stopped the run (documented in the README);
stderr carries the machine-parsable error identifier.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import __version__
from .config import DEFAULT_CONFIG, RunConfig
from .core import system_from_dict, system_to_dict
from .errors import NonradError, SchemaError
from .fields import flux, sphere_quadrature
from .ndde import DelayProblem, solve_steps
from .nonradiating import SewingChainSpec, build_sewing_chain, check_gah
from .variational import (action_report, boundary_from_dict, extremize,
                          jump_mismatch, momentum_current, path_from_dict,
                          path_to_dict)

_SYSTEM_CACHE_NOTE = "produced by nonrad build-orbit"


def _load_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise _UsageError(f"cannot read {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise _UsageError(f"{path} is not valid JSON: {exc}")


class _UsageError(Exception):
    pass


def _emit(data: dict, out: str | None):
    text = json.dumps(data, sort_keys=True, indent=2) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _write_csv(path: str, header: list[str], rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([f"{v:.17g}" if isinstance(v, float) else v
                             for v in row])


def _load_system(path: str):
    return system_from_dict(_load_json(path), path=path)


# -- subcommands -------------------------------------------------------------

def cmd_build_orbit(args, cfg: RunConfig):
    data = _load_json(args.spec)
    try:
        chain = SewingChainSpec.from_dict(data.get("chain", data))
        positions = data["initial_positions"]
        masses = tuple(data.get("masses", (cfg.default_mass, cfg.default_mass)))
        charge = float(data.get("charge", cfg.default_charge))
    except (KeyError, TypeError, ValueError) as exc:
        raise _UsageError(f"{args.spec}: bad sewing-chain spec: {exc}")
    except NonradError as exc:
        # invalid input data (e.g. a superluminal base velocity), not a
        # failure of the construction itself
        raise _UsageError(f"{args.spec}: {exc}")
    system = build_sewing_chain(chain, positions, masses=masses, charge=charge)
    out = system_to_dict(system)
    out["note"] = _SYSTEM_CACHE_NOTE
    _emit(out, args.out)
    return 0


def cmd_flux(args, cfg: RunConfig):
    system = _load_system(args.system)
    quad = sphere_quadrature(args.n_theta or cfg.quad_n_theta,
                             args.n_phi or cfg.quad_n_phi)
    excl = args.exclusion_radius or cfg.exclusion_radius
    report, nodes = flux(system, args.t, quad, excl, strict=args.strict,
                         return_nodes=True, threads=max(1, args.threads))
    _emit({"version": 1, "seed": args.seed, "t": args.t,
           "total_flux": report.total_flux, "abs_flux": report.abs_flux,
           "max_field_sq": report.max_field_sq,
           "excluded_fraction": report.excluded_fraction,
           "samples": report.samples, "reliable": report.reliable}, args.out)
    if args.csv:
        rows = [(float(nodes["t"][i]), float(nodes["n"][i][0]),
                 float(nodes["n"][i][1]), float(nodes["n"][i][2]),
                 float(nodes["e_ret_mag"][i]), float(nodes["e_adv_mag"][i]),
                 float(nodes["p_dot_n"][i]), int(nodes["included"][i]))
                for i in range(report.samples)]
        _write_csv(args.csv, ["t", "n_x", "n_y", "n_z", "E_ret_R", "E_adv_R",
                              "P_dot_n_R2", "defined"], rows)
    return 0


def cmd_check_gah(args, cfg: RunConfig):
    system = _load_system(args.system)
    excl = args.exclusion_radius or cfg.exclusion_radius
    report, samples = check_gah(system, args.t_samples, args.n_samples, excl,
                                seed=args.seed, return_residuals=True)
    _emit({"version": 1, "seed": args.seed, **report.to_dict()}, args.out)
    if args.csv:
        rows = [(float(samples["t"][i]), float(samples["n"][i][0]),
                 float(samples["n"][i][1]), float(samples["n"][i][2]),
                 float(samples["residual"][i]), int(samples["included"][i]))
                for i in range(report.samples)]
        _write_csv(args.csv, ["t", "n_x", "n_y", "n_z", "residual", "included"],
                   rows)
    return 0


def cmd_ndde(args, cfg: RunConfig):
    history = tuple(float(c) for c in args.history.split(","))
    problem = DelayProblem(args.kind, args.a, args.b, args.tau, history,
                           args.horizon)
    sol, ledger = solve_steps(problem, max_degree=args.max_degree)
    orders = [None if o == float("inf") else o for o in ledger.smoothness_order]
    _emit({"version": 1,
           "kind": args.kind, "a": args.a, "b": args.b, "tau": args.tau,
           "horizon": args.horizon,
           "breaking_points": list(ledger.times),
           "derivative_jumps": list(ledger.jump_in_derivative),
           "smoothness_orders": orders}, args.out)
    if args.csv:
        ts = np.linspace(-problem.tau, problem.horizon, args.csv_samples)
        rows = [(float(t), float(sol.value(float(t))),
                 float(sol.value(float(t), order=1))) for t in ts]
        _write_csv(args.csv, ["t", "x", "dx_dt"], rows)
    return 0


def cmd_action(args, cfg: RunConfig):
    boundary = boundary_from_dict(_load_json(args.boundary))
    path = path_from_dict(_load_json(args.path))
    value, err = action_report(path, boundary)
    _emit({"version": 1, "value": value, "quadrature_error_estimate": err},
          args.out)
    return 0


def cmd_extremize(args, cfg: RunConfig):
    boundary = boundary_from_dict(_load_json(args.boundary))
    initial = path_from_dict(_load_json(args.initial))
    final, report = extremize(boundary, initial,
                              gradient_tol=args.gtol or cfg.gradient_tol,
                              max_iterations=args.max_iter or cfg.max_iterations)
    _emit({"version": 1, "seed": args.seed, "path": path_to_dict(final),
           **report}, args.out)
    return 0


def cmd_momentum(args, cfg: RunConfig):
    system = _load_system(args.system)
    if args.jump:
        mc = jump_mismatch(system, args.t)
        _emit({"version": 1, "t": args.t, "left": mc.left.tolist(),
               "right": mc.right.tolist(), "mismatch": mc.mismatch.tolist()},
              args.out)
    else:
        p = momentum_current(system, args.side, args.t)
        _emit({"version": 1, "t": args.t, "side": args.side,
               "current": p.tolist()}, args.out)
    return 0


def cmd_field_map(args, cfg: RunConfig):
    system = _load_system(args.system)
    quad = sphere_quadrature(args.n_theta or cfg.quad_n_theta,
                             args.n_phi or cfg.quad_n_phi)
    excl = args.exclusion_radius or cfg.exclusion_radius
    report, nodes = flux(system, args.t, quad, excl, strict=False,
                         return_nodes=True, threads=max(1, args.threads))
    rows = [(float(nodes["t"][i]), float(nodes["n"][i][0]),
             float(nodes["n"][i][1]), float(nodes["n"][i][2]),
             float(nodes["e_ret_mag"][i]), float(nodes["e_adv_mag"][i]),
             float(nodes["p_dot_n"][i]), int(nodes["included"][i]))
            for i in range(report.samples)]
    target = args.out or "field_map.csv"
    _write_csv(target, ["t", "n_x", "n_y", "n_z", "E_ret_R", "E_adv_R",
                        "P_dot_n_R2", "defined"], rows)
    return 0


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="nonrad",
        description="Two-body electromagnetic orbits with velocity jumps")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--config", help="JSON file overriding run defaults")
    p.add_argument("--seed", type=int, default=DEFAULT_CONFIG.seed)
    p.add_argument("--threads", type=int, default=1,
                   help="worker threads for sampling loops (results are "
                        "identical for any thread count)")
    p.add_argument("--out", help="output file (default: stdout)")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("build-orbit", help="construct a sewing-chain system")
    sp.add_argument("spec", help="sewing-chain spec JSON")
    sp.set_defaults(func=cmd_build_orbit)

    sp = sub.add_parser("flux", help="Poynting flux through the far sphere")
    sp.add_argument("system", help="two-body system JSON")
    sp.add_argument("--t", type=float, default=0.0)
    sp.add_argument("--n-theta", type=int)
    sp.add_argument("--n-phi", type=int)
    sp.add_argument("--exclusion-radius", type=float)
    sp.add_argument("--csv", help="write per-node CSV here")
    sp.add_argument("--no-strict", dest="strict", action="store_false")
    sp.set_defaults(func=cmd_flux, strict=True)

    sp = sub.add_parser("check-gah", help="far-field vanishing statistics")
    sp.add_argument("system")
    sp.add_argument("--t-samples", type=int, default=40)
    sp.add_argument("--n-samples", type=int, default=25)
    sp.add_argument("--exclusion-radius", type=float)
    sp.add_argument("--csv", help="write per-sample residual CSV here")
    sp.set_defaults(func=cmd_check_gah)

    sp = sub.add_parser("ndde", help="delay-equation breaking-point demo")
    sp.add_argument("--kind", choices=("retarded", "neutral"), required=True)
    sp.add_argument("--a", type=float, default=0.0)
    sp.add_argument("--b", type=float, default=0.0)
    sp.add_argument("--tau", type=float, default=1.0)
    sp.add_argument("--history", default="1",
                    help="comma-separated polynomial coefficients in t + tau")
    sp.add_argument("--horizon", type=float, default=3.0)
    sp.add_argument("--max-degree", type=int, default=16)
    sp.add_argument("--csv", help="write solution samples here")
    sp.add_argument("--csv-samples", type=int, default=201)
    sp.set_defaults(func=cmd_ndde)

    sp = sub.add_parser("action", help="evaluate the action for a path")
    sp.add_argument("boundary", help="boundary config JSON")
    sp.add_argument("path", help="discretized path JSON")
    sp.set_defaults(func=cmd_action)

    sp = sub.add_parser("extremize", help="extremize a discretized path")
    sp.add_argument("boundary")
    sp.add_argument("initial")
    sp.add_argument("--gtol", type=float)
    sp.add_argument("--max-iter", type=int)
    sp.set_defaults(func=cmd_extremize)

    sp = sub.add_parser("momentum", help="momentum current or jump mismatch")
    sp.add_argument("system")
    sp.add_argument("--t", type=float, required=True)
    sp.add_argument("--side", choices=("left", "right"), default="left")
    sp.add_argument("--jump", action="store_true",
                    help="report the jump mismatch at a breakpoint")
    sp.set_defaults(func=cmd_momentum)

    sp = sub.add_parser("field-map", help="per-direction far-field CSV")
    sp.add_argument("system")
    sp.add_argument("--t", type=float, default=0.0)
    sp.add_argument("--n-theta", type=int)
    sp.add_argument("--n-phi", type=int)
    sp.add_argument("--exclusion-radius", type=float)
    sp.set_defaults(func=cmd_field_map)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = DEFAULT_CONFIG
    try:
        if args.config:
            cfg = RunConfig.from_dict(_load_json(args.config))
        return args.func(args, cfg)
    except _UsageError as exc:
        print(f"error: Usage: {exc}", file=sys.stderr)
        return 2
    except SchemaError as exc:
        # unusable input file
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NonradError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"error: Usage: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
