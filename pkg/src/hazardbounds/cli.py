"""Command-line entry point: ``hazardbounds <subcommand> ...``.

Exit status is 0 on success, 1 when a bound check fails and 2 on a usage or
configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .bounds import (
    Deterministic,
    Exponential,
    LogNormal,
    SirParams,
    bernoulli_bound,
    bernoulli_closed_form,
    draief_bound,
    sir_threshold_report,
    uniform_bound,
    uniform_closed_form,
    worst_case_bound,
    worst_case_closed_form,
)
from .errors import ConfigError, HazardBoundsError
from .harness import (
    Scenario,
    build_spec,
    config_hash,
    csv_text,
    exact_battery,
    jsonable,
    read_config_json,
    parse_config,
    result_csv,
    run_monte_carlo,
    run_sweep,
    run_tightness,
)
from .hazard import edges_matrix, hazard_radius, spec_hazard_radius, spectral_radius
from .percolation import percolation_report, site_percolation_hazard

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- shared flags --------------------------------------------------------

def _add_model_flags(p):
    g = p.add_argument_group("model")
    g.add_argument("--model", choices=["erdos", "star", "grid", "random_star", "norros_reittu", "cycle"])
    g.add_argument("--edge-list", help="load the model from an edge-list file")
    g.add_argument("--n", type=int)
    g.add_argument("--c", type=float)
    g.add_argument("--p", type=float)
    g.add_argument("--a", type=float)
    g.add_argument("--b", type=float)
    g.add_argument("--d", type=int)
    g.add_argument("--side", type=int)
    g.add_argument("--weights", help="comma-separated Norros-Reittu weights")


def _add_run_flags(p):
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--seed", type=int, help="master seed (overrides config)")
    p.add_argument("--trials", type=int, help="trial count (overrides config)")
    p.add_argument("--workers", type=int)
    p.add_argument("--scenario", help="fixed:<ids> | uniform:<n0> | bernoulli:<q>")
    p.add_argument("--out", help="write CSV here")
    p.add_argument("--json", help="write JSON here")


def _model_dict(args) -> dict | None:
    if args.edge_list:
        return {"edge_list": args.edge_list}
    if not args.model:
        return None
    need = {
        "erdos": ("n", "c"), "star": ("n", "p"), "grid": ("d", "side", "p"),
        "random_star": ("n", "a", "b"), "cycle": ("n", "p"), "norros_reittu": ("weights",),
    }[args.model]
    params = {}
    for k in need:
        v = getattr(args, k)
        if v is None:
            raise UsageError(f"--model {args.model} needs --{k.replace('_', '-')}")
        params[k] = v
    if args.model == "norros_reittu":
        params = {"w": [float(x) for x in params.pop("weights").split(",")]}
    return {"generator": args.model, "params": params}


def _base_config(args, **defaults) -> dict:
    if getattr(args, "config", None):
        raw = read_config_json(args.config)
    else:
        model = _model_dict(args)
        if model is None:
            raise UsageError("give --config or a model (--model/--edge-list)")
        raw = {"model": model}
        raw.update(defaults)
    if getattr(args, "seed", None) is not None:
        raw["master_seed"] = args.seed
    if getattr(args, "trials", None) is not None:
        raw["trials"] = args.trials
    if getattr(args, "workers", None) is not None:
        raw["workers"] = args.workers
    if getattr(args, "scenario", None):
        raw["scenario"] = args.scenario
    return raw


def _emit(args, payload: dict, csv_body: str | None):
    text = json.dumps(jsonable(payload), indent=2, sort_keys=True, allow_nan=False)
    if getattr(args, "json", None):
        Path(args.json).write_text(text + "\n", encoding="utf-8")
    if getattr(args, "out", None) and csv_body is not None:
        Path(args.out).write_text(csv_body, encoding="utf-8")
    if not getattr(args, "json", None) and not getattr(args, "out", None):
        print(text)


def _print_checks(res):
    for c in res.checks:
        status = "PASS" if c.passed else "FAIL"
        print(f"{status} {c.estimand:<20} {c.bound_name:<24} mean={c.mean:.6g} "
              f"se={c.stderr:.3g} bound={c.bound:.6g} margin={c.margin:.4g}", file=sys.stderr)


# -- subcommands ---------------------------------------------------------

def cmd_bound(args) -> int:
    if args.rho_H is not None:
        if args.n is None:
            raise UsageError("--rho-H needs --n")
        n, rho, hz = args.n, args.rho_H, {"rho_H": args.rho_H}
    else:
        model = _model_dict(args)
        if model is None:
            raise UsageError("give --rho-H with --n, or a model")
        spec = build_spec(model)
        summary = spec_hazard_radius(spec)
        n, rho, hz = spec.n, summary.rho_H, summary.to_dict()
    sc = Scenario.parse(args.scenario or "fixed:0", n)
    reports = []
    if sc.kind == "fixed" and sc.n0 >= 1:
        reports.append(worst_case_bound(n, sc.n0, rho))
        if sc.n0 < n:
            reports.append(worst_case_closed_form(n, sc.n0, rho))
    elif sc.kind == "uniform":
        reports.append(uniform_bound(n, sc.n0, rho))
        if sc.n0 < n:
            reports.append(uniform_closed_form(n, sc.n0, rho))
    elif sc.kind == "bernoulli":
        reports.append(bernoulli_bound(n, sc.q, rho))
        reports.append(bernoulli_closed_form(n, sc.q, rho))
    payload = {
        "n": n,
        "hazard": hz,
        "scenario": str(sc),
        "influence": [r.to_dict() for r in reports],
        "percolation": percolation_report(n, rho, args.m or []).to_dict(),
    }
    _emit(args, payload, None)
    return EXIT_OK


def _run_and_report(args, raw) -> int:
    cfg = parse_config(raw)
    res = run_monte_carlo(cfg)
    _print_checks(res)
    _emit(args, res.to_dict(), result_csv(res))
    return EXIT_OK if res.passed else EXIT_FAIL


def cmd_simulate(args) -> int:
    return _run_and_report(args, _base_config(args, scenario="fixed:0", outputs=["influence"]))


def cmd_percolate(args) -> int:
    if args.action == "bound":
        rho = args.rho_H
        if rho is None:
            model = _model_dict(args)
            if model is None:
                raise UsageError("give --rho-H with --n, or a model")
            spec = build_spec(model)
            n = spec.n
            if args.site_prob is not None:
                r, c, _ = spec.entries()
                edges = [(i, j) for i, j in zip(r.tolist(), c.tolist()) if i != j]
                H = site_percolation_hazard(edges, [args.site_prob] * n)
                rho = hazard_radius(H).rho_H
            else:
                rho = spec_hazard_radius(spec).rho_H
        else:
            if args.n is None:
                raise UsageError("--rho-H needs --n")
            n = args.n
        _emit(args, percolation_report(n, rho, args.m or []).to_dict(), None)
        return EXIT_OK
    outputs = ["c1"] + [f"n_at_least:{m}" for m in (args.m or [])]
    raw = _base_config(args, outputs=outputs)
    if args.site_prob is not None:
        raw["process"] = "site"
        raw["process_params"] = {"node_prob": args.site_prob}
    return _run_and_report(args, raw)


def _incubation_from_args(args):
    if args.lognormal:
        return LogNormal(*args.lognormal)
    if args.deterministic is not None:
        return Deterministic(args.deterministic)
    return Exponential(args.delta)


def cmd_sir(args) -> int:
    inc = _incubation_from_args(args)
    if args.config:
        raw = _base_config(args)
    else:
        if args.cycle:
            model = {"generator": "cycle", "params": {"n": args.cycle, "p": 0.5}}
        else:
            model = _model_dict(args)
            if model is None:
                raise UsageError("give --cycle N, --config or a model for the contact graph")
        raw = {"model": model, "scenario": args.scenario or "fixed:0", "outputs": ["influence"]}
        if args.seed is not None:
            raw["master_seed"] = args.seed
        if args.trials is not None:
            raw["trials"] = args.trials
        if args.workers is not None:
            raw["workers"] = args.workers
    inc_dict = (
        {"kind": "lognormal", "mu": inc.mu, "sigma": inc.sigma} if isinstance(inc, LogNormal)
        else {"kind": "deterministic", "d": inc.d} if isinstance(inc, Deterministic)
        else {"kind": "exponential", "rate": inc.rate}
    )
    raw["process"] = "sir"
    raw.setdefault("process_params", {})
    raw["process_params"].setdefault("beta", args.beta)
    raw["process_params"].setdefault("incubation", inc_dict)
    cfg = parse_config(raw)
    rho_A = spectral_radius(edges_matrix(cfg.n, cfg.edges))[0]
    beta = float(cfg.process_params["beta"])
    incubation = cfg.process_params["incubation"]
    report = sir_threshold_report(SirParams(beta, incubation, rho_A))
    payload = {"rho_A": rho_A, "beta": beta, "threshold": report.to_dict()}
    if isinstance(incubation, Exponential) and beta * rho_A < incubation.rate and cfg.scenario.kind == "fixed" \
            and cfg.scenario.n0 >= 1:
        payload["draief_bound"] = draief_bound(cfg.n, cfg.scenario.n0, beta, incubation.rate, rho_A)
    if args.trials is None and "trials" not in raw:
        _emit(args, payload, None)
        return EXIT_OK
    res = run_monte_carlo(cfg)
    _print_checks(res)
    payload.update(res.to_dict())
    _emit(args, payload, result_csv(res))
    return EXIT_OK if res.passed else EXIT_FAIL


def cmd_cascade(args) -> int:
    raw = _base_config(args, scenario="fixed:0", outputs=["influence"])
    raw["process"] = "cascade"
    return _run_and_report(args, raw)


def _parse_values(text: str):
    vals = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        v = float(tok)
        vals.append(int(v) if v.is_integer() and "." not in tok and "e" not in tok.lower() else v)
    return vals


def cmd_sweep(args) -> int:
    raw = _base_config(args, scenario="fixed:0", outputs=["influence", "c1"])
    values = _parse_values(args.values)
    if not values:
        raise UsageError("--values is empty")
    cols, rows = run_sweep(raw, args.param, values)
    meta_hash = config_hash({"base": raw, "param": args.param, "values": values})
    seed = raw.get("master_seed", 0)
    body = csv_text(cols, rows, seed, meta_hash)
    payload = {"tool": "hazardbounds", "version": __version__, "master_seed": seed,
               "config_sha256": meta_hash, "columns": cols, "rows": rows}
    if args.out or args.json:
        _emit(args, payload, body)
    else:
        sys.stdout.write(body)
    return EXIT_OK


def cmd_tightness(args) -> int:
    ns = [int(x) for x in _parse_values(args.n_list)]
    seed = args.seed or 0
    cols, rows = run_tightness(args.rho, ns, args.trials or 1000, seed, args.workers or 1)
    meta_hash = config_hash({"rho": args.rho, "n": ns, "trials": args.trials or 1000})
    body = csv_text(cols, rows, seed, meta_hash)
    payload = {"tool": "hazardbounds", "version": __version__, "master_seed": seed,
               "config_sha256": meta_hash, "columns": cols, "rows": rows}
    if args.out or args.json:
        _emit(args, payload, body)
    else:
        sys.stdout.write(body)
    return EXIT_OK


def cmd_validate(args) -> int:
    if args.battery:
        rows = exact_battery(args.battery, args.seed or 0)
        bad = [r for r in rows if r["margin"] < -1e-9]
        cols = ["spec", "n", "edges", "rho_H", "scenario", "n0", "q", "exact", "bound", "margin"]
        body = csv_text(cols, rows, args.seed or 0, config_hash({"battery": args.battery}))
        if args.out:
            Path(args.out).write_text(body, encoding="utf-8")
        print(f"{len(rows) - len(bad)}/{len(rows)} exact checks passed")
        return EXIT_FAIL if bad else EXIT_OK
    if not args.config:
        raise UsageError("validate needs --config or --battery")
    return _run_and_report(args, _base_config(args))


# -- parser --------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hazardbounds", description="Spectral influence bounds and Monte Carlo validation.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("bound", help="evaluate the bounds for a Hazard radius or a model")
    _add_model_flags(b)
    b.add_argument("--rho-H", dest="rho_H", type=float)
    b.add_argument("--scenario")
    b.add_argument("--m", type=int, action="append", help="component size threshold (repeatable)")
    b.add_argument("--json")
    b.set_defaults(func=cmd_bound)

    s = sub.add_parser("simulate", help="Monte Carlo estimates with attached bounds")
    _add_model_flags(s)
    _add_run_flags(s)
    s.set_defaults(func=cmd_simulate)

    pc = sub.add_parser("percolate", help="bond or site percolation")
    pc.add_argument("action", choices=["bound", "simulate"])
    _add_model_flags(pc)
    _add_run_flags(pc)
    pc.add_argument("--rho-H", dest="rho_H", type=float)
    pc.add_argument("--m", type=int, action="append")
    pc.add_argument("--site-prob", type=float, help="node survival probability (site percolation)")
    pc.set_defaults(func=cmd_percolate)

    si = sub.add_parser("sir", help="SIR thresholds, bounds and simulation")
    _add_model_flags(si)
    _add_run_flags(si)
    si.add_argument("--cycle", type=int, help="use the n-cycle as contact graph")
    si.add_argument("--beta", type=float, default=1.0)
    si.add_argument("--delta", type=float, default=1.0)
    si.add_argument("--lognormal", type=float, nargs=2, metavar=("MU", "SIGMA"))
    si.add_argument("--deterministic", type=float, metavar="D")
    si.set_defaults(func=cmd_sir)

    ca = sub.add_parser("cascade", help="information cascade (edge probabilities from the model)")
    _add_model_flags(ca)
    _add_run_flags(ca)
    ca.set_defaults(func=cmd_cascade)

    sw = sub.add_parser("sweep", help="regime sweep over one parameter")
    _add_model_flags(sw)
    _add_run_flags(sw)
    sw.add_argument("--param", required=True, help="model parameter name or beta_over_delta")
    sw.add_argument("--values", required=True, help="comma-separated grid")
    sw.set_defaults(func=cmd_sweep)

    t = sub.add_parser("tightness", help="random star-network scaling study")
    t.add_argument("--rho", type=float, required=True)
    t.add_argument("--n-list", required=True, help="comma-separated sizes")
    t.add_argument("--trials", type=int)
    t.add_argument("--seed", type=int)
    t.add_argument("--workers", type=int)
    t.add_argument("--out")
    t.add_argument("--json")
    t.set_defaults(func=cmd_tightness)

    v = sub.add_parser("validate", help="check every bound against simulation or exact enumeration")
    _add_model_flags(v)
    _add_run_flags(v)
    v.add_argument("--battery", type=int, help="run N random exact small-instance checks")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"hazardbounds: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except HazardBoundsError as exc:
        print(f"hazardbounds: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as exc:
        print(f"hazardbounds: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
