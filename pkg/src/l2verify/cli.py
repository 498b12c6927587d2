"""Command line interface.

    l2verify verify MODEL --input 1,1 --rho 1 --method sdp-crown
    l2verify margin-curve MODEL --input 1,1 --rho-grid 0,0.5,1 --methods lirpa-box,sdp-crown
    l2verify accuracy MODEL DATA.csv --rho 0.5 --method sdp-crown --limit 200
    l2verify attack MODEL --input 1,1 --rho 1

Exit codes for ``verify``: 0 verified, 1 falsified, 2 unknown. Any command
exits with 3 on unreadable or invalid input.
"""

import argparse
import csv
import io
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict

import numpy as np

from . import __version__
from .adversary import pgd_upper_bound
from .network import ModelFormatError, load, load_dataset
from .optimize import METHODS, OptimizerConfig, as_input_set, margin, margin_specs
from .sets import Ball

SCHEMA_VERSION = 1
EXIT_CODES = {"verified": 0, "falsified": 1, "unknown": 2}
EXIT_ERROR = 3


class CLIError(Exception):
    pass


def _parse_floats(text, what):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise CLIError(f"{what}: expected comma-separated numbers, got {text!r}") from None


def _add_optimizer_flags(p):
    p.add_argument("--iterations", type=int, default=300)
    p.add_argument("--lr-alpha", type=float, default=0.5)
    p.add_argument("--lr-lambda", type=float, default=0.05)
    p.add_argument("--decay", type=float, default=0.98)
    p.add_argument("--intermediate", choices=("ibp", "backward"), default="ibp")
    p.add_argument("--seed", type=int, default=0)


def _add_pgd_flags(p):
    p.add_argument("--pgd-steps", type=int, default=200)
    p.add_argument("--pgd-restarts", type=int, default=10)
    p.add_argument("--pgd-step-size", type=float, default=None, help="default 0.1 * rho")


def _add_instance_flags(p):
    p.add_argument("--input", help="comma-separated input vector")
    p.add_argument("--dataset", help="CSV dataset (label,v0,v1,...) to take the input from")
    p.add_argument("--row", type=int, default=0, help="dataset row (0-based)")
    p.add_argument("--label", type=int, default=None, help="true class (defaults to dataset label or 0)")


def _optimizer_config(args):
    return OptimizerConfig(
        iterations=args.iterations, lr_alpha=args.lr_alpha, lr_lambda=args.lr_lambda,
        decay=args.decay, intermediate=args.intermediate, seed=args.seed,
    )


def _load_model(path):
    try:
        return load(path)
    except (OSError, ModelFormatError) as exc:
        raise CLIError(f"cannot load model: {exc}") from None


def _load_instance(args, net):
    if (args.input is None) == (args.dataset is None):
        raise CLIError("give exactly one of --input or --dataset")
    if args.input is not None:
        x, label = np.array(_parse_floats(args.input, "--input")), 0
    else:
        labels, X = _load_data(args.dataset, net)
        if not 0 <= args.row < len(X):
            raise CLIError(f"--row {args.row} out of range for {len(X)} rows")
        x, label = X[args.row], int(labels[args.row])
    if args.label is not None:
        label = args.label
    if x.shape[0] != net.input_dim:
        raise CLIError(f"input has length {x.shape[0]}, model expects {net.input_dim}")
    if net.output_dim > 1 and not 0 <= label < net.output_dim:
        raise CLIError(f"label {label} out of range for {net.output_dim} classes")
    return x, label


def _load_data(path, net):
    try:
        labels, X = load_dataset(path)
    except (OSError, ModelFormatError) as exc:
        raise CLIError(f"cannot load dataset: {exc}") from None
    if X.shape[1] != net.input_dim:
        raise CLIError(f"dataset rows have {X.shape[1]} features, model expects {net.input_dim}")
    return labels, X


def _resolve_method(method, norm):
    if norm == "linf":
        if method not in ("lirpa-box", None):
            print(f"note: --norm linf uses lirpa-box (ignoring {method})", file=sys.stderr)
        return "lirpa-box"
    return method or "sdp-crown"


def correctly_classified(net, x, label):
    out = net.forward(x)
    if out.shape[0] == 1:
        return bool(out[0] >= 0)
    return int(np.argmax(out)) == label


def verify_instance(net, x, label, rho, norm, method, cfg, pgd, attack=True, ident=0):
    """Bounds, attack and status for one input; returns a report record."""
    start = time.perf_counter()
    input_set = as_input_set(x, rho if norm == "l2" else np.full(x.shape[0], rho), norm)
    correct = correctly_classified(net, x, label)
    margins = margin(net, x, label, input_set, method, cfg)
    pgd_upper = None
    if attack:
        C, _ = margin_specs(net.output_dim, label)
        region = None if norm == "l2" else input_set
        pgd_upper = min(
            pgd_upper_bound(net, c, x, rho, steps=pgd["steps"], restarts=pgd["restarts"],
                            step_size=pgd["step_size"], seed=cfg.seed + j, input_set=region).value
            for j, c in enumerate(C)
        )
    if correct and float(np.min(margins)) >= 0:
        status = "verified"
    elif not correct or (pgd_upper is not None and pgd_upper < 0):
        status = "falsified"
    else:
        status = "unknown"
    return {
        "id": ident,
        "label": int(label),
        "correct": correct,
        "margins": [float(v) for v in margins],
        "pgd_upper": pgd_upper,
        "status": status,
        "ms": round((time.perf_counter() - start) * 1000.0, 3),
    }


def _config_echo(args, cfg, method, pgd):
    echo = {
        "command": args.command,
        "model": args.model,
        "method": method,
        "norm": getattr(args, "norm", "l2"),
        "optimizer": asdict(cfg),
        "pgd": pgd,
        "seed": cfg.seed,
        "version": __version__,
    }
    for key in ("rho", "dataset", "row", "input", "limit", "label"):
        if hasattr(args, key):
            echo[key] = getattr(args, key)
    return echo


def _pgd_settings(args):
    return {"steps": args.pgd_steps, "restarts": args.pgd_restarts, "step_size": args.pgd_step_size}


def _emit(text, path):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    sys.stdout.write(text)


def _report(config, instances):
    n = len(instances)
    verified = sum(r["status"] == "verified" for r in instances)
    return {
        "schema": SCHEMA_VERSION,
        "config": config,
        "instances": instances,
        "verified_accuracy": verified / n if n else 0.0,
    }


def cmd_verify(args):
    net = _load_model(args.model)
    x, label = _load_instance(args, net)
    if args.rho < 0:
        raise CLIError("--rho must be nonnegative")
    method = _resolve_method(args.method, args.norm)
    cfg = _optimizer_config(args)
    pgd = _pgd_settings(args)
    record = verify_instance(net, x, label, args.rho, args.norm, method, cfg, pgd, attack=not args.no_attack)
    report = _report(_config_echo(args, cfg, method, pgd), [record])
    _emit(json.dumps(report, indent=2) + "\n", args.output)
    return EXIT_CODES[record["status"]]


def cmd_margin_curve(args):
    net = _load_model(args.model)
    x, label = _load_instance(args, net)
    grid = _parse_floats(args.rho_grid, "--rho-grid")
    if not grid:
        raise CLIError("--rho-grid is empty")
    if any(b < a for a, b in zip(grid, grid[1:])) or grid[0] < 0:
        raise CLIError("--rho-grid must be nonnegative and ascending")
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in METHODS + ("lipnaive",):
            raise CLIError(f"unknown method {m!r}")
    cfg = _optimizer_config(args)
    C, _ = margin_specs(net.output_dim, label)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["rho", "method", "lower_bound", "pgd_upper"])
    for rho in grid:
        pgd = min(
            pgd_upper_bound(net, c, x, rho, steps=args.pgd_steps, restarts=args.pgd_restarts,
                            step_size=args.pgd_step_size, seed=cfg.seed + j).value
            for j, c in enumerate(C)
        )
        for m in methods:
            lower = float(np.min(margin(net, x, label, Ball(x, rho), m, cfg)))
            writer.writerow([repr(rho), m, repr(lower), repr(pgd)])
    _emit(buf.getvalue(), args.output)
    return 0


def cmd_accuracy(args):
    net = _load_model(args.model)
    labels, X = _load_data(args.data, net)
    if args.limit is not None:
        labels, X = labels[: args.limit], X[: args.limit]
    if net.output_dim > 1 and np.any((labels < 0) | (labels >= net.output_dim)):
        raise CLIError("dataset labels out of range for the model")
    if args.rho < 0:
        raise CLIError("--rho must be nonnegative")
    method = _resolve_method(args.method, args.norm)
    cfg = _optimizer_config(args)
    pgd = _pgd_settings(args)

    def job(i):
        return verify_instance(net, X[i], int(labels[i]), args.rho, args.norm, method, cfg, pgd,
                               attack=not args.no_attack, ident=i)

    with ThreadPoolExecutor(max_workers=max(args.workers, 1)) as pool:
        records = list(pool.map(job, range(len(X))))
    report = _report(_config_echo(args, cfg, method, pgd), records)
    _emit(json.dumps(report, indent=2) + "\n", args.output)
    return 0


def cmd_attack(args):
    net = _load_model(args.model)
    x, label = _load_instance(args, net)
    if args.rho < 0:
        raise CLIError("--rho must be nonnegative")
    C, others = margin_specs(net.output_dim, label)
    results = []
    for j, c in zip(others, C):
        r = pgd_upper_bound(net, c, x, args.rho, steps=args.pgd_steps, restarts=args.pgd_restarts,
                            step_size=args.pgd_step_size, seed=args.seed + len(results))
        results.append({"target": j, "value": r.value, "point": r.point.tolist(), "feasible": r.feasible})
    best = min(results, key=lambda r: r["value"])
    out = {"schema": SCHEMA_VERSION, "label": label, "rho": args.rho, "value": best["value"],
           "point": best["point"], "feasible": best["feasible"], "per_class": results}
    _emit(json.dumps(out, indent=2) + "\n", args.output)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="l2verify", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="certify one input")
    p.add_argument("model")
    _add_instance_flags(p)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--norm", choices=("l2", "linf"), default="l2")
    p.add_argument("--method", choices=METHODS + ("lipnaive",), default=None)
    p.add_argument("--no-attack", action="store_true")
    p.add_argument("--output", "-o")
    _add_optimizer_flags(p)
    _add_pgd_flags(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("margin-curve", help="lower bounds over a grid of radii (CSV)")
    p.add_argument("model")
    _add_instance_flags(p)
    p.add_argument("--rho-grid", required=True)
    p.add_argument("--methods", default="lirpa-box,sdp-crown")
    p.add_argument("--output", "-o")
    _add_optimizer_flags(p)
    _add_pgd_flags(p)
    p.set_defaults(func=cmd_margin_curve)

    p = sub.add_parser("accuracy", help="verified accuracy on a dataset")
    p.add_argument("model")
    p.add_argument("data")
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--norm", choices=("l2", "linf"), default="l2")
    p.add_argument("--method", choices=METHODS + ("lipnaive",), default=None)
    p.add_argument("--limit", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--no-attack", action="store_true")
    p.add_argument("--output", "-o")
    _add_optimizer_flags(p)
    _add_pgd_flags(p)
    p.set_defaults(func=cmd_accuracy)

    p = sub.add_parser("attack", help="PGD upper bound on the margin (JSON)")
    p.add_argument("model")
    _add_instance_flags(p)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", "-o")
    _add_pgd_flags(p)
    p.set_defaults(func=cmd_attack)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CLIError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
