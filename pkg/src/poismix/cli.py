"""Command-line interface.

Subcommands:

* ``sample``      -- draw counts from a Poisson mixture,
* ``pmf``         -- emit a pmf / survival / tail-ratio table,
* ``classify``    -- print the tail class and k=1 tail-ratio limit,
* ``pot-fit``     -- peaks-over-threshold analysis of a count file,
* ``experiment``  -- run a seeded experiment (table1 | table2 |
                     beta_sweep | maxima) from a JSON config.

Exit status 0 on success, 1 on invalid flags or config, 2 on runtime
failure; diagnostics go to stderr as a single line.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import evt, experiments, mixing
from .mixture import MixtureModel, tail_ratio_limit

__all__ = ["main", "cli_main"]


class _CliError(Exception):
    def __init__(self, message, status):
        super().__init__(message)
        self.status = status


def _usage_error(msg):
    return _CliError(msg, 1)


def _runtime_error(msg):
    return _CliError(msg, 2)


_SPEC_PARAMS = {
    "frechet": ("alpha", "beta"),
    "lognormal": ("mu", "sigma"),
    "gamma": ("alpha", "beta"),
    "uniform": ("x0",),
    "scaled_beta": ("x0", "alpha", "beta"),
}


def _add_spec_flags(parser):
    parser.add_argument("--family", required=True,
                        choices=sorted(_SPEC_PARAMS))
    for name in ("alpha", "beta", "mu", "sigma", "x0"):
        parser.add_argument(f"--{name}", type=float, default=None)


def _spec_from_args(args) -> mixing.MixingSpec:
    wanted = _SPEC_PARAMS[args.family]
    params = {}
    for name in wanted:
        value = getattr(args, name)
        if value is None:
            raise _usage_error(
                f"family {args.family!r} requires --{name}")
        params[name] = value
    for name in ("alpha", "beta", "mu", "sigma", "x0"):
        if name not in wanted and getattr(args, name) is not None:
            raise _usage_error(
                f"family {args.family!r} does not take --{name}")
    try:
        return mixing.spec_from_json(
            {"family": args.family, "params": params})
    except ValueError as exc:
        raise _usage_error(str(exc))


def _emit(text, out_path):
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w") as fh:
            fh.write(text)


def _csv_text(fieldnames, rows):
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fieldnames, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def _cmd_sample(args):
    spec = _spec_from_args(args)
    if args.size < 1:
        raise _usage_error("--size must be >= 1")
    rng = np.random.default_rng(args.seed)
    draws = MixtureModel(spec).sample(args.size, rng)
    if args.format == "json":
        _emit(json.dumps([int(d) for d in draws]) + "\n", args.out)
    else:
        _emit(_csv_text(["count"], [{"count": int(d)} for d in draws]),
              args.out)
    return 0


def _cmd_pmf(args):
    spec = _spec_from_args(args)
    if args.n_max < 0:
        raise _usage_error("--n-max must be >= 0")
    table = MixtureModel(spec).export_table(args.n_max)
    if args.format == "json":
        reader = csv.DictReader(io.StringIO(table))
        rows = [
            {"n": int(r["n"]), "pmf": float(r["pmf"]),
             "survival": float(r["survival"]),
             "tail_ratio_k1": float(r["tail_ratio_k1"])}
            for r in reader
        ]
        _emit(json.dumps(rows, indent=2) + "\n", args.out)
    else:
        _emit(table, args.out)
    return 0


def _cmd_classify(args):
    spec = _spec_from_args(args)
    model = MixtureModel(spec)
    tail = model.tail
    limit = tail_ratio_limit(tail, 1)
    payload = {
        "family": mixing.family_name(spec),
        "tail_class": type(tail).__name__,
        "tail_params": {k: v for k, v in vars(tail).items()},
        "tail_ratio_limit_k1": limit,
    }
    if args.format == "json":
        _emit(json.dumps(payload, indent=2) + "\n", args.out)
    else:
        inner = ",".join(f"{k}={v:g}"
                         for k, v in payload["tail_params"].items())
        _emit(f"{payload['tail_class']}({inner}) "
              f"tail_ratio_limit_k1={limit:.12g}\n", args.out)
    return 0


def _read_counts(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise _usage_error(f"cannot read {path}: {exc}")
    values = []
    for line in text.splitlines():
        line = line.split(",")[0].strip()
        if not line or line == "count":
            continue
        try:
            values.append(float(line))
        except ValueError:
            raise _usage_error(f"non-numeric entry in {path}: {line!r}")
    if not values:
        raise _usage_error(f"no data in {path}")
    return np.asarray(values)


def _cmd_pot_fit(args):
    if not 0.0 < args.quantile < 1.0:
        raise _usage_error("--quantile must be in (0, 1)")
    x = _read_counts(args.data)
    rng = np.random.default_rng(args.seed)
    try:
        excess = evt.extract_excesses(x, args.quantile)
        free = evt.fit_gpd_mle(excess)
        constrained = evt.fit_exponential(excess)
        dev = evt.deviance_test(free, constrained)
        gof = evt.ad_test_gpd(excess, B=args.bootstrap, rng=rng)
    except (ValueError, evt.GpdFitError) as exc:
        raise _runtime_error(str(exc))
    payload = {
        "threshold": excess.threshold,
        "n_excesses": len(excess.excesses),
        "source_size": excess.source_size,
        "gpd": free.to_json(),
        "exponential": constrained.to_json(),
        "anderson_darling": gof.to_json(),
        "deviance": dev.to_json(),
    }
    _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out)
    return 0


def _cmd_experiment(args):
    overrides = {}
    if args.config is not None:
        try:
            with open(args.config) as fh:
                overrides = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise _usage_error(f"cannot load config {args.config}: {exc}")
        if not isinstance(overrides, dict):
            raise _usage_error("config must be a JSON object")
        overrides.pop("experiment", None)
    if args.seed is not None:
        overrides["base_seed"] = args.seed
    if "specs" in overrides:
        try:
            overrides["specs"] = tuple(
                mixing.spec_from_json(s) for s in overrides["specs"])
        except (TypeError, ValueError) as exc:
            raise _usage_error(f"bad specs in config: {exc}")
    try:
        config = experiments.default_config(args.tag, **overrides)
    except (TypeError, ValueError) as exc:
        raise _usage_error(f"invalid config: {exc}")
    try:
        report = experiments.run_experiment(config)
    except (ValueError, RuntimeError) as exc:
        raise _runtime_error(f"experiment failed: {exc}")
    text = report.to_json() if args.format == "json" else report.to_csv()
    _emit(text, args.out)
    return 0


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="poismix",
        description="Tail diagnostics for Poisson mixture distributions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, fmt_default="csv"):
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--format", choices=("csv", "json"),
                       default=fmt_default)

    p = sub.add_parser("sample", help="draw counts from a mixture")
    _add_spec_flags(p)
    p.add_argument("--size", type=int, default=100)
    common(p)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("pmf", help="pmf/survival/tail-ratio table")
    _add_spec_flags(p)
    p.add_argument("--n-max", type=int, default=50)
    common(p)
    p.set_defaults(func=_cmd_pmf)

    p = sub.add_parser("classify", help="print the tail class")
    _add_spec_flags(p)
    common(p)
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("pot-fit", help="peaks-over-threshold analysis")
    p.add_argument("data", help="count file, one value per line")
    p.add_argument("--quantile", type=float, default=0.95)
    p.add_argument("--bootstrap", type=int, default=199)
    common(p, fmt_default="json")
    p.set_defaults(func=_cmd_pot_fit)

    p = sub.add_parser("experiment", help="run a seeded experiment")
    p.add_argument("tag",
                   choices=("table1", "table2", "beta_sweep", "maxima"))
    p.add_argument("--config", default=None)
    common(p)
    p.set_defaults(func=_cmd_experiment)

    return parser


def cli_main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse prints its own diagnostic; -h/--help exits 0
        return 0 if exc.code == 0 else 1
    try:
        return args.func(args)
    except _CliError as exc:
        print(f"poismix: {exc}", file=sys.stderr)
        return exc.status
    except Exception as exc:  # pragma: no cover - last-resort guard
        print(f"poismix: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_main())
