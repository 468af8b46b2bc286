"""Command line interface.

Subcommands: ``rate`` (log-log convergence fit), ``events`` (shape-event
frequency sweep), ``lemmas`` (deterministic + Monte Carlo check suite).
Flags override config-file values; the config file is flat ``key = value``
lines mirroring the flag names (``#`` starts a comment).

Exit codes: 0 success, 1 check/convergence failure, 2 bad configuration.
"""

import argparse
import json
import sys
from dataclasses import fields

from .convexlse import FitError
from .experiments import (
    ConfigError,
    ExperimentConfig,
    run_convex_rate,
    run_event_frequency,
    run_lemma_suite,
    run_monotone_rate,
)

_INT_KEYS = {"replicates", "base_seed", "workers", "k_override"}
_FLOAT_KEYS = {"c0", "tau_quantile"}
_INT_TUPLE_KEYS = {"n_grid"}
_FLOAT_TUPLE_KEYS = {"params", "c0_sweep"}
_STR_KEYS = {"model", "target", "out"}
_ALL_KEYS = _INT_KEYS | _FLOAT_KEYS | _INT_TUPLE_KEYS | _FLOAT_TUPLE_KEYS | _STR_KEYS


def _split(text: str) -> list:
    return [piece for piece in text.replace(",", " ").split() if piece]


def _coerce(key: str, text: str):
    try:
        if key in _INT_KEYS:
            return int(text)
        if key in _FLOAT_KEYS:
            return float(text)
        if key in _INT_TUPLE_KEYS:
            return tuple(int(v) for v in _split(text))
        if key in _FLOAT_TUPLE_KEYS:
            return tuple(float(v) for v in _split(text))
        return text
    except ValueError as err:
        raise ConfigError(f"bad value for {key!r}: {text!r}") from err


def load_config_file(path: str) -> dict:
    """Parse a flat ``key = value`` config file into config fields."""
    values = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as err:
        raise ConfigError(f"cannot read config file {path!r}: {err}") from err
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, text = line.partition("=")
        key = key.strip().replace("-", "_")
        if key not in _ALL_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = _coerce(key, text.strip())
    return values


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key=value config file")
    common.add_argument("--model", help="catalog model name")
    common.add_argument("--params", help="model parameters, comma separated")
    common.add_argument("--n-grid", dest="n_grid", help="sample sizes, comma separated")
    common.add_argument("--reps", dest="replicates", type=int, help="replicates per size")
    common.add_argument("--seed", dest="base_seed", type=int, help="base seed")
    common.add_argument("--c0", type=float, help="cell-count rule constant")
    common.add_argument("--c0-sweep", dest="c0_sweep", help="c0 values for events sweep")
    common.add_argument("--k", dest="k_override", type=int, help="fixed cell count (override rule)")
    common.add_argument("--tau-q", dest="tau_quantile", type=float,
                        help="CDF mass at the working endpoint")
    common.add_argument("--out", help="output path (CSV or JSON)")
    common.add_argument("--workers", type=int, help="parallel worker count")
    common.add_argument("--format", dest="fmt", choices=("csv", "json"),
                        default="csv", help="stdout format")

    parser = argparse.ArgumentParser(prog="shapedist",
                                     description="shape-constrained estimator experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    rate = sub.add_parser("rate", parents=[common], help="convergence-rate fit")
    rate.add_argument("--case", choices=("monotone", "convex"), required=True)
    events = sub.add_parser("events", parents=[common], help="shape-event frequencies")
    events.add_argument("--case", choices=("monotone", "convex"), default="convex")
    sub.add_parser("lemmas", parents=[common], help="inequality check suite")
    return parser


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    """Merge defaults, config file, and flags (in increasing precedence)."""
    values = {}
    if args.config:
        values.update(load_config_file(args.config))
    for key in _ALL_KEYS:
        got = getattr(args, key, None)
        if got is not None:
            values[key] = _coerce(key, got) if isinstance(got, str) else got
    case = getattr(args, "case", None)
    if case is not None:
        values["target"] = case
    known = {f.name for f in fields(ExperimentConfig)}
    bad = set(values) - known
    if bad:
        raise ConfigError(f"unknown config keys: {sorted(bad)}")
    return ExperimentConfig(**values)


def _print_csv(columns, rows) -> None:
    print(",".join(columns))
    for row in rows:
        print(",".join("" if row[c] is None else
                       (repr(row[c]) if isinstance(row[c], float) else str(row[c]))
                       for c in columns))


def _cmd_rate(args) -> int:
    config = build_config(args)
    result = run_monotone_rate(config) if args.case == "monotone" else run_convex_rate(config)
    fits = {"sup_F_diff": result.fit_F}
    if result.fit_H is not None:
        fits["sup_H_diff"] = result.fit_H
    if args.fmt == "json":
        print(json.dumps({name: {"slope": f.slope, "intercept": f.intercept,
                                 "stderr": f.stderr} for name, f in fits.items()},
                         indent=2))
    else:
        _print_csv(("distance", "slope", "stderr", "intercept"),
                   [{"distance": name, "slope": f.slope, "stderr": f.stderr,
                     "intercept": f.intercept} for name, f in fits.items()])
    return 0


def _cmd_events(args) -> int:
    config = build_config(args)
    summary = run_event_frequency(config)
    if args.fmt == "json":
        print(json.dumps(summary, indent=2))
    else:
        _print_csv(("model", "target", "c0", "n", "k", "freq", "bound", "vacuous"), summary)
    return 0


def _cmd_lemmas(args) -> int:
    config = build_config(args)
    report = run_lemma_suite(config)
    if args.fmt == "json":
        print(json.dumps(report, indent=2))
    else:
        _print_csv(("name", "pass", "lhs", "rhs", "margin"), report["checks"])
    return 0 if report["pass"] else 1


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {"rate": _cmd_rate, "events": _cmd_events, "lemmas": _cmd_lemmas}
    try:
        return handlers[args.command](args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except FitError as err:
        print(f"fit failure: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
