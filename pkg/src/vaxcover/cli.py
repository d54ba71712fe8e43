"""Command-line interface.

Subcommands: ``estimate`` (closed-form rates per cohort, optional
numerical-fit cross-check), ``reconstruct`` (expected counts from
closed-form or external parameters), ``simulate`` (synthetic cohorts +
recovery summary) and ``validate`` (gate flags only).

Outputs go to stdout as a fixed-width table; with ``--output PATH`` a
machine-readable CSV is written instead.  A config file pointed to by
the ``VAXCOVER_CONFIG`` environment variable (simple ``key=value``
lines; keys ``format``, ``precision``, ``oracle``) supplies defaults
that explicit flags override.

Exit status: 0 when every row was processed (validity flags may still
signal poor data), 2 when some row failed to estimate, 1 on I/O, schema
or usage errors.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

from .dataio import (
    SchemaError,
    build_reconstruction,
    build_report,
    build_validation,
    load_dataset,
    load_params_table,
    reconstruction_csv_rows,
    render_reconstruction,
    render_report,
    render_simulation,
    render_validation,
    report_csv_rows,
    run_simulation,
    save_dataset,
    validation_csv_rows,
)

CONFIG_ENV_VAR = "VAXCOVER_CONFIG"
CONFIG_KEYS = ("format", "precision", "oracle")
DEFAULTS = {"format": "csv", "precision": 3, "oracle": False}


def load_config() -> dict:
    """Defaults from the key=value file named by VAXCOVER_CONFIG, if any."""
    path = os.environ.get(CONFIG_ENV_VAR)
    if not path:
        return {}
    config = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key not in CONFIG_KEYS:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            config[key] = value
    if "format" in config and config["format"] not in ("csv", "json"):
        raise ValueError(f"config format must be csv or json, got {config['format']!r}")
    if "precision" in config:
        config["precision"] = int(config["precision"])
    if "oracle" in config:
        text = config["oracle"].lower()
        if text not in ("true", "false", "1", "0"):
            raise ValueError(f"config oracle must be true or false, got {text!r}")
        config["oracle"] = text in ("true", "1")
    return config


def _resolve(args, config, key):
    value = getattr(args, key, None)
    if value is not None:
        return value
    if key in config:
        return config[key]
    return DEFAULTS[key]


def _emit(args, table_text: str, csv_rows) -> None:
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerows(csv_rows)
    else:
        print(table_text)


def _load_records(args, config):
    fmt = _resolve(args, config, "format")
    records = load_dataset(args.input, format=fmt)
    if not records:
        raise SchemaError("dataset is empty")
    return records


def cmd_estimate(args, config) -> int:
    records = _load_records(args, config)
    precision = _resolve(args, config, "precision")
    oracle = _resolve(args, config, "oracle")
    rows = build_report(records, oracle=oracle)
    _emit(args, render_report(rows, precision), report_csv_rows(rows, precision))
    return 2 if any(row.error for row in rows) else 0


def cmd_reconstruct(args, config) -> int:
    records = _load_records(args, config)
    precision = _resolve(args, config, "precision")
    params_by_label = None
    if args.params:
        fmt = _resolve(args, config, "format")
        params_by_label = dict(load_params_table(args.params, format=fmt))
    rows = build_reconstruction(records, params_by_label)
    _emit(args, render_reconstruction(rows, precision),
          reconstruction_csv_rows(rows, precision))
    return 2 if any(row.error for row in rows) else 0


def cmd_validate(args, config) -> int:
    records = _load_records(args, config)
    pairs = build_validation(records)
    _emit(args, render_validation(pairs), validation_csv_rows(pairs))
    return 0


def cmd_simulate(args, config) -> int:
    fmt = _resolve(args, config, "format")
    precision = _resolve(args, config, "precision")
    table = load_params_table(args.params, format=fmt)
    if len(table) != 1:
        raise SchemaError(
            f"simulate expects exactly one parameter row, got {len(table)}"
        )
    _, params = table[0]
    summary = run_simulation(params, n=args.n, replicates=args.replicates,
                             seed=args.seed)
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            save_dataset(fh, summary.records)
    print(render_simulation(summary, precision))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vaxcover",
        description="Trivalent-vaccine coverage estimation from "
                    "antibody-status count tables.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_input=True):
        if with_input:
            p.add_argument("--input", required=True, help="dataset file")
        p.add_argument("--format", choices=("csv", "json"),
                       help="input file format (default csv)")
        p.add_argument("--output", help="write CSV here instead of a table "
                                        "to stdout")

    p = sub.add_parser("estimate", help="closed-form rates per cohort")
    add_common(p)
    p.add_argument("--precision", type=int, help="decimals in rendered output")
    p.add_argument("--oracle", action=argparse.BooleanOptionalAction,
                   help="add a numerical maximum-likelihood cross-check")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("reconstruct", help="expected counts per cohort")
    add_common(p)
    p.add_argument("--params", help="external parameter table; omit to use "
                                    "each cohort's closed-form estimate")
    p.add_argument("--precision", type=int)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("simulate", help="sample synthetic cohorts and "
                                        "summarize estimator recovery")
    add_common(p, with_input=False)
    p.add_argument("--params", required=True, help="parameter table with "
                                                   "exactly one row")
    p.add_argument("--n", type=int, required=True, help="cohort size")
    p.add_argument("--replicates", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--precision", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("validate", help="validity gates only, no estimates")
    add_common(p)
    p.set_defaults(func=cmd_validate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config()
        return args.func(args, config)
    except (ValueError, OSError) as exc:  # ParseError/SchemaError included
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
