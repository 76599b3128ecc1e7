"""Command-line interface: ``covcpd {detect, rate-sweep, phase-sweep, interval-coverage, replay}``."""

from __future__ import annotations

import argparse
import json
import sys
from contextlib import contextmanager
from pathlib import Path

import yaml

from . import harness
from .errors import ContractError, NumericalError
from .io import DataFormatError, read_data

EXIT_USAGE = 2


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML config file; command-line flags win")
    p.add_argument("--algo", dest="algorithm", choices=harness.ALGORITHMS)
    p.add_argument("--tau", type=float)
    p.add_argument("--delta", dest="delta_margin", type=int, help="exclusion margin for wbsip")
    p.add_argument("--margin-scale", dest="margin_scale", type=float)
    p.add_argument("--inner-margin-scale", dest="inner_margin_scale", type=float)
    p.add_argument("--max-interval-len", dest="max_interval_len", type=int)
    p.add_argument("--c-tau", dest="c_tau", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--format", choices=("csv", "json"))


def _sweep(p: argparse.ArgumentParser) -> None:
    p.add_argument("--intervals", dest="M", type=int, nargs="+", help="number(s) of random intervals")
    p.add_argument("--trials", type=int)
    p.add_argument("--n", type=int, nargs="+")
    p.add_argument("--p", type=int, nargs="+")
    p.add_argument("--kappa", type=float, nargs="+")
    p.add_argument("--sigma2", type=float, nargs="+")
    p.add_argument("--spacing", dest="delta", type=int, nargs="+", help="spacing grid")
    p.add_argument("--ratios", type=float, nargs="+")
    p.add_argument("--n-changes", dest="n_changes", type=int)
    p.add_argument("--oracle-params", dest="oracle_params", action="store_true", default=None)
    p.add_argument("--no-timing", dest="timing", action="store_false", default=None)
    p.add_argument("--workers", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="covcpd", description="Covariance change point localization")
    sub = parser.add_subparsers(dest="command", required=True)

    d = sub.add_parser("detect", help="detect change points in a data file (CSV or binary)")
    d.add_argument("data")
    _common(d)
    d.add_argument("--intervals", dest="M", type=int)
    d.add_argument("--center", action="store_true", help="subtract the global sample mean first")

    for name in ("rate-sweep", "phase-sweep", "interval-coverage"):
        s = sub.add_parser(name)
        _common(s)
        _sweep(s)

    r = sub.add_parser("replay", help="recompute one row of a sweep CSV")
    r.add_argument("--config", required=True)
    r.add_argument("--csv", required=True)
    r.add_argument("--row", type=int, required=True, help="0-based data row index")
    r.add_argument("--scenario", choices=("rate_sweep", "phase_sweep", "interval_coverage"))
    r.add_argument("--out")
    return parser


def load_config(path) -> dict:
    if not path:
        return {}
    data = yaml.safe_load(Path(path).read_text()) or {}
    if not isinstance(data, dict):
        raise ContractError(f"{path}: config must be a mapping")
    return data


def make_config(args, scenario: str, exclude=()) -> harness.ExperimentConfig:
    base = harness.ExperimentConfig.from_mapping(load_config(args.config) | {"scenario": scenario}) \
        if args.config else harness.ExperimentConfig(scenario=scenario)
    names = {f for f in vars(base)}
    over = {k: v for k, v in vars(args).items() if k in names and k not in exclude and v is not None}
    merged = vars(base) | over
    return harness.ExperimentConfig(**merged)


@contextmanager
def _output(path):
    if path:
        with open(path, "w", newline="") as fh:
            yield fh
    else:
        yield sys.stdout


def cmd_detect(args) -> int:
    X = read_data(args.data)
    if args.center:
        X = X - X.mean(axis=0)
    cfg = make_config(args, "detect", exclude=("M",))
    M = args.M if args.M is not None else int(cfg.M[0])
    res = harness.run_algorithm(X, cfg, None, M, cfg.seed)
    res.params.update({"algorithm": cfg.algorithm, "center": bool(args.center)})
    if cfg.algorithm == "wbsip":
        res.params["M"] = M
    with _output(args.out) as fh:
        if (args.format or "json") == "json":
            json.dump(res.to_dict(), fh, indent=2, default=_jsonable)
            fh.write("\n")
        else:
            fh.write("location,statistic,s,e\n")
            for r in sorted(res.records, key=lambda r: r.location):
                fh.write(f"{r.location},{r.statistic!r},{r.interval[0]},{r.interval[1]}\n")
    return 0


def _jsonable(x):
    try:
        return x.item()
    except AttributeError:
        return str(x)


def cmd_sweep(args, scenario: str) -> int:
    cfg = make_config(args, scenario)
    rows = harness.RUNNERS[scenario](cfg)
    out = args.out or cfg.out
    with _output(out) as fh:
        if (args.format or "csv") == "csv":
            harness.write_rows(rows, harness.COLUMNS[scenario], fh)
        else:
            json.dump(rows, fh, indent=1, default=_jsonable)
            fh.write("\n")
    return 0


def cmd_replay(args) -> int:
    mapping = load_config(args.config)
    if args.scenario:
        mapping = mapping | {"scenario": args.scenario}
    cfg = harness.ExperimentConfig.from_mapping(mapping)
    rows = harness.read_rows(args.csv)
    if not 0 <= args.row < len(rows):
        raise ContractError(f"row {args.row} out of range (file has {len(rows)} rows)")
    stored = rows[args.row]
    fresh = harness.replay(cfg, stored)
    cols = [c for c in harness.COLUMNS[cfg.scenario] if c != "runtime_ms"]
    same = all(str(fresh.get(c, "")) == stored.get(c, "") for c in cols)
    with _output(args.out) as fh:
        json.dump({"row": fresh, "matches_stored": same}, fh, indent=2, default=_jsonable)
        fh.write("\n")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "detect":
            return cmd_detect(args)
        if args.command == "replay":
            return cmd_replay(args)
        return cmd_sweep(args, args.command.replace("-", "_"))
    except (DataFormatError, ContractError, FileNotFoundError, yaml.YAMLError) as exc:
        print(f"covcpd: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"covcpd: numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
