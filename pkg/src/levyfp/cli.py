r"""Command-line front end.

Subcommands
-----------
run          one (eps, dt) cell; writes run.csv (and a per-step trace
             when ``timeseries = true``)
sweep        full eps x dt cross product; writes sweep.csv and summary.json
check        analytic property suites; writes summary.json, exit 1 on failure
equilibrium  tabulate the equilibrium density and its spectrum as CSV

Configuration is a flat TOML file whose keys mirror SweepConfig; every
key has a default, so an empty config is valid.  ``--set key=value`` (and
the scalar aliases ``eps`` / ``dt`` for single runs) override the file,
``--seed`` overrides the seed, ``--jobs`` bounds the sweep worker pool.
Exit codes: 0 success, 1 property-suite failure, 2 configuration error.

Example config::

    s = 0.5
    beta = 0.1
    eps_list = [0.8, 0.2, 0.05]
    dt_list = [4e-3, 2e-3, 1e-3]
    T = 1.0
    Nv = 1024
    Lv = 200.0

The ``fault`` key (or ``--set fault=negate_equilibrium``) corrupts the
equilibrium table before the suites run; used to prove the checks fail
when they should.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # 3.10 fallback
    import tomli as tomllib

from .equilibrium import build_equilibrium, dump_equilibrium_csv
from .harness import (
    SweepConfig,
    run_properties,
    run_single,
    run_sweep,
    write_records_csv,
    write_summary_json,
)
from .scheme import SchemeError

_FLOAT_KEYS = {"s", "beta", "T", "t0", "Lx", "Lv", "width"}
_OPT_FLOAT_KEYS = {"b", "center"}
_INT_KEYS = {"Nx", "Nv", "seed", "n_samples"}
_BOOL_KEYS = {"timeseries"}
_STR_KEYS = {"init", "chi", "fault"}
_LIST_FLOAT_KEYS = {"eps_list", "dt_list"}
_LIST_STR_KEYS = {"suites"}
_SCALAR_ALIASES = {"eps": "eps_list", "dt": "dt_list"}
_ALL_KEYS = (
    _FLOAT_KEYS | _OPT_FLOAT_KEYS | _INT_KEYS | _BOOL_KEYS | _STR_KEYS
    | _LIST_FLOAT_KEYS | _LIST_STR_KEYS | set(_SCALAR_ALIASES)
)


class ConfigError(Exception):
    pass


def _cast(key: str, raw):
    """Coerce a raw TOML or command-line value to the key's type."""
    key = _SCALAR_ALIASES.get(key, key)
    try:
        if key in _FLOAT_KEYS:
            return float(raw)
        if key in _OPT_FLOAT_KEYS:
            if raw is None or (isinstance(raw, str) and raw.lower() == "none"):
                return None
            return float(raw)
        if key in _INT_KEYS:
            if isinstance(raw, str):
                return int(raw, 0)
            if isinstance(raw, float) and raw != int(raw):
                raise ValueError(f"{key} must be an integer")
            return int(raw)
        if key in _BOOL_KEYS:
            if isinstance(raw, bool):
                return raw
            if isinstance(raw, str) and raw.lower() in ("true", "1", "yes"):
                return True
            if isinstance(raw, str) and raw.lower() in ("false", "0", "no"):
                return False
            raise ValueError(f"{key} must be a boolean")
        if key in _STR_KEYS:
            return str(raw)
        if key in _LIST_FLOAT_KEYS:
            if isinstance(raw, str):
                raw = [p for p in raw.split(",") if p.strip()]
            if not isinstance(raw, (list, tuple)):
                raw = [raw]
            return tuple(float(x) for x in raw)
        if key in _LIST_STR_KEYS:
            if isinstance(raw, str):
                raw = [p.strip() for p in raw.split(",") if p.strip()]
            return tuple(str(x) for x in raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key!r}: {exc}") from None
    raise ConfigError(f"unknown configuration key {key!r}")


def load_config(path: str | None, overrides, seed: int | None):
    """Merge defaults, the TOML file, and command-line overrides.

    Returns the SweepConfig plus the out-of-band keys (currently only
    ``fault``).  Raises ConfigError on unknown keys or bad values.
    """
    merged: dict = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                doc = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"cannot parse config {path}: {exc}") from None
        for key, raw in doc.items():
            if key not in _ALL_KEYS:
                raise ConfigError(f"unknown configuration key {key!r} in {path}")
            merged[_SCALAR_ALIASES.get(key, key)] = _cast(key, raw)
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, _, raw = item.partition("=")
        key = key.strip()
        if key not in _ALL_KEYS:
            raise ConfigError(f"unknown configuration key {key!r}")
        merged[_SCALAR_ALIASES.get(key, key)] = _cast(key, raw.strip())
    if seed is not None:
        merged["seed"] = seed
    fault = merged.pop("fault", None)
    try:
        config = SweepConfig(**merged)
    except (TypeError, ValueError, SchemeError) as exc:
        raise ConfigError(str(exc)) from None
    return config, fault


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_run(args) -> int:
    config, _ = load_config(args.config, args.set, args.seed)
    out = _out_dir(args)
    eps, dt = config.eps_list[0], config.dt_list[0]
    trace = str(out / f"trace_eps{eps:g}_dt{dt:g}.csv") if config.timeseries else None
    record = run_single(config, eps, dt, trace_path=trace)
    write_records_csv([record], out / "run.csv")
    if record.status == "ok":
        print(
            f"eps={eps:g} dt={dt:g} {record.regime} gamma={record.gamma:.4g}: "
            f"err_oracle={record.err_oracle:.6e} err_limit={record.err_limit:.6e} "
            f"({record.runtime_s:.2f} s)"
        )
    else:
        print(f"eps={eps:g} dt={dt:g} FAILED: {record.status}")
    print(f"wrote {out / 'run.csv'}")
    return 0


def _cmd_sweep(args) -> int:
    config, _ = load_config(args.config, args.set, args.seed)
    out = _out_dir(args)
    result = run_sweep(config, jobs=args.jobs)
    write_records_csv(result.records, out / "sweep.csv")
    write_summary_json(out / "summary.json", config, result=result)
    failed = sum(1 for r in result.records if r.status != "ok")
    print(f"{len(result.records)} cells, {failed} failed; uniformity U = {result.uniformity:.6e}")
    for eps, order in result.order_dt_by_eps.items():
        shown = "n/a" if order is None else f"{order:.3f}"
        print(f"  eps={eps:g}: order in dt = {shown}")
    print(f"wrote {out / 'sweep.csv'} and {out / 'summary.json'}")
    return 0


def _cmd_check(args) -> int:
    config, fault = load_config(args.config, args.set, args.seed)
    try:
        report = run_properties(config, fault=fault)
    except (ValueError, SchemeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = _out_dir(args)
    write_summary_json(out / "summary.json", config, report=report)
    for name in sorted(report.verdicts):
        passed, detail = report.verdicts[name]
        print(f"[{name}] {'PASS' if passed else 'FAIL'}: {detail}")
    print(f"wrote {out / 'summary.json'}")
    return 0 if report.all_passed else 1


def _cmd_equilibrium(args) -> int:
    config, _ = load_config(args.config, args.set, args.seed)
    table = build_equilibrium(config.grid(), config.s)
    v_path, k_path = dump_equilibrium_csv(table, _out_dir(args))
    print(f"mass = {table.mass:.12f}, tail constant = {table.tail_constant:.6e}")
    print(f"wrote {v_path} and {k_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", default=None, help="TOML configuration file")
    common.add_argument("--out", metavar="DIR", default="out", help="output directory (default: out)")
    common.add_argument("--jobs", metavar="N", type=int, default=1, help="sweep worker processes")
    common.add_argument("--seed", metavar="U64", type=int, default=None, help="override the RNG seed")
    common.add_argument(
        "--set", metavar="KEY=VALUE", action="append", default=[],
        help="override one configuration key (repeatable)",
    )
    parser = argparse.ArgumentParser(
        prog="levyfp",
        description="Fractional kinetic solver: runs, sweeps, and property checks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="run one (eps, dt) cell").set_defaults(fn=_cmd_run)
    sub.add_parser("sweep", parents=[common], help="run the eps x dt sweep").set_defaults(fn=_cmd_sweep)
    sub.add_parser("check", parents=[common], help="run the property suites").set_defaults(fn=_cmd_check)
    sub.add_parser(
        "equilibrium", parents=[common], help="tabulate the equilibrium density"
    ).set_defaults(fn=_cmd_equilibrium)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
