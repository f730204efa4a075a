"""Command line runner for the named experiments.

A config file is a flat ``key = value`` list with ``#`` comments::

    experiment = sampler_check
    alpha = 1.2
    paths = 100000

Each run writes ``results.csv``, ``checks.csv``, ``summary.txt``,
``report.json`` and ``config.echo`` into the output directory. The exit code
is 0 when every check passes, 1 when a check fails or a library error
occurs and 2 for configuration errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from pathlib import Path

from . import __version__
from .errors import ConfigError, LevyLabError
from .experiments import REGISTRY

COMMON_KEYS = ("experiment",)


def parse_config_text(text: str) -> dict:
    """Raw ``key -> str`` mapping. Repeated keys and malformed lines are errors."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _coerce(key: str, value: str, default):
    try:
        if isinstance(default, bool):
            if value.lower() not in ("true", "false", "1", "0"):
                raise ValueError(value)
            return value.lower() in ("true", "1")
        if isinstance(default, int):
            return int(value)
        if isinstance(default, float):
            return float(value)
    except ValueError:
        raise ConfigError(f"{key}: cannot read {value!r} as {type(default).__name__}") from None
    return value


def resolve_config(raw: dict, seed: int | None = None, threads: int | None = None) -> tuple[str, dict]:
    """Validate a raw mapping against the registry and return typed parameters."""
    name = raw.get("experiment")
    if name is None:
        raise ConfigError("missing key 'experiment'")
    if name not in REGISTRY:
        raise ConfigError(f"unknown experiment {name!r}; choose from {', '.join(REGISTRY)}")
    defaults = REGISTRY[name][1]
    unknown = sorted(set(raw) - set(defaults) - set(COMMON_KEYS))
    if unknown:
        raise ConfigError(f"unknown keys for {name}: {', '.join(unknown)}")
    params = dict(defaults)
    for k, v in raw.items():
        if k in defaults:
            params[k] = _coerce(k, v, defaults[k])
    if seed is not None:
        if not 0 <= seed < 2**64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        params["seed"] = seed
    if threads is not None:
        if threads < 1:
            raise ConfigError("--threads must be positive")
        if "threads" in params:
            params["threads"] = threads
    return name, params


def rows_to_csv(rows: list) -> str:
    cols = []
    for row in rows:
        cols += [k for k in row if k not in cols]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def config_echo(name: str, params: dict) -> str:
    lines = [f"# levylab {__version__}", f"experiment = {name}"]
    lines += [f"{k} = {v!r}" if isinstance(v, float) else f"{k} = {v}" for k, v in params.items()]
    return "\n".join(lines) + "\n"


def run(name: str, params: dict, out: Path) -> int:
    """Run one experiment and write its artifacts. Returns the exit status."""
    fn = REGISTRY[name][0]
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.echo").write_text(config_echo(name, params))
    started = time.time()
    res = fn(params)
    elapsed = time.time() - started
    (out / "results.csv").write_text(rows_to_csv(res.rows))
    (out / "checks.csv").write_text(rows_to_csv(
        [{"check": c.name, "value": float(c.value), "op": c.op, "threshold": float(c.threshold),
          "passed": c.passed} for c in res.checks]))
    summary = [c.line() for c in res.checks]
    summary.append(f"{'PASS' if res.passed else 'FAIL'} {name}")
    (out / "summary.txt").write_text("\n".join(summary) + "\n")
    report = {"experiment": name, "version": __version__,
              "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
              "elapsed_seconds": elapsed, "config": params, **res.to_dict()}
    (out / "report.json").write_text(json.dumps(report, indent=2, default=float) + "\n")
    print("\n".join(summary))
    return 0 if res.passed else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="levylab", description="Run a named levylab experiment.")
    ap.add_argument("--config", type=Path, help="flat key = value experiment file")
    ap.add_argument("--seed", type=int, help="override the config seed (unsigned 64-bit)")
    ap.add_argument("--out", type=Path, default=Path("levylab-out"), help="output directory")
    ap.add_argument("--threads", type=int, help="worker threads for path sampling")
    ap.add_argument("--list", action="store_true", help="print the experiment registry and exit")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.list:
        for name, (_, defaults) in REGISTRY.items():
            print(name)
            for k, v in defaults.items():
                print(f"    {k} = {v}")
        return 0
    try:
        if args.config is None:
            raise ConfigError("--config is required unless --list is given")
        try:
            text = args.config.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        name, params = resolve_config(parse_config_text(text), args.seed, args.threads)
        if params.get("law") and not Path(params["law"]).is_absolute():
            params["law"] = str(args.config.parent / params["law"])
        if params.get("law") and not Path(params["law"]).is_file():
            raise ConfigError(f"law file {params['law']} not found")
    except ConfigError as exc:
        print(f"ConfigError: {exc}", file=sys.stderr)
        return 2
    try:
        return run(name, params, args.out)
    except ConfigError as exc:
        print(f"{name}: ConfigError: {exc}", file=sys.stderr)
        return 2
    except LevyLabError as exc:
        print(f"{name}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
