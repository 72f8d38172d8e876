"""
Command-line front end.

    qwalk simulate --mode static --j 21 --p 0.2 --T 200 --R 2000 --out run/
    qwalk sweep --grid grid.json --T 200 --R 1000 --out sweep/
    qwalk stats --input run/matrix.csv --out run/
    qwalk selftest

Settings are resolved as built-in defaults < ``--config`` JSON file < flags.
Exit codes: 0 success, 1 runtime or selftest failure, 2 invalid input.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from qwalk import __version__, selftest, stats
from qwalk.disorder import DisorderParams, ValidationError
from qwalk.engine import SWEEP_COLUMNS, DistributionSeries, RunConfig, simulate, summarize, sweep
from qwalk.walk import channel_coordinates, default_cycle_size

EXIT_OK, EXIT_FAILURE, EXIT_INVALID = 0, 1, 2

DEFAULTS: dict[str, Any] = {
    "mode": "static",
    "N": None,  # 2T + 16
    "j": 21,
    "p": 0.2,
    "T": 200,
    "R": 2000,
    "seed": 0,
    "record_every": 1,
    "initial_channel": 0.5,
    "out": ".",
    "format": "csv",
    "threads": None,
    "grid": None,
    "input": None,
    "alpha": stats.ALPHA,
    "beta": stats.BETA,
    "allow_wrap": False,
}

_TYPES = {
    "mode": str, "N": int, "j": int, "p": float, "T": int, "R": int, "seed": int,
    "record_every": int, "initial_channel": float, "out": str, "format": str,
    "threads": int, "grid": str, "input": str, "alpha": float, "beta": float,
    "allow_wrap": bool,
}

STATS_COLUMNS = ("t", "var", "second_moment_injection", "shannon", "tsallis2", "inv_a_whole", "inv_a_peak")
SUMMARY_COLUMNS = ("t", "var", "shannon", "tsallis2")


class InputError(Exception):
    """Bad user input; maps to exit code 2."""


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    add = common.add_argument
    add("--config", help="JSON file with default settings; flags override it")
    add("--mode", choices=("static", "dynamic"))
    add("--N", type=int, help="number of channels (default 2T+16)")
    add("--j", type=int, help="jump size")
    add("--p", type=float, help="jump probability per slot, 0 <= p < 1")
    add("--T", type=int, help="number of timesteps")
    add("--R", type=int, help="Monte Carlo runs")
    add("--seed", type=int, help="master seed (64-bit unsigned)")
    add("--record-every", dest="record_every", type=int, help="snapshot stride")
    add("--initial-channel", dest="initial_channel", type=float, help="half-integer start channel")
    add("--out", help="output directory (created if missing)")
    add("--format", choices=("csv", "json"))
    add("--threads", type=int, help="worker threads (default: $QWALK_THREADS or all cores)")
    add("--alpha", type=float, help="collapse exponent for x = p j^alpha")
    add("--beta", type=float, help="collapse exponent for y = j^-beta Var")
    add("--allow-wrap", dest="allow_wrap", action="store_const", const=True,
        help="permit N < 2T+2 (the walker wraps around the cycle)")

    parser = argparse.ArgumentParser(prog="qwalk", description="Jump-perturbed quantum walk simulator")
    parser.add_argument("--version", action="version", version=f"qwalk {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="run one disorder average")
    sp = sub.add_parser("sweep", parents=[common], help="scan a (p, j) grid")
    sp.add_argument("--grid", help='JSON file {"p": [...], "j": [...]}')
    st = sub.add_parser("stats", parents=[common], help="observables of a saved matrix.csv")
    st.add_argument("--input", help="matrix.csv written by simulate")
    sub.add_parser("selftest", help="fast invariant checks")
    return parser


def resolve_settings(args: argparse.Namespace) -> dict[str, Any]:
    settings = dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config file {args.config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise InputError("config file must hold a JSON object")
        for key, value in loaded.items():
            key = key.replace("-", "_")
            if key not in _TYPES:
                raise InputError(f"unknown config key {key!r}")
            if value is not None:
                if _TYPES[key] is bool and not isinstance(value, bool):
                    raise InputError(f"config key {key!r} must be true or false")
                try:
                    value = _TYPES[key](value)
                except (TypeError, ValueError):
                    raise InputError(f"config key {key!r} has invalid value {value!r}") from None
            settings[key] = value
    for key in _TYPES:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    if settings["mode"] not in ("static", "dynamic"):
        raise InputError(f"mode must be static or dynamic (got {settings['mode']!r})")
    if settings["format"] not in ("csv", "json"):
        raise InputError(f"format must be csv or json (got {settings['format']!r})")
    if settings["N"] is None:
        settings["N"] = default_cycle_size(settings["T"])
    return settings


def run_config(s: dict[str, Any]) -> RunConfig:
    return RunConfig(
        DisorderParams(s["N"], s["j"], s["p"], s["mode"]),
        T=s["T"],
        R=s["R"],
        initial_channel=s["initial_channel"],
        master_seed=s["seed"],
        record_every=s["record_every"],
        allow_wrap=s["allow_wrap"],
    )


def _fmt(value: Any) -> str:
    # repr of a float is the shortest string that reads back bit-exactly
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _json_safe(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, np.ndarray):
        return _json_safe(value.tolist())
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return None if math.isnan(value) else float(value)
    return value


def _write_json(path: Path, doc: dict) -> None:
    text = json.dumps(_json_safe(doc), indent=1, sort_keys=True, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")


def load_schema() -> dict:
    return json.loads(resources.files("qwalk").joinpath("schemas/output.schema.json").read_text())


def _config_echo(config: RunConfig) -> dict[str, Any]:
    d = config.disorder
    return {
        "mode": d.mode, "N": d.N, "j": d.j, "p": d.p, "T": config.T, "R": config.R,
        "seed": config.master_seed, "record_every": config.record_every,
        "initial_channel": config.initial_channel, "allow_wrap": config.allow_wrap,
    }


def _metadata(command: str, config: RunConfig, **extra: Any) -> dict[str, Any]:
    meta = {
        "version": __version__,
        "command": command,
        "seed": config.master_seed,
        "config": _config_echo(config),
        "channel_to_slot": "slot = channel + N/2 - 1/2",
        "initial_slot": config.initial_slot,
        "first_channel": float(channel_coordinates(config.N)[0]),
        "probability_floor": stats.probability_floor(config.R, config.N),
        "entropy_log": "natural",
        "variance": "about the mean",
    }
    meta.update(extra)
    return meta


def _summary_rows(series: DistributionSeries) -> list[dict[str, Any]]:
    return [
        {
            "t": t,
            "var": stats.position_variance(row),
            "shannon": stats.shannon_entropy(row),
            "tsallis2": stats.tsallis_entropy(row, 2.0),
        }
        for t, row in series.snapshots
    ]


def cmd_simulate(s: dict[str, Any], out: Path) -> int:
    config = run_config(s)
    series = simulate(config, s["threads"])
    meta = _metadata("simulate", config)
    summary = _summary_rows(series)
    out.mkdir(parents=True, exist_ok=True)
    if s["format"] == "json":
        _write_json(out / "result.json", {
            "kind": "simulate",
            "metadata": meta,
            "channels": series.coordinates,
            "times": series.times,
            "probabilities": series.probabilities,
            "summary": summary,
        })
        return EXIT_OK
    header = ["t"] + [_fmt(c) for c in series.coordinates]
    _write_csv(out / "matrix.csv", header, [[t, *row.tolist()] for t, row in series.snapshots])
    _write_csv(out / "summary.csv", SUMMARY_COLUMNS, [[r[c] for c in SUMMARY_COLUMNS] for r in summary])
    _write_json(out / "metadata.json", meta)
    return EXIT_OK


def _load_grid(path: str | None) -> tuple[list[float], list[int]]:
    if not path:
        raise InputError("sweep needs --grid FILE")
    try:
        grid = json.loads(Path(path).read_text())
        ps = [float(v) for v in grid["p"]]
        js = [int(v) for v in grid["j"]]
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f'grid file must be JSON {{"p": [...], "j": [...]}} ({exc})') from None
    return ps, js


def cmd_sweep(s: dict[str, Any], out: Path) -> int:
    ps, js = _load_grid(s["grid"])
    # grid points are validated one by one; the base only has to be a valid run
    base = RunConfig(
        DisorderParams(s["N"], 1, 0.0, s["mode"]),
        T=s["T"], R=s["R"], initial_channel=s["initial_channel"], master_seed=s["seed"],
        record_every=s["record_every"], allow_wrap=s["allow_wrap"],
    )
    rows = sweep(ps, js, base, alpha=s["alpha"], beta=s["beta"], threads=s["threads"])
    meta = _metadata("sweep", base, grid={"p": ps, "j": js}, alpha=s["alpha"], beta=s["beta"])
    meta["config"].pop("j")
    meta["config"].pop("p")
    out.mkdir(parents=True, exist_ok=True)
    if s["format"] == "json":
        _write_json(out / "sweep.json", {"kind": "sweep", "metadata": meta, "rows": rows})
    else:
        _write_csv(out / "sweep.csv", SWEEP_COLUMNS, [[r[c] for c in SWEEP_COLUMNS] for r in rows])
        _write_json(out / "metadata.json", meta)
    return EXIT_OK


def read_matrix(path: Path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Read a matrix.csv back as ``(times, channels, probabilities)``."""
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "t":
        raise InputError(f"{path} is not a matrix.csv written by qwalk simulate")
    channels = np.array([float(v) for v in rows[0][1:]])
    times = np.array([int(r[0]) for r in rows[1:]], dtype=np.int64)
    probs = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    return times, channels, probs


def cmd_stats(s: dict[str, Any], out: Path, given: set[str]) -> int:
    if not s["input"]:
        raise InputError("stats needs --input matrix.csv")
    path = Path(s["input"])
    try:
        times, channels, probs = read_matrix(path)
    except (OSError, ValueError, IndexError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    # fit parameters come from the run's metadata unless overridden
    meta_path = path.with_name("metadata.json")
    if meta_path.exists():
        saved = json.loads(meta_path.read_text()).get("config", {})
        for key in ("j", "R", "initial_channel"):
            if key in saved and key not in given:
                s[key] = saved[key]
    if not np.array_equal(channels, channel_coordinates(len(channels))):
        raise InputError("channel header does not match the half-integer layout")
    rows = []
    for t, dist in zip(times, probs):
        row = summarize(dist, t=int(t), j=s["j"], R=s["R"], initial_channel=s["initial_channel"])
        row["t"] = int(t)
        rows.append({c: row[c] for c in STATS_COLUMNS})
    out.mkdir(parents=True, exist_ok=True)
    meta = {"version": __version__, "command": "stats", "input": str(path), "j": s["j"], "R": s["R"],
            "initial_channel": s["initial_channel"],
            "probability_floor": stats.probability_floor(s["R"], len(channels))}
    if s["format"] == "json":
        _write_json(out / "stats.json", {"kind": "stats", "metadata": meta, "rows": rows})
    else:
        _write_csv(out / "stats.csv", STATS_COLUMNS, [[r[c] for c in STATS_COLUMNS] for r in rows])
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "selftest":
        return selftest.main(sys.stdout)
    try:
        s = resolve_settings(args)
        out = Path(s["out"])
        if args.command == "simulate":
            return cmd_simulate(s, out)
        if args.command == "sweep":
            return cmd_sweep(s, out)
        given = {k for k in _TYPES if getattr(args, k, None) is not None}
        return cmd_stats(s, out, given)
    except (ValidationError, InputError) as exc:
        print(f"qwalk: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"qwalk: I/O error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
