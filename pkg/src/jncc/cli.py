"""Command-line entry point: ``python -m jncc <command> [options]``.

Exit codes: 0 success, 1 configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from .convcode import CODES
from .exit_chart import endpoint_cdf, measure_cc_transfer, measure_nc_transfer, select_coefficients
from .gf import make_field
from .harness import ConfigError, SimConfig, run_coefficient_scan, run_per_sweep
from .channel import snr_to_n0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _pair(text: str) -> tuple[int, int]:
    try:
        a, b = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'h1,h2', got {text!r}") from None
    return a, b


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON file with SimConfig fields")
    common.add_argument("--seed", type=int, help="master seed (overrides the config)")
    common.add_argument("--out", type=Path, help="output file (default: stdout)")
    common.add_argument("--threads", type=int, default=1, help="worker processes")

    p = _Parser(prog="jncc", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", parents=[common], help="PER sweep for one configuration")
    sim.add_argument("--meta", type=Path, help="write run metadata (timings) as JSON here")
    sub.add_parser("scan", parents=[common], help="PER sweeps for every canonical coefficient pair")

    ex = sub.add_parser("exit", parents=[common], help="EXIT transfer curves (AWGN)")
    ex.add_argument("--h", type=_pair, action="append",
                    help="coefficient pair 'h1,h2' (repeatable; default: all canonical pairs)")
    ex.add_argument("--snr-db", type=float, default=-6.0)
    ex.add_argument("--samples", type=int, default=10_000, help="check-node uses per point")
    ex.add_argument("--points", type=int, default=11, help="a-priori grid size")
    ex.add_argument("--with-codes", action="store_true", help="also emit CC2 and CC6 curves")

    cd = sub.add_parser("cdf", parents=[common], help="empirical CDFs of the transfer endpoints")
    cd.add_argument("--h", type=_pair, action="append")
    cd.add_argument("--snr-db", type=float, default=0.0)
    cd.add_argument("--realizations", type=int, default=500)
    cd.add_argument("--nodes", type=int, default=500, help="check-node uses per realization")

    se = sub.add_parser("select", parents=[common], help="coefficient selection")
    se.add_argument("--snr-db", type=float, default=0.0, help="SNR of the endpoint CDFs")
    se.add_argument("--realizations", type=int, default=500)
    se.add_argument("--nodes", type=int, default=500)
    se.add_argument("--no-threshold", action="store_true", help="skip the PER sweeps")
    return p


def load_config(args) -> SimConfig:
    d = {}
    if args.config is not None:
        try:
            text = args.config.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        cfg = SimConfig.from_json(text)
        d = cfg.to_dict()
    if args.seed is not None:
        d["seed"] = args.seed
    return SimConfig.from_dict(d)


def _emit(text: str, out: Path | None):
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def _rows_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return buf.getvalue()


def cmd_simulate(args, cfg: SimConfig):
    res = run_per_sweep(cfg, threads=args.threads)
    _emit(res.to_csv(), args.out)
    if args.meta is not None:
        args.meta.write_text(json.dumps(res.metadata(), indent=2))


def cmd_scan(args, cfg: SimConfig):
    results = run_coefficient_scan(cfg, threads=args.threads)
    text = results[0].to_csv() + "".join(r.to_csv(header=False) for r in results[1:])
    _emit(text, args.out)


def cmd_exit(args, cfg: SimConfig):
    field = make_field(cfg.q)
    pairs = args.h or field.canonical_pairs()
    n0 = float(snr_to_n0(args.snr_db))
    grid = np.linspace(0, 1, args.points)
    rows = []
    for i, h in enumerate(pairs):
        c = measure_nc_transfer(field, h, n0=n0, ia_grid=grid, n_samples=args.samples,
                                rng=[cfg.seed, i])
        rows += [{"node": "NC", "q": cfg.q, "h1": h[0], "h2": h[1], "code": "",
                  "snr_db": args.snr_db, "x": f"{r['x']:.4f}", "y": f"{r['y']:.6f}"}
                 for r in c.rows()]
    if args.with_codes:
        for name, spec in CODES.items():
            c = measure_cc_transfer(spec, grid, rng=[cfg.seed, 1000])
            rows += [{"node": "CC", "q": "", "h1": "", "h2": "", "code": name, "snr_db": "",
                      "x": f"{r['x']:.4f}", "y": f"{r['y']:.6f}"} for r in c.rows()]
    _emit(_rows_csv(rows), args.out)


def cmd_cdf(args, cfg: SimConfig):
    field = make_field(cfg.q)
    pairs = args.h or field.canonical_pairs()
    scenario = cfg.scenario if cfg.relay_gain_db is None else cfg.relay_gain
    rows = []
    for h in pairs:
        d = endpoint_cdf(field, h, scenario, args.snr_db, args.realizations, rng=cfg.seed,
                         n_nodes=args.nodes)
        for endpoint in ("t0", "t1"):
            rows += [{"q": cfg.q, "h1": h[0], "h2": h[1], "scenario": cfg.scenario_label,
                      "snr_db": args.snr_db, "endpoint": endpoint, "x": f"{x:.6f}",
                      "y": f"{y:.6f}"} for x, y in zip(d[endpoint], d["cdf"])]
    _emit(_rows_csv(rows), args.out)


def cmd_select(args, cfg: SimConfig):
    field = make_field(cfg.q)
    scenario = cfg.scenario if cfg.relay_gain_db is None else cfg.relay_gain
    sweep = {k: v for k, v in cfg.to_dict().items()
             if k in ("k", "iterations", "schedule", "relay_mode", "snr_grid_db",
                      "target_errors", "min_frames", "max_frames", "batch_size",
                      "source_relay_gain_db")}
    res = select_coefficients(field, CODES[cfg.code], scenario, args.snr_db, args.realizations,
                              args.nodes, seed=cfg.seed, estimate_threshold=not args.no_threshold,
                              sweep_kwargs=sweep)
    _emit(res.to_json(indent=2) + "\n", args.out)


COMMANDS = {"simulate": cmd_simulate, "scan": cmd_scan, "exit": cmd_exit, "cdf": cmd_cdf,
            "select": cmd_select}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        if args.threads < 1:
            raise ConfigError("--threads must be positive")
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    try:
        COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0
