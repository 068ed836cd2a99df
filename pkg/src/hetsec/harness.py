"""Monte-Carlo experiment driver and command-line front end.

Every experiment is a grid of (sweep value, snapshot seed, scheme) cells.
A snapshot regenerates topology and channels from its seed alone, so every
scheme — and every sweep value that does not alter the geometry — sees the
identical channel draw (paired comparisons). Results are emitted as CSV with
per-snapshot rows plus mean/stderr aggregate rows per cell; the output is
byte-deterministic for a fixed (config, seed list) unless wall-clock timing
is switched on.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from dataclasses import dataclass, replace

import numpy as np

from . import baselines
from .errors import ConfigurationError
from .netmodel import (NetworkConfig, dbm_to_watt, default_config,
                       generate_topology, load_config, sample_channels)
from .solver import SolverOptions

SCHEMES = {
    "proposed": baselines.proposed,
    "upper_bound": baselines.upper_bound,
    "interference_avoidance": baselines.interference_avoidance,
    "orthogonal": baselines.orthogonal_allocation,
    "fixed_power": baselines.fixed_power,
}

KINDS = ("convergence", "qos_sweep", "power_sweep", "lue_sweep", "baseline_compare")

CSV_HEADER = ("scheme", "sweep_param", "sweep_value", "seed",
              "total_secrecy_bps", "mean_secrecy_per_lue_bps",
              "feasible_fraction", "outer_iters", "wall_ms")

TRACE_HEADER = ("iter", "subcarrier", "objective_nats", "lambda_norm",
                "beta_norm", "mu_norm", "max_log_rho")


@dataclass
class SnapshotResult:
    """One (scheme, sweep value, seed) outcome; class totals sum to the total."""

    scheme: str
    sweep_param: str
    sweep_value: float
    seed: int
    total_secrecy_bps: float
    hue_secrecy_bps: float
    lue_secrecy_bps: float
    due_secrecy_bps: float
    mean_secrecy_per_lue_bps: float
    feasible_fraction: float
    outer_iters: int
    wall_ms: float
    error: str = ""


@dataclass
class ExperimentSpec:
    """A sweep x snapshots x schemes grid over a base configuration."""

    kind: str
    sweep_param: str
    sweep_values: tuple
    snapshots: int
    cfg: NetworkConfig
    schemes: tuple = ("proposed",)
    seed: int = 0
    out: str | None = None
    trace: bool = False

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown experiment kind {self.kind!r}")
        if self.snapshots < 1:
            raise ConfigurationError("snapshots must be >= 1")
        vals = tuple(self.sweep_values)
        if len(vals) == 0:
            raise ConfigurationError("sweep_values must be non-empty")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ConfigurationError("sweep_values must be strictly increasing")
        bad = [s for s in self.schemes if s not in SCHEMES]
        if bad or not self.schemes:
            raise ConfigurationError(f"unknown schemes {bad}")


def apply_sweep(cfg: NetworkConfig, param: str, value: float) -> NetworkConfig:
    """Configuration with one swept knob changed."""
    if param == "none":
        return cfg
    if param == "c_min_bps_hz":
        return replace(cfg, c_min_hue=value, c_min_lue=value, c_min_due=value)
    if param == "p_max_lue_dbm":
        return replace(cfg, p_max_lue=dbm_to_watt(value))
    if param == "lues_per_lpn":
        return replace(cfg, lues_per_lpn=int(value))
    raise ConfigurationError(f"unknown sweep parameter {param!r}")


def run_snapshot(cfg: NetworkConfig, seed: int, scheme: str,
                 sweep_param: str = "none", sweep_value: float = 0.0,
                 options: SolverOptions | None = None,
                 trace: list | None = None) -> SnapshotResult:
    """One seeded snapshot under one scheme.

    Channels are regenerated from the seed, so the result depends only on
    (cfg, seed, scheme). Module errors become a failure record with zeroed
    metrics instead of aborting the run.
    """
    if scheme not in SCHEMES:
        raise ConfigurationError(f"unknown scheme {scheme!r}")
    t0 = time.perf_counter()
    try:
        rng = np.random.default_rng(seed)
        ch = sample_channels(generate_topology(cfg, rng), cfg, rng)
        if scheme == "proposed":
            res = baselines.proposed(ch, cfg, options=options, trace=trace)
        elif scheme == "upper_bound":
            res = baselines.upper_bound(ch, cfg, options=options)
        else:
            res = SCHEMES[scheme](ch, cfg)
    except Exception as exc:                       # record and keep sweeping
        wall = (time.perf_counter() - t0) * 1e3 if cfg.record_wall_time else 0.0
        return SnapshotResult(scheme=scheme, sweep_param=sweep_param,
                              sweep_value=sweep_value, seed=seed,
                              total_secrecy_bps=0.0, hue_secrecy_bps=0.0,
                              lue_secrecy_bps=0.0, due_secrecy_bps=0.0,
                              mean_secrecy_per_lue_bps=0.0,
                              feasible_fraction=0.0, outer_iters=0,
                              wall_ms=wall, error=repr(exc))
    wall = (time.perf_counter() - t0) * 1e3 if cfg.record_wall_time else 0.0
    hue_bps, lue_bps, due_bps = res.class_totals_bps
    n_users = cfg.hues + cfg.lpns * (cfg.lues_per_lpn + cfg.dues_per_lpn)
    n_ok = sum(int(np.sum(f)) for f in res.qos_flags)
    return SnapshotResult(
        scheme=scheme, sweep_param=sweep_param, sweep_value=sweep_value,
        seed=seed, total_secrecy_bps=hue_bps + lue_bps + due_bps,
        hue_secrecy_bps=hue_bps, lue_secrecy_bps=lue_bps,
        due_secrecy_bps=due_bps,
        mean_secrecy_per_lue_bps=lue_bps / (cfg.lpns * cfg.lues_per_lpn),
        feasible_fraction=n_ok / n_users, outer_iters=res.outer_iters,
        wall_ms=wall)


def run_experiment(spec: ExperimentSpec, options: SolverOptions | None = None,
                   trace: list | None = None) -> list:
    """All cells of the grid, snapshot seeds = spec.seed + snapshot index.

    Cells run in (sweep value, snapshot, scheme) order; every scheme at a
    given (sweep value, snapshot) sees the identical channel draw. Returns
    the per-snapshot rows; aggregation happens at serialization time so
    emitted aggregates are recomputable from emitted rows.
    """
    spec.validate()
    rows = []
    for value in spec.sweep_values:
        vcfg = apply_sweep(spec.cfg, spec.sweep_param, value)
        for snap in range(spec.snapshots):
            for scheme in spec.schemes:
                rows.append(run_snapshot(
                    vcfg, spec.seed + snap, scheme, spec.sweep_param,
                    value, options=options, trace=trace))
    return rows


def _fmt(v) -> str:
    return "%.12g" % float(v)


def aggregate_cells(rows: list) -> dict:
    """Mean and standard error per (scheme, sweep value) cell.

    Statistics are taken over the serialization-rounded values so that
    recomputing them from an emitted CSV reproduces the emitted aggregates.
    Cells keep first-appearance order; stderr uses ddof=1 (0 for one row).
    """
    cells: dict = {}
    for r in rows:
        key = (r.scheme, r.sweep_param, _fmt(r.sweep_value))
        cells.setdefault(key, []).append(
            [float(_fmt(v)) for v in (r.total_secrecy_bps,
                                      r.mean_secrecy_per_lue_bps,
                                      r.feasible_fraction, r.outer_iters,
                                      r.wall_ms)])
    out = {}
    for key, data in cells.items():
        a = np.asarray(data)
        mean = a.mean(axis=0)
        err = (a.std(axis=0, ddof=1) / math.sqrt(a.shape[0])
               if a.shape[0] > 1 else np.zeros(a.shape[1]))
        out[key] = (mean, err)
    return out


def write_csv(rows: list, path: str) -> None:
    """Emit per-snapshot rows plus mean/stderr aggregate rows per cell."""
    if not rows:
        raise ConfigurationError("refusing to write an empty result table")
    lines = [",".join(CSV_HEADER)]
    for r in rows:
        lines.append(",".join((
            r.scheme, r.sweep_param, _fmt(r.sweep_value), str(r.seed),
            _fmt(r.total_secrecy_bps), _fmt(r.mean_secrecy_per_lue_bps),
            _fmt(r.feasible_fraction), str(int(r.outer_iters)),
            _fmt(r.wall_ms))))
    for (scheme, param, value), (mean, err) in aggregate_cells(rows).items():
        for tag, stats in (("mean", mean), ("stderr", err)):
            lines.append(",".join((
                scheme, param, value, tag, _fmt(stats[0]), _fmt(stats[1]),
                _fmt(stats[2]), _fmt(stats[3]), _fmt(stats[4]))))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path: str) -> list:
    """Parse a result file back into per-snapshot rows and aggregate rows.

    Returns (snapshot_rows, aggregate_rows): snapshot rows as dicts with
    typed values, aggregate rows keyed by (scheme, sweep_param, sweep_value,
    tag) mapping to the five numeric columns.
    """
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().split("\n") if ln]
    if tuple(lines[0].split(",")) != CSV_HEADER:
        raise ConfigurationError(f"unexpected header in {path}")
    snaps, aggs = [], {}
    for ln in lines[1:]:
        f = ln.split(",")
        nums = [float(x) for x in f[4:]]
        if f[3] in ("mean", "stderr"):
            aggs[(f[0], f[1], f[2], f[3])] = nums
        else:
            snaps.append({"scheme": f[0], "sweep_param": f[1],
                          "sweep_value": float(f[2]), "seed": int(f[3]),
                          "total_secrecy_bps": nums[0],
                          "mean_secrecy_per_lue_bps": nums[1],
                          "feasible_fraction": nums[2],
                          "outer_iters": int(nums[3]), "wall_ms": nums[4]})
    return snaps, aggs


def write_trace(trace: list, path: str) -> None:
    """Per-iteration solver rows: one line per outer iteration x subcarrier."""
    lines = [",".join(TRACE_HEADER)]
    for row in trace:
        lines.append(",".join([str(int(row[0])), str(int(row[1]))]
                             + [_fmt(v) for v in row[2:]]))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _trace_path(out: str) -> str:
    stem, dot, ext = out.rpartition(".")
    return f"{stem}_trace.{ext}" if dot else f"{out}_trace"


# ---------------------------------------------------------------------------
# command line


def _qos_values() -> tuple:
    return tuple(round(0.02 * i, 10) for i in range(11))        # 0 .. 0.2


def _power_values() -> tuple:
    return tuple(float(v) for v in range(14, 37, 2))            # 14 .. 36 dBm


def _build_spec(args: argparse.Namespace, cfg: NetworkConfig) -> list:
    """ExperimentSpec list for one CLI invocation (lue-sweep yields several)."""
    schemes = tuple(args.scheme.split(",")) if args.scheme else None
    common = dict(snapshots=args.snapshots, seed=args.seed, out=args.out,
                  trace=args.trace)
    if args.command == "convergence":
        if args.paper_scale:
            cfg = replace(cfg, hues=10, subcarriers=20, lues_per_lpn=15,
                          dues_per_lpn=15)
        return [ExperimentSpec(kind="convergence", sweep_param="c_min_bps_hz",
                               sweep_values=(0.0, 0.1, 0.2), cfg=cfg,
                               schemes=schemes or ("proposed",), **common)]
    if args.command == "qos-sweep":
        return [ExperimentSpec(kind="qos_sweep", sweep_param="c_min_bps_hz",
                               sweep_values=_qos_values(), cfg=cfg,
                               schemes=schemes or ("proposed",), **common)]
    if args.command == "power-sweep":
        return [ExperimentSpec(kind="power_sweep", sweep_param="p_max_lue_dbm",
                               sweep_values=_power_values(), cfg=cfg,
                               schemes=schemes or ("proposed",), **common)]
    if args.command == "lue-sweep":
        specs = []
        powers = [float(p) for p in args.power_dbm.split(",")]
        for p in powers:
            pcfg = replace(cfg, subcarriers=8, c_min_hue=0.1, c_min_lue=0.1,
                           c_min_due=0.1, p_max_lue=dbm_to_watt(p))
            out = args.out
            if len(powers) > 1 and out:
                stem, dot, ext = out.rpartition(".")
                out = (f"{stem}_p{p:g}dbm.{ext}" if dot
                       else f"{out}_p{p:g}dbm")
            specs.append(ExperimentSpec(
                kind="lue_sweep", sweep_param="lues_per_lpn",
                sweep_values=tuple(float(m) for m in range(1, 9)), cfg=pcfg,
                schemes=schemes or ("proposed",), snapshots=args.snapshots,
                seed=args.seed, out=out, trace=args.trace))
        return specs
    return [ExperimentSpec(kind="baseline_compare", sweep_param="none",
                           sweep_values=(0.0,), cfg=cfg,
                           schemes=schemes or tuple(SCHEMES), **common)]


def cli_main(argv=None) -> int:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key=value configuration file")
    common.add_argument("--seed", type=int, default=0, help="base snapshot seed")
    common.add_argument("--snapshots", type=int, default=100,
                        help="snapshots per sweep value")
    common.add_argument("--out", required=True, help="output CSV path")
    common.add_argument("--scheme",
                        help="comma-separated schemes (default per command)")
    common.add_argument("--trace", action="store_true",
                        help="emit per-iteration solver rows next to --out")

    parser = argparse.ArgumentParser(
        prog="hetsec",
        description="Secrecy-rate simulations for D2D-underlaid two-tier networks")
    sub = parser.add_subparsers(dest="command", required=True)
    conv = sub.add_parser("convergence", parents=[common],
                          help="solver convergence at several QoS floors")
    conv.add_argument("--paper-scale", action="store_true",
                      help="large-instance sizing (slow)")
    sub.add_parser("qos-sweep", parents=[common],
                   help="secrecy vs QoS floor, 0 to 0.2 bits/s/Hz")
    sub.add_parser("power-sweep", parents=[common],
                   help="secrecy vs LUE power cap, 14 to 36 dBm")
    lue = sub.add_parser("lue-sweep", parents=[common],
                         help="secrecy vs LUEs per cell, 1 to 8")
    lue.add_argument("--power-dbm", default="18,20,22",
                     help="comma-separated LUE power caps, one file each")
    sub.add_parser("compare", parents=[common],
                   help="all schemes on common seeds")

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        if args.config:
            cfg = load_config(args.config)
        else:
            cfg = default_config()
            print("no --config given; using built-in defaults", file=sys.stderr)
        for spec in _build_spec(args, cfg):
            trace: list | None = [] if spec.trace else None
            rows = run_experiment(spec, trace=trace)
            write_csv(rows, spec.out)
            print(f"wrote {spec.out} ({len(rows)} snapshot rows)")
            if trace is not None:
                write_trace(trace, _trace_path(spec.out))
                print(f"wrote {_trace_path(spec.out)} ({len(trace)} rows)")
    except (OSError, ValueError, ConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
