"""Command-line front end.

Subcommands: ``simulate``, ``rmse-sweep``, ``replay LOG``, ``oracle-compare``
and ``dump-config``.  Exit codes: 0 ok, 2 configuration or input error,
3 runtime failure inside the filter.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from rbinit import io
from rbinit.config import ConfigError, RunConfig
from rbinit.initializer import ResamplingError
from rbinit.sim.harness import (
    FILTER_STREAM,
    SYNTH_STREAM,
    rmse_sweep,
    run_events,
    run_realization,
    stream,
)
from rbinit.sim.oracle import COMPARE_HEADER, oracle_compare
from rbinit.sim.synth import synthesize

log = logging.getLogger("rbinit")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON run configuration")
    common.add_argument("--seed", type=int, help="master seed (non-negative)")
    common.add_argument("--realizations", type=int, help="Monte-Carlo realizations / seeds")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--granularity-deg", type=_float_list, metavar="LIST",
                        help="bearing/heading granularity; a list for rmse-sweep")
    common.add_argument("--gamma", type=float, help="resampling threshold factor")
    common.add_argument("--alpha", type=float, help="forgetting factor (>= 1)")
    common.add_argument("--sigma", type=float, help="Cauchy scale of the range likelihood (m)")
    common.add_argument("--gamma-cov", type=_float_list, metavar="LIST4",
                        help="variance bounds m^2,m^2,m^2,deg^2")
    common.add_argument("--workers", type=int, help="parallel processes for sweeps")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="rbinit", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="one realization: trace, snapshots, measurement log")
    sub.add_parser("rmse-sweep", parents=[common], help="position RMSE per granularity and ranging index")
    rp = sub.add_parser("replay", parents=[common], help="run a recorded measurement log")
    rp.add_argument("log", metavar="LOG", help="JSON-lines measurement log")
    sub.add_parser("oracle-compare", parents=[common], help="compare against a brute-force filter")
    sub.add_parser("dump-config", parents=[common], help="write the effective configuration")
    return p


def effective_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.realizations is not None:
        cfg.realizations = args.realizations
        cfg.oracle_realizations = args.realizations
    if args.out is not None:
        cfg.out = args.out
    if args.gamma is not None:
        cfg.gamma = args.gamma
    if args.alpha is not None:
        cfg.alpha = args.alpha
    if args.sigma is not None:
        cfg.sigma = args.sigma
    if args.workers is not None:
        cfg.workers = args.workers
    if args.gamma_cov is not None:
        if len(args.gamma_cov) != 4:
            raise ConfigError("--gamma-cov needs exactly 4 values")
        cfg.gamma_cov = args.gamma_cov
    if args.granularity_deg is not None:
        if not args.granularity_deg:
            raise ConfigError("--granularity-deg needs at least one value")
        if args.command == "rmse-sweep":
            cfg.granularities_deg = args.granularity_deg
        else:
            cfg.bearing_granularity_deg = cfg.heading_granularity_deg = args.granularity_deg[0]
    cfg.validate()
    return cfg


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(cfg: RunConfig) -> int:
    scenario = cfg.build_scenario()
    syn = synthesize(scenario, stream(cfg.seed, SYNTH_STREAM))
    res = run_realization(scenario, cfg.build_settings(), cfg.seed, synthesis=syn)
    out = _outdir(cfg)
    io.write_trace(out / "trace.csv", res.trace)
    io.write_jsonl(out / "snapshots.jsonl", res.snapshots)
    io.write_jsonl(out / "measurements.jsonl", io.events_to_log(syn.events()))
    cfg.dump(out / "effective_config.json")
    final = res.errors[-1] if len(res.errors) else float("nan")
    print(f"simulate: {len(res.trace)} rangings, final error {final:.3f} m, "
          f"first converged at {res.termination_index}, outputs in {out}")
    return EXIT_OK


def cmd_rmse_sweep(cfg: RunConfig) -> int:
    rows = rmse_sweep(cfg.build_scenario(), cfg.granularities_deg, cfg.realizations,
                      cfg.build_settings(), master_seed=cfg.seed, workers=cfg.workers)
    out = _outdir(cfg)
    io.write_rmse(out / "rmse.csv", rows)
    cfg.dump(out / "effective_config.json")
    last = max(r["ranging_index"] for r in rows)
    for r in rows:
        if r["ranging_index"] == last:
            print(f"granularity {r['granularity_deg']:g} deg  N={r['n_particles']}  "
                  f"final RMSE {r['rmse_m']:.3f} m")
    return EXIT_OK


def cmd_replay(cfg: RunConfig, log_path: str) -> int:
    path = Path(log_path)
    if not path.is_file():
        raise ConfigError(f"log file not found: {path}")
    events = io.read_log(path)
    if not any(kind == "range" for kind, _, _ in events):
        log.warning("log %s has no range measurements; nothing to do", path)
        return EXIT_OK
    settings = cfg.build_settings()
    rows, snaps, _ = run_events(events, settings, settings.likelihood(None),
                                stream(cfg.seed, FILTER_STREAM))
    out = _outdir(cfg)
    io.write_trace(out / "trace.csv", rows)
    io.write_jsonl(out / "snapshots.jsonl", snaps)
    print(f"replay: {len(rows)} rangings, outputs in {out}")
    return EXIT_OK


def cmd_oracle_compare(cfg: RunConfig) -> int:
    rows = oracle_compare(cfg.build_scenario(), cfg.build_settings(), cfg.oracle_realizations,
                          cfg.oracle_particles, master_seed=cfg.seed)
    out = _outdir(cfg)
    io.write_csv(out / "oracle_compare.csv", COMPARE_HEADER, [[r[k] for k in COMPARE_HEADER] for r in rows])
    cfg.dump(out / "effective_config.json")
    f = rows[-1]
    print(f"final RMSE init {f['rmse_init_m']:.3f} m, oracle {f['rmse_oracle_m']:.3f} m, "
          f"difference {f['difference_m']:+.3f} m, trig ratio {f['trig_ratio']:.1f}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = effective_config(args)
        if args.command == "dump-config":
            if args.out:
                _outdir(cfg)
                cfg.dump(Path(cfg.out) / "effective_config.json")
            else:
                sys.stdout.write(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")
            return EXIT_OK
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "rmse-sweep":
            return cmd_rmse_sweep(cfg)
        if args.command == "replay":
            return cmd_replay(cfg, args.log)
        if args.command == "oracle-compare":
            return cmd_oracle_compare(cfg)
    except (ConfigError, io.LogError) as exc:
        print(f"rbinit: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ResamplingError, RuntimeError, FloatingPointError, ValueError) as exc:
        print(f"rbinit: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    parser.error(f"unknown command {args.command}")
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
