"""Command-line entry point: ``spike-music {predict,spectrum,sweep,verify}``.

Settings come from built-in defaults, then the ``--config`` JSON file, then
explicit flags, later sources winning. The default output directory is
``$SPIKE_MUSIC_OUTPUT`` if set, else ``./results``.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

from . import rmt
from .config import ConfigError, RunConfig, load_config
from .estimators import (
    classical_music_spectrum,
    eigendecompose,
    find_peaks,
    make_grid,
    spike_music_spectrum,
    write_spectrum_csv,
)
from .montecarlo import aggregate_and_emit, run_sweep
from .signal_model import assemble_observation, dump_observation
from .verify import run_checks

OUTPUT_ENV = "SPIKE_MUSIC_OUTPUT"


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _output_dir(args, cfg: RunConfig | None = None) -> Path:
    if args.output:
        return Path(args.output)
    if cfg is not None and cfg.output_dir:
        return Path(cfg.output_dir)
    return Path(os.environ.get(OUTPUT_ENV, "results"))


def _fmt(x: float | None, spec: str = ".7g") -> str:
    return "-" if x is None else format(x, spec)


def cmd_predict(args) -> int:
    model = rmt.MarchenkoPasturModel(args.c)
    if args.omega_sq:
        powers = args.omega_sq
    else:
        powers = [rmt.snr_db_to_power(s) for s in (args.snr_db or [10.0])]
    thr = model.detection_threshold
    print(f"c = {model.c:g}  lambda_minus = {model.lambda_minus:.7g}  lambda_plus = {model.lambda_plus:.7g}")
    print(f"detection threshold omega^2 > {thr:.7g} ({rmt.power_to_snr_db(thr):.4f} dB)")
    print(f"{'omega_sq':>12} {'snr_db':>9} {'rho':>12} {'bias':>10} {'sigma_sq':>12} {'crlb':>12}")
    for p in powers:
        pred = rmt.predict_spike(model, p, args.D)
        head = f"{p:12.6g} {rmt.power_to_snr_db(p):9.4f}"
        if not pred.detectable:
            print(f"{head} {'undetectable':>12} {'-':>10} {'-':>12} {_fmt(pred.crlb_hs):>12}")
            continue
        print(
            f"{head} {_fmt(pred.rho):>12} {_fmt(pred.bias):>10} "
            f"{_fmt(pred.sigma_sq):>12} {_fmt(pred.crlb_hs):>12}"
        )
    return 0


def _load(args) -> RunConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.master_seed = args.seed
    for name in ("trials", "grid_size", "eps_detect", "method"):
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg, name, value)
    cfg.validate()
    return cfg


def cmd_spectrum(args) -> int:
    cfg = _load(args)
    scenario = cfg.scenarios()[0]
    seed = cfg.master_seed
    model = rmt.MarchenkoPasturModel.from_dims(scenario.N, scenario.n)
    grid = make_grid(scenario.N, scenario.D, cfg.grid_size)
    obs = assemble_observation(scenario, seed)
    eigs = eigendecompose(obs.sigma)
    if cfg.method == "spike":
        spec = spike_music_spectrum(eigs, scenario, model, grid, cfg.eps_detect)
    else:
        spec = classical_music_spectrum(eigs, scenario, grid)
    out = _output_dir(args, cfg)
    path = write_spectrum_csv(spec, out / f"spectrum_{cfg.method}_seed{seed}.csv")
    if args.dump_observation:
        dump_observation(obs, out / f"observation_seed{seed}")
    print(f"N={scenario.N} n={scenario.n} method={cfg.method} seed={seed}")
    print(f"top eigenvalues: {', '.join(f'{v:.6g}' for v in eigs.values[: scenario.r + 1])}")
    if spec.degenerate:
        print("no eigenvalue above the detection edge; spectrum is degenerate")
        return 0
    find_peaks(spec, scenario.r)
    if len(spec.peaks) < scenario.r:
        print(f"warning: only {len(spec.peaks)} of {scenario.r} peaks found")
    for phi, height in spec.peaks:
        print(f"peak phi={phi:.10f} value={height:.6g}")
    print(f"wrote {path}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _load(args)
    results = run_sweep(
        cfg.scenarios(),
        cfg.trials,
        cfg.master_seed,
        workers=args.workers,
        eps_detect=cfg.eps_detect,
        method=cfg.method,
        grid_size=cfg.grid_size,
    )
    csv_path, json_path = aggregate_and_emit(results, _output_dir(args, cfg), cfg.stem)
    print(f"{'N':>4} {'n':>4} {'snr_db':>7} {'k':>2} {'empirical':>12} {'theory':>12} {'ratio':>7} {'crlb':>12} {'outliers':>8}")
    for res in results:
        for row in res.rows():
            ratio = row["empirical_var"] / row["theoretical_var"] if math.isfinite(row["theoretical_var"]) else math.nan
            print(
                f"{row['N']:4d} {row['n']:4d} {row['snr_db']:7.2f} {row['source_index']:2d} "
                f"{row['empirical_var']:12.4e} {row['theoretical_var']:12.4e} {ratio:7.3f} "
                f"{row['crlb']:12.4e} {row['outlier_rate']:8.4f}"
            )
    print(f"wrote {csv_path} and {json_path}")
    return 0


def cmd_verify(args) -> int:
    checks = run_checks(args.level, master_seed=args.seed or 0)
    for c in checks:
        print(c.line())
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run config (path or bundled name: var_vs_N, var_vs_snr, reference)")
    common.add_argument("--seed", type=_u64, help="master seed (overrides config)")
    common.add_argument("--output", help=f"output directory (default ${OUTPUT_ENV} or ./results)")
    common.add_argument("--workers", type=_positive_int, default=1, help="worker processes for trials")

    parser = argparse.ArgumentParser(
        prog="spike-music", description="Spike MUSIC angle estimation and its large-dimension theory."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("predict", parents=[common], help="print theoretical predictions")
    p.add_argument("--c", type=float, required=True, help="aspect ratio N/n in (0, 1]")
    power = p.add_mutually_exclusive_group()
    power.add_argument("--snr-db", type=float, nargs="+", help="per-source SNR in dB")
    power.add_argument("--omega-sq", type=float, nargs="+", help="per-source linear power omega^2")
    p.add_argument("--D", type=float, default=1.0, help="steering constant")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("spectrum", parents=[common], help="one realization of the localization function")
    p.add_argument("--method", choices=["spike", "classical"])
    p.add_argument("--grid-size", type=int)
    p.add_argument("--eps-detect", type=float)
    p.add_argument("--dump-observation", action="store_true", help="also write Sigma, X, P as binary")
    p.set_defaults(func=cmd_spectrum, config_required=True)

    p = sub.add_parser("sweep", parents=[common], help="Monte Carlo variance sweep")
    p.add_argument("--trials", type=int)
    p.add_argument("--method", choices=["spike", "classical"])
    p.add_argument("--grid-size", type=int)
    p.add_argument("--eps-detect", type=float)
    p.set_defaults(func=cmd_sweep, config_required=True)

    p = sub.add_parser("verify", parents=[common], help="run verification checks")
    p.add_argument("level", choices=["fast", "full"])
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config_required", False) and not args.config:
        parser.error(f"{args.command} requires --config")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except rmt.DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
