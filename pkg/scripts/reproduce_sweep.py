"""Run one of the bundled sweep configs and print empirical vs predicted variance.

    python3 scripts/reproduce_sweep.py var_vs_N --trials 500 --workers 4
"""

from __future__ import annotations

import argparse
import time
from pathlib import Path

from spike_music.config import load_config
from spike_music.montecarlo import aggregate_and_emit, run_sweep


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config", help="bundled name (var_vs_N, var_vs_snr, reference) or JSON path")
    ap.add_argument("--trials", type=int)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--output", type=Path, default=Path("results"))
    args = ap.parse_args()

    cfg = load_config(args.config)
    if args.trials is not None:
        cfg.trials = args.trials
    if args.seed is not None:
        cfg.master_seed = args.seed
    cfg.validate()

    t0 = time.perf_counter()
    results = run_sweep(
        cfg.scenarios(),
        cfg.trials,
        cfg.master_seed,
        workers=args.workers,
        eps_detect=cfg.eps_detect,
        method=cfg.method,
        grid_size=cfg.grid_size,
    )
    csv_path, _ = aggregate_and_emit(results, args.output, cfg.stem)

    print(f"{'N':>4} {'snr_db':>7} {'src':>3} {'outliers':>9} {'emp*n^3':>10} {'theory*n^3':>11} {'ratio':>7}")
    for res in results:
        n3 = res.config.n**3
        for row in res.rows():
            emp, th = row["empirical_var"], row["theoretical_var"]
            print(
                f"{row['N']:>4} {row['snr_db']:>7.2f} {row['source_index']:>3} {row['outlier_rate']:>9.4f} "
                f"{emp * n3:>10.4f} {th * n3:>11.4f} {emp / th:>7.3f}"
            )
    print(f"wrote {csv_path} in {time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
