"""Monte Carlo trials, sweeps against the large-dimension predictions, and result files."""

from __future__ import annotations

import csv
import json
import math
import time
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg

from .estimators import (
    DEFAULT_EPS_DETECT,
    classical_music_spectrum,
    eigendecompose,
    find_peaks,
    make_grid,
    spike_music_spectrum,
)
from .rmt import (
    MarchenkoPasturModel,
    asymptotic_variance,
    crlb_high_snr,
    power_to_snr_db,
    solve_rho,
)
from .signal_model import ArrayConfig, assemble_observation, generate_noise, steering_matrix

__all__ = [
    "TrialResult",
    "SweepResult",
    "FluctuationSummary",
    "derive_seed",
    "association_window",
    "associate",
    "run_trial",
    "run_sweep",
    "qf_fluctuation_experiment",
    "aggregate_and_emit",
    "CSV_FIELDS",
]

CSV_FIELDS = [
    "N", "n", "c", "D", "snr_db", "source_index", "true_angle", "trials",
    "outlier_rate", "bias", "empirical_var", "theoretical_var", "crlb",
]  # fmt: skip


def derive_seed(master_seed: int, *key: int) -> int:
    """64-bit seed for one trial, a pure function of ``(master_seed, *key)``."""
    ss = np.random.SeedSequence(master_seed, spawn_key=tuple(key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class TrialResult:
    seed: int
    eigenvalues: np.ndarray
    estimates: np.ndarray
    errors: np.ndarray
    outliers: np.ndarray
    missing: np.ndarray


def association_window(config: ArrayConfig) -> float:
    w = math.pi / (2.0 * config.D * config.r)
    if config.r > 1:
        w = min(w, 0.5 * float(np.min(np.diff(sorted(config.angles)))))
    return w


def associate(estimates: Sequence[float], truth: Sequence[float], window: float):
    """Match each true angle to its nearest estimate within ``window``.

    Returns ``(errors, outliers)``; unmatched sources get a NaN error.
    """
    est = np.asarray(estimates, dtype=float)
    errors = np.full(len(truth), np.nan)
    outliers = np.ones(len(truth), dtype=bool)
    if est.size == 0:
        return errors, outliers
    for k, phi in enumerate(truth):
        j = int(np.argmin(np.abs(est - phi)))
        err = est[j] - phi
        if abs(err) <= window:
            errors[k] = err
            outliers[k] = False
    return errors, outliers


def run_trial(
    config: ArrayConfig,
    model: MarchenkoPasturModel,
    seed: int,
    *,
    grid: np.ndarray | None = None,
    eps_detect: float = DEFAULT_EPS_DETECT,
    method: str = "spike",
    noise_scale: float = 1.0,
) -> TrialResult:
    """One realization: observe, decompose, localize, pick peaks, associate.

    ``model`` is the noise law at the finite ratio ``N / n``.
    """
    r = config.r
    grid = make_grid(config.N, config.D) if grid is None else grid
    obs = assemble_observation(config, seed, noise_scale=noise_scale)
    eigs = eigendecompose(obs.sigma)
    if method == "spike":
        spec = spike_music_spectrum(eigs, config, model, grid, eps_detect)
    elif method == "classical":
        spec = classical_music_spectrum(eigs, config, grid)
    else:
        raise ValueError(f"unknown method {method!r}")

    estimates = np.full(r, np.nan)
    if spec.degenerate:
        errors = np.full(r, np.nan)
        outliers = np.ones(r, dtype=bool)
        missing = np.ones(r, dtype=bool)
    else:
        peaks = find_peaks(spec, r)
        estimates[: len(peaks)] = peaks
        errors, outliers = associate(peaks, config.angles, association_window(config))
        missing = np.zeros(r, dtype=bool)
        if len(peaks) < r:
            missing[np.isnan(errors)] = True
    top = eigs.values[: min(r + 1, eigs.N)].copy()
    return TrialResult(seed, top, estimates, errors, outliers, missing)


@dataclass
class SweepResult:
    """Per-scenario aggregates; per-source arrays have length ``r``."""

    config: ArrayConfig
    trials: int
    master_seed: int
    outlier_rate: np.ndarray
    bias: np.ndarray
    empirical_var: np.ndarray
    theoretical_var: np.ndarray
    crlb: np.ndarray
    eigenvalue_mean: np.ndarray
    eigenvalue_prediction: np.ndarray
    elapsed: float = 0.0
    errors: np.ndarray | None = field(default=None, repr=False)

    @property
    def snr_db(self) -> list[float]:
        return [power_to_snr_db(p) if p > 0 else -math.inf for p in self.config.powers]

    def rows(self) -> list[dict]:
        cfg = self.config
        out = []
        for k in range(cfg.r):
            out.append(
                {
                    "N": cfg.N,
                    "n": cfg.n,
                    "c": cfg.c,
                    "D": cfg.D,
                    "snr_db": self.snr_db[k],
                    "source_index": k,
                    "true_angle": cfg.angles[k],
                    "trials": self.trials,
                    "outlier_rate": float(self.outlier_rate[k]),
                    "bias": float(self.bias[k]),
                    "empirical_var": float(self.empirical_var[k]),
                    "theoretical_var": float(self.theoretical_var[k]),
                    "crlb": float(self.crlb[k]),
                }
            )
        return out


def _predictions(config: ArrayConfig, model: MarchenkoPasturModel):
    n3 = float(config.n) ** 3
    theo, crlb, rho = [], [], []
    for p in config.powers:
        r_k = solve_rho(model, p) if p > 0 else None
        rho.append(math.nan if r_k is None else r_k)
        theo.append(math.nan if r_k is None else asymptotic_variance(model, p, config.D) / n3)
        crlb.append(crlb_high_snr(model, p, config.D) / n3 if p > 0 else math.inf)
    rho.append(model.lambda_plus)
    return np.array(theo), np.array(crlb), np.array(rho[: config.r + 1])


def _run_chunk(args) -> list[TrialResult]:
    config, master_seed, scenario_index, trial_indices, eps_detect, method, grid_size = args
    model = MarchenkoPasturModel.from_dims(config.N, config.n)
    grid = make_grid(config.N, config.D, grid_size)
    return [
        run_trial(
            config,
            model,
            derive_seed(master_seed, scenario_index, t),
            grid=grid,
            eps_detect=eps_detect,
            method=method,
        )
        for t in trial_indices
    ]


def _aggregate(config, trials, master_seed, results: list[TrialResult], elapsed: float) -> SweepResult:
    model = MarchenkoPasturModel.from_dims(config.N, config.n)
    errors = np.array([t.errors for t in results])
    outliers = np.array([t.outliers for t in results])
    eig = np.array([t.eigenvalues for t in results])
    r = config.r
    bias = np.full(r, np.nan)
    var = np.full(r, np.nan)
    for k in range(r):
        e = errors[~outliers[:, k], k]
        if e.size >= 1:
            bias[k] = e.mean()
        if e.size >= 2:
            var[k] = e.var(ddof=1)
    theo, crlb, rho = _predictions(config, model)
    return SweepResult(
        config=config,
        trials=trials,
        master_seed=master_seed,
        outlier_rate=outliers.mean(axis=0),
        bias=bias,
        empirical_var=var,
        theoretical_var=theo,
        crlb=crlb,
        eigenvalue_mean=eig.mean(axis=0),
        eigenvalue_prediction=rho,
        elapsed=elapsed,
        errors=errors,
    )


def run_sweep(
    scenarios: Sequence[ArrayConfig],
    trials: int,
    master_seed: int,
    *,
    workers: int = 1,
    eps_detect: float = DEFAULT_EPS_DETECT,
    method: str = "spike",
    grid_size: int | None = None,
    chunk_size: int = 250,
) -> list[SweepResult]:
    """Run ``trials`` independent trials for every scenario.

    Trial ``t`` of scenario ``s`` is seeded with ``derive_seed(master_seed, s, t)``
    and results are reduced in trial order, so the output does not depend on
    ``workers``.
    """
    if trials < 2:
        raise ValueError("need at least 2 trials")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    jobs = []
    for s, cfg in enumerate(scenarios):
        for start in range(0, trials, chunk_size):
            idx = range(start, min(start + chunk_size, trials))
            jobs.append((cfg, master_seed, s, idx, eps_detect, method, grid_size))

    t0 = time.perf_counter()
    if workers == 1:
        chunks = [_run_chunk(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_chunk, jobs))
    elapsed = time.perf_counter() - t0

    per_scenario: list[list[TrialResult]] = [[] for _ in scenarios]
    for job, chunk in zip(jobs, chunks):
        per_scenario[job[2]].extend(chunk)
    share = elapsed / max(len(scenarios), 1)
    return [
        _aggregate(cfg, trials, master_seed, res, share)
        for cfg, res in zip(scenarios, per_scenario)
    ]


@dataclass(frozen=True)
class FluctuationSummary:
    """Empirical second moments of the two resolvent quadratic-form families.

    ``var_q`` and ``var_qt`` are ``E|eta - mean|^2`` of
    ``sqrt(N) w^*(Q - alpha I) w'`` and ``sqrt(n) w^* X Q~ w~``; the
    ``predicted_*`` values are ``m' - m^2`` and ``m + rho m'`` at ``c = N / n``.
    """

    N: int
    n: int
    rho: float
    trials: int
    var_q: float
    var_qt: float
    correlation: float
    predicted_var_q: float
    predicted_var_qt: float
    samples_q: np.ndarray = field(repr=False)
    samples_qt: np.ndarray = field(repr=False)


def qf_fluctuation_experiment(N: int, n: int, rho: float, trials: int, master_seed: int) -> FluctuationSummary:
    """Sample the quadratic forms of the noise resolvents at a point ``rho`` right of the bulk."""
    model = MarchenkoPasturModel.from_dims(N, n)
    model.check_domain(rho)
    if trials < 2:
        raise ValueError("need at least 2 trials")
    # orthonormal w, w' from two steering vectors; unit w~ from the first DFT column
    W, _ = np.linalg.qr(steering_matrix(N, 1.0, [0.5, 1.0]))
    w, w2 = W[:, 0], W[:, 1]
    wt = np.full(n, 1.0 / math.sqrt(n), dtype=complex)

    q = np.empty(trials, dtype=complex)
    qt = np.empty(trials, dtype=complex)
    for t in range(trials):
        X = generate_noise(N, n, derive_seed(master_seed, 0, t))
        A = X @ X.conj().T - rho * np.eye(N)
        # X Q~(rho) = Q(rho) X, so both forms need only solves with A
        sol = scipy.linalg.solve(A, np.column_stack([w2, X @ wt]), assume_a="her")
        alpha = float(np.mean(1.0 / (np.linalg.eigvalsh(A))))
        q[t] = math.sqrt(N) * (np.vdot(w, sol[:, 0]) - alpha * np.vdot(w, w2))
        qt[t] = math.sqrt(n) * np.vdot(w, sol[:, 1])

    dq, dqt = q - q.mean(), qt - qt.mean()
    var_q = float(np.mean(np.abs(dq) ** 2))
    var_qt = float(np.mean(np.abs(dqt) ** 2))
    corr = float(abs(np.mean(dq * dqt.conj())) / math.sqrt(var_q * var_qt))
    m, dm = model.stieltjes(rho), model.stieltjes_derivative(rho)
    return FluctuationSummary(
        N=N,
        n=n,
        rho=rho,
        trials=trials,
        var_q=var_q,
        var_qt=var_qt,
        correlation=corr,
        predicted_var_q=dm - m * m,
        predicted_var_qt=m + rho * dm,
        samples_q=q,
        samples_qt=qt,
    )


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def aggregate_and_emit(results: Sequence[SweepResult], directory: str | Path, stem: str = "sweep") -> tuple[Path, Path]:
    """Write ``<stem>.csv`` (one row per scenario and source) and a JSON mirror."""
    if not results:
        raise ValueError("no sweep results to emit")
    out = Path(directory)
    csv_path = out / f"{stem}.csv"
    json_path = out / f"{stem}.json"
    try:
        out.mkdir(parents=True, exist_ok=True)
        with csv_path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_FIELDS)
            for res in results:
                for row in res.rows():
                    w.writerow([_fmt(row[f]) for f in CSV_FIELDS])
        records = []
        for res in results:
            for k, row in enumerate(res.rows()):
                row = dict(row)
                row["seed"] = res.master_seed
                row["elapsed_s"] = res.elapsed
                row["eigenvalue_mean"] = float(res.eigenvalue_mean[k])
                row["eigenvalue_prediction"] = float(res.eigenvalue_prediction[k])
                records.append(row)
        json_path.write_text(json.dumps(records, indent=2, allow_nan=True) + "\n")
    except OSError as exc:
        raise OSError(f"failed writing sweep output under {out}: {exc}") from exc
    return csv_path, json_path
