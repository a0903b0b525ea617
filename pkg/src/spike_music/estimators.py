"""Eigendecomposition of ``Sigma Sigma^*`` and the MUSIC / Spike MUSIC localization functions."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import minimize_scalar

from .rmt import SpectralModel, zeta
from .signal_model import ArrayConfig, steering_matrix

__all__ = [
    "EigenSystem",
    "LocalizationFunction",
    "Spectrum",
    "eigendecompose",
    "detect_spikes",
    "min_grid_size",
    "make_grid",
    "classical_music_spectrum",
    "spike_music_spectrum",
    "find_peaks",
    "write_spectrum_csv",
]

DEFAULT_EPS_DETECT = 0.25


@dataclass(frozen=True)
class EigenSystem:
    """Eigenpairs of ``Sigma Sigma^*``; ``values`` non-increasing, ``vectors`` as columns."""

    values: np.ndarray
    vectors: np.ndarray

    @property
    def N(self) -> int:
        return self.values.size


def eigendecompose(sigma: np.ndarray) -> EigenSystem:
    """Full Hermitian eigendecomposition of ``sigma @ sigma^*``.

    Each eigenvector is rotated so its largest-modulus entry is real positive,
    which makes the output reproducible bit for bit.
    """
    sigma = np.asarray(sigma)
    N, n = sigma.shape
    if N > n:
        raise ValueError(f"expected N <= n, got shape {sigma.shape}")
    gram = sigma @ sigma.conj().T
    try:
        w, v = np.linalg.eigh(gram)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - Hermitian input
        raise RuntimeError("Hermitian eigensolver failed to converge") from exc
    w = w[::-1].copy()
    v = v[:, ::-1]
    pivot = v[np.argmax(np.abs(v), axis=0), np.arange(N)]
    v = v * (np.abs(pivot) / pivot)[None, :]
    return EigenSystem(values=w, vectors=np.ascontiguousarray(v))


def detect_spikes(
    eigs: EigenSystem, model: SpectralModel, r: int, eps_detect: float = DEFAULT_EPS_DETECT
) -> list[int]:
    """Indices among the top ``r`` eigenvalues that clear ``lambda_plus + eps_detect``.

    ``model`` should be built at the finite ratio ``N / n``.
    """
    if r > eigs.N:
        raise ValueError("r exceeds the number of eigenvalues")
    edge = model.lambda_plus + eps_detect
    return [k for k in range(r) if eigs.values[k] > edge]


@dataclass(frozen=True)
class LocalizationFunction:
    """``phi -> sum_k weights[k] |b(phi)^* u_k|^2`` over the retained eigenvectors."""

    vectors: np.ndarray
    weights: np.ndarray
    D: float

    def __call__(self, phis) -> np.ndarray:
        if self.weights.size == 0:
            return np.zeros(np.shape(np.atleast_1d(phis)))
        N = self.vectors.shape[0]
        B = steering_matrix(N, self.D, phis)
        proj = np.abs(B.conj().T @ self.vectors) ** 2
        return proj @ self.weights

    def at(self, phi: float) -> float:
        return float(self([phi])[0])


@dataclass
class Spectrum:
    grid: np.ndarray
    values: np.ndarray
    method: str
    function: LocalizationFunction
    degenerate: bool = False
    peaks: list[tuple[float, float]] = field(default_factory=list)


def min_grid_size(N: int) -> int:
    # 8 samples per main lobe of width ~ 2 pi / (N D)
    return max(1024, 8 * N)


def make_grid(N: int, D: float = 1.0, size: int | None = None) -> np.ndarray:
    size = min_grid_size(N) if size is None else size
    if size < min_grid_size(N):
        raise ValueError(f"grid size {size} below the minimum {min_grid_size(N)} for N={N}")
    return np.linspace(0.0, math.pi / D, size)


def classical_music_spectrum(eigs: EigenSystem, config: ArrayConfig, grid: np.ndarray) -> Spectrum:
    r = config.r
    fn = LocalizationFunction(eigs.vectors[:, :r], np.ones(r), config.D)
    return Spectrum(grid=grid, values=fn(grid), method="classical", function=fn)


def spike_music_spectrum(
    eigs: EigenSystem,
    config: ArrayConfig,
    model: SpectralModel,
    grid: np.ndarray,
    eps_detect: float = DEFAULT_EPS_DETECT,
) -> Spectrum:
    """Localization function with each detected spike weighted by ``zeta(lambda_hat_k)``.

    If nothing is detected the spectrum is identically zero and flagged
    ``degenerate``.
    """
    idx = detect_spikes(eigs, model, config.r, eps_detect)
    weights = np.array([zeta(model, eigs.values[k]) for k in idx])
    fn = LocalizationFunction(eigs.vectors[:, idx], weights, config.D)
    return Spectrum(grid=grid, values=fn(grid), method="spike", function=fn, degenerate=not idx)


def find_peaks(spectrum: Spectrum, r: int) -> list[float]:
    """Angles of the ``r`` highest strict local maxima, refined and sorted ascending.

    Each grid maximum is polished by golden-section search on the continuous
    localization function inside its two neighbouring grid cells. Fewer than
    ``r`` angles come back when the sampled spectrum has fewer maxima; the
    refined ``(angle, height)`` pairs are also stored on ``spectrum.peaks``.
    """
    v = spectrum.values
    grid = spectrum.grid
    interior = np.flatnonzero((v[1:-1] > v[:-2]) & (v[1:-1] > v[2:])) + 1
    if interior.size == 0:
        spectrum.peaks = []
        return []
    top = interior[np.argsort(v[interior], kind="stable")[::-1][:r]]
    fn = spectrum.function
    peaks = []
    for j in top:
        bracket = (grid[j - 1], grid[j], grid[j + 1])
        res = minimize_scalar(
            lambda phi: -fn.at(phi), bracket=bracket, method="golden", options={"xtol": 1e-12}
        )
        phi = float(np.clip(res.x, grid[j - 1], grid[j + 1]))
        peaks.append((phi, fn.at(phi)))
    peaks.sort()
    spectrum.peaks = peaks
    return [p[0] for p in peaks]


def write_spectrum_csv(spectrum: Spectrum, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["phi", "value"])
        for phi, val in zip(spectrum.grid, spectrum.values):
            w.writerow([repr(float(phi)), repr(float(val))])
    return path
