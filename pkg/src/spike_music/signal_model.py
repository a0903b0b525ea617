"""Synthetic observations ``Sigma = X + B(angles) S^*`` for a uniform linear array."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "ArrayConfig",
    "Observation",
    "steering_vector",
    "steering_matrix",
    "steering_derivative",
    "steering_second_derivative",
    "dirichlet_kernel",
    "build_signal_matrix",
    "generate_noise",
    "assemble_observation",
    "dump_observation",
]


@dataclass(frozen=True)
class ArrayConfig:
    """Scenario geometry: ``N`` sensors, ``n`` snapshots, sources at ``angles``.

    ``powers`` are the squared source amplitudes ``omega_k^2`` (linear SNR),
    sorted non-increasing. Angles live in the open interval ``(0, pi / D)``.
    """

    N: int
    n: int
    angles: tuple[float, ...]
    powers: tuple[float, ...]
    D: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "angles", tuple(float(a) for a in self.angles))
        object.__setattr__(self, "powers", tuple(float(p) for p in self.powers))
        if self.N < 1 or self.n < 1:
            raise ValueError("N and n must be positive")
        if self.N > self.n:
            raise ValueError(f"need N <= n, got N={self.N}, n={self.n}")
        if self.D <= 0:
            raise ValueError("D must be positive")
        if len(self.angles) != len(self.powers):
            raise ValueError("angles and powers must have the same length")
        if self.r > self.N:
            raise ValueError("more sources than sensors")
        upper = math.pi / self.D
        for a in self.angles:
            if not 0.0 < a < upper:
                raise ValueError(f"angle {a!r} outside (0, pi/D) = (0, {upper!r})")
        if len(set(self.angles)) != self.r:
            raise ValueError("angles must be pairwise distinct")
        if any(p < 0 for p in self.powers):
            raise ValueError("powers must be non-negative")
        if any(a < b for a, b in zip(self.powers, self.powers[1:])):
            raise ValueError("powers must be sorted non-increasing")

    @property
    def r(self) -> int:
        return len(self.angles)

    @property
    def c(self) -> float:
        return self.N / self.n

    @property
    def domain(self) -> tuple[float, float]:
        return 0.0, math.pi / self.D


@dataclass(frozen=True)
class Observation:
    sigma: np.ndarray
    x: np.ndarray
    p: np.ndarray
    seed: int
    config: ArrayConfig


def _check_angle(phi: np.ndarray, D: float) -> None:
    if np.any(phi < 0.0) or np.any(phi > math.pi / D):
        raise ValueError(f"angle outside [0, pi/D] with D={D!r}")


def steering_matrix(N: int, D: float, phis) -> np.ndarray:
    """Columns ``b(phi)`` for each angle in ``phis``; shape ``(N, len(phis))``."""
    phis = np.atleast_1d(np.asarray(phis, dtype=float))
    _check_angle(phis, D)
    ell = np.arange(N)[:, None]
    return np.exp(-1j * D * ell * phis[None, :]) / math.sqrt(N)


def steering_vector(N: int, D: float, phi: float) -> np.ndarray:
    """Unit-norm ULA response ``N^-1/2 exp(-i D l phi)``, ``l = 0..N-1``."""
    return steering_matrix(N, D, [phi])[:, 0]


def steering_derivative(N: int, D: float, phi: float) -> np.ndarray:
    ell = np.arange(N)
    return -1j * D * ell * steering_vector(N, D, phi)


def steering_second_derivative(N: int, D: float, phi: float) -> np.ndarray:
    ell = np.arange(N)
    return -((D * ell) ** 2) * steering_vector(N, D, phi)


def dirichlet_kernel(N: int, c_N: float) -> complex:
    """``N^-1 sum_k exp(-2 i pi k c_N)`` via the geometric-series closed form."""
    if abs(c_N) > 0.5:
        raise ValueError("c_N must lie in [-1/2, 1/2]")
    s = math.sin(math.pi * c_N)
    if abs(s) < 1e-8:
        k = np.arange(N)
        return complex(np.mean(np.exp(-2j * math.pi * k * c_N)))
    phase = complex(math.cos(math.pi * (N - 1) * c_N), -math.sin(math.pi * (N - 1) * c_N))
    return phase * math.sin(math.pi * N * c_N) / (N * s)


def build_signal_matrix(n: int, powers) -> np.ndarray:
    """Deterministic ``n x r`` source matrix with ``S^* S = diag(powers)`` exactly.

    Columns are the first ``r`` orthonormal DFT vectors scaled by ``sqrt(powers)``.
    """
    powers = np.asarray(powers, dtype=float)
    r = powers.size
    if r > n:
        raise ValueError("r must not exceed n")
    t = np.arange(n)[:, None]
    k = np.arange(r)[None, :]
    F = np.exp(2j * math.pi * t * k / n) / math.sqrt(n)
    return F * np.sqrt(powers)[None, :]


def generate_noise(N: int, n: int, seed: int) -> np.ndarray:
    """Complex Gaussian ``N x n`` matrix with i.i.d. entries of variance ``1/n``.

    Real and imaginary parts are independent ``N(0, 1/(2n))``. Draws come from
    the counter-based Philox generator keyed by ``seed``.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    z = rng.standard_normal((2, N, n))
    return (z[0] + 1j * z[1]) / math.sqrt(2.0 * n)


def assemble_observation(config: ArrayConfig, seed: int, noise_scale: float = 1.0) -> Observation:
    """Build ``Sigma = X + P`` with ``P = B(angles) S^*``.

    ``noise_scale`` multiplies ``X``; 0 gives the noiseless observation.
    """
    B = steering_matrix(config.N, config.D, config.angles)
    S = build_signal_matrix(config.n, config.powers)
    p = B @ S.conj().T
    x = generate_noise(config.N, config.n, seed)
    if noise_scale != 1.0:
        x = noise_scale * x
    return Observation(sigma=x + p, x=x, p=p, seed=seed, config=config)


def dump_observation(obs: Observation, directory: str | Path) -> list[Path]:
    """Write ``sigma``, ``x`` and ``p`` as raw binary plus a JSON header.

    Each ``.bin`` file is row-major, little-endian float64 with interleaved
    real and imaginary parts (``N * n * 2`` values).
    """
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name in ("sigma", "x", "p"):
        path = out / f"{name}.bin"
        np.ascontiguousarray(getattr(obs, name), dtype="<c16").tofile(path)
        written.append(path)
    header = {
        "shape": [obs.config.N, obs.config.n],
        "dtype": "float64 little-endian, interleaved re/im, row-major",
        "seed": obs.seed,
        "config": asdict(obs.config),
    }
    meta = out / "observation.json"
    meta.write_text(json.dumps(header, indent=2))
    written.append(meta)
    return written
